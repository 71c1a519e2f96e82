#include "gatlas/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gatlas/error.hpp"

namespace gatlas::schedule {

const char* to_string(Variant v) noexcept { return v == Variant::scaled_linear ? "scaled_linear" : "cosine"; }

Variant variant_from_string(const std::string& text) {
  if (text == "scaled_linear") return Variant::scaled_linear;
  if (text == "cosine") return Variant::cosine;
  throw Error(ErrorKind::validation, "unknown schedule variant '" + text + "'");
}

NoiseSchedule build_schedule(Variant variant, std::size_t steps) {
  if (steps < 1) throw Error(ErrorKind::validation, "schedule needs at least one step");
  std::vector<double> betas(steps);
  if (variant == Variant::scaled_linear) {
    const double lo = std::sqrt(0.00085);
    const double hi = std::sqrt(0.012);
    for (std::size_t i = 0; i < steps; ++i) {
      const double f = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
      const double root = lo + (hi - lo) * f;
      betas[i] = root * root;
    }
  } else if (variant == Variant::cosine) {
    const auto alpha_bar = [](double t) {
      const double c = std::cos((t + 0.008) / 1.008 * std::numbers::pi / 2.0);
      return c * c;
    };
    const double n = static_cast<double>(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      const double t1 = static_cast<double>(i) / n;
      const double t2 = static_cast<double>(i + 1) / n;
      betas[i] = std::min(1.0 - alpha_bar(t2) / alpha_bar(t1), 0.999);
    }
  } else {
    throw Error(ErrorKind::validation, "invalid schedule variant");
  }
  NoiseSchedule sched;
  sched.steps = steps;
  sched.variant = variant;
  sched.alphas.resize(steps);
  sched.sigmas.resize(steps);
  double cumulative = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    cumulative *= 1.0 - betas[i];
    sched.alphas[i] = std::sqrt(cumulative);
    sched.sigmas[i] = std::sqrt(1.0 - cumulative);
  }
  return sched;
}

namespace {

void check_args(std::size_t a, std::size_t b, std::size_t t, const NoiseSchedule& sched) {
  if (a != b) throw Error(ErrorKind::validation, "shape mismatch between operands");
  if (t >= sched.steps) throw Error(ErrorKind::validation, "timestep " + std::to_string(t) + " out of range");
}

// r = ca * a + cb * b, elementwise.
std::vector<double> combine(double ca, std::span<const double> a, double cb, std::span<const double> b) {
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = ca * a[k] + cb * b[k];
  return out;
}

std::vector<double> widen(std::span<const float> values) { return {values.begin(), values.end()}; }

}  // namespace

std::vector<double> add_noise(std::span<const double> x0, std::span<const double> noise, std::size_t t,
                              const NoiseSchedule& sched) {
  check_args(x0.size(), noise.size(), t, sched);
  return combine(sched.alphas[t], x0, sched.sigmas[t], noise);
}

std::vector<double> velocity_target(std::span<const double> x0, std::span<const double> noise, std::size_t t,
                                    const NoiseSchedule& sched) {
  check_args(x0.size(), noise.size(), t, sched);
  return combine(sched.alphas[t], noise, -sched.sigmas[t], x0);
}

std::vector<double> reconstruct_x0(std::span<const double> xt, std::span<const double> v, std::size_t t,
                                   const NoiseSchedule& sched) {
  check_args(xt.size(), v.size(), t, sched);
  return combine(sched.alphas[t], xt, -sched.sigmas[t], v);
}

std::vector<double> reconstruct_noise(std::span<const double> xt, std::span<const double> v, std::size_t t,
                                      const NoiseSchedule& sched) {
  check_args(xt.size(), v.size(), t, sched);
  return combine(sched.sigmas[t], xt, sched.alphas[t], v);
}

namespace {

atlas::AtlasGrid atlas_op(const atlas::AtlasGrid& x0, std::span<const float> noise, std::size_t t,
                          const NoiseSchedule& sched, bool velocity) {
  if (!x0.normalized) throw Error(ErrorKind::state, "diffusion targets need a normalized atlas");
  if (noise.size() != x0.data.size()) throw Error(ErrorKind::validation, "noise shape does not match the atlas");
  const auto a = widen(x0.data);
  const auto e = widen(noise);
  const auto values = velocity ? velocity_target(a, e, t, sched) : add_noise(a, e, t, sched);
  atlas::AtlasGrid out = x0;
  for (std::size_t k = 0; k < values.size(); ++k) out.data[k] = static_cast<float>(values[k]);
  out.extra["timestep"] = t;
  out.extra["role"] = velocity ? "v_target" : "x_t";
  return out;
}

}  // namespace

atlas::AtlasGrid add_noise(const atlas::AtlasGrid& x0, std::span<const float> noise, std::size_t t,
                           const NoiseSchedule& sched) {
  return atlas_op(x0, noise, t, sched, false);
}

atlas::AtlasGrid velocity_target(const atlas::AtlasGrid& x0, std::span<const float> noise, std::size_t t,
                                 const NoiseSchedule& sched) {
  return atlas_op(x0, noise, t, sched, true);
}

IdentityReport check_identities(std::span<const double> x0, std::span<const double> noise,
                                const NoiseSchedule& sched) {
  IdentityReport report;
  for (std::size_t t = 0; t < sched.steps; ++t) {
    const auto xt = add_noise(x0, noise, t, sched);
    const auto v = velocity_target(x0, noise, t, sched);
    const auto x0_hat = reconstruct_x0(xt, v, t, sched);
    const auto eps_hat = reconstruct_noise(xt, v, t, sched);
    for (std::size_t k = 0; k < x0.size(); ++k) {
      report.max_x0_error = std::max(report.max_x0_error, std::abs(x0_hat[k] - x0[k]));
      report.max_noise_error = std::max(report.max_noise_error, std::abs(eps_hat[k] - noise[k]));
    }
    ++report.timesteps;
  }
  return report;
}

}  // namespace gatlas::schedule
