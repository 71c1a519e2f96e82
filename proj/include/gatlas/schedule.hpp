#pragma once

// Variance-preserving noise schedule and the v-parameterization identities
// used to build diffusion training pairs from normalized atlases.
//
//   x_t = alpha_t x0 + sigma_t eps
//   v_t = alpha_t eps - sigma_t x0
//   x0  = alpha_t x_t - sigma_t v_t,   eps = sigma_t x_t + alpha_t v_t

#include <span>
#include <string>
#include <vector>

#include "gatlas/atlas.hpp"

namespace gatlas::schedule {

enum class Variant { scaled_linear, cosine };

const char* to_string(Variant v) noexcept;
Variant variant_from_string(const std::string& text);

struct NoiseSchedule {
  std::size_t steps = 0;
  std::vector<double> alphas;  // alpha_t = sqrt(prod_{s<=t} (1 - beta_s))
  std::vector<double> sigmas;  // sqrt(1 - alpha_t^2)
  Variant variant = Variant::scaled_linear;
};

/// scaled_linear: beta = linspace(sqrt(0.00085), sqrt(0.012), steps)^2.
/// cosine: squared-cosine cumulative alpha with offset 0.008, beta <= 0.999.
NoiseSchedule build_schedule(Variant variant, std::size_t steps = 1000);

std::vector<double> add_noise(std::span<const double> x0, std::span<const double> noise, std::size_t t,
                              const NoiseSchedule& sched);
std::vector<double> velocity_target(std::span<const double> x0, std::span<const double> noise, std::size_t t,
                                    const NoiseSchedule& sched);
std::vector<double> reconstruct_x0(std::span<const double> xt, std::span<const double> v, std::size_t t,
                                   const NoiseSchedule& sched);
std::vector<double> reconstruct_noise(std::span<const double> xt, std::span<const double> v, std::size_t t,
                                      const NoiseSchedule& sched);

/// Atlas-level forms; x0 must be normalized and the noise sized to its data.
atlas::AtlasGrid add_noise(const atlas::AtlasGrid& x0, std::span<const float> noise, std::size_t t,
                           const NoiseSchedule& sched);
atlas::AtlasGrid velocity_target(const atlas::AtlasGrid& x0, std::span<const float> noise, std::size_t t,
                                 const NoiseSchedule& sched);

struct IdentityReport {
  double max_x0_error = 0.0;
  double max_noise_error = 0.0;
  std::size_t timesteps = 0;
};

/// Runs both reconstruction identities at every timestep of `sched`.
IdentityReport check_identities(std::span<const double> x0, std::span<const double> noise,
                                const NoiseSchedule& sched);

}  // namespace gatlas::schedule
