#include "gatlas/model.hpp"

#include <algorithm>
#include <cmath>

#include "gatlas/error.hpp"

namespace gatlas {

const char* to_string(Activation a) noexcept {
  return a == Activation::raw ? "raw" : "activated";
}

Activation activation_from_string(const std::string& text) {
  if (text == "raw") return Activation::raw;
  if (text == "activated") return Activation::activated;
  throw Error(ErrorKind::validation, "unknown activation '" + text + "' (expected raw|activated)");
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) {
  p = std::clamp(p, 1e-7, 1.0 - 1e-7);
  return std::log(p / (1.0 - p));
}

Bounds compute_bounds(std::span<const Gaussian> gaussians) {
  if (gaussians.empty()) throw Error(ErrorKind::validation, "cannot compute bounds of an empty cloud");
  Bounds b;
  for (const auto& g : gaussians) {
    for (int d = 0; d < 3; ++d) b.center[d] += g.position[d];
  }
  for (double& c : b.center) c /= static_cast<double>(gaussians.size());
  double max_sq = 0.0;
  for (const auto& g : gaussians) {
    double sq = 0.0;
    for (int d = 0; d < 3; ++d) {
      const double delta = g.position[d] - b.center[d];
      sq += delta * delta;
    }
    max_sq = std::max(max_sq, sq);
  }
  b.radius = max_sq > 0.0 ? std::sqrt(max_sq) : 1.0;
  return b;
}

void canonicalize_rotation(std::array<float, 4>& q) {
  double sq = 0.0;
  for (float c : q) sq += static_cast<double>(c) * c;
  const double norm = std::sqrt(sq);
  if (norm == 0.0) {
    q = {1.f, 0.f, 0.f, 0.f};
    return;
  }
  if (std::abs(norm - 1.0) > 1e-6) {
    for (float& c : q) c = static_cast<float>(c / norm);
  }
  bool flip = false;
  if (q[0] < 0.f) {
    flip = true;
  } else if (q[0] == 0.f) {
    q[0] = 0.f;  // drop a negative zero
    for (int i = 1; i < 4; ++i) {
      if (q[i] != 0.f) {
        flip = q[i] < 0.f;
        break;
      }
    }
  }
  if (flip) {
    for (float& c : q) c = -c;
    if (q[0] == 0.f) q[0] = 0.f;
  }
}

double scale_norm(const Gaussian& g) {
  double sq = 0.0;
  for (float s : g.scale) sq += static_cast<double>(s) * s;
  return std::sqrt(sq);
}

Gaussian activate(const Gaussian& raw) {
  Gaussian g = raw;
  for (int i = 0; i < 3; ++i) {
    g.albedo[i] = static_cast<float>(std::clamp(raw.albedo[i] * kShC0 + 0.5, 0.0, 1.0));
    g.scale[i] = static_cast<float>(std::exp(static_cast<double>(raw.scale[i])));
  }
  g.opacity = static_cast<float>(sigmoid(raw.opacity));
  canonicalize_rotation(g.rotation);
  return g;
}

Gaussian deactivate(const Gaussian& activated) {
  Gaussian g = activated;
  for (int i = 0; i < 3; ++i) {
    g.albedo[i] = static_cast<float>((activated.albedo[i] - 0.5) / kShC0);
    g.scale[i] = static_cast<float>(std::log(static_cast<double>(activated.scale[i])));
  }
  g.opacity = static_cast<float>(logit(activated.opacity));
  return g;
}

void validate_activated(const GaussianCloud& cloud) {
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Gaussian& g = cloud.gaussians[i];
    const auto bad = [&](const std::string& what) {
      throw Error(ErrorKind::data, "record " + std::to_string(i) + ": " + what);
    };
    for (int d = 0; d < 3; ++d) {
      if (!std::isfinite(g.position[d])) bad("non-finite position");
      if (!std::isfinite(g.albedo[d])) bad("non-finite albedo");
      if (!(g.scale[d] > 0.f) || !std::isfinite(g.scale[d])) bad("scale must be positive and finite");
    }
    if (!(g.opacity >= 0.f && g.opacity <= 1.f)) bad("opacity outside [0,1]");
    double sq = 0.0;
    for (float c : g.rotation) sq += static_cast<double>(c) * c;
    if (!(std::abs(std::sqrt(sq) - 1.0) <= 1e-6)) bad("rotation is not a unit quaternion");
  }
}

GaussianCloud normalize_positions(const GaussianCloud& cloud, const Bounds& bounds) {
  GaussianCloud out = cloud;
  for (auto& g : out.gaussians) {
    for (int d = 0; d < 3; ++d) {
      g.position[d] = static_cast<float>((g.position[d] - bounds.center[d]) / bounds.radius);
    }
  }
  out.bounds = Bounds{};
  return out;
}

GaussianCloud restore_positions(const GaussianCloud& cloud, const Bounds& bounds) {
  GaussianCloud out = cloud;
  for (auto& g : out.gaussians) {
    for (int d = 0; d < 3; ++d) {
      g.position[d] = static_cast<float>(bounds.center[d] + bounds.radius * g.position[d]);
    }
  }
  out.bounds = bounds;
  return out;
}

}  // namespace gatlas
