#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gatlas {

/// A single 3D Gaussian. Attributes are stored in single precision because
/// that is what every on-disk format carries; covariance is derived on demand.
struct Gaussian {
  std::array<float, 3> position{0.f, 0.f, 0.f};
  std::array<float, 3> albedo{0.f, 0.f, 0.f};
  float opacity = 0.f;
  std::array<float, 3> scale{1.f, 1.f, 1.f};
  std::array<float, 4> rotation{1.f, 0.f, 0.f, 0.f};  // (w, x, y, z)

  friend bool operator==(const Gaussian&, const Gaussian&) = default;
};

/// Which parameter space the attribute values live in. `raw` means the
/// pre-activation values of a 3DGS fitting (opacity logit, log-scale, SH DC).
enum class Activation { raw, activated };

const char* to_string(Activation a) noexcept;
Activation activation_from_string(const std::string& text);

struct Bounds {
  std::array<double, 3> center{0.0, 0.0, 0.0};
  double radius = 1.0;

  friend bool operator==(const Bounds&, const Bounds&) = default;
};

struct GaussianCloud {
  std::vector<Gaussian> gaussians;
  std::string source_id;
  Bounds bounds;
  Activation space = Activation::activated;

  std::size_t size() const noexcept { return gaussians.size(); }
  bool empty() const noexcept { return gaussians.empty(); }

  friend bool operator==(const GaussianCloud&, const GaussianCloud&) = default;
};

inline constexpr double kShC0 = 0.28209479177387814;

double sigmoid(double x);
double logit(double p);

/// Center = mean position, radius = max distance to the center. All-coincident
/// positions give radius 1.
Bounds compute_bounds(std::span<const Gaussian> gaussians);

/// Renormalizes (only when the norm is off by more than 1e-6) and makes the
/// scalar part non-negative; for w == 0 the first nonzero component is made
/// positive. Idempotent, so repeated load/save cycles are bit-stable.
void canonicalize_rotation(std::array<float, 4>& q);

double scale_norm(const Gaussian& g);

Gaussian activate(const Gaussian& raw);
Gaussian deactivate(const Gaussian& activated);

/// Throws a data error naming the first offending record.
void validate_activated(const GaussianCloud& cloud);

/// Positions mapped into the unit ball: x <- (x - center) / radius.
GaussianCloud normalize_positions(const GaussianCloud& cloud, const Bounds& bounds);
GaussianCloud restore_positions(const GaussianCloud& cloud, const Bounds& bounds);

// ---- file I/O -------------------------------------------------------------

/// Loads a binary little-endian 3DGS PLY or a native GCLD file. For PLY,
/// `activation` selects whether stored values are activated or passed through.
/// GCLD files carry their own parameter space and ignore `activation`.
GaussianCloud load_splat_file(const std::filesystem::path& path,
                              Activation activation = Activation::activated);

/// Writes the native GCLD format.
void save_cloud(const GaussianCloud& cloud, const std::filesystem::path& path);

/// Writes a standard 3DGS PLY (x y z nx ny nz f_dc_0..2 opacity scale_0..2
/// rot_0..3). Activated clouds are mapped back to the stored parameterization.
void save_splat_ply(const GaussianCloud& cloud, const std::filesystem::path& path);

}  // namespace gatlas
