#pragma once

// CPU splat rasterizer: EWA projection, global depth sort, front-to-back
// alpha compositing. Used to verify the atlas round trip and to score
// per-Gaussian visibility for pruning.

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "gatlas/image.hpp"
#include "gatlas/model.hpp"

namespace gatlas::render {

/// Pinhole camera, OpenCV axes (x right, y down, z forward). `rotation` and
/// `translation` map world points into the camera frame.
struct Camera {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Vector2d focal{256.0, 256.0};
  Eigen::Vector2d principal{128.0, 128.0};
  int width = 256;
  int height = 256;
  double near = 0.01;
  double far = 1000.0;

  void validate() const;

  static Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up,
                        double fov_y_degrees, int width, int height);
};

/// `count` views evenly spaced in azimuth on a circle of `radius` around
/// `center`, at a fixed elevation (degrees above the xy-plane), looking at the
/// center with +z as up.
std::vector<Camera> ring_cameras(int count, double radius, double elevation_degrees,
                                 const Eigen::Vector3d& center, double fov_y_degrees, int width, int height);

Eigen::Matrix3d rotation_matrix(const std::array<float, 4>& q);

/// R diag(s)^2 R^T.
Eigen::Matrix3d covariance_3d(const std::array<float, 3>& scale, const std::array<float, 4>& rotation);

inline constexpr double kCovarianceFloor = 0.3;  // px^2 added to the 2D diagonal
inline constexpr double kMaxAlpha = 0.99;
inline constexpr double kMinTransmittance = 1e-4;

struct Projection {
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;  // includes the 0.3 px^2 floor
  double depth = 0.0;
};

/// std::nullopt when the Gaussian is outside (near, far) or its 3-sigma
/// footprint misses the frame.
std::optional<Projection> project_gaussian(const Gaussian& g, const Camera& cam);

struct RenderOptions {
  int threads = 1;
  // Re-derives alpha from the per-pixel blend weights and throws a numerical
  // error if the two disagree by more than 1e-6.
  bool check_conservation = false;
};

struct RenderOutput {
  Image color;  // 3 channels, linear
  Image alpha;  // 1 channel
  Image depth;  // 1 channel, alpha-weighted
  std::vector<double> visibility;  // per input Gaussian, sum over pixels of w * T
  std::size_t skipped = 0;         // degenerate projected covariances
};

RenderOutput render(const GaussianCloud& cloud, const Camera& cam,
                    const Eigen::Vector3d& background = Eigen::Vector3d::Zero(), const RenderOptions& options = {});

// ---- metrics --------------------------------------------------------------

/// 10 log10(1 / MSE) for images in [0,1]; +infinity for identical images.
double psnr(const Image& a, const Image& b);

/// Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), k1 = 0.01,
/// k2 = 0.03, data range 1, averaged over valid windows and channels.
double ssim(const Image& a, const Image& b);

}  // namespace gatlas::render
