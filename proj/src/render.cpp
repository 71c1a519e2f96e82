#include "gatlas/render.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <numeric>
#include <thread>

#include <Eigen/Dense>

#include "gatlas/error.hpp"

namespace gatlas::render {

void Camera::validate() const {
  if (!(focal.x() > 0.0 && focal.y() > 0.0)) throw Error(ErrorKind::validation, "camera focal must be positive");
  if (!(near > 0.0 && near < far)) throw Error(ErrorKind::validation, "camera needs 0 < near < far");
  if (width <= 0 || height <= 0) throw Error(ErrorKind::validation, "camera resolution must be positive");
}

Camera Camera::look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up,
                       double fov_y_degrees, int width, int height) {
  Camera cam;
  const Eigen::Vector3d forward = (target - eye).normalized();
  Eigen::Vector3d right = forward.cross(up);
  if (right.norm() < 1e-9) right = forward.cross(Eigen::Vector3d::UnitX());
  if (right.norm() < 1e-9) right = forward.cross(Eigen::Vector3d::UnitY());
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);
  cam.rotation.row(0) = right.transpose();
  cam.rotation.row(1) = down.transpose();
  cam.rotation.row(2) = forward.transpose();
  cam.translation = -cam.rotation * eye;
  const double f = 0.5 * height / std::tan(0.5 * fov_y_degrees * std::numbers::pi / 180.0);
  cam.focal = {f, f};
  cam.principal = {0.5 * width, 0.5 * height};
  cam.width = width;
  cam.height = height;
  return cam;
}

std::vector<Camera> ring_cameras(int count, double radius, double elevation_degrees,
                                 const Eigen::Vector3d& center, double fov_y_degrees, int width, int height) {
  std::vector<Camera> cams;
  const double elevation = elevation_degrees * std::numbers::pi / 180.0;
  for (int k = 0; k < count; ++k) {
    const double azimuth = 2.0 * std::numbers::pi * k / count;
    const Eigen::Vector3d eye =
        center + radius * Eigen::Vector3d(std::cos(elevation) * std::cos(azimuth),
                                          std::cos(elevation) * std::sin(azimuth), std::sin(elevation));
    cams.push_back(Camera::look_at(eye, center, Eigen::Vector3d::UnitZ(), fov_y_degrees, width, height));
  }
  return cams;
}

Eigen::Matrix3d rotation_matrix(const std::array<float, 4>& q) {
  Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
  return quat.normalized().toRotationMatrix();
}

Eigen::Matrix3d covariance_3d(const std::array<float, 3>& scale, const std::array<float, 4>& rotation) {
  const Eigen::Matrix3d r = rotation_matrix(rotation);
  const Eigen::Vector3d s(scale[0], scale[1], scale[2]);
  const Eigen::Matrix3d m = r * s.asDiagonal();
  return m * m.transpose();
}

namespace {

struct Raw2d {
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;
  double depth;
};

std::optional<Raw2d> project_unculled(const Gaussian& g, const Camera& cam) {
  const Eigen::Vector3d world(g.position[0], g.position[1], g.position[2]);
  const Eigen::Vector3d p = cam.rotation * world + cam.translation;
  if (!(p.z() > cam.near && p.z() < cam.far)) return std::nullopt;
  const double inv_z = 1.0 / p.z();
  Eigen::Matrix<double, 2, 3> jac;
  jac << cam.focal.x() * inv_z, 0.0, -cam.focal.x() * p.x() * inv_z * inv_z,
         0.0, cam.focal.y() * inv_z, -cam.focal.y() * p.y() * inv_z * inv_z;
  const Eigen::Matrix<double, 2, 3> t = jac * cam.rotation;
  Raw2d out;
  out.cov = t * covariance_3d(g.scale, g.rotation) * t.transpose();
  out.cov(0, 0) += kCovarianceFloor;
  out.cov(1, 1) += kCovarianceFloor;
  out.mean = {cam.focal.x() * p.x() * inv_z + cam.principal.x(), cam.focal.y() * p.y() * inv_z + cam.principal.y()};
  out.depth = p.z();
  return out;
}

double footprint_radius(const Eigen::Matrix2d& cov) {
  const double mid = 0.5 * (cov(0, 0) + cov(1, 1));
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
  return 3.0 * std::sqrt(lambda_max);
}

bool misses_frame(const Eigen::Vector2d& mean, double radius, const Camera& cam) {
  return mean.x() + radius < 0.0 || mean.x() - radius > cam.width || mean.y() + radius < 0.0 ||
         mean.y() - radius > cam.height;
}

constexpr int kTile = 16;

struct Splat {
  std::uint32_t index;
  double depth;
  Eigen::Vector2d mean;
  double conic_a, conic_b, conic_c;  // inverse covariance (a b; b c)
  double opacity;
  std::array<double, 3> color;
  int x0, x1, y0, y1;  // inclusive pixel range whose centers lie in the 3-sigma box
};

// Strict total order: depth, then attribute content, then input index, so the
// composite does not depend on the order Gaussians were supplied in.
bool draws_before(const Splat& a, const Gaussian& ga, const Splat& b, const Gaussian& gb) {
  if (a.depth != b.depth) return a.depth < b.depth;
  const auto key = [](const Gaussian& g) {
    return std::tuple(g.position, g.albedo, g.opacity, g.scale, g.rotation);
  };
  const auto ka = key(ga);
  const auto kb = key(gb);
  if (ka != kb) return ka < kb;
  return a.index < b.index;
}

}  // namespace

std::optional<Projection> project_gaussian(const Gaussian& g, const Camera& cam) {
  auto raw = project_unculled(g, cam);
  if (!raw) return std::nullopt;
  if (misses_frame(raw->mean, footprint_radius(raw->cov), cam)) return std::nullopt;
  return Projection{raw->mean, raw->cov, raw->depth};
}

RenderOutput render(const GaussianCloud& cloud, const Camera& cam, const Eigen::Vector3d& background,
                    const RenderOptions& options) {
  cam.validate();
  RenderOutput out;
  out.color = Image(cam.width, cam.height, 3);
  out.alpha = Image(cam.width, cam.height, 1);
  out.depth = Image(cam.width, cam.height, 1);
  out.visibility.assign(cloud.size(), 0.0);

  std::vector<Splat> splats;
  splats.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Gaussian& g = cloud.gaussians[i];
    auto proj = project_gaussian(g, cam);
    if (!proj) continue;
    const Eigen::Matrix2d& cov = proj->cov;
    const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
    if (!(det > 0.0) || !std::isfinite(det) || !proj->mean.allFinite()) {
      ++out.skipped;
      continue;
    }
    Splat s;
    s.index = static_cast<std::uint32_t>(i);
    s.depth = proj->depth;
    s.mean = proj->mean;
    s.conic_a = cov(1, 1) / det;
    s.conic_b = -cov(0, 1) / det;
    s.conic_c = cov(0, 0) / det;
    s.opacity = g.opacity;
    s.color = {g.albedo[0], g.albedo[1], g.albedo[2]};
    const double r = footprint_radius(cov);
    s.x0 = std::max(0, static_cast<int>(std::ceil(s.mean.x() - r - 0.5)));
    s.x1 = std::min(cam.width - 1, static_cast<int>(std::floor(s.mean.x() + r - 0.5)));
    s.y0 = std::max(0, static_cast<int>(std::ceil(s.mean.y() - r - 0.5)));
    s.y1 = std::min(cam.height - 1, static_cast<int>(std::floor(s.mean.y() + r - 0.5)));
    if (s.x0 > s.x1 || s.y0 > s.y1) continue;
    splats.push_back(s);
  }
  std::sort(splats.begin(), splats.end(), [&](const Splat& a, const Splat& b) {
    return draws_before(a, cloud.gaussians[a.index], b, cloud.gaussians[b.index]);
  });

  const int tiles_x = (cam.width + kTile - 1) / kTile;
  const int tiles_y = (cam.height + kTile - 1) / kTile;
  std::vector<std::vector<std::uint32_t>> tile_lists(static_cast<std::size_t>(tiles_x) * tiles_y);
  for (std::uint32_t k = 0; k < splats.size(); ++k) {
    const Splat& s = splats[k];
    for (int ty = s.y0 / kTile; ty <= s.y1 / kTile; ++ty) {
      for (int tx = s.x0 / kTile; tx <= s.x1 / kTile; ++tx) {
        tile_lists[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(k);
      }
    }
  }

  // One work chunk per tile row; each keeps its own visibility sums which are
  // merged in row order, so results do not depend on the thread count.
  std::vector<std::vector<double>> chunk_visibility(static_cast<std::size_t>(tiles_y));
  std::atomic<int> next_row{0};
  std::atomic<bool> conservation_failed{false};
  const auto worker = [&] {
    for (int ty = next_row++; ty < tiles_y; ty = next_row++) {
      auto& vis = chunk_visibility[static_cast<std::size_t>(ty)];
      vis.assign(splats.size(), 0.0);
      for (int tx = 0; tx < tiles_x; ++tx) {
        const auto& list = tile_lists[static_cast<std::size_t>(ty) * tiles_x + tx];
        const int py_end = std::min(cam.height, (ty + 1) * kTile);
        const int px_end = std::min(cam.width, (tx + 1) * kTile);
        for (int py = ty * kTile; py < py_end; ++py) {
          for (int px = tx * kTile; px < px_end; ++px) {
            double transmittance = 1.0;
            double weight_sum = 0.0;
            std::array<double, 3> color{0.0, 0.0, 0.0};
            double depth = 0.0;
            for (std::uint32_t k : list) {
              const Splat& s = splats[k];
              if (px < s.x0 || px > s.x1 || py < s.y0 || py > s.y1) continue;
              const double dx = px + 0.5 - s.mean.x();
              const double dy = py + 0.5 - s.mean.y();
              const double power = -0.5 * (s.conic_a * dx * dx + 2.0 * s.conic_b * dx * dy + s.conic_c * dy * dy);
              const double w = std::min(kMaxAlpha, s.opacity * std::exp(std::min(0.0, power)));
              if (!(w > 0.0)) continue;
              const double blend = w * transmittance;
              for (int c = 0; c < 3; ++c) color[c] += s.color[c] * blend;
              depth += s.depth * blend;
              vis[k] += blend;
              weight_sum += blend;
              transmittance *= 1.0 - w;
              if (transmittance < kMinTransmittance) break;
            }
            for (int c = 0; c < 3; ++c) {
              out.color.at(px, py, c) = static_cast<float>(color[c] + background[c] * transmittance);
            }
            out.alpha.at(px, py, 0) = static_cast<float>(1.0 - transmittance);
            out.depth.at(px, py, 0) = static_cast<float>(depth);
            if (options.check_conservation && std::abs(weight_sum - (1.0 - transmittance)) > 1e-6) {
              conservation_failed = true;
            }
          }
        }
      }
    }
  };
  const int threads = std::clamp(options.threads, 1, std::max(1, tiles_y));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (conservation_failed) {
    throw Error(ErrorKind::numerical, "compositing conservation violated (alpha != sum of blend weights)");
  }
  for (const auto& vis : chunk_visibility) {
    for (std::size_t k = 0; k < splats.size(); ++k) out.visibility[splats[k].index] += vis[k];
  }
  return out;
}

}  // namespace gatlas::render
