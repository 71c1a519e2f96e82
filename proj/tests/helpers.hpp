#pragma once

// Fixtures and reference implementations shared by the unit and acceptance
// tests. Everything here is written independently of the library code it is
// used to check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "gatlas/model.hpp"

namespace testing {

inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline double normal(std::mt19937_64& rng) {
  const double u1 = uniform(rng) + 0x1.0p-54;
  const double u2 = uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline std::array<float, 4> random_unit_quaternion(std::mt19937_64& rng) {
  std::array<double, 4> q{};
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& v : q) {
      v = normal(rng);
      norm += v * v;
    }
  } while (norm < 1e-6);
  norm = std::sqrt(norm);
  const double sign = q[0] < 0.0 ? -1.0 : 1.0;
  return {static_cast<float>(sign * q[0] / norm), static_cast<float>(sign * q[1] / norm),
          static_cast<float>(sign * q[2] / norm), static_cast<float>(sign * q[3] / norm)};
}

struct CloudShape {
  std::array<double, 3> center{0.0, 0.0, 0.0};
  std::array<double, 3> extent{1.0, 1.0, 1.0};
  double scale_lo = 0.005;
  double scale_hi = 0.05;
  double opacity_lo = 0.05;
};

/// Activated cloud with Gaussian-distributed positions.
inline gatlas::GaussianCloud random_cloud(std::size_t n, std::uint64_t seed, const CloudShape& shape = {}) {
  std::mt19937_64 rng(seed);
  gatlas::GaussianCloud cloud;
  cloud.source_id = "seed" + std::to_string(seed);
  cloud.gaussians.resize(n);
  for (auto& g : cloud.gaussians) {
    for (int d = 0; d < 3; ++d) {
      g.position[d] = static_cast<float>(shape.center[d] + shape.extent[d] * normal(rng));
      g.albedo[d] = static_cast<float>(uniform(rng));
      g.scale[d] = static_cast<float>(std::exp(uniform(rng, std::log(shape.scale_lo), std::log(shape.scale_hi))));
    }
    g.opacity = static_cast<float>(uniform(rng, shape.opacity_lo, 1.0));
    g.rotation = random_unit_quaternion(rng);
  }
  if (n > 0) cloud.bounds = gatlas::compute_bounds(cloud.gaussians);
  return cloud;
}

/// Opaque shell of tangent disks around a cluster of larger interior
/// Gaussians. The first `shell` entries are the shell.
inline gatlas::GaussianCloud shell_fixture(std::size_t shell, std::size_t interior, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  gatlas::GaussianCloud cloud;
  cloud.source_id = "shell" + std::to_string(seed);
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  for (std::size_t i = 0; i < shell; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / static_cast<double>(shell);
    const double lon = 2.0 * std::numbers::pi * i / golden;
    const double r = std::sqrt(1.0 - z * z);
    const double nx = r * std::cos(lon), ny = r * std::sin(lon);
    gatlas::Gaussian g;
    g.position = {static_cast<float>(nx), static_cast<float>(ny), static_cast<float>(z)};
    const float disk = static_cast<float>(0.18 * std::sqrt(400.0 / static_cast<double>(shell)));
    g.scale = {disk, disk, 0.005f};
    g.opacity = 1.f;
    g.albedo = {0.5f, 0.5f, 0.55f};
    // Rotates +z onto the outward normal.
    const double w = 1.0 + z, len = std::sqrt(w * w + ny * ny + nx * nx);
    g.rotation = {static_cast<float>(w / len), static_cast<float>(-ny / len), static_cast<float>(nx / len), 0.f};
    cloud.gaussians.push_back(g);
  }
  for (std::size_t i = 0; i < interior; ++i) {
    gatlas::Gaussian g;
    for (int d = 0; d < 3; ++d) {
      g.position[d] = static_cast<float>(uniform(rng, -0.17, 0.17));
      g.scale[d] = 0.17f;
    }
    g.opacity = 0.9f;
    g.albedo = {1.f, static_cast<float>(uniform(rng, 0.0, 0.2)), 0.f};
    cloud.gaussians.push_back(g);
  }
  cloud.bounds = gatlas::compute_bounds(cloud.gaussians);
  return cloud;
}

// ---- assignment -------------------------------------------------------------

/// Minimum over all injections of sources into targets, by plain enumeration.
inline double enumerate_min_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t m = cost.size();
  const std::size_t n = m == 0 ? 0 : cost[0].size();
  std::vector<bool> used(n, false);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double acc) {
    if (i == m) {
      best = std::min(best, acc);
      return;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      used[j] = true;
      rec(i + 1, acc + cost[i][j]);
      used[j] = false;
    }
  };
  rec(0, 0.0);
  return best;
}

inline double squared_distance(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

// ---- files ------------------------------------------------------------------

struct PlyVertex {
  float values[17];  // x y z nx ny nz f_dc_0..2 opacity scale_0..2 rot_0..3
};

/// Writes the reference 3DGS PLY layout byte by byte.
inline void write_reference_ply(const std::filesystem::path& path, const std::vector<PlyVertex>& vertices,
                                const std::vector<std::string>& extra_properties = {}) {
  std::string header = "ply\nformat binary_little_endian 1.0\nelement vertex " + std::to_string(vertices.size()) + "\n";
  for (const char* name : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0",
                           "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"}) {
    header += std::string("property float ") + name + "\n";
  }
  for (const auto& name : extra_properties) header += "property float " + name + "\n";
  header += "end_header\n";
  std::ofstream out(path, std::ios::binary);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& v : vertices) {
    for (float f : v.values) {
      unsigned char bytes[4];
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      for (int k = 0; k < 4; ++k) bytes[k] = static_cast<unsigned char>((bits >> (8 * k)) & 0xffu);
      out.write(reinterpret_cast<const char*>(bytes), 4);
    }
    for (std::size_t e = 0; e < extra_properties.size(); ++e) {
      const char zero[4] = {0, 0, 0, 0};
      out.write(zero, 4);
    }
  }
}

inline std::vector<unsigned char> file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("gatlas-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// ---- image metrics ----------------------------------------------------------

/// Direct (non-separable) windowed SSIM over the valid region.
inline double naive_ssim(const std::vector<double>& a, const std::vector<double>& b, int width, int height,
                         int channels) {
  const int win = 11;
  const double sigma = 1.5;
  double weights[11][11];
  double total = 0.0;
  for (int i = 0; i < win; ++i) {
    for (int j = 0; j < win; ++j) {
      const double di = i - 5, dj = j - 5;
      weights[i][j] = std::exp(-(di * di + dj * dj) / (2 * sigma * sigma));
      total += weights[i][j];
    }
  }
  const double c1 = 1e-4, c2 = 9e-4;
  double sum = 0.0;
  int count = 0;
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y + win <= height; ++y) {
      for (int x = 0; x + win <= width; ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < win; ++i) {
          for (int j = 0; j < win; ++j) {
            const double w = weights[i][j] / total;
            const std::size_t k = (static_cast<std::size_t>(y + i) * width + (x + j)) * channels + c;
            ma += w * a[k];
            mb += w * b[k];
            saa += w * a[k] * a[k];
            sbb += w * b[k] * b[k];
            sab += w * a[k] * b[k];
          }
        }
        const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
        sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    }
  }
  return sum / count;
}

}  // namespace testing
