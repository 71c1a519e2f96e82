#include "gatlas/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>

#include "gatlas/error.hpp"

namespace gatlas::sphere {

namespace {
constexpr int kSchemeVersion = 1;
}

std::size_t perfect_square_root(std::size_t n) {
  auto root = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while (root * root > n) --root;
  while ((root + 1) * (root + 1) <= n) ++root;
  return root * root == n ? root : 0;
}

std::string lattice_hash(std::size_t n) {
  // FNV-1a over the descriptor string.
  const std::string descriptor =
      "fibonacci-sphere/v" + std::to_string(kSchemeVersion) + "/n=" + std::to_string(n);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : descriptor) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SphereLattice generate_lattice(std::size_t n) {
  if (n == 0) throw Error(ErrorKind::validation, "lattice size must be at least 1");
  const std::size_t side = perfect_square_root(n);
  if (side == 0) {
    throw Error(ErrorKind::validation, "lattice size " + std::to_string(n) +
                                           " is not a perfect square (grid side must be sqrt(n))");
  }
  SphereLattice lattice;
  lattice.n = n;
  lattice.side = side;
  lattice.points.resize(n);
  lattice.flat_coords.resize(n);
  lattice.lattice_hash = lattice_hash(n);

  const double phi = std::numbers::phi;
  const double inv_phi_sq = 1.0 / (phi * phi);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double di = static_cast<double>(i);
    const double z = 1.0 - 2.0 * (di + 0.5) / static_cast<double>(n);
    const double lon = two_pi * std::fmod(di * inv_phi_sq, 1.0);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    lattice.points[i] = {r * std::cos(lon), r * std::sin(lon), z};
    lattice.flat_coords[i] = equirect(lattice.points[i]);
  }
  return lattice;
}

Vec2 equirect(const Vec3& p) {
  const double norm = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  if (!(std::abs(norm - 1.0) <= 1e-6)) {
    throw Error(ErrorKind::validation, "equirect expects a unit vector");
  }
  const double pi = std::numbers::pi;
  double u = 0.0;
  if (p[0] != 0.0 || p[1] != 0.0) {
    u = (std::atan2(p[1], p[0]) + pi) / (2.0 * pi);
    if (u >= 1.0) u -= 1.0;
  }
  const double v = (std::asin(std::clamp(p[2], -1.0, 1.0)) + pi / 2.0) / pi;
  return {u, v};
}

Vec3 equirect_inverse(const Vec2& uv) {
  if (!(uv[0] >= 0.0 && uv[0] < 1.0 && uv[1] >= 0.0 && uv[1] <= 1.0)) {
    throw Error(ErrorKind::validation, "equirect_inverse expects u in [0,1) and v in [0,1]");
  }
  if (uv[1] == 0.0) return {0.0, 0.0, -1.0};
  if (uv[1] == 1.0) return {0.0, 0.0, 1.0};
  const double pi = std::numbers::pi;
  const double lon = 2.0 * pi * uv[0] - pi;
  const double lat = pi * uv[1] - pi / 2.0;
  const double c = std::cos(lat);
  return {c * std::cos(lon), c * std::sin(lon), std::sin(lat)};
}

}  // namespace gatlas::sphere
