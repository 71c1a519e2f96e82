#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace gatlas::sphere {

using Vec3 = std::array<double, 3>;
using Vec2 = std::array<double, 2>;

/// N near-uniform unit-sphere points and their equirectangular coordinates.
/// N is a perfect square so the flattened points fill a side x side grid.
struct SphereLattice {
  std::size_t n = 0;
  std::size_t side = 0;
  std::vector<Vec3> points;
  std::vector<Vec2> flat_coords;  // (u, v) in [0,1) x [0,1]
  std::string lattice_hash;
};

/// Fibonacci spiral: z_i = 1 - 2(i + 0.5)/n, longitude 2*pi*i/phi^2 (mod 2*pi).
SphereLattice generate_lattice(std::size_t n);

/// Hash of the generation scheme, its version and n.
std::string lattice_hash(std::size_t n);

/// u = (atan2(y, x) + pi) / 2pi wrapped into [0,1), u = 0 at the poles;
/// v = (asin(z) + pi/2) / pi.
Vec2 equirect(const Vec3& point);

Vec3 equirect_inverse(const Vec2& uv);

/// Exact integer square root, or 0 when n is not a perfect square.
std::size_t perfect_square_root(std::size_t n);

}  // namespace gatlas::sphere
