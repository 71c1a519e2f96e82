#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gatlas/error.hpp"
#include "gatlas/sphere.hpp"
#include "helpers.hpp"

using namespace gatlas;
using namespace gatlas::sphere;

namespace {

double norm(const Vec3& p) { return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]); }

}  // namespace

TEST_SUITE("sphere") {

TEST_CASE("small lattices") {
  const auto one = generate_lattice(1);
  REQUIRE(one.points.size() == 1);
  CHECK(one.points[0][2] == 0.0);
  CHECK(norm(one.points[0]) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(one.side == 1);

  const auto four = generate_lattice(4);
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      CHECK(testing::squared_distance(four.points[i].data(), four.points[j].data(), 3) > 0.25);
    }
  }
}

TEST_CASE("lattice follows the spiral formula") {
  const std::size_t n = 400;
  const auto lattice = generate_lattice(n);
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  for (std::size_t i = 0; i < n; i += 37) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double lon = 2.0 * std::numbers::pi * std::fmod(i / (golden * golden), 1.0);
    const double r = std::sqrt(1.0 - z * z);
    CHECK(lattice.points[i][0] == doctest::Approx(r * std::cos(lon)).epsilon(1e-9));
    CHECK(lattice.points[i][1] == doctest::Approx(r * std::sin(lon)).epsilon(1e-9));
    CHECK(lattice.points[i][2] == doctest::Approx(z).epsilon(1e-12));
  }
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(std::abs(norm(lattice.points[i]) - 1.0) < 1e-9);
    CHECK(lattice.flat_coords[i] == equirect(lattice.points[i]));
  }
}

TEST_CASE("generation is deterministic") {
  const auto a = generate_lattice(1024);
  const auto b = generate_lattice(1024);
  CHECK(a.points == b.points);
  CHECK(a.flat_coords == b.flat_coords);
  CHECK(a.lattice_hash == b.lattice_hash);
  CHECK(a.lattice_hash == lattice_hash(1024));
  CHECK(lattice_hash(1024) != lattice_hash(1089));
}

TEST_CASE("invalid sizes") {
  for (std::size_t n : {0, 2, 15, 16383}) {
    try {
      generate_lattice(n);
      FAIL("expected a validation error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::validation);
    }
  }
  CHECK(perfect_square_root(16384) == 128);
  CHECK(perfect_square_root(16385) == 0);
}

TEST_CASE("16384-point lattice spacing") {
  const auto lattice = generate_lattice(16384);
  // Brute-force nearest neighbour scan.
  std::vector<double> nn(lattice.n, 1e9);
  for (std::size_t i = 0; i < lattice.n; ++i) {
    for (std::size_t j = i + 1; j < lattice.n; ++j) {
      const double d = testing::squared_distance(lattice.points[i].data(), lattice.points[j].data(), 3);
      nn[i] = std::min(nn[i], d);
      nn[j] = std::min(nn[j], d);
    }
  }
  double sum = 0, sum2 = 0, min_angle = 1e9;
  for (double d2 : nn) {
    const double chord = std::sqrt(d2);
    const double angle = 2.0 * std::asin(chord / 2.0);
    min_angle = std::min(min_angle, angle);
    sum += chord;
    sum2 += chord * chord;
  }
  const double mean = sum / lattice.n;
  const double cv = std::sqrt(sum2 / lattice.n - mean * mean) / mean;
  CHECK(min_angle > 0.0);
  CHECK(cv < 0.35);
}

TEST_CASE("latitude bands hold their area share") {
  const std::size_t n = 16384;
  const auto lattice = generate_lattice(n);
  std::vector<int> counts(16, 0);
  for (const auto& uv : lattice.flat_coords) counts[std::min(15, static_cast<int>(uv[1] * 16))]++;
  for (int b = 0; b < 16; ++b) {
    const double lo = std::numbers::pi * b / 16 - std::numbers::pi / 2;
    const double hi = std::numbers::pi * (b + 1) / 16 - std::numbers::pi / 2;
    const double expected = n * (std::sin(hi) - std::sin(lo)) / 2.0;
    CHECK(std::abs(counts[b] - expected) <= 0.2 * expected);
  }
}

TEST_CASE("equirectangular examples") {
  CHECK(equirect({-1, 0, 0}) == Vec2{0.0, 0.5});
  CHECK(equirect({0, 0, 1}) == Vec2{0.0, 1.0});
  CHECK(equirect({0, 0, -1}) == Vec2{0.0, 0.0});
  const auto e = equirect({1, 0, 0});
  CHECK(e[0] == doctest::Approx(0.5));
  CHECK(e[1] == doctest::Approx(0.5));

  auto p = equirect_inverse({0.5, 0.5});
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(std::abs(p[1]) < 1e-15);
  CHECK(std::abs(p[2]) < 1e-15);
  p = equirect_inverse({0.0, 0.5});
  CHECK(p[0] == doctest::Approx(-1.0));
  CHECK(std::abs(p[1]) < 1e-15);
  CHECK(equirect_inverse({0.3, 1.0}) == Vec3{0, 0, 1});
  CHECK(equirect_inverse({0.7, 0.0}) == Vec3{0, 0, -1});

  CHECK_THROWS_AS(equirect({1, 1, 0}), Error);
  CHECK_THROWS_AS(equirect_inverse({1.0, 0.5}), Error);
  CHECK_THROWS_AS(equirect_inverse({0.2, 1.5}), Error);
  CHECK_THROWS_AS(equirect_inverse({-0.1, 0.5}), Error);
}

TEST_CASE("projection round trips") {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  int tested = 0;
  while (tested < 1000) {
    Vec3 v{testing::normal(rng), testing::normal(rng), testing::normal(rng)};
    const double len = norm(v);
    for (auto& c : v) c /= len;
    if (std::abs(v[2]) > 1.0 - 1e-6) continue;
    const auto back = equirect_inverse(equirect(v));
    for (int d = 0; d < 3; ++d) worst = std::max(worst, std::abs(back[d] - v[d]));
    ++tested;
  }
  CHECK(worst < 1e-9);

  worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vec2 uv{testing::uniform(rng, 1e-9, 1.0 - 1e-9), testing::uniform(rng, 1e-9, 1.0 - 1e-9)};
    const auto back = equirect(equirect_inverse(uv));
    worst = std::max({worst, std::abs(back[0] - uv[0]), std::abs(back[1] - uv[1])});
  }
  CHECK(worst < 1e-9);
}

}
