#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gatlas/error.hpp"
#include "gatlas/schedule.hpp"
#include "helpers.hpp"

using namespace gatlas;
using namespace gatlas::schedule;

namespace {

std::vector<double> gaussian_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = testing::normal(rng);
  return v;
}

}  // namespace

TEST_SUITE("schedule") {

TEST_CASE("first timestep") {
  const auto linear = build_schedule(Variant::scaled_linear, 1000);
  CHECK(linear.alphas[0] == doctest::Approx(std::sqrt(1.0 - 0.00085)).epsilon(1e-12));
  CHECK(linear.sigmas[0] == doctest::Approx(std::sqrt(0.00085)).epsilon(1e-12));

  const auto cosine = build_schedule(Variant::cosine, 1000);
  const auto f = [](double t) { return std::pow(std::cos((t + 0.008) / 1.008 * std::numbers::pi / 2), 2); };
  CHECK(cosine.alphas[0] * cosine.alphas[0] == doctest::Approx(f(0.001) / f(0.0)).epsilon(1e-12));
}

TEST_CASE("variance preservation and monotonicity") {
  for (auto variant : {Variant::scaled_linear, Variant::cosine}) {
    for (std::size_t steps : {1u, 50u, 1000u}) {
      const auto s = build_schedule(variant, steps);
      REQUIRE(s.alphas.size() == steps);
      for (std::size_t t = 0; t < steps; ++t) {
        CHECK(std::abs(s.alphas[t] * s.alphas[t] + s.sigmas[t] * s.sigmas[t] - 1.0) < 1e-12);
        if (t > 0) CHECK(s.alphas[t] < s.alphas[t - 1]);
      }
    }
  }
  CHECK(build_schedule(Variant::scaled_linear, 1000).alphas.back() < 0.1);
  CHECK(build_schedule(Variant::cosine, 1000).alphas.back() < 0.01);
  CHECK_THROWS_AS(build_schedule(Variant::cosine, 0), Error);
  CHECK_THROWS_AS(variant_from_string("linear"), Error);
}

TEST_CASE("equal signal and noise") {
  // Hand-built one-step schedule with alpha = sigma = 1/sqrt(2).
  NoiseSchedule s;
  s.steps = 1;
  s.alphas = {1.0 / std::numbers::sqrt2};
  s.sigmas = {1.0 / std::numbers::sqrt2};
  const std::vector<double> x0 = {1.0, -2.0, 0.0};
  const std::vector<double> eps = {1.0, 2.0, 3.0};
  const auto xt = add_noise(x0, eps, 0, s);
  const auto v = velocity_target(x0, eps, 0, s);
  const double h = 1.0 / std::numbers::sqrt2;
  CHECK(xt[0] == doctest::Approx(2 * h));
  CHECK(xt[1] == doctest::Approx(0.0));
  CHECK(xt[2] == doctest::Approx(3 * h));
  CHECK(v[0] == doctest::Approx(0.0));
  CHECK(v[1] == doctest::Approx(4 * h));
  CHECK(v[2] == doctest::Approx(3 * h));
}

TEST_CASE("noised unit-variance data keeps unit variance") {
  const auto s = build_schedule(Variant::scaled_linear, 1000);
  const auto x0 = gaussian_vector(200000, 1);
  const auto eps = gaussian_vector(200000, 2);
  for (std::size_t t : {0u, 250u, 500u, 999u}) {
    const auto xt = add_noise(x0, eps, t, s);
    double sum = 0, sum2 = 0;
    for (double x : xt) {
      sum += x;
      sum2 += x * x;
    }
    const double mean = sum / xt.size();
    const double sd = std::sqrt(sum2 / xt.size() - mean * mean);
    CHECK(std::abs(sd - 1.0) < 0.02);
  }
}

TEST_CASE("noise-only samples have standard deviation sigma") {
  const auto s = build_schedule(Variant::cosine, 1000);
  const std::vector<double> x0(10000, 0.0);
  const auto eps = gaussian_vector(10000, 9);
  for (std::size_t t : {10u, 400u, 900u}) {
    const auto xt = add_noise(x0, eps, t, s);
    double sum2 = 0;
    for (double x : xt) sum2 += x * x;
    CHECK(std::abs(std::sqrt(sum2 / xt.size()) / s.sigmas[t] - 1.0) < 0.02);
  }
}

TEST_CASE("reconstruction identities over 50 steps") {
  const auto x0 = gaussian_vector(4096, 3);
  const auto eps = gaussian_vector(4096, 4);
  for (auto variant : {Variant::scaled_linear, Variant::cosine}) {
    const auto s = build_schedule(variant, 50);
    const auto report = check_identities(x0, eps, s);
    CHECK(report.timesteps == 50);
    CHECK(report.max_x0_error < 1e-6);
    CHECK(report.max_noise_error < 1e-6);
    // Independent restatement at one step.
    const auto xt = add_noise(x0, eps, 17, s);
    const auto v = velocity_target(x0, eps, 17, s);
    for (std::size_t k = 0; k < 64; ++k) {
      const double a = s.alphas[17], sg = s.sigmas[17];
      CHECK(std::abs(a * xt[k] - sg * v[k] - x0[k]) < 1e-12);
      CHECK(std::abs(sg * xt[k] + a * v[k] - eps[k]) < 1e-12);
    }
  }
}

TEST_CASE("targets are linear in their inputs") {
  const auto s = build_schedule(Variant::cosine, 50);
  const auto a = gaussian_vector(100, 5), b = gaussian_vector(100, 6);
  const auto c = gaussian_vector(100, 7), d = gaussian_vector(100, 8);
  std::vector<double> ac(100), bd(100);
  for (std::size_t k = 0; k < 100; ++k) {
    ac[k] = 2.0 * a[k] + c[k];
    bd[k] = 2.0 * b[k] + d[k];
  }
  const auto lhs = velocity_target(ac, bd, 30, s);
  const auto v1 = velocity_target(a, b, 30, s), v2 = velocity_target(c, d, 30, s);
  for (std::size_t k = 0; k < 100; ++k) CHECK(std::abs(lhs[k] - (2.0 * v1[k] + v2[k])) < 1e-12);

  CHECK_THROWS_AS(add_noise(a, std::vector<double>(99), 0, s), Error);
  CHECK_THROWS_AS(add_noise(a, b, 50, s), Error);
}

TEST_CASE("atlas forms require normalized input") {
  auto grid = atlas::AtlasGrid::zeros(4, "h");
  std::vector<float> noise(grid.data.size(), 1.f);
  const auto s = build_schedule(Variant::scaled_linear, 50);
  try {
    add_noise(grid, noise, 3, s);
    FAIL("expected a state error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::state);
  }
  grid.normalized = true;
  for (std::size_t k = 0; k < grid.data.size(); ++k) grid.data[k] = static_cast<float>(k % 7) - 3.f;
  const auto xt = add_noise(grid, noise, 3, s);
  const auto v = velocity_target(grid, noise, 3, s);
  CHECK(xt.extra["timestep"] == 3);
  for (std::size_t k = 0; k < grid.data.size(); ++k) {
    CHECK(xt.data[k] == doctest::Approx(s.alphas[3] * grid.data[k] + s.sigmas[3]).epsilon(1e-6));
    CHECK(v.data[k] == doctest::Approx(s.alphas[3] - s.sigmas[3] * grid.data[k]).epsilon(1e-6));
  }
  CHECK_THROWS_AS(add_noise(grid, std::vector<float>(3), 3, s), Error);
}

}
