#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "gatlas/atlas.hpp"
#include "gatlas/error.hpp"
#include "gatlas/pipeline.hpp"
#include "helpers.hpp"

using namespace gatlas;
using namespace gatlas::atlas;

namespace {

GaussianCloud unit_ball_cloud(std::size_t n, std::uint64_t seed) {
  auto cloud = testing::random_cloud(n, seed);
  if (n == 0) return cloud;
  return normalize_positions(cloud, compute_bounds(cloud.gaussians));
}

AtlasGrid random_atlas(std::size_t side, std::uint64_t seed, double spread = 1.0) {
  std::mt19937_64 rng(seed);
  auto a = AtlasGrid::zeros(side, "h");
  for (auto& v : a.data) v = static_cast<float>(spread * testing::normal(rng) + 0.3);
  return a;
}

double wrapped_cost(const sphere::Vec2& uv, std::size_t pixel, std::size_t side) {
  const double gu = (pixel % side + 0.5) / side;
  const double gv = (pixel / side + 0.5) / side;
  double du = std::abs(uv[0] - gu);
  du = std::min(du, 1.0 - du);
  return du * du + (uv[1] - gv) * (uv[1] - gv);
}

}  // namespace

TEST_SUITE("atlas") {

TEST_CASE("plane index for tiny lattices") {
  const auto l1 = sphere::generate_lattice(1);
  CHECK(plane_offset_index(l1).mapping == std::vector<std::uint32_t>{0});

  const auto l4 = sphere::generate_lattice(4);
  const auto idx = plane_offset_index(l4);
  std::vector<std::uint32_t> perm = {0, 1, 2, 3};
  double best = 1e9;
  do {
    double c = 0;
    for (int i = 0; i < 4; ++i) c += wrapped_cost(l4.flat_coords[i], perm[i], 2);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  double got = 0;
  for (int i = 0; i < 4; ++i) got += wrapped_cost(l4.flat_coords[i], idx.mapping[i], 2);
  CHECK(got == doctest::Approx(best).epsilon(1e-12));
  CHECK(idx.total_cost == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("plane index cache") {
  const auto dir = testing::scratch_dir("atlas-cache");
  const auto lattice = sphere::generate_lattice(256);
  const auto fresh = plane_offset_index(lattice);
  const auto written = plane_offset_index(lattice, dir / "p.gidx");
  CHECK(written.mapping == fresh.mapping);
  const auto bytes = testing::file_bytes(dir / "p.gidx");
  const auto loaded = plane_offset_index(lattice, dir / "p.gidx");
  CHECK(loaded.mapping == fresh.mapping);
  CHECK(loaded.total_cost == doctest::Approx(fresh.total_cost).epsilon(1e-12));
  CHECK(testing::file_bytes(dir / "p.gidx") == bytes);

  // An index produced for another lattice is stale.
  transport::save_index(dir / "stale.gidx", fresh, 256, "not-this-lattice");
  try {
    plane_offset_index(lattice, dir / "stale.gidx");
    FAIL("expected a state error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::state);
  }

  // Auction-built index agrees with the exact one within its bound.
  OffsetConfig cfg;
  cfg.plane_exact_max = 0;
  const auto auction = plane_offset_index(lattice, std::nullopt, cfg);
  CHECK(auction.solver == transport::Solver::auction);
  CHECK(auction.total_cost <= fresh.total_cost + 256 * auction.epsilon_final + 1e-12);
}

TEST_CASE("sphere offsetting") {
  const auto lattice = sphere::generate_lattice(64);
  GaussianCloud on_lattice;
  on_lattice.gaussians.resize(2);
  for (int d = 0; d < 3; ++d) {
    on_lattice.gaussians[0].position[d] = static_cast<float>(lattice.points[10][d]);
    on_lattice.gaussians[1].position[d] = static_cast<float>(lattice.points[40][d]);
  }
  auto exact_points = lattice;  // positions are floats, so compare against float-rounded targets
  for (auto& p : exact_points.points) {
    for (auto& c : p) c = static_cast<float>(c);
  }
  auto off = sphere_offset(on_lattice, exact_points);
  CHECK(off.assignment.total_cost == 0.0);
  CHECK(off.assignment.mapping == std::vector<std::uint32_t>{10, 40});
  for (const auto& o : off.offsets) CHECK(o == std::array<double, 3>{0, 0, 0});

  off = sphere_offset(GaussianCloud{}, lattice);
  CHECK(off.assignment.mapping.empty());
  CHECK(off.offsets.empty());

  const auto cloud = unit_ball_cloud(50, 7);
  const auto spec = sphere_cost_spec(cloud, lattice);
  off = sphere_offset(cloud, lattice);
  CHECK(off.assignment.total_cost == doctest::Approx(transport::solve_exact(spec).total_cost).epsilon(1e-12));
  OffsetConfig auction_cfg;
  auction_cfg.exact.max_sources = 0;
  const auto via_auction = sphere_offset(cloud, lattice, auction_cfg);
  CHECK(via_auction.assignment.solver == transport::Solver::auction);
  CHECK(via_auction.assignment.total_cost <= off.assignment.total_cost + 50 * 1e-7 * transport::mean_pairwise_cost(spec));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = lattice.points[off.assignment.mapping[i]];
    for (int d = 0; d < 3; ++d) CHECK(off.offsets[i][d] == cloud.gaussians[i].position[d] - p[d]);
  }

  try {
    sphere_offset(unit_ball_cloud(65, 1), lattice);
    FAIL("expected a capacity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::capacity);
    CHECK(std::string(e.what()).find("prune_to") != std::string::npos);
  }
}

TEST_CASE("packing pads with the smallest-scale Gaussian") {
  const auto lattice = sphere::generate_lattice(4);
  const auto plane = plane_offset_index(lattice);

  const auto empty = pack(GaussianCloud{}, lattice, plane, {}, {});
  CHECK(empty.side == 2);
  for (std::size_t p = 0; p < 4; ++p) {
    CHECK(empty.at(kOpacityA, p) == 0.f);
    CHECK(empty.at(kOpacityB, p) == 0.f);
    CHECK(empty.at(kOpacityC, p) == 0.f);
    CHECK(empty.at(kRotW, p) == 1.f);
    CHECK(empty.at(kRotX, p) == 0.f);
    CHECK(empty.at(kScaleX, p) == 0.f);
  }
  CHECK(unpack(empty, lattice, plane).empty());

  GaussianCloud cloud;
  cloud.gaussians.resize(3);
  const float sizes[3] = {0.3f, 0.1f, 0.2f};
  for (int i = 0; i < 3; ++i) {
    auto& g = cloud.gaussians[i];
    g.position = {0.1f * i, 0.f, 0.f};
    g.scale = {sizes[i] / std::sqrt(3.f), sizes[i] / std::sqrt(3.f), sizes[i] / std::sqrt(3.f)};
    g.albedo = {0.1f * (i + 1), 0.2f, 0.3f};
    g.opacity = 0.5f + 0.1f * i;
    g.rotation = {0.f, 1.f, 0.f, 0.f};
  }
  cloud.gaussians[1].rotation = {0.6f, 0.8f, 0.f, 0.f};
  const auto off = sphere_offset(cloud, lattice);
  const auto atlas = pack(cloud, lattice, plane, off.assignment, off.offsets);

  std::vector<bool> used(4, false);
  for (int i = 0; i < 3; ++i) used[plane.mapping[off.assignment.mapping[i]]] = true;
  const auto pad = static_cast<std::size_t>(std::find(used.begin(), used.end(), false) - used.begin());
  REQUIRE(pad < 4);
  const auto& smallest = cloud.gaussians[1];
  CHECK(atlas.at(kOpacityA, pad) == 0.f);
  CHECK(atlas.at(kOpacityB, pad) == 0.f);
  CHECK(atlas.at(kOpacityC, pad) == 0.f);
  CHECK(atlas.at(kAlbedoR, pad) == smallest.albedo[0]);
  CHECK(atlas.at(kScaleX, pad) == smallest.scale[0]);
  CHECK(atlas.at(kRotW, pad) == 0.6f);
  CHECK(atlas.at(kRotX, pad) == 0.8f);
  CHECK(atlas.at(kOffsetX, pad) == 0.f);
  CHECK(atlas.at(kOffsetY, pad) == 0.f);
  CHECK(atlas.at(kOffsetZ, pad) == 0.f);

  for (int i = 0; i < 3; ++i) {
    const auto p = plane.mapping[off.assignment.mapping[i]];
    CHECK(atlas.at(kOpacityA, p) == cloud.gaussians[i].opacity);
    CHECK(atlas.at(kOpacityB, p) == cloud.gaussians[i].opacity);
    CHECK(atlas.at(kOpacityC, p) == cloud.gaussians[i].opacity);
  }
}

TEST_CASE("pack and unpack are inverse") {
  const auto lattice = sphere::generate_lattice(1024);
  const auto plane = plane_offset_index(lattice);
  for (std::size_t size : {1, 17, 100, 1024}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto cloud = unit_ball_cloud(size, 100 * size + seed);
      const auto off = sphere_offset(cloud, lattice);
      const auto atlas = pack(cloud, lattice, plane, off.assignment, off.offsets);
      REQUIRE(atlas.data.size() == 16 * 1024);

      std::size_t positive = 0;
      for (std::size_t p = 0; p < atlas.pixels(); ++p) positive += atlas.at(kOpacityA, p) > 0.f;
      CHECK(positive == size);

      const auto all = unpack(atlas, lattice, plane, 0.f);
      REQUIRE(all.size() == 1024);
      double worst = 0.0;
      for (std::size_t i = 0; i < size; ++i) {
        const auto p = plane.mapping[off.assignment.mapping[i]];
        worst = std::max(worst, pipeline::max_attribute_difference(cloud.gaussians[i], all.gaussians[p]));
      }
      CHECK(worst <= 1e-6);

      const auto culled = unpack(atlas, lattice, plane);
      CHECK(culled.size() == size);
    }
  }
}

TEST_CASE("unpack preconditions") {
  const auto lattice = sphere::generate_lattice(16);
  const auto plane = plane_offset_index(lattice);
  auto atlas = pack(GaussianCloud{}, lattice, plane, {}, {});
  atlas.normalized = true;
  try {
    unpack(atlas, lattice, plane);
    FAIL("expected a state error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::state);
  }
  atlas.normalized = false;
  const auto other = sphere::generate_lattice(25);
  CHECK_THROWS_AS(unpack(atlas, other, plane_offset_index(other)), Error);
}

TEST_CASE("statistics") {
  const auto a = random_atlas(4, 1);
  auto s = fit_stats(std::vector<AtlasGrid>{a});
  CHECK(s.corpus_size == 1);
  for (std::size_t k = 0; k < a.data.size(); ++k) {
    CHECK(s.mean[k] == a.data[k]);
    CHECK(s.stddev[k] == 1e-4);
  }

  auto neg = a;
  for (auto& v : neg.data) v = -v;
  s = fit_stats(std::vector<AtlasGrid>{a, neg});
  for (std::size_t k = 0; k < a.data.size(); ++k) {
    CHECK(std::abs(s.mean[k]) < 1e-12);
    CHECK(s.stddev[k] == doctest::Approx(std::max(1e-4, std::abs(static_cast<double>(a.data[k])))).epsilon(1e-9));
  }

  // 50-atlas corpus against a two-pass computation.
  std::vector<AtlasGrid> corpus;
  for (int i = 0; i < 50; ++i) corpus.push_back(random_atlas(8, 100 + i, 0.5 + 0.01 * i));
  const auto stats = fit_stats(corpus);
  const std::size_t size = corpus[0].data.size();
  double worst_mean = 0, worst_std = 0;
  for (std::size_t k = 0; k < size; ++k) {
    double mean = 0;
    for (const auto& c : corpus) mean += c.data[k];
    mean /= 50;
    double var = 0;
    for (const auto& c : corpus) var += (c.data[k] - mean) * (c.data[k] - mean);
    const double sd = std::max(1e-4, std::sqrt(var / 50));
    worst_mean = std::max(worst_mean, std::abs(stats.mean[k] - mean));
    worst_std = std::max(worst_std, std::abs(stats.stddev[k] - sd));
  }
  CHECK(worst_mean < 1e-5);
  CHECK(worst_std < 1e-5);

  // Sharded accumulation merges to the same numbers.
  StatsAccumulator left, right;
  for (int i = 0; i < 50; ++i) (i < 17 ? left : right).add(corpus[i]);
  left.merge(right);
  const auto merged = left.finish();
  for (std::size_t k = 0; k < size; ++k) {
    CHECK(merged.mean[k] == doctest::Approx(stats.mean[k]).epsilon(1e-12));
    CHECK(merged.stddev[k] == doctest::Approx(stats.stddev[k]).epsilon(1e-9));
  }

  // Per-channel pooling against a direct computation.
  const auto pooled = fit_stats(corpus, 1e-4, StatsMode::per_channel);
  const std::size_t pixels = 64;
  for (std::size_t c = 0; c < kChannels; ++c) {
    double mean = 0;
    for (const auto& atlas : corpus) {
      for (std::size_t p = 0; p < pixels; ++p) mean += atlas.at(c, p);
    }
    mean /= 50.0 * pixels;
    double var = 0;
    for (const auto& atlas : corpus) {
      for (std::size_t p = 0; p < pixels; ++p) var += (atlas.at(c, p) - mean) * (atlas.at(c, p) - mean);
    }
    const double sd = std::sqrt(var / (50.0 * pixels));
    CHECK(pooled.mean[c * pixels] == doctest::Approx(mean).epsilon(1e-9));
    CHECK(pooled.mean[c * pixels + 63] == doctest::Approx(mean).epsilon(1e-9));
    CHECK(pooled.stddev[c * pixels + 5] == doctest::Approx(sd).epsilon(1e-9));
  }

  CHECK_THROWS_AS(fit_stats(std::vector<AtlasGrid>{random_atlas(4, 1), random_atlas(8, 2)}), Error);
  CHECK_THROWS_AS(fit_stats(std::vector<AtlasGrid>{}), Error);
}

TEST_CASE("normalization") {
  const auto a = random_atlas(8, 5);
  NormStats unit;
  unit.side = 8;
  unit.mean.assign(a.data.size(), 0.0);
  unit.stddev.assign(a.data.size(), 1.0);
  const auto same = normalize(a, unit);
  CHECK(same.data == a.data);
  CHECK(same.normalized);
  CHECK_THROWS_AS(normalize(same, unit), Error);
  CHECK_THROWS_AS(denormalize(a, unit), Error);

  std::vector<AtlasGrid> corpus;
  for (int i = 0; i < 5; ++i) corpus.push_back(random_atlas(8, 50 + i));
  const auto stats = fit_stats(corpus);
  AtlasGrid at_mean = a;
  for (std::size_t k = 0; k < a.data.size(); ++k) at_mean.data[k] = static_cast<float>(stats.mean[k]);
  for (float v : normalize(at_mean, stats).data) CHECK(std::abs(v) < 1e-6);

  for (int seed = 0; seed < 10; ++seed) {
    const auto x = random_atlas(8, 900 + seed);
    const auto back = denormalize(normalize(x, stats), stats);
    double worst = 0;
    for (std::size_t k = 0; k < x.data.size(); ++k) worst = std::max(worst, static_cast<double>(std::abs(back.data[k] - x.data[k])));
    CHECK(worst < 1e-6);
  }
  try {
    normalize(a, fit_stats(std::vector<AtlasGrid>{random_atlas(4, 1)}));
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::validation);
  }
}

TEST_CASE("atlas files") {
  const auto dir = testing::scratch_dir("atlas-files");
  auto a = random_atlas(8, 3);
  a.bounds = {{1.5, -2.0, 0.25}, 3.5};
  a.source_id = "chair";
  a.stats_ref = "corpus";
  save_atlas(a, dir / "a.gatl");
  const auto b = load_atlas(dir / "a.gatl");
  CHECK(b.data == a.data);
  CHECK(b.side == 8);
  CHECK(b.bounds == a.bounds);
  CHECK(b.source_id == "chair");
  CHECK(b.stats_ref == "corpus");
  CHECK(b.lattice_hash == "h");
  CHECK(!b.normalized);
  const auto bytes = testing::file_bytes(dir / "a.gatl");
  CHECK(std::string(bytes.begin(), bytes.begin() + 6) == "GATL1\n");
  // Channel-major layout: the last float is channel 15, pixel 63.
  float last;
  std::memcpy(&last, bytes.data() + bytes.size() - 4, 4);
  CHECK(last == a.at(kRotZ, 63));

  std::vector<AtlasGrid> corpus{random_atlas(8, 1), random_atlas(8, 2), random_atlas(8, 3)};
  const auto stats = fit_stats(corpus);
  save_stats(stats, dir / "corpus");
  CHECK(std::filesystem::exists(dir / "corpus.mean.gatl"));
  CHECK(std::filesystem::exists(dir / "corpus.std.gatl"));
  const auto loaded = load_stats(dir / "corpus");
  CHECK(loaded.corpus_size == 3);
  for (std::size_t k = 0; k < stats.mean.size(); ++k) {
    CHECK(loaded.mean[k] == doctest::Approx(stats.mean[k]).epsilon(1e-7));
    CHECK(loaded.stddev[k] == doctest::Approx(stats.stddev[k]).epsilon(1e-7));
  }

  const auto previews = write_previews(a, dir, "a");
  CHECK(previews.size() == 5);
  for (const auto& p : previews) {
    const auto png = testing::file_bytes(p);
    REQUIRE(png.size() > 8);
    CHECK(png[1] == 'P');
    CHECK(png[2] == 'N');
    CHECK(png[3] == 'G');
  }
}

}
