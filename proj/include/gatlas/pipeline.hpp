#pragma once

// End-to-end conversion between Gaussian clouds and atlases, shared by the
// command-line tool and the acceptance suite.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gatlas/atlas.hpp"
#include "gatlas/model.hpp"
#include "gatlas/prune.hpp"
#include "gatlas/sphere.hpp"
#include "gatlas/transport.hpp"

namespace gatlas::pipeline {

struct PipelineConfig {
  std::size_t n = 16384;  // Gaussians per atlas, 128 x 128
  std::size_t tau = 36864;  // per-object bound for visibility pruning, 192 x 192
  bool allow_tau_below_n = false;
  atlas::OffsetConfig offset;
  prune::Strategy oversize_strategy = prune::Strategy::scale;
  int visibility_views = 32;
  int visibility_resolution = 256;
  std::uint64_t seed = 0;
  int ring_views = 8;
  int ring_resolution = 256;
  double ring_elevation_degrees = 20.0;
  double ring_radius_factor = 2.5;
  double fov_y_degrees = 60.0;
  std::filesystem::path cache_dir = "gatlas-cache";
  int threads = 1;
  float cull_threshold = 1e-3f;

  void validate() const;
  std::filesystem::path index_path() const;
};

struct AtlasContext {
  sphere::SphereLattice lattice;
  transport::AssignmentIndex plane;
};

/// Lattice plus plane index; the index is read from / written to the cache
/// directory unless `use_cache` is false.
AtlasContext prepare_context(const PipelineConfig& config, bool use_cache = true);

struct Conversion {
  atlas::AtlasGrid atlas;
  GaussianCloud normalized;  // the (pruned) cloud in unit-ball coordinates
  atlas::SphereOffset offset;
  std::size_t input_count = 0;
  double seconds_prune = 0.0;
  double seconds_offset = 0.0;
  double seconds_pack = 0.0;
};

/// prune (when above n) -> normalize positions -> sphere offset -> pack.
Conversion to_atlas(const GaussianCloud& cloud, const AtlasContext& ctx, const PipelineConfig& config);

/// Unpack and map positions back to scene units with the atlas bounds.
GaussianCloud from_atlas(const atlas::AtlasGrid& atlas, const AtlasContext& ctx, float cull_threshold);

struct RoundtripReport {
  std::size_t count = 0;
  std::vector<double> psnr;        // one per ring view
  double max_attribute_error = 0.0;  // normalized-space positions, all five attributes
  std::size_t stray_pixels = 0;    // opacity-positive pixels not owned by an input Gaussian
  double seconds_to_atlas = 0.0;
  double seconds_from_atlas = 0.0;

  double min_psnr() const;
  bool passes(double psnr_floor = 60.0, double attribute_tolerance = 1e-5) const;
};

/// Full round trip with attribute comparison and ring renders.
RoundtripReport roundtrip(const GaussianCloud& cloud, const AtlasContext& ctx, const PipelineConfig& config);

/// Largest absolute per-field difference, rotation sign-insensitive.
double max_attribute_difference(const Gaussian& a, const Gaussian& b);

}  // namespace gatlas::pipeline
