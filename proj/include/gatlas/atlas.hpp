#pragma once

// The Gaussian Atlas: sphere offsetting, plane offsetting with a cached index,
// 16-channel packing, corpus standardization and the exact inverse.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gatlas/model.hpp"
#include "gatlas/sphere.hpp"
#include "gatlas/transport.hpp"

namespace gatlas::atlas {

inline constexpr std::size_t kChannels = 16;

// Each three-channel attribute is padded with opacity, then the quaternion.
enum Channel : std::size_t {
  kOffsetX, kOffsetY, kOffsetZ, kOpacityA,
  kAlbedoR, kAlbedoG, kAlbedoB, kOpacityB,
  kScaleX, kScaleY, kScaleZ, kOpacityC,
  kRotW, kRotX, kRotY, kRotZ,
};

extern const std::array<std::string_view, kChannels> kChannelNames;

struct AtlasGrid {
  std::size_t side = 0;
  std::vector<float> data;  // channel-major, row-major inside a channel
  std::string lattice_hash;
  bool normalized = false;
  Bounds bounds;            // scene-space bounds used to normalize positions
  std::string source_id;
  std::string stats_ref;
  nlohmann::json extra = nlohmann::json::object();

  static AtlasGrid zeros(std::size_t side, std::string lattice_hash);

  std::size_t pixels() const { return side * side; }
  float& at(std::size_t channel, std::size_t pixel) { return data[channel * pixels() + pixel]; }
  float at(std::size_t channel, std::size_t pixel) const { return data[channel * pixels() + pixel]; }
  std::span<float> channel(std::size_t c) { return {data.data() + c * pixels(), pixels()}; }
  std::span<const float> channel(std::size_t c) const { return {data.data() + c * pixels(), pixels()}; }
};

// ---- offsetting -----------------------------------------------------------

struct OffsetConfig {
  // Sphere offsetting uses the exact solver up to this many Gaussians.
  transport::ExactConfig exact;
  transport::AuctionConfig auction;
  // Plane offsetting (square, n x n) uses the exact solver up to this n.
  std::size_t plane_exact_max = 1024;
};

struct SphereOffset {
  transport::AssignmentIndex assignment;
  std::vector<std::array<double, 3>> offsets;  // normalized position - lattice point
};

transport::CostSpec sphere_cost_spec(const GaussianCloud& normalized_cloud,
                                     const sphere::SphereLattice& lattice);

/// `normalized_cloud` positions must already be in the unit ball.
SphereOffset sphere_offset(const GaussianCloud& normalized_cloud, const sphere::SphereLattice& lattice,
                           const OffsetConfig& config = {});

/// Flat lattice coordinates -> grid vertices ((col+0.5)/side, (row+0.5)/side),
/// periodic in u. Target index is row * side + col.
transport::CostSpec plane_cost_spec(const sphere::SphereLattice& lattice);

/// Lattice index -> pixel. Loaded from `cache` when present (and verified
/// against the lattice hash), otherwise solved and written there.
transport::AssignmentIndex plane_offset_index(const sphere::SphereLattice& lattice,
                                              const std::optional<std::filesystem::path>& cache = std::nullopt,
                                              const OffsetConfig& config = {});

/// Pixel -> lattice index.
std::vector<std::uint32_t> invert_index(std::span<const std::uint32_t> mapping);

// ---- packing --------------------------------------------------------------

/// Places Gaussian i at pixel plane[sphere[i]]. Unused lattice slots are
/// padded with a copy of the smallest-scale Gaussian at opacity 0 and zero
/// offset (zeros and identity rotation for an empty cloud).
AtlasGrid pack(const GaussianCloud& normalized_cloud, const sphere::SphereLattice& lattice,
               const transport::AssignmentIndex& plane_index,
               const transport::AssignmentIndex& sphere_assignment,
               std::span<const std::array<double, 3>> offsets);

/// Inverse of pack. Pixels whose averaged opacity is below `cull_threshold`
/// are dropped; output is in pixel order with positions in normalized space.
GaussianCloud unpack(const AtlasGrid& atlas, const sphere::SphereLattice& lattice,
                     const transport::AssignmentIndex& plane_index, float cull_threshold = 1e-3f);

// ---- standardization ------------------------------------------------------

enum class StatsMode { per_pixel, per_channel };

const char* to_string(StatsMode mode) noexcept;
StatsMode stats_mode_from_string(const std::string& text);

struct NormStats {
  std::size_t side = 0;
  std::vector<double> mean;    // same layout as AtlasGrid::data
  std::vector<double> stddev;
  std::size_t corpus_size = 0;
  double floor = 1e-4;
  std::string lattice_hash;
  StatsMode mode = StatsMode::per_pixel;
};

/// Streaming (Welford) per-element mean/variance. Shards merge with Chan's
/// pairwise update; merge order is the caller's and must be fixed.
class StatsAccumulator {
 public:
  void add(const AtlasGrid& atlas);
  void merge(const StatsAccumulator& other);
  std::size_t count() const { return count_; }
  NormStats finish(double floor = 1e-4, StatsMode mode = StatsMode::per_pixel) const;

 private:
  std::size_t side_ = 0;
  std::string lattice_hash_;
  std::size_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

NormStats fit_stats(std::span<const AtlasGrid> atlases, double floor = 1e-4,
                    StatsMode mode = StatsMode::per_pixel);

AtlasGrid normalize(const AtlasGrid& atlas, const NormStats& stats);
AtlasGrid denormalize(const AtlasGrid& atlas, const NormStats& stats);

// ---- files ----------------------------------------------------------------

void save_atlas(const AtlasGrid& atlas, const std::filesystem::path& path);
AtlasGrid load_atlas(const std::filesystem::path& path);

/// Writes <prefix>.mean.gatl and <prefix>.std.gatl.
void save_stats(const NormStats& stats, const std::filesystem::path& prefix);
NormStats load_stats(const std::filesystem::path& prefix);

/// One 8-bit PNG per attribute group (offset, albedo, opacity, scale,
/// rotation), each channel min-max scaled. Returns the written paths.
std::vector<std::filesystem::path> write_previews(const AtlasGrid& atlas, const std::filesystem::path& dir,
                                                  const std::string& stem);

}  // namespace gatlas::atlas
