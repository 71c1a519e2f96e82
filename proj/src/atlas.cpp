#include "gatlas/atlas.hpp"

#include <cmath>
#include <limits>

#include "gatlas/error.hpp"

namespace gatlas::atlas {

const std::array<std::string_view, kChannels> kChannelNames = {
    "offset_x", "offset_y", "offset_z", "opacity_a", "albedo_r", "albedo_g", "albedo_b", "opacity_b",
    "scale_x",  "scale_y",  "scale_z",  "opacity_c", "rot_w",    "rot_x",    "rot_y",    "rot_z",
};

AtlasGrid AtlasGrid::zeros(std::size_t side, std::string lattice_hash) {
  AtlasGrid grid;
  grid.side = side;
  grid.data.assign(kChannels * side * side, 0.f);
  grid.lattice_hash = std::move(lattice_hash);
  return grid;
}

transport::CostSpec sphere_cost_spec(const GaussianCloud& normalized_cloud,
                                     const sphere::SphereLattice& lattice) {
  transport::CostSpec spec;
  spec.dim = 3;
  spec.sources.reserve(normalized_cloud.size() * 3);
  for (const auto& g : normalized_cloud.gaussians) {
    for (float v : g.position) spec.sources.push_back(v);
  }
  spec.targets.reserve(lattice.n * 3);
  for (const auto& p : lattice.points) spec.targets.insert(spec.targets.end(), p.begin(), p.end());
  return spec;
}

SphereOffset sphere_offset(const GaussianCloud& normalized_cloud, const sphere::SphereLattice& lattice,
                           const OffsetConfig& config) {
  if (normalized_cloud.size() > lattice.n) {
    throw Error(ErrorKind::capacity, "cloud has " + std::to_string(normalized_cloud.size()) +
                                         " Gaussians but the lattice only " + std::to_string(lattice.n) +
                                         "; reduce it with prune_to first");
  }
  SphereOffset result;
  if (normalized_cloud.empty()) {
    result.assignment.solver = transport::Solver::exact;
    return result;
  }
  const auto spec = sphere_cost_spec(normalized_cloud, lattice);
  result.assignment = normalized_cloud.size() <= config.exact.max_sources
                          ? transport::solve_exact(spec, config.exact)
                          : transport::solve_scalable(spec, config.auction);
  result.offsets.resize(normalized_cloud.size());
  for (std::size_t i = 0; i < normalized_cloud.size(); ++i) {
    const auto& s = lattice.points[result.assignment.mapping[i]];
    for (int d = 0; d < 3; ++d) {
      result.offsets[i][d] = static_cast<double>(normalized_cloud.gaussians[i].position[d]) - s[d];
    }
  }
  return result;
}

transport::CostSpec plane_cost_spec(const sphere::SphereLattice& lattice) {
  transport::CostSpec spec;
  spec.dim = 2;
  spec.period = {1.0, 0.0, 0.0};
  spec.sources.reserve(lattice.n * 2);
  for (const auto& uv : lattice.flat_coords) spec.sources.insert(spec.sources.end(), uv.begin(), uv.end());
  spec.targets.reserve(lattice.n * 2);
  const double side = static_cast<double>(lattice.side);
  for (std::size_t row = 0; row < lattice.side; ++row) {
    for (std::size_t col = 0; col < lattice.side; ++col) {
      spec.targets.push_back((static_cast<double>(col) + 0.5) / side);
      spec.targets.push_back((static_cast<double>(row) + 0.5) / side);
    }
  }
  return spec;
}

transport::AssignmentIndex plane_offset_index(const sphere::SphereLattice& lattice,
                                              const std::optional<std::filesystem::path>& cache,
                                              const OffsetConfig& config) {
  if (sphere::perfect_square_root(lattice.n) == 0) {
    throw Error(ErrorKind::validation, "lattice size is not a perfect square");
  }
  const auto spec = plane_cost_spec(lattice);
  if (cache && std::filesystem::exists(*cache)) {
    auto file = transport::load_index(*cache);
    if (file.lattice_hash != lattice.lattice_hash || file.n_target != lattice.n ||
        file.index.mapping.size() != lattice.n) {
      throw Error(ErrorKind::state, "stale index cache '" + cache->string() + "' (lattice hash " +
                                        file.lattice_hash + ", expected " + lattice.lattice_hash +
                                        "); delete it and regenerate with `gatlas index`");
    }
    file.index.total_cost = transport::cost_of(spec, file.index.mapping);
    return file.index;
  }
  auto index = lattice.n <= config.plane_exact_max
                   ? transport::solve_exact(spec, transport::ExactConfig{lattice.n})
                   : transport::solve_scalable(spec, config.auction);
  if (cache) {
    if (cache->has_parent_path()) std::filesystem::create_directories(cache->parent_path());
    transport::save_index(*cache, index, lattice.n, lattice.lattice_hash);
  }
  return index;
}

std::vector<std::uint32_t> invert_index(std::span<const std::uint32_t> mapping) {
  transport::check_injective(mapping, mapping.size());
  std::vector<std::uint32_t> inverse(mapping.size());
  for (std::size_t i = 0; i < mapping.size(); ++i) inverse[mapping[i]] = static_cast<std::uint32_t>(i);
  return inverse;
}

namespace {

void write_pixel(AtlasGrid& atlas, std::size_t pixel, const Gaussian& g, const std::array<double, 3>& offset,
                 float opacity) {
  for (std::size_t d = 0; d < 3; ++d) {
    atlas.at(kOffsetX + d, pixel) = static_cast<float>(offset[d]);
    atlas.at(kAlbedoR + d, pixel) = g.albedo[d];
    atlas.at(kScaleX + d, pixel) = g.scale[d];
  }
  atlas.at(kOpacityA, pixel) = opacity;
  atlas.at(kOpacityB, pixel) = opacity;
  atlas.at(kOpacityC, pixel) = opacity;
  for (std::size_t d = 0; d < 4; ++d) atlas.at(kRotW + d, pixel) = g.rotation[d];
}

}  // namespace

AtlasGrid pack(const GaussianCloud& normalized_cloud, const sphere::SphereLattice& lattice,
               const transport::AssignmentIndex& plane_index,
               const transport::AssignmentIndex& sphere_assignment,
               std::span<const std::array<double, 3>> offsets) {
  if (lattice.side * lattice.side != lattice.n) {
    throw Error(ErrorKind::validation, "lattice side^2 does not equal its size");
  }
  if (plane_index.mapping.size() != lattice.n) {
    throw Error(ErrorKind::validation, "plane index does not cover the lattice");
  }
  if (sphere_assignment.mapping.size() != normalized_cloud.size() || offsets.size() != normalized_cloud.size()) {
    throw Error(ErrorKind::validation, "sphere assignment / offsets do not match the cloud");
  }
  transport::check_injective(sphere_assignment.mapping, lattice.n);

  AtlasGrid atlas = AtlasGrid::zeros(lattice.side, lattice.lattice_hash);
  atlas.bounds = normalized_cloud.bounds;
  atlas.source_id = normalized_cloud.source_id;
  std::vector<bool> occupied(lattice.n, false);
  for (std::size_t i = 0; i < normalized_cloud.size(); ++i) {
    const std::uint32_t slot = sphere_assignment.mapping[i];
    const Gaussian& g = normalized_cloud.gaussians[i];
    write_pixel(atlas, plane_index.mapping[slot], g, offsets[i], g.opacity);
    occupied[slot] = true;
  }

  Gaussian filler;
  filler.scale = {0.f, 0.f, 0.f};
  if (!normalized_cloud.empty()) {
    std::size_t smallest = 0;
    double smallest_norm = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < normalized_cloud.size(); ++i) {
      const double norm = scale_norm(normalized_cloud.gaussians[i]);
      if (norm < smallest_norm) {
        smallest_norm = norm;
        smallest = i;
      }
    }
    filler = normalized_cloud.gaussians[smallest];
  }
  const std::array<double, 3> zero{0.0, 0.0, 0.0};
  for (std::size_t slot = 0; slot < lattice.n; ++slot) {
    if (!occupied[slot]) write_pixel(atlas, plane_index.mapping[slot], filler, zero, 0.f);
  }
  return atlas;
}

GaussianCloud unpack(const AtlasGrid& atlas, const sphere::SphereLattice& lattice,
                     const transport::AssignmentIndex& plane_index, float cull_threshold) {
  if (atlas.normalized) {
    throw Error(ErrorKind::state, "atlas is normalized; denormalize it before unpacking");
  }
  if (atlas.lattice_hash != lattice.lattice_hash || atlas.side != lattice.side) {
    throw Error(ErrorKind::validation, "atlas lattice hash " + atlas.lattice_hash +
                                           " does not match lattice " + lattice.lattice_hash);
  }
  if (plane_index.mapping.size() != lattice.n) {
    throw Error(ErrorKind::validation, "plane index does not cover the lattice");
  }
  const auto slot_of_pixel = invert_index(plane_index.mapping);
  GaussianCloud cloud;
  cloud.source_id = atlas.source_id;
  cloud.gaussians.reserve(lattice.n);
  for (std::size_t pixel = 0; pixel < lattice.n; ++pixel) {
    const double opacity = (static_cast<double>(atlas.at(kOpacityA, pixel)) + atlas.at(kOpacityB, pixel) +
                            atlas.at(kOpacityC, pixel)) / 3.0;
    if (opacity < cull_threshold) continue;
    const auto& s = lattice.points[slot_of_pixel[pixel]];
    Gaussian g;
    for (std::size_t d = 0; d < 3; ++d) {
      g.position[d] = static_cast<float>(s[d] + atlas.at(kOffsetX + d, pixel));
      g.albedo[d] = atlas.at(kAlbedoR + d, pixel);
      g.scale[d] = atlas.at(kScaleX + d, pixel);
    }
    g.opacity = static_cast<float>(opacity);
    for (std::size_t d = 0; d < 4; ++d) g.rotation[d] = atlas.at(kRotW + d, pixel);
    canonicalize_rotation(g.rotation);
    cloud.gaussians.push_back(g);
  }
  return cloud;
}

}  // namespace gatlas::atlas
