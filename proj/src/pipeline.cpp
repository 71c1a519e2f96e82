#include "gatlas/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "gatlas/error.hpp"
#include "gatlas/log.hpp"
#include "gatlas/render.hpp"

namespace gatlas::pipeline {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void PipelineConfig::validate() const {
  if (n == 0 || sphere::perfect_square_root(n) == 0) {
    throw Error(ErrorKind::validation, "n = " + std::to_string(n) + " is not a positive perfect square");
  }
  if (tau < n && !allow_tau_below_n) {
    throw Error(ErrorKind::validation, "tau (" + std::to_string(tau) + ") is below n (" + std::to_string(n) +
                                           "); pass the override flag to allow it");
  }
  if (threads < 1) throw Error(ErrorKind::validation, "threads must be at least 1");
}

std::filesystem::path PipelineConfig::index_path() const {
  return cache_dir / ("plane_n" + std::to_string(n) + ".gidx");
}

AtlasContext prepare_context(const PipelineConfig& config, bool use_cache) {
  config.validate();
  AtlasContext ctx;
  ctx.lattice = sphere::generate_lattice(config.n);
  const auto start = std::chrono::steady_clock::now();
  ctx.plane = atlas::plane_offset_index(ctx.lattice, use_cache ? std::optional(config.index_path()) : std::nullopt,
                                        config.offset);
  log::info("plane_index", {{"n", config.n},
                            {"solver", transport::to_string(ctx.plane.solver)},
                            {"total_cost", ctx.plane.total_cost},
                            {"seconds", seconds_since(start)}});
  return ctx;
}

Conversion to_atlas(const GaussianCloud& cloud, const AtlasContext& ctx, const PipelineConfig& config) {
  if (cloud.space != Activation::activated) {
    throw Error(ErrorKind::validation, "atlas conversion needs an activated cloud");
  }
  validate_activated(cloud);
  Conversion result;
  result.input_count = cloud.size();

  auto start = std::chrono::steady_clock::now();
  GaussianCloud working = cloud;
  if (working.size() > ctx.lattice.n) {
    if (config.oversize_strategy == prune::Strategy::visibility) {
      prune::ViewSampling sampling;
      sampling.threads = config.threads;
      const auto report = prune::assess_visibility(working, config.visibility_views, config.seed,
                                                   config.visibility_resolution, sampling);
      working = prune::prune_to(working, ctx.lattice.n, prune::Strategy::visibility, &report);
    } else {
      working = prune::prune_to(working, ctx.lattice.n, prune::Strategy::scale);
    }
  }
  result.seconds_prune = seconds_since(start);

  const Bounds bounds = working.empty() ? Bounds{} : compute_bounds(working.gaussians);
  result.normalized = normalize_positions(working, bounds);

  start = std::chrono::steady_clock::now();
  result.offset = atlas::sphere_offset(result.normalized, ctx.lattice, config.offset);
  result.seconds_offset = seconds_since(start);

  start = std::chrono::steady_clock::now();
  result.atlas = atlas::pack(result.normalized, ctx.lattice, ctx.plane, result.offset.assignment,
                             result.offset.offsets);
  result.atlas.bounds = bounds;
  result.atlas.source_id = cloud.source_id;
  result.seconds_pack = seconds_since(start);
  return result;
}

GaussianCloud from_atlas(const atlas::AtlasGrid& atlas, const AtlasContext& ctx, float cull_threshold) {
  auto cloud = atlas::unpack(atlas, ctx.lattice, ctx.plane, cull_threshold);
  return restore_positions(cloud, atlas.bounds);
}

double max_attribute_difference(const Gaussian& a, const Gaussian& b) {
  double worst = 0.0;
  const auto track = [&](double x, double y) { worst = std::max(worst, std::abs(x - y)); };
  for (int d = 0; d < 3; ++d) {
    track(a.position[d], b.position[d]);
    track(a.albedo[d], b.albedo[d]);
    track(a.scale[d], b.scale[d]);
  }
  track(a.opacity, b.opacity);
  double same = 0.0, flipped = 0.0;
  for (int d = 0; d < 4; ++d) {
    same = std::max(same, static_cast<double>(std::abs(a.rotation[d] - b.rotation[d])));
    flipped = std::max(flipped, static_cast<double>(std::abs(a.rotation[d] + b.rotation[d])));
  }
  return std::max(worst, std::min(same, flipped));
}

double RoundtripReport::min_psnr() const {
  return psnr.empty() ? std::numeric_limits<double>::infinity() : *std::min_element(psnr.begin(), psnr.end());
}

bool RoundtripReport::passes(double psnr_floor, double attribute_tolerance) const {
  return stray_pixels == 0 && max_attribute_error <= attribute_tolerance && min_psnr() >= psnr_floor;
}

RoundtripReport roundtrip(const GaussianCloud& cloud, const AtlasContext& ctx, const PipelineConfig& config) {
  RoundtripReport report;
  auto start = std::chrono::steady_clock::now();
  const Conversion conv = to_atlas(cloud, ctx, config);
  report.seconds_to_atlas = seconds_since(start);
  report.count = conv.normalized.size();

  start = std::chrono::steady_clock::now();
  // Threshold 0 keeps every pixel, in pixel order, so entries line up with
  // pixel indices.
  const GaussianCloud all_pixels = atlas::unpack(conv.atlas, ctx.lattice, ctx.plane, 0.f);
  const GaussianCloud decoded = from_atlas(conv.atlas, ctx, config.cull_threshold);
  report.seconds_from_atlas = seconds_since(start);

  std::vector<bool> owned(ctx.lattice.n, false);
  for (std::size_t i = 0; i < conv.normalized.size(); ++i) {
    const std::uint32_t pixel = ctx.plane.mapping[conv.offset.assignment.mapping[i]];
    owned[pixel] = true;
    report.max_attribute_error = std::max(
        report.max_attribute_error, max_attribute_difference(conv.normalized.gaussians[i], all_pixels.gaussians[pixel]));
  }
  for (std::size_t p = 0; p < all_pixels.size(); ++p) {
    if (!owned[p] && all_pixels.gaussians[p].opacity > 0.f) ++report.stray_pixels;
  }

  const GaussianCloud reference = restore_positions(conv.normalized, conv.atlas.bounds);
  const Eigen::Vector3d center(conv.atlas.bounds.center[0], conv.atlas.bounds.center[1], conv.atlas.bounds.center[2]);
  render::RenderOptions options;
  options.threads = config.threads;
  for (const auto& cam : render::ring_cameras(config.ring_views, config.ring_radius_factor * conv.atlas.bounds.radius,
                                              config.ring_elevation_degrees, center, config.fov_y_degrees,
                                              config.ring_resolution, config.ring_resolution)) {
    const auto a = render::render(reference, cam, Eigen::Vector3d::Zero(), options);
    const auto b = render::render(decoded, cam, Eigen::Vector3d::Zero(), options);
    report.psnr.push_back(render::psnr(a.color, b.color));
  }
  return report;
}

}  // namespace gatlas::pipeline
