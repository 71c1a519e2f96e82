#include "gatlas/prune.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <json.hpp>

#include "gatlas/container.hpp"
#include "gatlas/error.hpp"

namespace gatlas::prune {

namespace {

// Uniform double in [0,1) straight from the engine bits; std distributions
// are not reproducible across standard libraries.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

const char* to_string(Strategy s) noexcept { return s == Strategy::visibility ? "visibility" : "scale"; }

Strategy strategy_from_string(const std::string& text) {
  if (text == "visibility") return Strategy::visibility;
  if (text == "scale") return Strategy::scale;
  throw Error(ErrorKind::validation, "unknown prune strategy '" + text + "'");
}

std::vector<render::Camera> sample_views(const Bounds& bounds, int views, std::uint64_t seed, int resolution,
                                         const ViewSampling& sampling) {
  std::mt19937_64 rng(seed);
  const Eigen::Vector3d center(bounds.center[0], bounds.center[1], bounds.center[2]);
  const double distance = sampling.radius_factor * bounds.radius;
  std::vector<render::Camera> cams;
  cams.reserve(static_cast<std::size_t>(views));
  for (int v = 0; v < views; ++v) {
    const double z = 2.0 * unit_uniform(rng) - 1.0;
    const double phi = 2.0 * std::numbers::pi * unit_uniform(rng);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Eigen::Vector3d dir(r * std::cos(phi), r * std::sin(phi), z);
    auto cam = render::Camera::look_at(center + distance * dir, center, Eigen::Vector3d::UnitZ(),
                                       sampling.fov_y_degrees, resolution, resolution);
    cam.near = 1e-3 * distance;
    cam.far = 10.0 * distance;
    cams.push_back(cam);
  }
  return cams;
}

std::vector<std::uint32_t> rank_by_score(const std::vector<double>& scores) {
  std::vector<std::uint32_t> ranking(scores.size());
  std::iota(ranking.begin(), ranking.end(), 0u);
  std::stable_sort(ranking.begin(), ranking.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return scores[a] > scores[b]; });
  return ranking;
}

VisibilityReport assess_visibility(const GaussianCloud& cloud, int views, std::uint64_t seed, int resolution,
                                   const ViewSampling& sampling) {
  if (views < 1) throw Error(ErrorKind::validation, "visibility assessment needs at least one view");
  VisibilityReport report;
  report.seed = seed;
  if (cloud.empty()) return report;
  report.views_used = views;
  report.scores.assign(cloud.size(), 0.0);
  render::RenderOptions options;
  options.threads = sampling.threads;
  for (const auto& cam : sample_views(compute_bounds(cloud.gaussians), views, seed, resolution, sampling)) {
    const auto out = render::render(cloud, cam, Eigen::Vector3d::Zero(), options);
    for (std::size_t i = 0; i < cloud.size(); ++i) report.scores[i] += out.visibility[i];
  }
  report.ranking = rank_by_score(report.scores);
  return report;
}

GaussianCloud prune_to(const GaussianCloud& cloud, std::size_t bound, Strategy strategy,
                       const VisibilityReport* report) {
  if (strategy == Strategy::visibility) {
    if (report == nullptr) throw Error(ErrorKind::validation, "visibility pruning needs a visibility report");
    if (report->scores.size() != cloud.size()) {
      throw Error(ErrorKind::validation, "visibility report covers " + std::to_string(report->scores.size()) +
                                             " Gaussians, cloud has " + std::to_string(cloud.size()));
    }
  }
  if (cloud.size() <= bound) return cloud;

  std::vector<std::uint32_t> ranking;
  if (strategy == Strategy::visibility) {
    ranking = report->ranking.size() == cloud.size() ? report->ranking : rank_by_score(report->scores);
  } else {
    std::vector<double> norms(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) norms[i] = scale_norm(cloud.gaussians[i]);
    ranking = rank_by_score(norms);
  }
  std::vector<std::uint32_t> keep(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(bound));
  std::sort(keep.begin(), keep.end());

  GaussianCloud out;
  out.source_id = cloud.source_id;
  out.space = cloud.space;
  out.gaussians.reserve(bound);
  for (auto i : keep) out.gaussians.push_back(cloud.gaussians[i]);
  out.bounds = out.empty() ? Bounds{} : compute_bounds(out.gaussians);
  return out;
}

void save_report(const VisibilityReport& report, const std::filesystem::path& path) {
  const nlohmann::json j = {{"scores", report.scores}, {"views_used", report.views_used}, {"seed", report.seed}};
  const std::string text = j.dump() + "\n";
  container::write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace gatlas::prune
