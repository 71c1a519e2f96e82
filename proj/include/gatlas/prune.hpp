#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gatlas/model.hpp"
#include "gatlas/render.hpp"

namespace gatlas::prune {

struct VisibilityReport {
  std::vector<double> scores;          // accumulated blend weight per Gaussian
  int views_used = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> ranking;  // descending score, ties by lower index
};

struct ViewSampling {
  double radius_factor = 2.5;  // camera distance in units of the bounds radius
  double fov_y_degrees = 60.0;
  int threads = 1;
};

/// Cameras uniformly distributed on a sphere around the cloud, drawn from a
/// fixed-seed generator, looking at the bounds center.
std::vector<render::Camera> sample_views(const Bounds& bounds, int views, std::uint64_t seed, int resolution,
                                         const ViewSampling& sampling = {});

VisibilityReport assess_visibility(const GaussianCloud& cloud, int views, std::uint64_t seed, int resolution,
                                   const ViewSampling& sampling = {});

std::vector<std::uint32_t> rank_by_score(const std::vector<double>& scores);

enum class Strategy { visibility, scale };

const char* to_string(Strategy s) noexcept;
Strategy strategy_from_string(const std::string& text);

/// Keeps the `bound` best-ranked Gaussians in their original relative order;
/// identity when the cloud already fits. Scale strategy keeps the largest
/// scale norms (drops the smallest).
GaussianCloud prune_to(const GaussianCloud& cloud, std::size_t bound, Strategy strategy,
                       const VisibilityReport* report = nullptr);

void save_report(const VisibilityReport& report, const std::filesystem::path& path);

}  // namespace gatlas::prune
