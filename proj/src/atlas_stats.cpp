#include <algorithm>
#include <cmath>

#include "gatlas/atlas.hpp"
#include "gatlas/error.hpp"

namespace gatlas::atlas {

const char* to_string(StatsMode mode) noexcept {
  return mode == StatsMode::per_pixel ? "per_pixel" : "per_channel";
}

StatsMode stats_mode_from_string(const std::string& text) {
  if (text == "per_pixel") return StatsMode::per_pixel;
  if (text == "per_channel") return StatsMode::per_channel;
  throw Error(ErrorKind::validation, "unknown stats mode '" + text + "'");
}

void StatsAccumulator::add(const AtlasGrid& atlas) {
  if (atlas.normalized) throw Error(ErrorKind::state, "statistics must be fit on unnormalized atlases");
  if (count_ == 0) {
    side_ = atlas.side;
    lattice_hash_ = atlas.lattice_hash;
    mean_.assign(atlas.data.size(), 0.0);
    m2_.assign(atlas.data.size(), 0.0);
  } else if (atlas.side != side_ || atlas.lattice_hash != lattice_hash_) {
    throw Error(ErrorKind::validation, "atlas corpus mixes sides or lattices (" + std::to_string(side_) +
                                           " vs " + std::to_string(atlas.side) + ")");
  }
  ++count_;
  const double n = static_cast<double>(count_);
  for (std::size_t k = 0; k < mean_.size(); ++k) {
    const double x = atlas.data[k];
    const double delta = x - mean_[k];
    mean_[k] += delta / n;
    m2_[k] += delta * (x - mean_[k]);
  }
}

void StatsAccumulator::merge(const StatsAccumulator& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  if (other.side_ != side_ || other.lattice_hash_ != lattice_hash_) {
    throw Error(ErrorKind::validation, "cannot merge statistics of different atlas layouts");
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  for (std::size_t k = 0; k < mean_.size(); ++k) {
    const double delta = other.mean_[k] - mean_[k];
    mean_[k] += delta * nb / n;
    m2_[k] += other.m2_[k] + delta * delta * na * nb / n;
  }
  count_ += other.count_;
}

NormStats StatsAccumulator::finish(double floor, StatsMode mode) const {
  if (count_ == 0) throw Error(ErrorKind::validation, "statistics need a non-empty corpus");
  NormStats stats;
  stats.side = side_;
  stats.corpus_size = count_;
  stats.floor = floor;
  stats.lattice_hash = lattice_hash_;
  stats.mode = mode;
  const double n = static_cast<double>(count_);
  if (mode == StatsMode::per_pixel) {
    stats.mean = mean_;
    stats.stddev.resize(m2_.size());
    for (std::size_t k = 0; k < m2_.size(); ++k) stats.stddev[k] = std::max(floor, std::sqrt(m2_[k] / n));
    return stats;
  }
  // Pool every pixel of a channel: equal counts, so the pooled mean is the
  // average of pixel means and the pooled M2 adds the between-pixel spread.
  const std::size_t pixels = side_ * side_;
  stats.mean.resize(mean_.size());
  stats.stddev.resize(mean_.size());
  for (std::size_t c = 0; c < kChannels; ++c) {
    double mean_sum = 0.0;
    for (std::size_t p = 0; p < pixels; ++p) mean_sum += mean_[c * pixels + p];
    const double pooled_mean = mean_sum / static_cast<double>(pixels);
    double pooled_m2 = 0.0;
    for (std::size_t p = 0; p < pixels; ++p) {
      const double delta = mean_[c * pixels + p] - pooled_mean;
      pooled_m2 += m2_[c * pixels + p] + n * delta * delta;
    }
    const double sd = std::max(floor, std::sqrt(pooled_m2 / (n * static_cast<double>(pixels))));
    std::fill_n(stats.mean.begin() + static_cast<std::ptrdiff_t>(c * pixels), pixels, pooled_mean);
    std::fill_n(stats.stddev.begin() + static_cast<std::ptrdiff_t>(c * pixels), pixels, sd);
  }
  return stats;
}

NormStats fit_stats(std::span<const AtlasGrid> atlases, double floor, StatsMode mode) {
  StatsAccumulator acc;
  for (const auto& a : atlases) acc.add(a);
  return acc.finish(floor, mode);
}

namespace {

void check_compatible(const AtlasGrid& atlas, const NormStats& stats) {
  if (atlas.side != stats.side || stats.mean.size() != atlas.data.size() ||
      stats.stddev.size() != atlas.data.size()) {
    throw Error(ErrorKind::validation, "normalization statistics do not match the atlas side");
  }
}

}  // namespace

AtlasGrid normalize(const AtlasGrid& atlas, const NormStats& stats) {
  if (atlas.normalized) throw Error(ErrorKind::state, "atlas is already normalized");
  check_compatible(atlas, stats);
  AtlasGrid out = atlas;
  for (std::size_t k = 0; k < out.data.size(); ++k) {
    out.data[k] = static_cast<float>((atlas.data[k] - stats.mean[k]) / stats.stddev[k]);
  }
  out.normalized = true;
  return out;
}

AtlasGrid denormalize(const AtlasGrid& atlas, const NormStats& stats) {
  if (!atlas.normalized) throw Error(ErrorKind::state, "atlas is not normalized");
  check_compatible(atlas, stats);
  AtlasGrid out = atlas;
  for (std::size_t k = 0; k < out.data.size(); ++k) {
    out.data[k] = static_cast<float>(atlas.data[k] * stats.stddev[k] + stats.mean[k]);
  }
  out.normalized = false;
  return out;
}

}  // namespace gatlas::atlas
