#pragma once

// Linear assignment (optimal transport with unit masses) between point sets.
// Sources are matched injectively into targets; |sources| <= |targets|.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gatlas::transport {

/// Points are stored flat with stride `dim` (2 or 3). A positive entry in
/// `period` makes that axis periodic: coordinate differences are taken as
/// min(|d|, P - |d|). The only metric is squared Euclidean.
struct CostSpec {
  int dim = 3;
  std::vector<double> sources;
  std::vector<double> targets;
  std::array<double, 3> period{0.0, 0.0, 0.0};

  std::size_t source_count() const { return sources.size() / static_cast<std::size_t>(dim); }
  std::size_t target_count() const { return targets.size() / static_cast<std::size_t>(dim); }

  double cost(std::size_t source, std::size_t target) const {
    const double* a = sources.data() + source * static_cast<std::size_t>(dim);
    const double* b = targets.data() + target * static_cast<std::size_t>(dim);
    double sum = 0.0;
    for (int d = 0; d < dim; ++d) {
      double delta = a[d] - b[d];
      if (period[d] > 0.0) {
        delta = std::abs(delta);
        if (delta >= period[d]) delta = std::fmod(delta, period[d]);
        delta = std::min(delta, period[d] - delta);
      }
      sum += delta * delta;
    }
    return sum;
  }
};

/// Throws a validation error on bad dimensions, counts or periods.
void validate(const CostSpec& spec);

enum class Solver { exact, auction };

const char* to_string(Solver s) noexcept;
Solver solver_from_string(const std::string& text);

struct AssignmentIndex {
  std::vector<std::uint32_t> mapping;  // target index per source
  double total_cost = 0.0;
  Solver solver = Solver::exact;
  double epsilon_final = 0.0;
};

struct ExactConfig {
  std::size_t max_sources = 4096;
};

/// Unset fields take the data-driven defaults: epsilon_start = mean pairwise
/// cost / 8, epsilon_min = 1e-7 * mean pairwise cost.
struct AuctionConfig {
  std::optional<double> epsilon_start;
  double epsilon_scale = 0.25;
  std::optional<double> epsilon_min;
  // Bids allowed per epsilon phase, as a multiple of |targets|.
  std::size_t max_rounds = 100000;
};

/// Optimal rectangular assignment by shortest augmenting paths with
/// potentials (Jonker-Volgenant family).
AssignmentIndex solve_exact(const CostSpec& spec, const ExactConfig& config = {});

/// Gauss-Seidel auction with epsilon scaling. The result is within
/// |sources| * epsilon_min of the optimum. Deterministic: persons bid in FIFO
/// order and ties resolve to the lowest target index.
AssignmentIndex solve_scalable(const CostSpec& spec, const AuctionConfig& config = {});

/// Sum of per-source costs; throws on duplicate or out-of-range targets.
double cost_of(const CostSpec& spec, std::span<const std::uint32_t> mapping);

/// Mean cost over all source/target pairs (exact for non-periodic specs,
/// a deterministic strided sample otherwise).
double mean_pairwise_cost(const CostSpec& spec);

/// If every source has a coordinate-identical target, returns the zero-cost
/// matching that gives each source the lowest-index unused identical target.
std::optional<std::vector<std::uint32_t>> find_zero_cost_matching(const CostSpec& spec);

void check_injective(std::span<const std::uint32_t> mapping, std::size_t target_count);

// ---- GIDX index cache -----------------------------------------------------

struct IndexFile {
  AssignmentIndex index;
  std::size_t n_target = 0;
  std::string lattice_hash;
};

void save_index(const std::filesystem::path& path, const AssignmentIndex& index,
                std::size_t n_target, const std::string& lattice_hash);
IndexFile load_index(const std::filesystem::path& path);

}  // namespace gatlas::transport
