// Shortest augmenting path assignment with row/column potentials. Each source
// row is inserted by a Dijkstra sweep over reduced costs until a free target
// column is reached, then the alternating path is flipped. O(M^2 N) worst case.

#include <limits>

#include "gatlas/error.hpp"
#include "gatlas/transport.hpp"

namespace gatlas::transport {

AssignmentIndex solve_exact(const CostSpec& spec, const ExactConfig& config) {
  validate(spec);
  const std::size_t rows = spec.source_count();
  const std::size_t cols = spec.target_count();
  if (rows > config.max_sources) {
    throw Error(ErrorKind::capacity, "exact solver limited to " + std::to_string(config.max_sources) +
                                         " sources (got " + std::to_string(rows) +
                                         "); use solve_scalable");
  }
  AssignmentIndex result;
  result.solver = Solver::exact;
  result.epsilon_final = 0.0;
  if (auto zero = find_zero_cost_matching(spec)) {
    result.mapping = std::move(*zero);
    result.total_cost = 0.0;
    return result;
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based with slot 0 as the virtual root column, as in the classical form.
  std::vector<double> row_pot(rows + 1, 0.0), col_pot(cols + 1, 0.0), min_slack(cols + 1);
  std::vector<std::size_t> owner(cols + 1, 0), prev(cols + 1, 0);
  std::vector<char> visited(cols + 1);

  for (std::size_t row = 1; row <= rows; ++row) {
    owner[0] = row;
    std::size_t col0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), kInf);
    std::fill(visited.begin(), visited.end(), 0);
    do {
      visited[col0] = 1;
      const std::size_t r0 = owner[col0];
      double delta = kInf;
      std::size_t col1 = 0;
      for (std::size_t c = 1; c <= cols; ++c) {
        if (visited[c]) continue;
        const double reduced = spec.cost(r0 - 1, c - 1) - row_pot[r0] - col_pot[c];
        if (reduced < min_slack[c]) {
          min_slack[c] = reduced;
          prev[c] = col0;
        }
        if (min_slack[c] < delta) {
          delta = min_slack[c];
          col1 = c;
        }
      }
      if (col1 == 0) throw Error(ErrorKind::solver, "exact solver found no augmenting path");
      for (std::size_t c = 0; c <= cols; ++c) {
        if (visited[c]) {
          row_pot[owner[c]] += delta;
          col_pot[c] -= delta;
        } else {
          min_slack[c] -= delta;
        }
      }
      col0 = col1;
    } while (owner[col0] != 0);
    do {
      const std::size_t col1 = prev[col0];
      owner[col0] = owner[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  result.mapping.assign(rows, 0);
  for (std::size_t c = 1; c <= cols; ++c) {
    if (owner[c] != 0) result.mapping[owner[c] - 1] = static_cast<std::uint32_t>(c - 1);
  }
  result.total_cost = cost_of(spec, result.mapping);
  return result;
}

}  // namespace gatlas::transport
