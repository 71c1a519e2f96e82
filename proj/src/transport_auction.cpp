// Forward auction with epsilon scaling (Bertsekas). Rectangular instances are
// squared up with zero-cost dummy bidders, so the final-phase epsilon is
// shrunk by |sources|/|targets| to keep the |sources| * epsilon_min bound.
//
// Bids need the best and second-best value of cost(i, j) + price(j) over all
// targets j. A k-d tree over the targets stores the minimum price of every
// subtree, which gives the lower bound  boxdist^2 + min_price  for
// branch-and-bound. On non-periodic specs the expansion
// |q|^2 + |t|^2 - 2 q.t is bounded too, which stays tight for sources near the
// origin whose distances to all sphere targets are almost equal. The search is
// exact, so results match a dense scan.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>

#include "gatlas/error.hpp"
#include "gatlas/transport.hpp"

namespace gatlas::transport {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kLeafSize = 8;

class PriceTree {
 public:
  PriceTree(const CostSpec& spec, const std::vector<double>& prices)
      : spec_(spec), prices_(prices), dim_(spec.dim) {
    periodic_ = std::any_of(spec.period.begin(), spec.period.begin() + dim_, [](double p) { return p > 0.0; });
    const std::size_t n = spec.target_count();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0u);
    leaf_of_.assign(n, 0);
    nodes_.reserve(2 * (n / kLeafSize + 1));
    if (n > 0) build(0, static_cast<std::uint32_t>(n), -1);
  }

  void update(std::uint32_t target) {
    int node = leaf_of_[target];
    Node& leaf = nodes_[static_cast<std::size_t>(node)];
    double m = kInf;
    for (std::uint32_t k = leaf.begin; k < leaf.end; ++k) m = std::min(m, prices_[order_[k]]);
    leaf.min_price = m;
    node = leaf.parent;
    while (node >= 0) {
      Node& nd = nodes_[static_cast<std::size_t>(node)];
      const double updated = std::min(nodes_[static_cast<std::size_t>(nd.left)].min_price,
                                      nodes_[static_cast<std::size_t>(nd.right)].min_price);
      if (updated == nd.min_price) break;
      nd.min_price = updated;
      node = nd.parent;
    }
  }

  struct Bid {
    std::uint32_t best = 0;
    double best_value = kInf;
    double second_value = kInf;
  };

  // `source` < 0 queries a dummy bidder whose cost is zero everywhere.
  Bid query(std::ptrdiff_t source) {
    Bid bid;
    const double* q = source >= 0 ? spec_.sources.data() + static_cast<std::size_t>(source) * static_cast<std::size_t>(dim_)
                                  : nullptr;
    query_norm2_ = 0.0;
    if (q) {
      for (int d = 0; d < dim_; ++d) query_norm2_ += q[d] * q[d];
    }
    stack_.clear();
    stack_.push_back({0, bound(nodes_[0], q)});
    while (!stack_.empty()) {
      const auto [index, lower] = stack_.back();
      stack_.pop_back();
      if (lower > bid.second_value) continue;
      const Node& nd = nodes_[static_cast<std::size_t>(index)];
      if (nd.left < 0) {
        for (std::uint32_t k = nd.begin; k < nd.end; ++k) {
          const std::uint32_t j = order_[k];
          const double value = (q ? spec_.cost(static_cast<std::size_t>(source), j) : 0.0) + prices_[j];
          if (value < bid.best_value || (value == bid.best_value && j < bid.best)) {
            bid.second_value = bid.best_value;
            bid.best_value = value;
            bid.best = j;
          } else if (value < bid.second_value) {
            bid.second_value = value;
          }
        }
        continue;
      }
      const Node& l = nodes_[static_cast<std::size_t>(nd.left)];
      const Node& r = nodes_[static_cast<std::size_t>(nd.right)];
      const double bl = bound(l, q);
      const double br = bound(r, q);
      // Nearer child goes on top of the stack.
      if (bl <= br) {
        if (br <= bid.second_value) stack_.push_back({nd.right, br});
        if (bl <= bid.second_value) stack_.push_back({nd.left, bl});
      } else {
        if (bl <= bid.second_value) stack_.push_back({nd.left, bl});
        if (br <= bid.second_value) stack_.push_back({nd.right, br});
      }
    }
    return bid;
  }

 private:
  struct Node {
    std::uint32_t begin = 0, end = 0;
    int left = -1, right = -1, parent = -1;
    std::array<double, 3> lo{}, hi{};
    double min_norm2 = 0.0;
    double min_price = 0.0;
  };

  int build(std::uint32_t begin, std::uint32_t end, int parent) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    Node node;
    node.begin = begin;
    node.end = end;
    node.parent = parent;
    node.lo.fill(kInf);
    node.hi.fill(-kInf);
    double min_price = kInf;
    node.min_norm2 = kInf;
    for (std::uint32_t k = begin; k < end; ++k) {
      const double* p = point(order_[k]);
      double norm2 = 0.0;
      for (int d = 0; d < dim_; ++d) {
        node.lo[d] = std::min(node.lo[d], p[d]);
        node.hi[d] = std::max(node.hi[d], p[d]);
        norm2 += p[d] * p[d];
      }
      node.min_norm2 = std::min(node.min_norm2, norm2);
      min_price = std::min(min_price, prices_[order_[k]]);
    }
    node.min_price = min_price;
    if (end - begin <= kLeafSize) {
      for (std::uint32_t k = begin; k < end; ++k) leaf_of_[order_[k]] = index;
      nodes_[static_cast<std::size_t>(index)] = node;
      return index;
    }
    int axis = 0;
    for (int d = 1; d < dim_; ++d) {
      if (node.hi[d] - node.lo[d] > node.hi[axis] - node.lo[axis]) axis = d;
    }
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double pa = point(a)[axis];
                       const double pb = point(b)[axis];
                       return pa < pb || (pa == pb && a < b);
                     });
    nodes_[static_cast<std::size_t>(index)] = node;
    const int left = build(begin, mid, index);
    const int right = build(mid, end, index);
    nodes_[static_cast<std::size_t>(index)].left = left;
    nodes_[static_cast<std::size_t>(index)].right = right;
    return index;
  }

  const double* point(std::uint32_t j) const {
    return spec_.targets.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(dim_);
  }

  double bound(const Node& node, const double* q) const {
    if (q == nullptr) return node.min_price;
    double sum = 0.0;
    for (int d = 0; d < dim_; ++d) {
      double gap;
      const double period = spec_.period[d];
      if (period > 0.0) {
        const double width = node.hi[d] - node.lo[d];
        if (width >= period) continue;
        double a = std::fmod(q[d] - node.lo[d], period);
        if (a < 0.0) a += period;
        if (a <= width) continue;
        gap = std::min(a - width, period - a);
      } else {
        gap = std::max({node.lo[d] - q[d], 0.0, q[d] - node.hi[d]});
      }
      sum += gap * gap;
    }
    if (!periodic_) {
      double dot = 0.0;
      for (int d = 0; d < dim_; ++d) dot += std::max(q[d] * node.lo[d], q[d] * node.hi[d]);
      const double expansion = query_norm2_ + node.min_norm2 - 2.0 * dot;
      // Slack for cancellation error in the expanded form.
      sum = std::max(sum, expansion - 1e-12 * (query_norm2_ + node.min_norm2 + 1.0));
    }
    return sum + node.min_price;
  }

  struct Entry {
    int node;
    double bound;
  };

  const CostSpec& spec_;
  const std::vector<double>& prices_;
  int dim_;
  bool periodic_ = false;
  double query_norm2_ = 0.0;
  std::vector<std::uint32_t> order_;
  std::vector<int> leaf_of_;
  std::vector<Node> nodes_;
  std::vector<Entry> stack_;
};

}  // namespace

AssignmentIndex solve_scalable(const CostSpec& spec, const AuctionConfig& config) {
  validate(spec);
  if (!(config.epsilon_scale > 0.0 && config.epsilon_scale < 1.0)) {
    throw Error(ErrorKind::validation, "epsilon_scale must lie in (0, 1)");
  }
  if ((config.epsilon_start && !(*config.epsilon_start > 0.0)) ||
      (config.epsilon_min && !(*config.epsilon_min > 0.0))) {
    throw Error(ErrorKind::validation, "epsilon values must be positive");
  }
  const std::size_t sources = spec.source_count();
  const std::size_t targets = spec.target_count();

  AssignmentIndex result;
  result.solver = Solver::auction;
  double cost_scale = mean_pairwise_cost(spec);
  if (!(cost_scale > 0.0)) cost_scale = 1.0;
  const double epsilon_min = config.epsilon_min.value_or(1e-7 * cost_scale);
  const double epsilon_final =
      sources == 0 ? epsilon_min : epsilon_min * static_cast<double>(sources) / static_cast<double>(targets);
  result.epsilon_final = epsilon_final;
  if (sources == 0) return result;
  if (auto zero = find_zero_cost_matching(spec)) {
    result.mapping = std::move(*zero);
    result.total_cost = 0.0;
    return result;
  }

  std::vector<double> prices(targets, 0.0);
  PriceTree tree(spec, prices);
  std::vector<std::ptrdiff_t> owner(targets, -1);
  std::vector<std::ptrdiff_t> assigned(targets, -1);  // one bidder per target; >= sources are dummies
  std::deque<std::size_t> queue;

  double epsilon = std::max(config.epsilon_start.value_or(cost_scale / 8.0), epsilon_final);
  const std::size_t max_bids = config.max_rounds * targets;
  for (;;) {
    std::fill(owner.begin(), owner.end(), -1);
    std::fill(assigned.begin(), assigned.end(), -1);
    queue.clear();
    for (std::size_t p = 0; p < targets; ++p) queue.push_back(p);
    std::size_t bids = 0;
    while (!queue.empty()) {
      const std::size_t person = queue.front();
      queue.pop_front();
      const auto bid = tree.query(person < sources ? static_cast<std::ptrdiff_t>(person) : -1);
      const double increment =
          std::isfinite(bid.second_value) ? bid.second_value - bid.best_value + epsilon : epsilon;
      prices[bid.best] += increment;
      tree.update(bid.best);
      const std::ptrdiff_t previous = owner[bid.best];
      if (previous >= 0) {
        assigned[static_cast<std::size_t>(previous)] = -1;
        queue.push_back(static_cast<std::size_t>(previous));
      }
      owner[bid.best] = static_cast<std::ptrdiff_t>(person);
      assigned[person] = bid.best;
      if (++bids > max_bids) {
        std::ostringstream msg;
        msg << "auction did not converge: stuck at epsilon " << epsilon << " after " << bids << " bids";
        throw Error(ErrorKind::solver, msg.str());
      }
    }
    if (epsilon <= epsilon_final) break;
    epsilon = std::max(epsilon * config.epsilon_scale, epsilon_final);
  }

  result.mapping.resize(sources);
  for (std::size_t p = 0; p < sources; ++p) result.mapping[p] = static_cast<std::uint32_t>(assigned[p]);
  result.total_cost = cost_of(spec, result.mapping);
  return result;
}

}  // namespace gatlas::transport
