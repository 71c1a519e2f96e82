#include <algorithm>
#include <cmath>
#include <numeric>

#include "gatlas/container.hpp"
#include "gatlas/error.hpp"
#include "gatlas/transport.hpp"

namespace gatlas::transport {

const char* to_string(Solver s) noexcept { return s == Solver::exact ? "exact" : "auction"; }

Solver solver_from_string(const std::string& text) {
  if (text == "exact") return Solver::exact;
  if (text == "auction") return Solver::auction;
  throw Error(ErrorKind::validation, "unknown solver '" + text + "'");
}

void validate(const CostSpec& spec) {
  if (spec.dim != 2 && spec.dim != 3) {
    throw Error(ErrorKind::validation, "cost spec dimension must be 2 or 3");
  }
  const auto dim = static_cast<std::size_t>(spec.dim);
  if (spec.sources.size() % dim != 0 || spec.targets.size() % dim != 0) {
    throw Error(ErrorKind::validation, "point buffers are not a multiple of the dimension");
  }
  if (spec.source_count() > spec.target_count()) {
    throw Error(ErrorKind::validation, "more sources (" + std::to_string(spec.source_count()) +
                                           ") than targets (" + std::to_string(spec.target_count()) + ")");
  }
  for (int d = 0; d < 3; ++d) {
    if (spec.period[d] < 0.0 || !std::isfinite(spec.period[d]) || (d >= spec.dim && spec.period[d] != 0.0)) {
      throw Error(ErrorKind::validation, "wraparound periods must be positive");
    }
  }
}

void check_injective(std::span<const std::uint32_t> mapping, std::size_t target_count) {
  std::vector<bool> used(target_count, false);
  for (std::size_t i = 0; i < mapping.size(); ++i) {
    const auto t = mapping[i];
    if (t >= target_count) {
      throw Error(ErrorKind::validation, "mapping entry " + std::to_string(i) + " out of range");
    }
    if (used[t]) {
      throw Error(ErrorKind::validation, "mapping entry " + std::to_string(i) + " duplicates target " +
                                             std::to_string(t));
    }
    used[t] = true;
  }
}

double cost_of(const CostSpec& spec, std::span<const std::uint32_t> mapping) {
  if (mapping.size() != spec.source_count()) {
    throw Error(ErrorKind::validation, "mapping length does not match source count");
  }
  check_injective(mapping, spec.target_count());
  double total = 0.0;
  for (std::size_t i = 0; i < mapping.size(); ++i) total += spec.cost(i, mapping[i]);
  return total;
}

double mean_pairwise_cost(const CostSpec& spec) {
  const std::size_t m = spec.source_count();
  const std::size_t n = spec.target_count();
  if (m == 0 || n == 0) return 0.0;
  const bool periodic = spec.period[0] > 0.0 || spec.period[1] > 0.0 || spec.period[2] > 0.0;
  if (!periodic) {
    // E|a-b|^2 = E|a|^2 + E|b|^2 - 2 E[a].E[b]
    const auto moments = [&](const std::vector<double>& pts, std::size_t count) {
      std::array<double, 3> mean{0, 0, 0};
      double sq = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        for (int d = 0; d < spec.dim; ++d) {
          const double v = pts[i * static_cast<std::size_t>(spec.dim) + static_cast<std::size_t>(d)];
          mean[d] += v;
          sq += v * v;
        }
      }
      for (double& v : mean) v /= static_cast<double>(count);
      return std::pair{mean, sq / static_cast<double>(count)};
    };
    const auto [ma, sa] = moments(spec.sources, m);
    const auto [mb, sb] = moments(spec.targets, n);
    double cross = 0.0;
    for (int d = 0; d < spec.dim; ++d) cross += ma[d] * mb[d];
    return std::max(0.0, sa + sb - 2.0 * cross);
  }
  // Strided walk over the flattened pair list; the stride is made coprime to
  // the target count so the sample does not alias onto a subset of targets.
  const std::size_t budget = std::size_t{1} << 20;
  const std::size_t total = m * n;
  std::size_t stride = total <= budget ? 1 : total / budget;
  while (stride > 1 && std::gcd(stride, n) != 1) ++stride;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < total; k += stride) {
    sum += spec.cost(k / n, k % n);
    ++count;
  }
  return sum / static_cast<double>(count);
}

std::optional<std::vector<std::uint32_t>> find_zero_cost_matching(const CostSpec& spec) {
  const std::size_t m = spec.source_count();
  const std::size_t n = spec.target_count();
  const auto dim = static_cast<std::size_t>(spec.dim);
  const auto less = [&](const std::vector<double>& pts) {
    return [&pts, dim](std::uint32_t a, std::uint32_t b) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double x = pts[a * dim + d];
        const double y = pts[b * dim + d];
        if (x != y) return x < y;
      }
      return a < b;
    };
  };
  std::vector<std::uint32_t> src(m), tgt(n);
  std::iota(src.begin(), src.end(), 0u);
  std::iota(tgt.begin(), tgt.end(), 0u);
  std::sort(src.begin(), src.end(), less(spec.sources));
  std::sort(tgt.begin(), tgt.end(), less(spec.targets));

  const auto compare = [&](std::uint32_t s, std::uint32_t t) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double x = spec.sources[s * dim + d];
      const double y = spec.targets[t * dim + d];
      if (x != y) return x < y ? -1 : 1;
    }
    return 0;
  };
  // Both lists are sorted by coordinates then index, so equal-coordinate runs
  // pair up in index order: source order within a run gets lowest targets first.
  std::vector<std::uint32_t> mapping(m);
  std::size_t t = 0;
  for (std::size_t k = 0; k < m; ++k) {
    while (t < n && compare(src[k], tgt[t]) > 0) ++t;
    if (t == n || compare(src[k], tgt[t]) != 0) return std::nullopt;
    mapping[src[k]] = tgt[t];
    ++t;
  }
  return mapping;
}

// ---- GIDX -----------------------------------------------------------------

namespace {
constexpr std::string_view kIndexMagic = "GIDX1\n";
}

void save_index(const std::filesystem::path& path, const AssignmentIndex& index,
                std::size_t n_target, const std::string& lattice_hash) {
  nlohmann::json header = {
      {"n_source", index.mapping.size()},
      {"n_target", n_target},
      {"solver", to_string(index.solver)},
      {"epsilon_final", index.epsilon_final},
      {"lattice_hash", lattice_hash},
  };
  std::vector<std::uint8_t> payload;
  payload.reserve(index.mapping.size() * 4);
  for (auto t : index.mapping) container::append_u32(payload, t);
  container::write(path, kIndexMagic, header, payload);
}

IndexFile load_index(const std::filesystem::path& path) {
  auto contents = container::read(path, kIndexMagic);
  IndexFile file;
  std::size_t n_source = 0;
  try {
    const auto& h = contents.header;
    n_source = h.at("n_source").get<std::size_t>();
    file.n_target = h.at("n_target").get<std::size_t>();
    file.index.solver = solver_from_string(h.at("solver").get<std::string>());
    file.index.epsilon_final = h.at("epsilon_final").get<double>();
    file.lattice_hash = h.at("lattice_hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, "GIDX header in '" + path.string() + "': " + e.what());
  }
  if (contents.payload.size() != n_source * 4) {
    throw Error(ErrorKind::parse, "GIDX payload size does not match n_source");
  }
  file.index.mapping.resize(n_source);
  for (std::size_t i = 0; i < n_source; ++i) {
    file.index.mapping[i] = container::load_u32(contents.payload.data() + 4 * i);
  }
  check_injective(file.index.mapping, file.n_target);
  return file;
}

}  // namespace gatlas::transport
