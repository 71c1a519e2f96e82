// gatlas: batch conversion between Gaussian-splat clouds and Gaussian Atlases.

#include <fnmatch.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gatlas/atlas.hpp"
#include "gatlas/container.hpp"
#include "gatlas/error.hpp"
#include "gatlas/image.hpp"
#include "gatlas/log.hpp"
#include "gatlas/model.hpp"
#include "gatlas/pipeline.hpp"
#include "gatlas/prune.hpp"
#include "gatlas/render.hpp"
#include "gatlas/schedule.hpp"
#include "gatlas/sphere.hpp"
#include "gatlas/transport.hpp"

namespace {

using namespace gatlas;
namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  pipeline::PipelineConfig config;
  std::string prune_strategy = "scale";
  double epsilon_scale = 0.25;
  double epsilon_start = 0.0;
  double epsilon_min = 0.0;
  bool quiet = false;
};

json finite_or_string(double value) {
  if (std::isfinite(value)) return value;
  return value > 0 ? "inf" : "-inf";
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void emit_json(const json& j, const std::string& path) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  ensure_parent(path);
  container::write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

void apply_solver_options(Options& opt) {
  opt.config.oversize_strategy = prune::strategy_from_string(opt.prune_strategy);
  auto& auction = opt.config.offset.auction;
  auction.epsilon_scale = opt.epsilon_scale;
  if (opt.epsilon_start > 0) auction.epsilon_start = opt.epsilon_start;
  if (opt.epsilon_min > 0) auction.epsilon_min = opt.epsilon_min;
  log::enabled() = !opt.quiet;
}

// The pipeline config with n replaced by an atlas's own size.
pipeline::PipelineConfig config_for_side(const Options& opt, std::size_t side) {
  auto cfg = opt.config;
  cfg.n = side * side;
  cfg.allow_tau_below_n = true;
  return cfg;
}

bool is_atlas_file(const fs::path& path) { return container::has_magic(path, "GATL1\n"); }

void save_cloud_by_extension(const GaussianCloud& cloud, const fs::path& path) {
  ensure_parent(path);
  if (path.extension() == ".ply") {
    save_splat_ply(cloud, path);
  } else {
    save_cloud(cloud, path);
  }
}

atlas::AtlasGrid load_plain_atlas(const fs::path& path, const std::string& stats_prefix) {
  auto grid = atlas::load_atlas(path);
  if (grid.normalized) {
    if (stats_prefix.empty()) {
      throw Error(ErrorKind::state, "'" + path.string() + "' is normalized; pass --stats to denormalize it");
    }
    grid = atlas::denormalize(grid, atlas::load_stats(stats_prefix));
  }
  return grid;
}

// Scene-space cloud from either a splat file or an atlas.
GaussianCloud load_any_cloud(const Options& opt, const fs::path& path, const std::string& stats_prefix) {
  if (!is_atlas_file(path)) return load_splat_file(path);
  const auto grid = load_plain_atlas(path, stats_prefix);
  const auto ctx = pipeline::prepare_context(config_for_side(opt, grid.side));
  return pipeline::from_atlas(grid, ctx, opt.config.cull_threshold);
}

// Directory part taken literally, wildcards allowed in the file name.
std::vector<fs::path> expand_glob(const std::string& pattern) {
  const fs::path p(pattern);
  const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
  const std::string name = p.filename().string();
  std::vector<fs::path> matches;
  if (name.find_first_of("*?[") == std::string::npos) {
    if (fs::is_regular_file(p)) matches.push_back(p);
  } else if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      if (fnmatch(name.c_str(), entry.path().filename().c_str(), 0) == 0) matches.push_back(entry.path());
    }
  }
  std::sort(matches.begin(), matches.end());
  if (matches.empty()) throw Error(ErrorKind::validation, "no files match '" + pattern + "'");
  return matches;
}

// Standard normal samples from the engine bits (Box-Muller), reproducible
// across standard libraries.
std::vector<float> gaussian_noise(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto uniform = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
  std::vector<float> out(count);
  for (std::size_t k = 0; k < count; k += 2) {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    out[k] = static_cast<float>(r * std::cos(theta));
    if (k + 1 < count) out[k + 1] = static_cast<float>(r * std::sin(theta));
  }
  return out;
}

// ---- index ----------------------------------------------------------------

int cmd_index(const Options& opt, int spot_rows) {
  const auto& cfg = opt.config;
  const bool cached = fs::exists(cfg.index_path());
  pipeline::AtlasContext ctx;
  try {
    ctx = pipeline::prepare_context(cfg);
  } catch (const Error& e) {
    if (cached && (e.kind() == ErrorKind::parse || e.kind() == ErrorKind::validation)) {
      throw Error(e.kind(), std::string(e.what()) + "; the cache looks corrupt, delete '" +
                                cfg.index_path().string() + "' and rerun `gatlas index` to regenerate it");
    }
    throw;
  }

  // Spot check: per-row costs recomputed from the raw geometry must sum to
  // the certificate, and no pair of sampled rows may profit from swapping
  // targets by more than the solver's tolerance.
  const auto& lattice = ctx.lattice;
  const auto spec = atlas::plane_cost_spec(lattice);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> rows(lattice.n);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[rng() % i]);
  rows.resize(std::min<std::size_t>(rows.size(), static_cast<std::size_t>(std::max(spot_rows, 0))));

  const auto geometric_cost = [&](std::size_t r, std::uint32_t pixel) {
    const double u = lattice.flat_coords[r][0];
    const double v = lattice.flat_coords[r][1];
    const double gu = (static_cast<double>(pixel % lattice.side) + 0.5) / static_cast<double>(lattice.side);
    const double gv = (static_cast<double>(pixel / lattice.side) + 0.5) / static_cast<double>(lattice.side);
    double du = std::abs(u - gu);
    du = std::min(du, 1.0 - du);
    return du * du + (v - gv) * (v - gv);
  };
  double max_row_error = 0.0;
  for (auto r : rows) {
    max_row_error = std::max(max_row_error, std::abs(geometric_cost(r, ctx.plane.mapping[r]) -
                                                     spec.cost(r, ctx.plane.mapping[r])));
  }
  double full = 0.0;
  for (std::size_t r = 0; r < lattice.n; ++r) full += geometric_cost(r, ctx.plane.mapping[r]);
  const double certificate_error = std::abs(full - transport::cost_of(spec, ctx.plane.mapping));

  double worst_swap_gain = 0.0;
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = a + 1; b < rows.size(); ++b) {
      const auto i = rows[a], j = rows[b];
      const auto ti = ctx.plane.mapping[i], tj = ctx.plane.mapping[j];
      const double gain = spec.cost(i, ti) + spec.cost(j, tj) - spec.cost(i, tj) - spec.cost(j, ti);
      worst_swap_gain = std::max(worst_swap_gain, gain);
    }
  }
  const double tolerance = 2.0 * ctx.plane.epsilon_final + 1e-9;
  const bool ok = max_row_error <= 1e-12 && certificate_error <= 1e-6 && worst_swap_gain <= tolerance;

  emit_json({{"path", cfg.index_path().string()},
             {"n", cfg.n},
             {"reused_cache", cached},
             {"solver", transport::to_string(ctx.plane.solver)},
             {"total_cost", ctx.plane.total_cost},
             {"epsilon_final", ctx.plane.epsilon_final},
             {"spot_rows", rows.size()},
             {"max_row_cost_error", max_row_error},
             {"certificate_error", certificate_error},
             {"worst_swap_gain", worst_swap_gain},
             {"valid", ok}},
            "-");
  return ok ? 0 : 3;
}

// ---- to-atlas -------------------------------------------------------------

int convert_one(const fs::path& input, const fs::path& out_dir, bool previews, const pipeline::AtlasContext& ctx,
                const pipeline::PipelineConfig& cfg) {
  try {
    const auto cloud = load_splat_file(input);
    const auto conv = pipeline::to_atlas(cloud, ctx, cfg);
    const fs::path out = out_dir / (input.stem().string() + ".gatl");
    atlas::save_atlas(conv.atlas, out);
    if (previews) atlas::write_previews(conv.atlas, out_dir, input.stem().string());
    log::info("to_atlas", {{"input", input.string()},
                           {"output", out.string()},
                           {"input_count", conv.input_count},
                           {"packed_count", conv.normalized.size()},
                           {"sphere_solver", transport::to_string(conv.offset.assignment.solver)},
                           {"sphere_cost", conv.offset.assignment.total_cost},
                           {"plane_cost", ctx.plane.total_cost},
                           {"seconds_prune", conv.seconds_prune},
                           {"seconds_offset", conv.seconds_offset},
                           {"seconds_pack", conv.seconds_pack}});
    return 0;
  } catch (const Error& e) {
    log::event("error", "to_atlas_failed",
               {{"input", input.string()}, {"kind", to_string(e.kind())}, {"message", e.what()}});
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    log::event("error", "to_atlas_failed", {{"input", input.string()}, {"message", e.what()}});
    return 1;
  }
}

int cmd_to_atlas(const Options& opt, const std::vector<std::string>& inputs, const std::string& out_dir,
                 bool previews) {
  std::set<std::string> stems;
  for (const auto& in : inputs) {
    if (!stems.insert(fs::path(in).stem().string()).second) {
      throw Error(ErrorKind::validation, "two inputs share the output name '" + fs::path(in).stem().string() + "'");
    }
  }
  fs::create_directories(out_dir);
  const auto ctx = pipeline::prepare_context(opt.config);

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(opt.config.threads), inputs.size());
  auto item_cfg = opt.config;
  if (workers > 1) item_cfg.threads = 1;
  std::vector<int> codes(inputs.size(), 0);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t k = next++; k < inputs.size(); k = next++) {
      codes[k] = convert_one(inputs[k], out_dir, previews, ctx, item_cfg);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  const auto failures = std::count_if(codes.begin(), codes.end(), [](int c) { return c != 0; });
  log::info("batch_summary", {{"files", inputs.size()}, {"failed", failures}, {"workers", workers}});
  return codes.empty() ? 0 : *std::max_element(codes.begin(), codes.end());
}

// ---- from-atlas -----------------------------------------------------------

int cmd_from_atlas(const Options& opt, const std::string& input, const std::string& output,
                   const std::string& stats_prefix) {
  const auto grid = load_plain_atlas(input, stats_prefix);
  const auto ctx = pipeline::prepare_context(config_for_side(opt, grid.side));
  const auto cloud = pipeline::from_atlas(grid, ctx, opt.config.cull_threshold);
  save_cloud_by_extension(cloud, output);
  log::info("from_atlas", {{"input", input}, {"output", output}, {"count", cloud.size()}});
  return 0;
}

// ---- render ---------------------------------------------------------------

int cmd_render(const Options& opt, const std::string& input, const std::string& out_dir,
               const std::string& stats_prefix, const std::vector<double>& background, bool raw) {
  const auto cloud = load_any_cloud(opt, input, stats_prefix);
  if (cloud.space != Activation::activated) throw Error(ErrorKind::validation, "rendering needs an activated cloud");
  const auto& cfg = opt.config;
  const Bounds bounds = cloud.empty() ? Bounds{} : compute_bounds(cloud.gaussians);
  const Eigen::Vector3d center(bounds.center[0], bounds.center[1], bounds.center[2]);
  const Eigen::Vector3d bg(background[0], background[1], background[2]);
  fs::create_directories(out_dir);
  render::RenderOptions options;
  options.threads = cfg.threads;
  const auto cams = render::ring_cameras(cfg.ring_views, cfg.ring_radius_factor * bounds.radius,
                                         cfg.ring_elevation_degrees, center, cfg.fov_y_degrees,
                                         cfg.ring_resolution, cfg.ring_resolution);
  const std::string stem = fs::path(input).stem().string();
  for (std::size_t k = 0; k < cams.size(); ++k) {
    const auto out = render::render(cloud, cams[k], bg, options);
    const fs::path path = fs::path(out_dir) / (stem + ".view" + std::to_string(k) + (raw ? ".gimg" : ".png"));
    if (raw) {
      write_raw(path, out.color);
    } else {
      write_png(path, out.color);
    }
    log::info("render", {{"view", k}, {"output", path.string()}, {"skipped", out.skipped}});
  }
  return 0;
}

// ---- roundtrip ------------------------------------------------------------

int cmd_roundtrip(const Options& opt, const std::string& input, const std::string& report_path) {
  const auto cloud = load_splat_file(input);
  const auto ctx = pipeline::prepare_context(opt.config);
  const auto report = pipeline::roundtrip(cloud, ctx, opt.config);
  json psnr = json::array();
  for (double p : report.psnr) psnr.push_back(finite_or_string(p));
  const bool pass = report.passes();
  emit_json({{"source", input},
             {"count", report.count},
             {"psnr", psnr},
             {"min_psnr", finite_or_string(report.min_psnr())},
             {"max_attribute_error", report.max_attribute_error},
             {"stray_pixels", report.stray_pixels},
             {"timings", {{"to_atlas", report.seconds_to_atlas}, {"from_atlas", report.seconds_from_atlas}}},
             {"pass", pass}},
            report_path);
  return pass ? 0 : 3;
}

// ---- prune ----------------------------------------------------------------

int cmd_prune(const Options& opt, const std::string& input, const std::string& output, const std::string& strategy,
              const std::string& report_path) {
  const auto& cfg = opt.config;
  const auto cloud = load_splat_file(input);
  const auto strat = prune::strategy_from_string(strategy);
  std::optional<prune::VisibilityReport> report;
  if (strat == prune::Strategy::visibility || !report_path.empty()) {
    prune::ViewSampling sampling;
    sampling.threads = cfg.threads;
    report = prune::assess_visibility(cloud, cfg.visibility_views, cfg.seed, cfg.visibility_resolution, sampling);
    if (!report_path.empty()) {
      ensure_parent(report_path);
      prune::save_report(*report, report_path);
    }
  }
  const auto pruned = prune::prune_to(cloud, cfg.tau, strat, report ? &*report : nullptr);
  save_cloud_by_extension(pruned, output);
  log::info("prune", {{"input", input}, {"output", output}, {"strategy", strategy},
                      {"before", cloud.size()}, {"after", pruned.size()}, {"tau", cfg.tau}});
  return 0;
}

// ---- stats ----------------------------------------------------------------

int cmd_stats(const Options& opt, const std::string& pattern, const std::string& prefix, double floor,
              const std::string& mode, const std::string& histogram_path, std::size_t bucket_width) {
  (void)opt;
  if (bucket_width == 0) throw Error(ErrorKind::validation, "bucket width must be positive");
  const auto files = expand_glob(pattern);
  atlas::StatsAccumulator acc;
  std::vector<std::size_t> counts;
  std::size_t pixels = 0;
  for (const auto& path : files) {
    const auto grid = atlas::load_atlas(path);
    if (grid.normalized) throw Error(ErrorKind::state, "'" + path.string() + "' is already normalized");
    acc.add(grid);
    pixels = grid.pixels();
    std::size_t live = 0;
    for (std::size_t p = 0; p < grid.pixels(); ++p) {
      const double o = (static_cast<double>(grid.at(atlas::kOpacityA, p)) + grid.at(atlas::kOpacityB, p) +
                        grid.at(atlas::kOpacityC, p)) / 3.0;
      if (o > 0.0) ++live;
    }
    counts.push_back(live);
  }
  const auto stats = acc.finish(floor, atlas::stats_mode_from_string(mode));
  ensure_parent(prefix);
  atlas::save_stats(stats, prefix);

  if (!histogram_path.empty()) {
    const std::size_t buckets = pixels / bucket_width + 1;
    std::vector<std::size_t> hist(buckets, 0);
    for (auto c : counts) ++hist[c / bucket_width];
    std::string csv = "bucket_start,bucket_end,files\n";
    for (std::size_t b = 0; b < buckets; ++b) {
      csv += std::to_string(b * bucket_width) + "," + std::to_string((b + 1) * bucket_width) + "," +
             std::to_string(hist[b]) + "\n";
    }
    ensure_parent(histogram_path);
    container::write_file(histogram_path, {reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()});
  }
  log::info("stats", {{"files", files.size()}, {"prefix", prefix}, {"mode", mode}, {"floor", floor}});
  return 0;
}

// ---- noise-check ----------------------------------------------------------

int cmd_noise_check(const Options& opt, const std::string& input, const std::string& stats_prefix,
                    std::size_t steps, const std::string& variant, const std::string& dump_dir, long timestep) {
  auto grid = atlas::load_atlas(input);
  if (!grid.normalized) {
    if (stats_prefix.empty()) {
      throw Error(ErrorKind::state, "'" + input + "' is not normalized; pass --stats to standardize it first");
    }
    grid = atlas::normalize(grid, atlas::load_stats(stats_prefix));
  }
  const auto sched = schedule::build_schedule(schedule::variant_from_string(variant), steps);
  const auto noise = gaussian_noise(grid.data.size(), opt.config.seed);
  const std::vector<double> x0(grid.data.begin(), grid.data.end());
  const std::vector<double> eps(noise.begin(), noise.end());
  const auto report = schedule::check_identities(x0, eps, sched);
  double variance_error = 0.0;
  for (std::size_t t = 0; t < sched.steps; ++t) {
    variance_error =
        std::max(variance_error, std::abs(sched.alphas[t] * sched.alphas[t] + sched.sigmas[t] * sched.sigmas[t] - 1.0));
  }
  const bool pass = report.max_x0_error <= 1e-6 && report.max_noise_error <= 1e-6 && variance_error <= 1e-6;

  if (!dump_dir.empty()) {
    const std::size_t t = timestep < 0 ? sched.steps / 2 : static_cast<std::size_t>(timestep);
    if (t >= sched.steps) throw Error(ErrorKind::validation, "timestep out of range");
    fs::create_directories(dump_dir);
    const std::string stem = fs::path(input).stem().string() + ".t" + std::to_string(t);
    atlas::save_atlas(schedule::add_noise(grid, noise, t, sched), fs::path(dump_dir) / (stem + ".x_t.gatl"));
    atlas::save_atlas(schedule::velocity_target(grid, noise, t, sched), fs::path(dump_dir) / (stem + ".v.gatl"));
    emit_json({{"source", input},
               {"timestep", t},
               {"alpha", sched.alphas[t]},
               {"sigma", sched.sigmas[t]},
               {"variant", variant},
               {"steps", sched.steps},
               {"seed", opt.config.seed}},
              (fs::path(dump_dir) / (stem + ".json")).string());
  }

  emit_json({{"source", input},
             {"variant", variant},
             {"steps", sched.steps},
             {"timesteps_checked", report.timesteps},
             {"max_x0_error", report.max_x0_error},
             {"max_noise_error", report.max_noise_error},
             {"max_variance_error", variance_error},
             {"pass", pass}},
            "-");
  return pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convert Gaussian-splat clouds to Gaussian Atlases and back"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML config file; command-line flags take precedence");

  Options opt;
  auto& cfg = opt.config;
  std::string cache_dir = cfg.cache_dir.string();
  app.add_option("--n", cfg.n, "Gaussians per atlas (perfect square)")->capture_default_str();
  app.add_option("--tau", cfg.tau, "per-object prune bound")->capture_default_str();
  app.add_flag("--allow-small-tau", cfg.allow_tau_below_n, "permit tau < n");
  app.add_option("--cache-dir", cache_dir, "directory for plane index caches")->capture_default_str();
  app.add_option("--threads", cfg.threads, "worker threads")->capture_default_str();
  app.add_option("--seed", cfg.seed, "seed for sampled views and noise")->capture_default_str();
  app.add_option("--cull", cfg.cull_threshold, "opacity below which decoded pixels are dropped")
      ->capture_default_str();
  app.add_option("--exact-max", cfg.offset.exact.max_sources, "largest sphere offsetting solved exactly")
      ->capture_default_str();
  app.add_option("--plane-exact-max", cfg.offset.plane_exact_max, "largest plane index solved exactly")
      ->capture_default_str();
  app.add_option("--epsilon-start", opt.epsilon_start, "auction starting epsilon (0: mean cost / 8)");
  app.add_option("--epsilon-scale", opt.epsilon_scale, "auction epsilon reduction factor")->capture_default_str();
  app.add_option("--epsilon-min", opt.epsilon_min, "auction final epsilon (0: 1e-7 x mean cost)");
  app.add_option("--oversize-strategy", opt.prune_strategy, "how clouds above n are reduced (scale|visibility)")
      ->capture_default_str();
  app.add_option("--views", cfg.visibility_views, "visibility views")->capture_default_str();
  app.add_option("--visibility-resolution", cfg.visibility_resolution, "visibility render size")
      ->capture_default_str();
  app.add_option("--ring-views", cfg.ring_views, "ring cameras")->capture_default_str();
  app.add_option("--resolution", cfg.ring_resolution, "ring render size")->capture_default_str();
  app.add_option("--elevation", cfg.ring_elevation_degrees, "ring elevation in degrees")->capture_default_str();
  app.add_option("--radius-factor", cfg.ring_radius_factor, "ring radius in bounds radii")->capture_default_str();
  app.add_option("--fov", cfg.fov_y_degrees, "vertical field of view in degrees")->capture_default_str();
  app.add_flag("--quiet", opt.quiet, "suppress JSON log lines");

  int code = 0;
  std::function<int()> run;

  auto* index = app.add_subcommand("index", "build or verify the cached plane index");
  int spot_rows = 64;
  index->add_option("--spot-rows", spot_rows, "rows re-checked against the geometry")->capture_default_str();
  index->callback([&] { run = [&] { return cmd_index(opt, spot_rows); }; });

  auto* to_atlas = app.add_subcommand("to-atlas", "convert splat files to atlases");
  std::vector<std::string> to_inputs;
  std::string to_out = ".";
  bool previews = false;
  to_atlas->add_option("inputs", to_inputs, "PLY or GCLD files")->required()->check(CLI::ExistingFile);
  to_atlas->add_option("-o,--out-dir", to_out, "output directory")->capture_default_str();
  to_atlas->add_flag("--previews", previews, "also write PNG channel previews");
  to_atlas->callback([&] { run = [&] { return cmd_to_atlas(opt, to_inputs, to_out, previews); }; });

  auto* from_atlas = app.add_subcommand("from-atlas", "decode an atlas to a cloud (.ply or .gcld)");
  std::string from_in, from_out, stats_prefix;
  from_atlas->add_option("input", from_in, "GATL file")->required()->check(CLI::ExistingFile);
  from_atlas->add_option("-o,--out", from_out, "output cloud")->required();
  from_atlas->add_option("--stats", stats_prefix, "stats prefix for normalized atlases");
  from_atlas->callback([&] { run = [&] { return cmd_from_atlas(opt, from_in, from_out, stats_prefix); }; });

  auto* render_cmd = app.add_subcommand("render", "render ring views of a cloud or atlas");
  std::string render_in, render_out = ".";
  std::vector<double> background{0.0, 0.0, 0.0};
  bool raw = false;
  render_cmd->add_option("input", render_in, "cloud or GATL file")->required()->check(CLI::ExistingFile);
  render_cmd->add_option("-o,--out-dir", render_out, "output directory")->capture_default_str();
  render_cmd->add_option("--stats", stats_prefix, "stats prefix for normalized atlases");
  render_cmd->add_option("--background", background, "linear RGB background")->expected(3);
  render_cmd->add_flag("--raw", raw, "write raw float images instead of PNG");
  render_cmd->callback(
      [&] { run = [&] { return cmd_render(opt, render_in, render_out, stats_prefix, background, raw); }; });

  auto* roundtrip = app.add_subcommand("roundtrip", "verify to-atlas -> from-atlas on one file");
  std::string rt_in, rt_report;
  roundtrip->add_option("input", rt_in, "PLY or GCLD file")->required()->check(CLI::ExistingFile);
  roundtrip->add_option("--report", rt_report, "JSON report path (default stdout)");
  roundtrip->callback([&] { run = [&] { return cmd_roundtrip(opt, rt_in, rt_report); }; });

  auto* prune_cmd = app.add_subcommand("prune", "reduce a cloud to at most tau Gaussians");
  std::string prune_in, prune_out, prune_strategy = "visibility", prune_report;
  prune_cmd->add_option("input", prune_in, "PLY or GCLD file")->required()->check(CLI::ExistingFile);
  prune_cmd->add_option("-o,--out", prune_out, "output cloud")->required();
  prune_cmd->add_option("--strategy", prune_strategy, "visibility|scale")->capture_default_str();
  prune_cmd->add_option("--report", prune_report, "visibility report JSON path");
  prune_cmd->callback([&] { run = [&] { return cmd_prune(opt, prune_in, prune_out, prune_strategy, prune_report); }; });

  auto* stats_cmd = app.add_subcommand("stats", "fit normalization statistics over atlases");
  std::string pattern, stats_out, mode = "per_pixel", histogram;
  double floor = 1e-4;
  std::size_t bucket = 1024;
  stats_cmd->add_option("pattern", pattern, "GATL glob, wildcards in the file name")->required();
  stats_cmd->add_option("-o,--out", stats_out, "output prefix")->required();
  stats_cmd->add_option("--floor", floor, "minimum standard deviation")->capture_default_str();
  stats_cmd->add_option("--mode", mode, "per_pixel|per_channel")->capture_default_str();
  stats_cmd->add_option("--histogram", histogram, "Gaussian-count histogram CSV");
  stats_cmd->add_option("--bucket-width", bucket, "histogram bucket width")->capture_default_str();
  stats_cmd->callback(
      [&] { run = [&] { return cmd_stats(opt, pattern, stats_out, floor, mode, histogram, bucket); }; });

  auto* noise = app.add_subcommand("noise-check", "check the v-parameterization identities on an atlas");
  std::string noise_in, variant = "scaled_linear", dump_dir;
  std::size_t steps = 50;
  long timestep = -1;
  noise->add_option("input", noise_in, "GATL file")->required()->check(CLI::ExistingFile);
  noise->add_option("--stats", stats_prefix, "stats prefix used to standardize a plain atlas");
  noise->add_option("--steps", steps, "schedule length")->capture_default_str();
  noise->add_option("--variant", variant, "scaled_linear|cosine")->capture_default_str();
  noise->add_option("--dump-dir", dump_dir, "write an (x_t, v, meta) training sample here");
  noise->add_option("--timestep", timestep, "timestep of the dumped sample (default steps / 2)");
  noise->callback(
      [&] { run = [&] { return cmd_noise_check(opt, noise_in, stats_prefix, steps, variant, dump_dir, timestep); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int parse_code = app.exit(e);
    return parse_code == 0 ? 0 : 1;
  }

  try {
    cfg.cache_dir = cache_dir;
    apply_solver_options(opt);
    code = run ? run() : 1;
  } catch (const Error& e) {
    log::event("error", "failed", {{"kind", to_string(e.kind())}, {"message", e.what()}});
    std::cerr << "error: " << e.what() << '\n';
    code = exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    code = 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    code = 1;
  }
  return code;
}
