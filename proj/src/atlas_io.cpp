// GATL containers, statistics file pairs and channel previews.

#include <algorithm>
#include <cmath>

#include "gatlas/atlas.hpp"
#include "gatlas/container.hpp"
#include "gatlas/error.hpp"
#include "gatlas/image.hpp"

namespace gatlas::atlas {

namespace {

constexpr std::string_view kAtlasMagic = "GATL1\n";

nlohmann::json channel_names_json() {
  nlohmann::json names = nlohmann::json::array();
  for (auto name : kChannelNames) names.push_back(std::string(name));
  return names;
}

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const char* suffix) {
  return prefix.string() + suffix;
}

}  // namespace

void save_atlas(const AtlasGrid& atlas, const std::filesystem::path& path) {
  if (atlas.data.size() != kChannels * atlas.pixels()) {
    throw Error(ErrorKind::validation, "atlas buffer does not match 16 x side^2");
  }
  nlohmann::json header = {
      {"side", atlas.side},
      {"channel_names", channel_names_json()},
      {"normalized", atlas.normalized},
      {"lattice_hash", atlas.lattice_hash},
      {"bounds", {{"center", atlas.bounds.center}, {"radius", atlas.bounds.radius}}},
      {"source_id", atlas.source_id},
      {"stats_ref", atlas.stats_ref},
  };
  if (!atlas.extra.empty()) header["extra"] = atlas.extra;
  container::write(path, kAtlasMagic, header, container::encode_f32(atlas.data));
}

AtlasGrid load_atlas(const std::filesystem::path& path) {
  auto contents = container::read(path, kAtlasMagic);
  AtlasGrid atlas;
  try {
    const auto& h = contents.header;
    atlas.side = h.at("side").get<std::size_t>();
    if (h.at("channel_names") != channel_names_json()) {
      throw Error(ErrorKind::parse, "GATL channel layout in '" + path.string() + "' is not the expected one");
    }
    atlas.normalized = h.at("normalized").get<bool>();
    atlas.lattice_hash = h.at("lattice_hash").get<std::string>();
    atlas.bounds.center = h.at("bounds").at("center").get<std::array<double, 3>>();
    atlas.bounds.radius = h.at("bounds").at("radius").get<double>();
    atlas.source_id = h.at("source_id").get<std::string>();
    atlas.stats_ref = h.at("stats_ref").get<std::string>();
    if (h.contains("extra")) atlas.extra = h.at("extra");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, "GATL header in '" + path.string() + "': " + e.what());
  }
  atlas.data = container::decode_f32(contents.payload);
  if (atlas.data.size() != kChannels * atlas.pixels()) {
    throw Error(ErrorKind::parse, "GATL payload size does not match side " + std::to_string(atlas.side));
  }
  return atlas;
}

void save_stats(const NormStats& stats, const std::filesystem::path& prefix) {
  const auto write_one = [&](const std::vector<double>& values, const char* role, const char* suffix) {
    AtlasGrid grid = AtlasGrid::zeros(stats.side, stats.lattice_hash);
    if (values.size() != grid.data.size()) throw Error(ErrorKind::validation, "statistics buffer has wrong size");
    for (std::size_t k = 0; k < values.size(); ++k) grid.data[k] = static_cast<float>(values[k]);
    grid.source_id = prefix.filename().string();
    grid.extra = {{"role", role},
                  {"corpus_size", stats.corpus_size},
                  {"floor", stats.floor},
                  {"mode", to_string(stats.mode)}};
    save_atlas(grid, with_suffix(prefix, suffix));
  };
  write_one(stats.mean, "mean", ".mean.gatl");
  write_one(stats.stddev, "std", ".std.gatl");
}

NormStats load_stats(const std::filesystem::path& prefix) {
  const AtlasGrid mean = load_atlas(with_suffix(prefix, ".mean.gatl"));
  const AtlasGrid sd = load_atlas(with_suffix(prefix, ".std.gatl"));
  if (mean.side != sd.side || mean.lattice_hash != sd.lattice_hash) {
    throw Error(ErrorKind::validation, "mean/std statistics files disagree");
  }
  NormStats stats;
  stats.side = mean.side;
  stats.lattice_hash = mean.lattice_hash;
  try {
    stats.corpus_size = mean.extra.at("corpus_size").get<std::size_t>();
    stats.floor = mean.extra.at("floor").get<double>();
    stats.mode = stats_mode_from_string(mean.extra.at("mode").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("statistics metadata: ") + e.what());
  }
  stats.mean.assign(mean.data.begin(), mean.data.end());
  stats.stddev.assign(sd.data.begin(), sd.data.end());
  return stats;
}

std::vector<std::filesystem::path> write_previews(const AtlasGrid& atlas, const std::filesystem::path& dir,
                                                  const std::string& stem) {
  struct Group {
    const char* name;
    std::vector<std::size_t> channels;
  };
  const std::vector<Group> groups = {
      {"offset", {kOffsetX, kOffsetY, kOffsetZ}},
      {"albedo", {kAlbedoR, kAlbedoG, kAlbedoB}},
      {"opacity", {kOpacityA}},
      {"scale", {kScaleX, kScaleY, kScaleZ}},
      {"rotation", {kRotW, kRotX, kRotY, kRotZ}},
  };
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const int side = static_cast<int>(atlas.side);
  for (const auto& group : groups) {
    Image image(side, side, static_cast<int>(group.channels.size()));
    for (std::size_t k = 0; k < group.channels.size(); ++k) {
      const auto plane = atlas.channel(group.channels[k]);
      const auto [lo, hi] = std::minmax_element(plane.begin(), plane.end());
      const double range = *hi - *lo;
      for (int row = 0; row < side; ++row) {
        for (int col = 0; col < side; ++col) {
          const double v = plane[static_cast<std::size_t>(row) * atlas.side + static_cast<std::size_t>(col)];
          // Row 0 is the south pole; flip so north is up in the preview.
          image.at(col, side - 1 - row, static_cast<int>(k)) =
              range > 0.0 ? static_cast<float>((v - *lo) / range) : 0.f;
        }
      }
    }
    auto path = dir / (stem + "." + group.name + ".png");
    write_png(path, image, Transfer::linear);
    written.push_back(std::move(path));
  }
  return written;
}

}  // namespace gatlas::atlas
