// Native "GCLD" cloud container and the format-sniffing loader.

#include <cmath>

#include "gatlas/container.hpp"
#include "gatlas/error.hpp"
#include "gatlas/model.hpp"

namespace gatlas {

GaussianCloud load_ply(const std::filesystem::path& path, Activation activation);

namespace {

constexpr std::string_view kMagic = "GCLD1\n";
constexpr std::size_t kFloatsPerRecord = 14;

nlohmann::json bounds_to_json(const Bounds& b) {
  return {{"center", b.center}, {"radius", b.radius}};
}

Bounds bounds_from_json(const nlohmann::json& j) {
  Bounds b;
  b.center = j.at("center").get<std::array<double, 3>>();
  b.radius = j.at("radius").get<double>();
  return b;
}

GaussianCloud load_native(const std::filesystem::path& path) {
  auto contents = container::read(path, kMagic);
  GaussianCloud cloud;
  std::size_t count = 0;
  try {
    const auto& h = contents.header;
    count = h.at("count").get<std::size_t>();
    cloud.space = activation_from_string(h.at("activation").get<std::string>());
    cloud.source_id = h.at("source_id").get<std::string>();
    cloud.bounds = bounds_from_json(h.at("bounds"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, "GCLD header in '" + path.string() + "': " + e.what());
  }
  if (contents.payload.size() != count * kFloatsPerRecord * 4) {
    throw Error(ErrorKind::parse, "GCLD payload size does not match count " + std::to_string(count));
  }
  const auto values = container::decode_f32(contents.payload);
  cloud.gaussians.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const float* r = values.data() + i * kFloatsPerRecord;
    Gaussian& g = cloud.gaussians[i];
    for (int d = 0; d < 3; ++d) {
      g.position[d] = r[d];
      g.albedo[d] = r[3 + d];
      g.scale[d] = r[7 + d];
    }
    g.opacity = r[6];
    for (int d = 0; d < 4; ++d) g.rotation[d] = r[10 + d];
    for (int k = 0; k < 14; ++k) {
      if (!std::isfinite(r[k])) {
        throw Error(ErrorKind::data, "record " + std::to_string(i) + ": non-finite value");
      }
    }
    canonicalize_rotation(g.rotation);
  }
  return cloud;
}

}  // namespace

GaussianCloud load_splat_file(const std::filesystem::path& path, Activation activation) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorKind::io, "no such file '" + path.string() + "'");
  }
  if (container::has_magic(path, kMagic)) return load_native(path);
  return load_ply(path, activation);
}

void save_cloud(const GaussianCloud& cloud, const std::filesystem::path& path) {
  if (cloud.empty()) throw Error(ErrorKind::validation, "empty cloud");
  nlohmann::json header = {
      {"count", cloud.size()},
      {"activation", to_string(cloud.space)},
      {"source_id", cloud.source_id},
      {"bounds", bounds_to_json(cloud.bounds)},
  };
  std::vector<std::uint8_t> payload;
  payload.reserve(cloud.size() * kFloatsPerRecord * 4);
  for (const Gaussian& g : cloud.gaussians) {
    for (float v : g.position) container::append_f32(payload, v);
    for (float v : g.albedo) container::append_f32(payload, v);
    container::append_f32(payload, g.opacity);
    for (float v : g.scale) container::append_f32(payload, v);
    for (float v : g.rotation) container::append_f32(payload, v);
  }
  container::write(path, kMagic, header, payload);
}

}  // namespace gatlas
