// Binary little-endian PLY as written by the reference 3DGS trainers.

#include <cmath>
#include <cstring>
#include <map>
#include <optional>
#include <sstream>

#include "gatlas/container.hpp"
#include "gatlas/error.hpp"
#include "gatlas/log.hpp"
#include "gatlas/model.hpp"

namespace gatlas {

namespace {

enum class ScalarType { i8, u8, i16, u16, i32, u32, f32, f64 };

std::optional<ScalarType> parse_type(const std::string& name) {
  static const std::map<std::string, ScalarType> table = {
      {"char", ScalarType::i8},    {"int8", ScalarType::i8},     {"uchar", ScalarType::u8},
      {"uint8", ScalarType::u8},   {"short", ScalarType::i16},   {"int16", ScalarType::i16},
      {"ushort", ScalarType::u16}, {"uint16", ScalarType::u16},  {"int", ScalarType::i32},
      {"int32", ScalarType::i32},  {"uint", ScalarType::u32},    {"uint32", ScalarType::u32},
      {"float", ScalarType::f32},  {"float32", ScalarType::f32}, {"double", ScalarType::f64},
      {"float64", ScalarType::f64},
  };
  auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::size_t type_size(ScalarType t) {
  switch (t) {
    case ScalarType::i8:
    case ScalarType::u8: return 1;
    case ScalarType::i16:
    case ScalarType::u16: return 2;
    case ScalarType::i32:
    case ScalarType::u32:
    case ScalarType::f32: return 4;
    case ScalarType::f64: return 8;
  }
  return 0;
}

// Host is required to be little-endian for the memcpy reads below; the
// container helpers handle the general case for our own formats.
double read_scalar(const std::uint8_t* p, ScalarType t) {
  switch (t) {
    case ScalarType::i8: return static_cast<std::int8_t>(*p);
    case ScalarType::u8: return *p;
    case ScalarType::i16: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
    case ScalarType::u16: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
    case ScalarType::i32: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
    case ScalarType::u32: return container::load_u32(p);
    case ScalarType::f32: return container::load_f32(p);
    case ScalarType::f64: { double v; std::memcpy(&v, p, 8); return v; }
  }
  return 0.0;
}

struct Property {
  std::string name;
  ScalarType type;
  std::size_t offset;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
  std::size_t stride = 0;
};

constexpr const char* kRequired[] = {"x",       "y",       "z",       "f_dc_0", "f_dc_1",
                                     "f_dc_2",  "opacity", "scale_0", "scale_1", "scale_2",
                                     "rot_0",   "rot_1",   "rot_2",   "rot_3"};

}  // namespace

GaussianCloud load_ply(const std::filesystem::path& path, Activation activation) {
  const auto bytes = container::read_file(path);
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const std::string_view end_marker = "end_header\n";
  const auto end_pos = text.find(end_marker);
  if (text.substr(0, 4) != "ply\n" || end_pos == std::string_view::npos) {
    throw Error(ErrorKind::parse, "'" + path.string() + "' is not a PLY file (missing ply/end_header)");
  }
  std::istringstream header{std::string(text.substr(0, end_pos))};
  std::vector<Element> elements;
  std::string line;
  bool format_ok = false;
  while (std::getline(header, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream words(line);
    std::string keyword;
    words >> keyword;
    if (keyword == "format") {
      std::string fmt;
      words >> fmt;
      if (fmt != "binary_little_endian") {
        throw Error(ErrorKind::parse, "unsupported PLY format '" + fmt + "' (need binary_little_endian)");
      }
      format_ok = true;
    } else if (keyword == "element") {
      Element e;
      words >> e.name >> e.count;
      elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (elements.empty()) throw Error(ErrorKind::parse, "PLY property before any element");
      std::string type_name, name;
      words >> type_name;
      if (type_name == "list") {
        throw Error(ErrorKind::parse, "PLY list properties are not supported");
      }
      words >> name;
      auto type = parse_type(type_name);
      if (!type) throw Error(ErrorKind::parse, "unknown PLY property type '" + type_name + "'");
      Element& e = elements.back();
      e.properties.push_back({name, *type, e.stride});
      e.stride += type_size(*type);
    }
  }
  if (!format_ok) throw Error(ErrorKind::parse, "PLY header has no format line");

  std::size_t data_offset = end_pos + end_marker.size();
  const Element* vertex = nullptr;
  std::size_t vertex_offset = 0;
  for (const auto& e : elements) {
    if (e.name == "vertex") {
      vertex = &e;
      vertex_offset = data_offset;
      break;
    }
    data_offset += e.count * e.stride;
  }
  if (vertex == nullptr) throw Error(ErrorKind::parse, "PLY has no vertex element");

  std::map<std::string, const Property*> by_name;
  for (const auto& p : vertex->properties) by_name[p.name] = &p;
  const Property* props[14];
  for (int k = 0; k < 14; ++k) {
    auto it = by_name.find(kRequired[k]);
    if (it == by_name.end()) {
      throw Error(ErrorKind::parse, std::string("PLY vertex element is missing property '") + kRequired[k] + "'");
    }
    props[k] = it->second;
  }
  if (by_name.count("f_rest_0") != 0) {
    log::warn("ply_sh_ignored", {{"path", path.string()},
                                 {"detail", "higher-order SH coefficients present; only the DC term is used"}});
  }
  if (vertex_offset + vertex->count * vertex->stride > bytes.size()) {
    throw Error(ErrorKind::parse, "PLY vertex data truncated");
  }

  GaussianCloud cloud;
  cloud.source_id = path.stem().string();
  cloud.space = activation;
  cloud.gaussians.resize(vertex->count);
  for (std::size_t i = 0; i < vertex->count; ++i) {
    const std::uint8_t* rec = bytes.data() + vertex_offset + i * vertex->stride;
    double v[14];
    for (int k = 0; k < 14; ++k) {
      v[k] = read_scalar(rec + props[k]->offset, props[k]->type);
      if (!std::isfinite(v[k])) {
        throw Error(ErrorKind::data, "record " + std::to_string(i) + ": non-finite value in '" +
                                         kRequired[k] + "'");
      }
    }
    Gaussian g;
    for (int d = 0; d < 3; ++d) {
      g.position[d] = static_cast<float>(v[d]);
      g.albedo[d] = static_cast<float>(v[3 + d]);
      g.scale[d] = static_cast<float>(v[7 + d]);
    }
    g.opacity = static_cast<float>(v[6]);
    for (int d = 0; d < 4; ++d) g.rotation[d] = static_cast<float>(v[10 + d]);
    if (activation == Activation::activated) {
      g = activate(g);
    } else {
      canonicalize_rotation(g.rotation);
    }
    cloud.gaussians[i] = g;
  }
  if (!cloud.empty()) cloud.bounds = compute_bounds(cloud.gaussians);
  return cloud;
}

void save_splat_ply(const GaussianCloud& cloud, const std::filesystem::path& path) {
  std::string header =
      "ply\nformat binary_little_endian 1.0\nelement vertex " + std::to_string(cloud.size()) + "\n";
  for (const char* name : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
                           "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"}) {
    header += std::string("property float ") + name + "\n";
  }
  header += "end_header\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + cloud.size() * 17 * 4);
  for (const Gaussian& original : cloud.gaussians) {
    const Gaussian g = cloud.space == Activation::activated ? deactivate(original) : original;
    for (float v : g.position) container::append_f32(bytes, v);
    for (int k = 0; k < 3; ++k) container::append_f32(bytes, 0.f);
    for (float v : g.albedo) container::append_f32(bytes, v);
    container::append_f32(bytes, g.opacity);
    for (float v : g.scale) container::append_f32(bytes, v);
    for (float v : g.rotation) container::append_f32(bytes, v);
  }
  container::write_file(path, bytes);
}

}  // namespace gatlas
