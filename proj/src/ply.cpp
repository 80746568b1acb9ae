#include "pcqkit/ply.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "pcqkit/error.hpp"

namespace pcqkit {
namespace {

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<ScalarType> parse_scalar_type(const std::string& name) {
  if (name == "char" || name == "int8") return ScalarType::Int8;
  if (name == "uchar" || name == "uint8") return ScalarType::UInt8;
  if (name == "short" || name == "int16") return ScalarType::Int16;
  if (name == "ushort" || name == "uint16") return ScalarType::UInt16;
  if (name == "int" || name == "int32") return ScalarType::Int32;
  if (name == "uint" || name == "uint32") return ScalarType::UInt32;
  if (name == "float" || name == "float32") return ScalarType::Float32;
  if (name == "double" || name == "float64") return ScalarType::Float64;
  return std::nullopt;
}

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::Int8:
    case ScalarType::UInt8: return 1;
    case ScalarType::Int16:
    case ScalarType::UInt16: return 2;
    case ScalarType::Int32:
    case ScalarType::UInt32:
    case ScalarType::Float32: return 4;
    case ScalarType::Float64: return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  ScalarType type = ScalarType::Float32;
  bool is_list = false;
  ScalarType count_type = ScalarType::UInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  bool binary = false;
  std::optional<int> bit_depth;  // from a "comment bit_depth N" line
  std::vector<Element> elements;
};

template <typename T>
double read_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return static_cast<double>(v);
}

double decode(ScalarType t, const char* p) {
  switch (t) {
    case ScalarType::Int8: return read_le<std::int8_t>(p);
    case ScalarType::UInt8: return read_le<std::uint8_t>(p);
    case ScalarType::Int16: return read_le<std::int16_t>(p);
    case ScalarType::UInt16: return read_le<std::uint16_t>(p);
    case ScalarType::Int32: return read_le<std::int32_t>(p);
    case ScalarType::UInt32: return read_le<std::uint32_t>(p);
    case ScalarType::Float32: return read_le<float>(p);
    case ScalarType::Float64: return read_le<double>(p);
  }
  return 0.0;
}

Header parse_header(std::istream& in, const std::string& where) {
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply" || (line.size() > 3 && line[3] != '\r'))
    throw Error(ErrorCode::MalformedHeader, where + ": missing 'ply' magic");

  Header header;
  bool have_format = false;
  bool ended = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string keyword;
    ls >> keyword;
    if (keyword == "comment") {
      std::string tag;
      int depth = 0;
      if (ls >> tag >> depth && tag == "bit_depth" && depth >= 1 && depth <= 32) header.bit_depth = depth;
      continue;
    }
    if (keyword.empty() || keyword == "obj_info") continue;
    if (keyword == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii") {
        header.binary = false;
      } else if (fmt == "binary_little_endian") {
        header.binary = true;
      } else if (fmt == "binary_big_endian") {
        throw Error(ErrorCode::UnsupportedFormat, where + ": big-endian PLY is not supported");
      } else {
        throw Error(ErrorCode::MalformedHeader, where + ": unknown format '" + fmt + "'");
      }
      if (version != "1.0") throw Error(ErrorCode::UnsupportedFormat, where + ": PLY version " + version);
      have_format = true;
    } else if (keyword == "element") {
      Element e;
      long long count = -1;
      ls >> e.name >> count;
      if (e.name.empty() || count < 0) throw Error(ErrorCode::MalformedHeader, where + ": bad element line '" + line + "'");
      e.count = static_cast<std::size_t>(count);
      header.elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (header.elements.empty())
        throw Error(ErrorCode::MalformedHeader, where + ": property before any element");
      Property prop;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type >> prop.name;
        auto ct = parse_scalar_type(count_type);
        auto it = parse_scalar_type(item_type);
        if (!ct || !it) throw Error(ErrorCode::MalformedHeader, where + ": bad list property '" + line + "'");
        prop.is_list = true;
        prop.count_type = *ct;
        prop.type = *it;
      } else {
        auto t = parse_scalar_type(type);
        if (!t) throw Error(ErrorCode::MalformedHeader, where + ": unknown property type '" + type + "'");
        prop.type = *t;
        ls >> prop.name;
      }
      if (prop.name.empty()) throw Error(ErrorCode::MalformedHeader, where + ": unnamed property");
      header.elements.back().properties.push_back(std::move(prop));
    } else if (keyword == "end_header") {
      ended = true;
      break;
    } else {
      throw Error(ErrorCode::MalformedHeader, where + ": unexpected header line '" + line + "'");
    }
  }
  if (!have_format) throw Error(ErrorCode::MalformedHeader, where + ": missing format line");
  if (!ended) throw Error(ErrorCode::MalformedHeader, where + ": missing end_header");
  return header;
}

// Column slots of the vertex properties we keep; -1 when absent.
struct VertexLayout {
  std::array<int, 3> xyz{-1, -1, -1};
  std::array<int, 3> rgb{-1, -1, -1};
  std::array<int, 3> normal{-1, -1, -1};
};

VertexLayout layout_for(const Element& vertex, const std::string& where) {
  VertexLayout layout;
  const std::array<const char*, 3> xyz_names{"x", "y", "z"};
  const std::array<const char*, 3> rgb_names{"red", "green", "blue"};
  const std::array<const char*, 3> normal_names{"nx", "ny", "nz"};
  for (int i = 0; i < static_cast<int>(vertex.properties.size()); ++i) {
    const auto& prop = vertex.properties[i];
    for (int c = 0; c < 3; ++c) {
      if (prop.is_list) continue;
      if (prop.name == xyz_names[c]) layout.xyz[c] = i;
      if (prop.name == rgb_names[c]) layout.rgb[c] = i;
      if (prop.name == normal_names[c]) layout.normal[c] = i;
    }
  }
  for (int c : layout.xyz)
    if (c < 0) throw Error(ErrorCode::MalformedHeader, where + ": vertex element lacks x/y/z");
  return layout;
}

bool all_present(const std::array<int, 3>& slots) {
  return std::all_of(slots.begin(), slots.end(), [](int s) { return s >= 0; });
}

std::uint8_t to_color_channel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

class BinaryCursor {
 public:
  BinaryCursor(const std::vector<char>& data, const std::string& where) : data_(data), where_(where) {}

  bool can_read(std::size_t bytes) const { return pos_ + bytes <= data_.size(); }

  double scalar(ScalarType t) {
    const auto sz = scalar_size(t);
    if (!can_read(sz)) throw Error(ErrorCode::CountMismatch, where_ + ": file ends inside element data");
    double v = decode(t, data_.data() + pos_);
    pos_ += sz;
    return v;
  }

  void skip(std::size_t bytes) {
    if (!can_read(bytes)) throw Error(ErrorCode::CountMismatch, where_ + ": file ends inside element data");
    pos_ += bytes;
  }

 private:
  const std::vector<char>& data_;
  const std::string& where_;
  std::size_t pos_ = 0;
};

void finish_cloud(PointCloud& cloud, std::optional<int> bit_depth) {
  if (cloud.normals) {
    for (auto& n : *cloud.normals) {
      const double len = n.norm();
      n = len > 0.0 ? Vec3(n / len) : Vec3(0.0, 0.0, 1.0);
    }
  }
  if (bit_depth) {
    cloud.bit_depth = *bit_depth;
    cloud.bit_depth_inferred = false;
  } else {
    cloud.bit_depth = infer_bit_depth(cloud);
    cloud.bit_depth_inferred = true;
  }
}

}  // namespace

PointCloud load_ply(const std::filesystem::path& path, std::optional<int> bit_depth) {
  const std::string where = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + where);

  const Header header = parse_header(in, where);
  auto vertex_it = std::find_if(header.elements.begin(), header.elements.end(),
                                [](const Element& e) { return e.name == "vertex"; });
  if (vertex_it == header.elements.end()) throw Error(ErrorCode::MalformedHeader, where + ": no vertex element");
  const Element& vertex = *vertex_it;
  const VertexLayout layout = layout_for(vertex, where);
  const bool with_colors = all_present(layout.rgb);
  const bool with_normals = all_present(layout.normal);

  PointCloud cloud;
  cloud.positions.reserve(vertex.count);
  if (with_colors) cloud.colors.emplace().reserve(vertex.count);
  if (with_normals) cloud.normals.emplace().reserve(vertex.count);

  std::vector<double> row(vertex.properties.size());
  auto store_row = [&]() {
    cloud.positions.emplace_back(row[layout.xyz[0]], row[layout.xyz[1]], row[layout.xyz[2]]);
    if (with_colors)
      cloud.colors->push_back({to_color_channel(row[layout.rgb[0]]), to_color_channel(row[layout.rgb[1]]),
                               to_color_channel(row[layout.rgb[2]])});
    if (with_normals) cloud.normals->emplace_back(row[layout.normal[0]], row[layout.normal[1]], row[layout.normal[2]]);
  };

  if (header.binary) {
    std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    BinaryCursor cur(data, where);
    for (const auto& element : header.elements) {
      const bool is_vertex = &element == &vertex;
      for (std::size_t r = 0; r < element.count; ++r) {
        if (is_vertex && !cur.can_read(1))
          throw Error(ErrorCode::CountMismatch, where + ": declared " + std::to_string(vertex.count) +
                                                    " vertices, found " + std::to_string(r));
        for (std::size_t k = 0; k < element.properties.size(); ++k) {
          const auto& prop = element.properties[k];
          if (prop.is_list) {
            const auto items = static_cast<std::size_t>(cur.scalar(prop.count_type));
            cur.skip(items * scalar_size(prop.type));
            if (is_vertex) row[k] = 0.0;
          } else if (is_vertex) {
            row[k] = cur.scalar(prop.type);
          } else {
            cur.skip(scalar_size(prop.type));
          }
        }
        if (is_vertex) store_row();
      }
      if (is_vertex) break;
    }
  } else {
    std::string token;
    auto next_number = [&](std::size_t parsed_rows) {
      if (!(in >> token))
        throw Error(ErrorCode::CountMismatch, where + ": declared " + std::to_string(vertex.count) +
                                                  " vertices, found " + std::to_string(parsed_rows));
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || ptr != token.data() + token.size())
        throw Error(ErrorCode::MalformedHeader, where + ": bad numeric token '" + token + "'");
      return v;
    };
    for (const auto& element : header.elements) {
      const bool is_vertex = &element == &vertex;
      for (std::size_t r = 0; r < element.count; ++r) {
        for (std::size_t k = 0; k < element.properties.size(); ++k) {
          const auto& prop = element.properties[k];
          if (prop.is_list) {
            const auto items = static_cast<std::size_t>(next_number(r));
            for (std::size_t i = 0; i < items; ++i) next_number(r);
            if (is_vertex) row[k] = 0.0;
          } else {
            const double v = next_number(r);
            if (is_vertex) row[k] = v;
          }
        }
        if (is_vertex) store_row();
      }
      if (is_vertex) break;
    }
  }

  if (cloud.positions.size() != vertex.count)
    throw Error(ErrorCode::CountMismatch, where + ": vertex count mismatch");
  finish_cloud(cloud, bit_depth ? bit_depth : header.bit_depth);
  return cloud;
}

void save_ply(const PointCloud& cloud, const std::filesystem::path& path, bool binary) {
  validate(cloud);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");

  out << "ply\n"
      << "format " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
      << "comment bit_depth " << cloud.bit_depth << "\n"
      << "element vertex " << cloud.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.colors) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (cloud.normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
  out << "end_header\n";

  if (binary) {
    std::vector<char> buf;
    buf.reserve(cloud.size() * 51);
    auto put = [&buf](const void* p, std::size_t n) {
      const char* c = static_cast<const char*>(p);
      buf.insert(buf.end(), c, c + n);
    };
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      put(cloud.positions[i].data(), 3 * sizeof(double));
      if (cloud.colors) put((*cloud.colors)[i].data(), 3);
      if (cloud.normals) put((*cloud.normals)[i].data(), 3 * sizeof(double));
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  } else {
    char num[32];
    auto put = [&](double v) {
      auto [ptr, ec] = std::to_chars(num, num + sizeof(num), v);
      out.write(num, ptr - num);
    };
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const auto& p = cloud.positions[i];
      put(p.x());
      out << ' ';
      put(p.y());
      out << ' ';
      put(p.z());
      if (cloud.colors) {
        const auto& c = (*cloud.colors)[i];
        out << ' ' << int(c[0]) << ' ' << int(c[1]) << ' ' << int(c[2]);
      }
      if (cloud.normals) {
        const auto& n = (*cloud.normals)[i];
        out << ' ';
        put(n.x());
        out << ' ';
        put(n.y());
        out << ' ';
        put(n.z());
      }
      out << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace pcqkit
