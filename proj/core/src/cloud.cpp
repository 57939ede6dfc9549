#include "ttrf/cloud.hpp"

#include "ttrf/error.hpp"
#include "ttrf/knn.hpp"
#include "ttrf/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>

namespace ttrf {

std::size_t PointCloud::original_count() const {
  return static_cast<std::size_t>(std::count(synthetic.begin(), synthetic.end(), std::uint8_t{0}));
}

namespace {

enum class Scalar { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<Scalar> parse_scalar(const std::string& name) {
  if (name == "char" || name == "int8") return Scalar::Int8;
  if (name == "uchar" || name == "uint8") return Scalar::UInt8;
  if (name == "short" || name == "int16") return Scalar::Int16;
  if (name == "ushort" || name == "uint16") return Scalar::UInt16;
  if (name == "int" || name == "int32") return Scalar::Int32;
  if (name == "uint" || name == "uint32") return Scalar::UInt32;
  if (name == "float" || name == "float32") return Scalar::Float32;
  if (name == "double" || name == "float64") return Scalar::Float64;
  return std::nullopt;
}

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::Int8:
    case Scalar::UInt8: return 1;
    case Scalar::Int16:
    case Scalar::UInt16: return 2;
    case Scalar::Int32:
    case Scalar::UInt32:
    case Scalar::Float32: return 4;
    case Scalar::Float64: return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  Scalar type = Scalar::Float32;
  bool is_list = false;
  Scalar count_type = Scalar::UInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

class Body {
 public:
  Body(std::string data, std::size_t offset) : data_(std::move(data)), pos_(offset) {}

  [[nodiscard]] std::size_t offset() const { return pos_; }

  double read_binary(Scalar s) {
    const std::size_t n = scalar_size(s);
    if (pos_ + n > data_.size()) fail("unexpected end of binary data");
    const char* p = data_.data() + pos_;
    pos_ += n;
    switch (s) {
      case Scalar::Int8: return load<std::int8_t>(p);
      case Scalar::UInt8: return load<std::uint8_t>(p);
      case Scalar::Int16: return load<std::int16_t>(p);
      case Scalar::UInt16: return load<std::uint16_t>(p);
      case Scalar::Int32: return load<std::int32_t>(p);
      case Scalar::UInt32: return load<std::uint32_t>(p);
      case Scalar::Float32: return load<float>(p);
      case Scalar::Float64: return load<double>(p);
    }
    return 0.0;
  }

  double read_ascii() {
    while (pos_ < data_.size() && std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
    if (pos_ >= data_.size()) fail("unexpected end of ascii data");
    const char* begin = data_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ParseError, what + " at byte " + std::to_string(pos_));
  }

 private:
  template <typename T>
  static double load(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));  // host is little-endian
    return static_cast<double>(v);
  }

  std::string data_;
  std::size_t pos_;
};

}  // namespace

PointCloud parse_ply(std::istream& in) {
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    if (pos >= data.size()) {
      throw Error(ErrorCode::ParseError, "header not terminated at byte " + std::to_string(pos));
    }
    const std::size_t eol = data.find('\n', pos);
    std::string line = data.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    pos = eol == std::string::npos ? data.size() : eol + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };

  if (next_line() != "ply") throw Error(ErrorCode::ParseError, "missing ply magic at byte 0");
  bool binary = false;
  bool have_format = false;
  std::vector<Element> elements;
  for (;;) {
    const std::size_t line_start = pos;
    const std::string line = next_line();
    std::istringstream ss(line);
    std::string keyword;
    ss >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "end_header") break;
    if (keyword == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "ascii") {
        binary = false;
      } else if (fmt == "binary_little_endian") {
        binary = true;
      } else {
        throw Error(ErrorCode::UnsupportedProperty, "unsupported PLY format '" + fmt + "'");
      }
      have_format = true;
    } else if (keyword == "element") {
      Element e;
      long long count = -1;
      ss >> e.name >> count;
      if (!ss || count < 0) {
        throw Error(ErrorCode::ParseError, "bad element line at byte " + std::to_string(line_start));
      }
      e.count = static_cast<std::size_t>(count);
      elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (elements.empty()) {
        throw Error(ErrorCode::ParseError, "property before element at byte " + std::to_string(line_start));
      }
      Property prop;
      std::string type;
      ss >> type;
      if (type == "list") {
        std::string count_type;
        std::string item_type;
        ss >> count_type >> item_type >> prop.name;
        const auto ct = parse_scalar(count_type);
        const auto it = parse_scalar(item_type);
        if (!ct || !it) {
          throw Error(ErrorCode::UnsupportedProperty, "unknown list type at byte " + std::to_string(line_start));
        }
        prop.is_list = true;
        prop.count_type = *ct;
        prop.type = *it;
      } else {
        ss >> prop.name;
        const auto t = parse_scalar(type);
        if (!t) {
          throw Error(ErrorCode::UnsupportedProperty,
                      "unknown property type '" + type + "' at byte " + std::to_string(line_start));
        }
        prop.type = *t;
      }
      if (prop.name.empty()) {
        throw Error(ErrorCode::ParseError, "unnamed property at byte " + std::to_string(line_start));
      }
      elements.back().properties.push_back(prop);
    } else {
      throw Error(ErrorCode::ParseError,
                  "unknown header keyword '" + keyword + "' at byte " + std::to_string(line_start));
    }
  }
  if (!have_format) throw Error(ErrorCode::ParseError, "missing format line");

  PointCloud cloud;
  Body body(std::move(data), pos);
  for (const Element& e : elements) {
    const bool is_vertex = e.name == "vertex";
    int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
    if (is_vertex) {
      for (std::size_t k = 0; k < e.properties.size(); ++k) {
        const auto& p = e.properties[k];
        const int idx = static_cast<int>(k);
        auto need_float = [&] {
          if (p.is_list || (p.type != Scalar::Float32 && p.type != Scalar::Float64)) {
            throw Error(ErrorCode::UnsupportedProperty, "property '" + p.name + "' must be float or double");
          }
        };
        auto need_uchar = [&] {
          if (p.is_list || p.type != Scalar::UInt8) {
            throw Error(ErrorCode::UnsupportedProperty, "property '" + p.name + "' must be uchar");
          }
        };
        if (p.name == "x") { need_float(); ix = idx; }
        else if (p.name == "y") { need_float(); iy = idx; }
        else if (p.name == "z") { need_float(); iz = idx; }
        else if (p.name == "red") { need_uchar(); ir = idx; }
        else if (p.name == "green") { need_uchar(); ig = idx; }
        else if (p.name == "blue") { need_uchar(); ib = idx; }
      }
      if (ix < 0 || iy < 0 || iz < 0) {
        throw Error(ErrorCode::UnsupportedProperty, "vertex element lacks x/y/z");
      }
      cloud.positions.reserve(e.count);
    }
    const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;
    std::vector<double> values(e.properties.size());
    for (std::size_t row = 0; row < e.count; ++row) {
      for (std::size_t k = 0; k < e.properties.size(); ++k) {
        const auto& p = e.properties[k];
        if (p.is_list) {
          const double n = binary ? body.read_binary(p.count_type) : body.read_ascii();
          if (n < 0) body.fail("negative list length");
          for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) {
            binary ? body.read_binary(p.type) : body.read_ascii();
          }
          values[k] = 0.0;
        } else {
          values[k] = binary ? body.read_binary(p.type) : body.read_ascii();
        }
      }
      if (!is_vertex) continue;
      const Point3 pos3(values[static_cast<std::size_t>(ix)], values[static_cast<std::size_t>(iy)],
                        values[static_cast<std::size_t>(iz)]);
      if (!pos3.allFinite()) body.fail("non-finite vertex position");
      Rgba c{1.0f, 1.0f, 1.0f, 1.0f};
      if (has_color) {
        c = {static_cast<float>(values[static_cast<std::size_t>(ir)] / 255.0),
             static_cast<float>(values[static_cast<std::size_t>(ig)] / 255.0),
             static_cast<float>(values[static_cast<std::size_t>(ib)] / 255.0), 1.0f};
      }
      cloud.push_back(pos3, c);
    }
  }
  return cloud;
}

PointCloud load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return parse_ply(in);
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud, PlyEncoding encoding) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "ply\nformat " << (encoding == PlyEncoding::Ascii ? "ascii" : "binary_little_endian")
      << " 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  auto to_byte = [](float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
  };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::array<float, 3> xyz{static_cast<float>(cloud.positions[i][0]),
                                   static_cast<float>(cloud.positions[i][1]),
                                   static_cast<float>(cloud.positions[i][2])};
    const std::array<std::uint8_t, 3> rgb{to_byte(cloud.colors[i][0]), to_byte(cloud.colors[i][1]),
                                          to_byte(cloud.colors[i][2])};
    if (encoding == PlyEncoding::Ascii) {
      out.precision(9);
      out << xyz[0] << ' ' << xyz[1] << ' ' << xyz[2] << ' ' << int{rgb[0]} << ' ' << int{rgb[1]} << ' '
          << int{rgb[2]} << '\n';
    } else {
      out.write(reinterpret_cast<const char*>(xyz.data()), sizeof xyz);
      out.write(reinterpret_cast<const char*>(rgb.data()), sizeof rgb);
    }
  }
}

PointCloud load_xyzrgb(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  PointCloud cloud;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::istringstream ss(line);
    double x, y, z, r, g, b;
    if (!(ss >> x >> y >> z >> r >> g >> b)) {
      throw Error(ErrorCode::ParseError, "bad xyzrgb record on line " + std::to_string(lineno));
    }
    cloud.push_back(Point3(x, y, z), Rgba{static_cast<float>(r / 255.0), static_cast<float>(g / 255.0),
                                          static_cast<float>(b / 255.0), 1.0f});
  }
  return cloud;
}

double average_spacing(const PointCloud& cloud, std::size_t k) {
  if (cloud.size() < k + 1) {
    throw Error(ErrorCode::TooFewPoints, "average spacing needs at least " + std::to_string(k + 1) + " points");
  }
  const KdTree tree(cloud.positions);
  double total = 0.0;
  for (std::uint32_t i = 0; i < cloud.size(); ++i) {
    const auto nn = tree.nearest(cloud.positions[i], k, i);
    double sum = 0.0;
    for (const auto& [d2, idx] : nn) sum += std::sqrt(d2);
    total += sum / static_cast<double>(k);
  }
  return total / static_cast<double>(cloud.size());
}

PointCloud subsample(const PointCloud& cloud, std::size_t max_points, std::uint64_t seed) {
  if (max_points == 0) throw Error(ErrorCode::InvalidArgument, "max_points must be >= 1");
  if (cloud.size() <= max_points) return cloud;
  std::vector<std::uint32_t> idx(cloud.size());
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng = make_rng(seed, 0x5b5a);
  for (std::size_t i = 0; i < max_points; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(max_points);
  std::sort(idx.begin(), idx.end());
  PointCloud out;
  for (std::uint32_t i : idx) out.push_back(cloud.positions[i], cloud.colors[i], cloud.synthetic[i] != 0);
  return out;
}

PointCloud augment_random_points(const PointCloud& cloud, double ratio, std::uint64_t seed) {
  if (cloud.empty()) throw Error(ErrorCode::TooFewPoints, "cannot augment an empty cloud");
  if (!(ratio >= 0.0)) throw Error(ErrorCode::InvalidArgument, "augmentation ratio must be >= 0");

  PointCloud originals;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!cloud.synthetic[i]) originals.push_back(cloud.positions[i], cloud.colors[i]);
  }
  const auto count = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(originals.size())));
  PointCloud out = cloud;
  if (count == 0) return out;

  const double spacing = average_spacing(originals);
  Rng rng = make_rng(seed, 0xa09e);
  std::uniform_int_distribution<std::size_t> pick(0, originals.size() - 1);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> offset(spacing, spacing);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = pick(rng);
    Vec3 n;
    do {
      n = Vec3(unit(rng), unit(rng), unit(rng));
    } while (n.squaredNorm() < 1e-20);
    n.normalize();
    const double alpha = offset(rng);
    const Rgba& base = originals.colors[i];
    out.push_back(originals.positions[i] + alpha * n, Rgba{base[0], base[1], base[2], 0.0f}, true);
  }
  return out;
}

}  // namespace ttrf
