#include "ttrf/checkpoint.hpp"

#include "ttrf/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace ttrf {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  [[nodiscard]] const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string data, std::string tag) : data_(std::move(data)), tag_(std::move(tag)) {}

  template <typename T>
  T get() {
    T v{};
    bytes(&v, sizeof(T));
    return v;
  }
  void bytes(void* p, std::size_t n) {
    if (n > data_.size() - pos_) throw Error(ErrorCode::ParseError, "checkpoint section " + tag_ + " truncated");
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  void expect_end() const {
    if (pos_ != data_.size()) throw Error(ErrorCode::ParseError, "checkpoint section " + tag_ + " has trailing bytes");
  }
  [[nodiscard]] const std::string& data() const { return data_; }

 private:
  std::string data_;
  std::string tag_;
  std::size_t pos_ = 0;
};

void write_section(std::ostream& out, const char (&tag)[5], const std::string& payload) {
  out.write(tag, 4);
  const std::uint64_t n = payload.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

template <typename F>
void for_each_tensor(MlpParams<float>& p, F&& f) {
  p.for_each(std::forward<F>(f));
}

}  // namespace

void write_checkpoint(std::ostream& out, const TrainState& s) {
  out.write("TTRF", 4);
  const std::uint32_t version = kCheckpointVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof version);

  write_section(out, "CONF", serialize_config(s.config));

  {
    Writer w;
    w.put<std::uint64_t>(static_cast<std::uint64_t>(s.step));
    w.put<std::uint64_t>(mesh_hash(s.mesh));
    write_section(out, "META", w.str());
  }
  {
    Writer w;
    w.put<std::uint64_t>(s.mesh.vertices.size());
    for (const Point3& p : s.mesh.vertices) {
      for (int a = 0; a < 3; ++a) w.put<double>(p[a]);
    }
    w.put<std::uint64_t>(s.mesh.tets.size());
    for (const Tetra& t : s.mesh.tets) {
      for (int i = 0; i < 4; ++i) w.put<std::uint32_t>(t[i]);
    }
    write_section(out, "MESH", w.str());
  }
  {
    Writer w;
    w.put<std::uint64_t>(static_cast<std::uint64_t>(s.field.features.rows()));
    w.put<std::uint64_t>(static_cast<std::uint64_t>(s.field.features.cols()));
    w.bytes(s.field.features.data(), static_cast<std::size_t>(s.field.features.size()) * sizeof(float));
    write_section(out, "FEAT", w.str());
  }
  {
    Writer w;
    auto& params = const_cast<MlpParams<float>&>(s.mlp.params());
    w.put<std::uint32_t>(8);
    for_each_tensor(params, [&](std::string_view name, float* data, Eigen::Index, Eigen::Index rows, Eigen::Index cols) {
      w.put<std::uint8_t>(static_cast<std::uint8_t>(name.size()));
      w.bytes(name.data(), name.size());
      w.put<std::uint64_t>(static_cast<std::uint64_t>(rows));
      w.put<std::uint64_t>(static_cast<std::uint64_t>(cols));
      // Row-major on disk; Eigen storage is column-major.
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) w.put<float>(data[c * rows + r]);
      }
    });
    write_section(out, "MLP_", w.str());
  }
  {
    Writer w;
    w.put<std::uint8_t>(s.optimizer.kind() == OptimizerKind::RAdam ? 0 : 1);
    w.put<std::int64_t>(s.optimizer.step_count());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.optimizer.slots().size()));
    for (const auto& slot : s.optimizer.slots()) {
      w.put<std::uint64_t>(slot.m.size());
      w.bytes(slot.m.data(), slot.m.size() * sizeof(float));
      w.bytes(slot.v.data(), slot.v.size() * sizeof(float));
    }
    write_section(out, "MOMS", w.str());
  }
  if (!out) throw Error(ErrorCode::IoError, "checkpoint write failed");
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_checkpoint(out, state);
}

TrainState read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "TTRF", 4) != 0) throw Error(ErrorCode::ParseError, "not a checkpoint");
  std::uint32_t version = 0;
  if (!in.read(reinterpret_cast<char*>(&version), sizeof version)) throw Error(ErrorCode::ParseError, "truncated header");
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::ParseError, "unsupported checkpoint version " + std::to_string(version));
  }

  std::map<std::string, std::string> sections;
  for (;;) {
    char tag[4];
    in.read(tag, 4);
    if (in.gcount() == 0 && in.eof()) break;
    if (in.gcount() != 4) throw Error(ErrorCode::ParseError, "truncated section header");
    std::uint64_t n = 0;
    if (!in.read(reinterpret_cast<char*>(&n), sizeof n)) throw Error(ErrorCode::ParseError, "truncated section header");
    std::string payload(n, '\0');
    if (n > 0 && !in.read(payload.data(), static_cast<std::streamsize>(n))) {
      throw Error(ErrorCode::ParseError, "truncated section " + std::string(tag, 4));
    }
    sections[std::string(tag, 4)] = std::move(payload);
  }
  auto section = [&](const char* tag) {
    auto it = sections.find(tag);
    if (it == sections.end()) throw Error(ErrorCode::ParseError, std::string("missing checkpoint section ") + tag);
    return Reader(it->second, tag);
  };

  TrainState s;
  s.config = parse_config(section("CONF").data());
  s.config.validate();

  Reader meta = section("META");
  s.step = static_cast<std::int64_t>(meta.get<std::uint64_t>());
  const auto expected_hash = meta.get<std::uint64_t>();
  meta.expect_end();

  Reader mesh = section("MESH");
  const auto nv = mesh.get<std::uint64_t>();
  s.mesh.vertices.resize(nv);
  for (auto& p : s.mesh.vertices) {
    for (int a = 0; a < 3; ++a) p[a] = mesh.get<double>();
  }
  const auto nt = mesh.get<std::uint64_t>();
  s.mesh.tets.resize(nt);
  for (auto& t : s.mesh.tets) {
    for (auto& v : t.v) {
      v = mesh.get<std::uint32_t>();
      if (v >= nv) throw Error(ErrorCode::ParseError, "checkpoint mesh references a missing vertex");
    }
  }
  mesh.expect_end();
  rebuild_adjacency(s.mesh);
  if (mesh_hash(s.mesh) != expected_hash) throw Error(ErrorCode::ParseError, "checkpoint mesh hash mismatch");

  Reader feat = section("FEAT");
  const auto rows = static_cast<Eigen::Index>(feat.get<std::uint64_t>());
  const auto cols = static_cast<Eigen::Index>(feat.get<std::uint64_t>());
  if (static_cast<std::uint64_t>(rows) != nv || cols != s.config.feature_dim) {
    throw Error(ErrorCode::ParseError, "checkpoint feature shape does not match mesh/config");
  }
  s.field = FeatureField<float>(rows, cols);
  feat.bytes(s.field.features.data(), static_cast<std::size_t>(rows * cols) * sizeof(float));
  feat.expect_end();

  s.mlp = RadianceMlp<float>(s.config.mlp_shape());
  Reader mlp = section("MLP_");
  if (mlp.get<std::uint32_t>() != 8) throw Error(ErrorCode::ParseError, "checkpoint network tensor count");
  for_each_tensor(s.mlp.params(), [&](std::string_view name, float* data, Eigen::Index, Eigen::Index r, Eigen::Index c) {
    const auto len = mlp.get<std::uint8_t>();
    std::string got(len, '\0');
    mlp.bytes(got.data(), len);
    const auto fr = mlp.get<std::uint64_t>();
    const auto fc = mlp.get<std::uint64_t>();
    if (got != name || fr != static_cast<std::uint64_t>(r) || fc != static_cast<std::uint64_t>(c)) {
      throw Error(ErrorCode::ParseError, "checkpoint tensor " + got + " does not match the configured network");
    }
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index j = 0; j < c; ++j) data[j * r + i] = mlp.get<float>();
    }
  });
  mlp.expect_end();

  Reader moms = section("MOMS");
  const auto kind = moms.get<std::uint8_t>() == 0 ? OptimizerKind::RAdam : OptimizerKind::Adam;
  s.optimizer = Optimizer<float>(kind, s.config.beta1, s.config.beta2, s.config.eps);
  s.optimizer.set_step_count(moms.get<std::int64_t>());
  const auto nslots = moms.get<std::uint32_t>();
  s.optimizer.slots().resize(nslots);
  for (auto& slot : s.optimizer.slots()) {
    const auto n = moms.get<std::uint64_t>();
    slot.m.resize(n);
    slot.v.resize(n);
    moms.bytes(slot.m.data(), n * sizeof(float));
    moms.bytes(slot.v.data(), n * sizeof(float));
  }
  moms.expect_end();
  return s;
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace ttrf
