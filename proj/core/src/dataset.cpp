#include "ttrf/dataset.hpp"

#include "ttrf/error.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>

namespace ttrf {

namespace {

using nlohmann::json;

Eigen::Matrix4d parse_matrix(const json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorCode::ParseError, "transform_matrix must be 4x4");
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != 4) throw Error(ErrorCode::ParseError, "transform_matrix must be 4x4");
    for (int c = 0; c < 4; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace

std::vector<View> load_transforms_file(const std::filesystem::path& file, bool images) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::MissingImage, "cannot open " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, file.string() + ": " + e.what());
  }
  std::vector<View> views;
  try {
    const double angle = doc.at("camera_angle_x").get<double>();
    const auto base = file.parent_path();
    for (const json& frame : doc.at("frames")) {
      View v;
      std::filesystem::path rel = frame.at("file_path").get<std::string>();
      if (!rel.has_extension()) rel += ".png";
      v.name = rel.stem().string();
      const Eigen::Matrix4d pose = parse_matrix(frame.at("transform_matrix"));
      int w = doc.value("w", 0);
      int h = doc.value("h", 0);
      if (images || w <= 0 || h <= 0) {
        Image img = read_png((base / rel).lexically_normal());
        w = img.width;
        h = img.height;
        if (images) v.image = std::move(img);
      }
      v.camera = Camera::from_fov(angle, w, h, pose);
      views.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, file.string() + ": " + e.what());
  }
  return views;
}

Dataset load_nerf_transforms(const std::filesystem::path& dir) {
  Dataset ds;
  const auto train = dir / "transforms_train.json";
  if (!std::filesystem::exists(train)) throw Error(ErrorCode::ParseError, "missing " + train.string());
  ds.train = load_transforms_file(train);
  for (const char* name : {"transforms_test.json", "transforms_val.json"}) {
    if (std::filesystem::exists(dir / name)) {
      ds.test = load_transforms_file(dir / name);
      break;
    }
  }
  return ds;
}

void write_transforms_file(const std::filesystem::path& file, double camera_angle_x, const std::vector<View>& views) {
  json doc;
  doc["camera_angle_x"] = camera_angle_x;
  if (!views.empty()) {
    doc["w"] = views.front().camera.width;
    doc["h"] = views.front().camera.height;
  }
  json frames = json::array();
  const std::string split = file.stem().string().substr(std::string("transforms_").size());
  for (const View& v : views) {
    json m = json::array();
    for (int r = 0; r < 4; ++r) {
      json row = json::array();
      for (int c = 0; c < 4; ++c) row.push_back(v.camera.pose(r, c));
      m.push_back(row);
    }
    frames.push_back({{"file_path", "./" + split + "/" + v.name}, {"transform_matrix", m}});
  }
  doc["frames"] = frames;
  std::ofstream out(file);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + file.string());
  out << doc.dump(2) << '\n';
}

}  // namespace ttrf
