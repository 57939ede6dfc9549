#pragma once

#include "ttrf/camera.hpp"
#include "ttrf/image.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ttrf {

struct View {
  std::string name;
  Camera camera;
  Image image;
};

struct Dataset {
  std::vector<View> train;
  std::vector<View> test;
};

/// Blender-style scene: `transforms_train.json` (required) and
/// `transforms_test.json` (optional, `transforms_val.json` as fallback), each
/// with `camera_angle_x` and `frames[].{file_path, transform_matrix}`. File
/// paths without an extension get ".png". Throws ParseError or MissingImage.
Dataset load_nerf_transforms(const std::filesystem::path& dir);

/// Reads one transforms file. With `images` false the images are left empty;
/// camera sizes then come from the `w`/`h` keys, or from the image file when
/// those keys are absent.
std::vector<View> load_transforms_file(const std::filesystem::path& file, bool images = true);

/// Writes a transforms file for views whose images live at `<dir>/<name>.png`.
void write_transforms_file(const std::filesystem::path& file, double camera_angle_x, const std::vector<View>& views);

}  // namespace ttrf
