#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <vector>

namespace ttrf {

/// RGBA float image, row-major, channels interleaved, values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, float fill = 0.0f) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 4, fill) {}

  [[nodiscard]] std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  float* at(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 4; }
  [[nodiscard]] const float* at(int x, int y) const { return data.data() + (static_cast<std::size_t>(y) * width + x) * 4; }

  /// RGB composited over `background` using the alpha channel.
  [[nodiscard]] Eigen::Vector3d rgb_over(int x, int y, const Eigen::Vector3d& background) const;
  /// Copy with RGB composited over `background` and alpha set to 1.
  [[nodiscard]] Image composited(const Eigen::Vector3d& background) const;
};

/// 8-bit PNG (gray, gray+alpha, RGB or RGBA) decoded to [0, 1]; 16-bit input is
/// reduced to 8 bits. Throws MissingImage or IoError.
Image read_png(const std::filesystem::path& path);

/// 8-bit RGBA (or RGB when `with_alpha` is false) PNG.
void write_png(const std::filesystem::path& path, const Image& image, bool with_alpha = true);

}  // namespace ttrf
