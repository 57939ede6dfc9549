#include "ttrf/image.hpp"

#include "ttrf/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace ttrf {

Eigen::Vector3d Image::rgb_over(int x, int y, const Eigen::Vector3d& background) const {
  const float* p = at(x, y);
  const double a = p[3];
  return Eigen::Vector3d(p[0], p[1], p[2]) * a + background * (1.0 - a);
}

Image Image::composited(const Eigen::Vector3d& background) const {
  Image out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Eigen::Vector3d c = rgb_over(x, y, background);
      float* q = out.at(x, y);
      for (int k = 0; k < 3; ++k) q[k] = static_cast<float>(c[k]);
      q[3] = 1.0f;
    }
  }
  return out;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

}  // namespace

Image read_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorCode::MissingImage, "cannot open " + path.string());

  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_stdio(&img, file.get()) == 0) {
    throw Error(ErrorCode::IoError, path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGBA;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr) == 0) {
    png_image_free(&img);
    throw Error(ErrorCode::IoError, path.string() + ": " + img.message);
  }
  Image out(static_cast<int>(img.width), static_cast<int>(img.height));
  for (std::size_t i = 0; i < buf.size(); ++i) out.data[i] = static_cast<float>(buf[i]) / 255.0f;
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image, bool with_alpha) {
  const int channels = with_alpha ? 4 : 3;
  std::vector<png_byte> buf(image.pixels() * static_cast<std::size_t>(channels));
  for (std::size_t i = 0; i < image.pixels(); ++i) {
    for (int k = 0; k < channels; ++k) {
      const float v = std::clamp(image.data[i * 4 + static_cast<std::size_t>(k)], 0.0f, 1.0f);
      buf[i * static_cast<std::size_t>(channels) + static_cast<std::size_t>(k)] =
          static_cast<png_byte>(std::lround(v * 255.0f));
    }
  }
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = with_alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  if (png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr) == 0) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string() + ": " + img.message);
  }
}

}  // namespace ttrf
