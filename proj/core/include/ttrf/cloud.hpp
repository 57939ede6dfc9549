#pragma once

#include "ttrf/geometry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace ttrf {

using Rgba = std::array<float, 4>;

/// Input point cloud. Original points carry alpha 1, synthetic ones alpha 0.
struct PointCloud {
  std::vector<Point3> positions;
  std::vector<Rgba> colors;
  std::vector<std::uint8_t> synthetic;

  [[nodiscard]] std::size_t size() const { return positions.size(); }
  [[nodiscard]] bool empty() const { return positions.empty(); }
  [[nodiscard]] std::size_t original_count() const;

  void push_back(const Point3& p, const Rgba& c, bool is_synthetic = false) {
    positions.push_back(p);
    colors.push_back(c);
    synthetic.push_back(is_synthetic ? 1 : 0);
  }
};

/// Reads ascii or binary_little_endian PLY with float/double x, y, z and
/// optional uchar red, green, blue. Colours are rescaled to [0, 1] (white when
/// absent) and alpha is forced to 1.
PointCloud load_ply(const std::filesystem::path& path);
PointCloud parse_ply(std::istream& in);

enum class PlyEncoding { Ascii, BinaryLittleEndian };

/// Writes float xyz + uchar rgb vertices.
void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
               PlyEncoding encoding = PlyEncoding::BinaryLittleEndian);

/// Whitespace-separated `x y z r g b` lines, colours in 0..255.
PointCloud load_xyzrgb(const std::filesystem::path& path);

/// Mean over points of the mean distance to their k nearest neighbours.
double average_spacing(const PointCloud& cloud, std::size_t k = 6);

/// Uniform selection without replacement of min(|cloud|, max_points) points;
/// the selected points keep their original relative order.
PointCloud subsample(const PointCloud& cloud, std::size_t max_points, std::uint64_t seed);

/// Appends floor(ratio * originals) synthetic points x0 + alpha * n, where x0 is
/// a random original point, n is uniform on the unit sphere and
/// alpha ~ Normal(d, d^2) with d the average spacing of the originals.
PointCloud augment_random_points(const PointCloud& cloud, double ratio, std::uint64_t seed);

}  // namespace ttrf
