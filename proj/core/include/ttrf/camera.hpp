#pragma once

#include "ttrf/geometry.hpp"

#include <Eigen/Core>

namespace ttrf {

/// Pinhole camera, OpenGL convention: the camera looks down its local -z axis
/// with +y up, and pixel rows grow downwards.
struct Camera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();  // camera-to-world

  /// Square pixels, principal point at the image centre.
  static Camera from_fov(double camera_angle_x, int width, int height, const Eigen::Matrix4d& pose);

  [[nodiscard]] Point3 center() const { return pose.block<3, 1>(0, 3); }
  [[nodiscard]] Eigen::Matrix3d rotation() const { return pose.block<3, 3>(0, 0); }
};

/// Ray from the camera centre through the centre of pixel (px, py).
/// Throws OutOfBounds outside the image.
Ray pixel_ray(const Camera& cam, int px, int py);

/// Continuous pixel coordinates of a world point, such that the centre of
/// pixel (px, py) projects to exactly (px, py). Points behind the camera
/// throw OutOfBounds.
Eigen::Vector2d project(const Camera& cam, const Point3& p);

/// Camera-to-world pose at `eye` looking at `target`.
Eigen::Matrix4d look_at(const Point3& eye, const Point3& target, const Vec3& up);

}  // namespace ttrf
