#include "ttrf/camera.hpp"

#include "ttrf/error.hpp"

#include <cmath>

namespace ttrf {

Camera Camera::from_fov(double camera_angle_x, int width, int height, const Eigen::Matrix4d& pose) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "camera size must be positive");
  if (!(camera_angle_x > 0.0 && camera_angle_x < M_PI)) {
    throw Error(ErrorCode::InvalidArgument, "camera_angle_x must lie in (0, pi)");
  }
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.fx = 0.5 * width / std::tan(0.5 * camera_angle_x);
  cam.fy = cam.fx;
  cam.cx = 0.5 * width;
  cam.cy = 0.5 * height;
  cam.pose = pose;
  return cam;
}

Ray pixel_ray(const Camera& cam, int px, int py) {
  if (px < 0 || py < 0 || px >= cam.width || py >= cam.height) {
    throw Error(ErrorCode::OutOfBounds, "pixel outside the image");
  }
  const Vec3 local((px + 0.5 - cam.cx) / cam.fx, -(py + 0.5 - cam.cy) / cam.fy, -1.0);
  return Ray::make(cam.center(), cam.rotation() * local);
}

Eigen::Vector2d project(const Camera& cam, const Point3& p) {
  const Vec3 local = cam.rotation().transpose() * (p - cam.center());
  if (!(local.z() < 0.0)) throw Error(ErrorCode::OutOfBounds, "point is behind the camera");
  const double x = local.x() / -local.z();
  const double y = local.y() / -local.z();
  return {cam.fx * x + cam.cx - 0.5, -cam.fy * y + cam.cy - 0.5};
}

Eigen::Matrix4d look_at(const Point3& eye, const Point3& target, const Vec3& up) {
  const Vec3 back = (eye - target).normalized();
  Vec3 right = up.cross(back);
  if (right.norm() < 1e-9) right = Vec3::UnitX().cross(back);
  right.normalize();
  const Vec3 true_up = back.cross(right);
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 1>(0, 0) = right;
  m.block<3, 1>(0, 1) = true_up;
  m.block<3, 1>(0, 2) = back;
  m.block<3, 1>(0, 3) = eye;
  return m;
}

}  // namespace ttrf
