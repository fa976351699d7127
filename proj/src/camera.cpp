#include "evrf/camera.hpp"

#include <cmath>

#include "evrf/errors.hpp"

namespace evrf::render {

Camera Camera::from_angle_x(int width, int height, double camera_angle_x,
                            const Eigen::Matrix4d& cam_to_world, double znear, double zfar) {
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.fx = 0.5 * width / std::tan(0.5 * camera_angle_x);
  cam.fy = cam.fx;
  cam.cx = 0.5 * width;
  cam.cy = 0.5 * height;
  cam.cam_to_world = cam_to_world;
  cam.znear = znear;
  cam.zfar = zfar;
  cam.validate();
  return cam;
}

void Camera::validate() const {
  if (width <= 0 || height <= 0 || fx <= 0.0 || fy <= 0.0) throw ArgumentError("camera: bad intrinsics");
  if (!(znear > 0.0) || !(znear < zfar)) throw ArgumentError("camera: need 0 < znear < zfar");
  Eigen::Matrix3d r = cam_to_world.block<3, 3>(0, 0);
  if ((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
      std::abs(r.determinant() - 1.0) > 1e-6)
    throw ArgumentError("camera: rotation block is not orthonormal");
  if (cam_to_world.row(3) != Eigen::RowVector4d(0, 0, 0, 1)) throw ArgumentError("camera: bad homogeneous row");
}

Ray Camera::ray_through(double px, double py) const {
  Eigen::Vector3d d_cam((px - cx) / fx, -(py - cy) / fy, -1.0);
  d_cam.normalize();
  Ray r;
  r.origin = cam_to_world.block<3, 1>(0, 3);
  r.dir = cam_to_world.block<3, 3>(0, 0) * d_cam;
  return r;
}

std::vector<Ray> Camera::rays(std::span<const std::pair<int, int>> pixels) const {
  std::vector<Ray> out;
  out.reserve(pixels.size());
  for (const auto& [x, y] : pixels) {
    if (x < 0 || y < 0 || x >= width || y >= height) throw ArgumentError("camera: pixel outside resolution");
    out.push_back(ray_through(static_cast<double>(x), static_cast<double>(y)));
  }
  return out;
}

std::vector<Ray> Camera::all_rays() const {
  std::vector<Ray> out;
  out.reserve(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) out.push_back(ray_through(x, y));
  return out;
}

Eigen::Matrix4d orbit_pose(double azimuth_deg, double elevation_deg, double radius) {
  const double az = azimuth_deg * M_PI / 180.0;
  const double el = elevation_deg * M_PI / 180.0;
  Eigen::Vector3d eye(radius * std::cos(el) * std::cos(az), radius * std::cos(el) * std::sin(az),
                      radius * std::sin(el));
  Eigen::Vector3d forward = (-eye).normalized();
  Eigen::Vector3d world_up(0, 0, 1);
  Eigen::Vector3d right = forward.cross(world_up).normalized();
  Eigen::Vector3d up = right.cross(forward);
  Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();
  pose.block<3, 1>(0, 0) = right;
  pose.block<3, 1>(0, 1) = up;
  pose.block<3, 1>(0, 2) = -forward;  // camera looks down -z
  pose.block<3, 1>(0, 3) = eye;
  return pose;
}

Eigen::VectorXd stratified_depths(double znear, double zfar, int samples, Rng* jitter) {
  if (samples < 2) throw ArgumentError("stratified_depths: need at least two samples");
  Eigen::VectorXd out(samples);
  const double h = (zfar - znear) / samples;
  for (int i = 0; i < samples; ++i) {
    double u = jitter ? jitter->uniform() : 0.5;
    out[i] = znear + (static_cast<double>(i) + u) * h;
  }
  return out;
}

}  // namespace evrf::render
