#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "evrf/rng.hpp"

namespace evrf::render {

struct Ray {
  Eigen::Vector3d origin;
  Eigen::Vector3d dir;  // unit length
};

// Pinhole camera, right-handed, looking down -z with y up. Pixels are sampled
// at their integer grid coordinates.
struct Camera {
  int width = 0;
  int height = 0;
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  Eigen::Matrix4d cam_to_world = Eigen::Matrix4d::Identity();
  double znear = 2.0;
  double zfar = 6.0;

  static Camera from_angle_x(int width, int height, double camera_angle_x,
                             const Eigen::Matrix4d& cam_to_world, double znear, double zfar);

  // Throws unless the rotation block is orthonormal (det +1) within 1e-6 and
  // 0 < znear < zfar.
  void validate() const;

  Ray ray_through(double px, double py) const;
  std::vector<Ray> rays(std::span<const std::pair<int, int>> pixels) const;
  std::vector<Ray> all_rays() const;  // row-major pixel order
};

// Camera on a circle of `radius` around the origin at `azimuth_deg` (0 along
// +x) and `elevation_deg`, aimed at the origin with world +z up.
Eigen::Matrix4d orbit_pose(double azimuth_deg, double elevation_deg, double radius);

// One depth per equal sub-interval of [znear, zfar]: the midpoint, or a
// uniform draw inside the sub-interval when a jitter source is given.
Eigen::VectorXd stratified_depths(double znear, double zfar, int samples, Rng* jitter);

}  // namespace evrf::render
