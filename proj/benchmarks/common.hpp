#pragma once

#include "ttrf/cloud.hpp"

#include <random>

namespace bench {

inline ttrf::PointCloud random_cloud(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ttrf::PointCloud cloud;
  for (std::size_t i = 0; i < n; ++i) {
    cloud.push_back(ttrf::Point3(u(rng), u(rng), u(rng)),
                    ttrf::Rgba{static_cast<float>(u(rng)), static_cast<float>(u(rng)), static_cast<float>(u(rng)), 1.0f});
  }
  return cloud;
}

inline ttrf::Ray random_ray(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const ttrf::Vec3 d = ttrf::Vec3(g(rng), g(rng), g(rng)).normalized();
  return ttrf::Ray::make(ttrf::Point3(u(rng), u(rng), u(rng)) - 3.0 * d, d);
}

}  // namespace bench
