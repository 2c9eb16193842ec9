#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

#include "morl/rng.hpp"

namespace morl {

using Vec2 = Eigen::Vector2d;

// Toy conditional data: each condition token owns a Gaussian cluster whose
// center sits on a ring, so alignment and ring-distance objectives coincide
// at the center while directional objectives pull away from it.
struct ToyDataConfig {
  int n_conditions = 8;
  double ring_radius = 2.0;
  double cluster_sigma = 0.3;
};

inline Vec2 cluster_center(const ToyDataConfig& cfg, int token) {
  if (token < 0 || token >= cfg.n_conditions) {
    throw std::invalid_argument("cluster_center: token out of range");
  }
  const double angle =
      2.0 * 3.14159265358979323846 * static_cast<double>(token) /
      static_cast<double>(cfg.n_conditions);
  return cfg.ring_radius * Vec2(std::cos(angle), std::sin(angle));
}

inline Vec2 sample_point(const ToyDataConfig& cfg, int token, Rng& rng) {
  return cluster_center(cfg, token) +
         cfg.cluster_sigma * Vec2(rng.normal(), rng.normal());
}

}  // namespace morl
