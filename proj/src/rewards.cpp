#include "morl/rewards.hpp"

#include <cmath>
#include <stdexcept>

namespace morl {

namespace {
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
}  // namespace

void RewardRegistry::validate() const {
  if (specs.empty()) {
    throw std::invalid_argument("RewardRegistry: needs at least one reward");
  }
  for (int i = 0; i < K(); ++i) {
    if (specs[i].id != i + 1) {
      throw std::invalid_argument("RewardRegistry: specs must be in id order 1..K");
    }
  }
}

RewardRegistry default_registry(ToyDataConfig geometry) {
  RewardRegistry reg;
  reg.geometry = geometry;
  reg.specs = {
      {.id = 1, .name = "aesthetics", .kind = RewardKind::RingDistance,
       .bandwidth = 0.5, .radius = geometry.ring_radius},
      {.id = 2, .name = "preference", .kind = RewardKind::DirectionalSigmoid,
       .direction = Vec2(1.0, 1.0), .gain = 2.0},
      {.id = 3, .name = "alignment", .kind = RewardKind::ConditionAlignment,
       .bandwidth = 0.6},
      {.id = 4, .name = "sentiment", .kind = RewardKind::AxisSigmoid,
       .gain = 2.0},
  };
  reg.validate();
  return reg;
}

double eval_reward(const RewardSpec& spec, const ToyDataConfig& geometry,
                   const Vec2& x0, int condition) {
  if (!x0.allFinite()) {
    throw std::invalid_argument("eval_reward: non-finite input point");
  }
  switch (spec.kind) {
    case RewardKind::RingDistance: {
      const double d = x0.norm() - spec.radius;
      return std::exp(-d * d / (spec.bandwidth * spec.bandwidth));
    }
    case RewardKind::DirectionalSigmoid:
      return sigmoid(spec.gain * x0.dot(spec.direction) / spec.direction.norm());
    case RewardKind::ConditionAlignment: {
      const Vec2 center = cluster_center(geometry, condition);
      return std::exp(-(x0 - center).squaredNorm() /
                      (spec.bandwidth * spec.bandwidth));
    }
    case RewardKind::AxisSigmoid:
      return sigmoid(spec.gain * x0.y());
  }
  throw std::logic_error("eval_reward: unknown kind");
}

RewardVector eval_reward_vector(const RewardRegistry& registry, const Vec2& x0,
                                int condition) {
  registry.validate();
  Vec values(registry.K());
  for (int i = 0; i < registry.K(); ++i) {
    values[i] = eval_reward(registry.specs[i], registry.geometry, x0, condition);
  }
  return RewardVector(std::move(values));
}

}  // namespace morl
