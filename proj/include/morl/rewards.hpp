#pragma once

#include <string>
#include <vector>

#include "morl/dataset.hpp"
#include "morl/pareto.hpp"

namespace morl {

// Analytic reward functions over (generated point, original condition).
// All four map into [0,1] and are chosen so that objectives genuinely
// conflict for most conditions.
enum class RewardKind {
  RingDistance,     // exp(-(|x| - radius)^2 / bandwidth^2)
  DirectionalSigmoid,  // sigmoid(gain * (x . dir) / |dir|)
  ConditionAlignment,  // exp(-|x - center(c)|^2 / bandwidth^2)
  AxisSigmoid,      // sigmoid(gain * x_y)
};

struct RewardSpec {
  int id = 1;  // 1..K
  std::string name;
  RewardKind kind = RewardKind::RingDistance;
  double bandwidth = 0.5;
  double radius = 2.0;
  Vec2 direction = Vec2(1.0, 1.0);
  double gain = 2.0;
};

struct RewardRegistry {
  std::vector<RewardSpec> specs;  // id order, ids 1..K
  ToyDataConfig geometry;

  int K() const { return static_cast<int>(specs.size()); }
  void validate() const;
};

// The K=4 default suite: ring distance ("aesthetics"), (1,1)-directional
// sigmoid ("preference"), cluster alignment, and +y sigmoid ("sentiment").
RewardRegistry default_registry(ToyDataConfig geometry = {});

double eval_reward(const RewardSpec& spec, const ToyDataConfig& geometry,
                   const Vec2& x0, int condition);

RewardVector eval_reward_vector(const RewardRegistry& registry, const Vec2& x0,
                                int condition);

}  // namespace morl
