#include <doctest.h>

#include <cmath>

#include "morl/rewards.hpp"
#include "morl/rng.hpp"

using morl::RewardRegistry;
using morl::Rng;
using morl::Vec2;

TEST_CASE("default registry hand values") {
  const RewardRegistry reg = morl::default_registry();
  REQUIRE(reg.K() == 4);

  SUBCASE("alignment is exactly 1 at the cluster center") {
    for (int c = 0; c < 8; ++c) {
      const Vec2 mu = morl::cluster_center(reg.geometry, c);
      CHECK(eval_reward(reg.specs[2], reg.geometry, mu, c) == 1.0);
    }
  }

  SUBCASE("ring reward is exactly 1 on the radius-2 ring") {
    CHECK(eval_reward(reg.specs[0], reg.geometry, Vec2(2, 0), 0) == 1.0);
    CHECK(eval_reward(reg.specs[0], reg.geometry, Vec2(0, -2), 0) == 1.0);
  }

  SUBCASE("preference sigmoid saturates along its direction") {
    CHECK(eval_reward(reg.specs[1], reg.geometry, Vec2(10, 10), 0) > 0.99999);
    CHECK(eval_reward(reg.specs[1], reg.geometry, Vec2(-10, -10), 0) < 1e-5);
  }

  SUBCASE("non-finite input throws") {
    CHECK_THROWS_AS(
        eval_reward(reg.specs[0], reg.geometry, Vec2(std::nan(""), 0), 0),
        std::invalid_argument);
  }
}

TEST_CASE("reward vector equals element-wise scalar calls") {
  const RewardRegistry reg = morl::default_registry();
  Rng rng(42);
  for (int i = 0; i < 256; ++i) {
    const Vec2 x(rng.uniform(-4, 4), rng.uniform(-4, 4));
    const int c = static_cast<int>(rng.below(8));
    const morl::RewardVector rv = eval_reward_vector(reg, x, c);
    for (int k = 0; k < 4; ++k) {
      CHECK(rv[k] == eval_reward(reg.specs[k], reg.geometry, x, c));
    }
  }
}

TEST_CASE("rewards stay in [0,1] and are pure") {
  const RewardRegistry reg = morl::default_registry();
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const Vec2 x(rng.uniform(-50, 50), rng.uniform(-50, 50));
    const int c = static_cast<int>(rng.below(8));
    const morl::RewardVector rv = eval_reward_vector(reg, x, c);
    for (int k = 0; k < 4; ++k) {
      CHECK(rv[k] >= 0.0);
      CHECK(rv[k] <= 1.0);
    }
    const morl::RewardVector again = eval_reward_vector(reg, x, c);
    for (int k = 0; k < 4; ++k) CHECK(rv[k] == again[k]);
  }
}

TEST_CASE("ring and alignment rewards genuinely trade off") {
  const RewardRegistry reg = morl::default_registry();
  // move off the center along the radial direction: the ring reward can be
  // raised while alignment drops
  const int c = 1;
  const Vec2 mu = morl::cluster_center(reg.geometry, c);
  const Vec2 a = mu * 1.3;  // further out: closer to nothing, radius 2.6
  const Vec2 b = mu;        // at the center, on the ring
  const double r1_a = eval_reward(reg.specs[0], reg.geometry, a, c);
  const double r1_b = eval_reward(reg.specs[0], reg.geometry, b, c);
  const double r3_a = eval_reward(reg.specs[2], reg.geometry, a, c);
  const double r3_b = eval_reward(reg.specs[2], reg.geometry, b, c);
  CHECK(r1_b > r1_a);   // b sits on the ring
  CHECK(r3_b > r3_a);   // and at the center

  // now a point on the ring but away from mu: ring beats alignment
  const Vec2 d = morl::cluster_center(reg.geometry, (c + 3) % 8);
  CHECK(eval_reward(reg.specs[0], reg.geometry, d, c) == 1.0);
  CHECK(eval_reward(reg.specs[2], reg.geometry, d, c) < r3_b);

  // constructed conflict pair for (R1, R3) with mu off the ring
  morl::ToyDataConfig off = reg.geometry;
  off.ring_radius = 2.0;
  const Vec2 mu_off = 1.4 * morl::cluster_center(off, c) / 2.0;  // radius 1.4
  const Vec2 p_ring = 2.0 * mu_off / mu_off.norm();
  const double r1_ring = eval_reward(reg.specs[0], off, p_ring, c);
  const double r1_mu = eval_reward(reg.specs[0], off, mu_off, c);
  morl::RewardSpec align = reg.specs[2];
  const double r3_ring = std::exp(-(p_ring - mu_off).squaredNorm() /
                                  (align.bandwidth * align.bandwidth));
  CHECK(r1_ring > r1_mu);
  CHECK(r3_ring < 1.0);
}

TEST_CASE("registry order is part of the contract") {
  RewardRegistry reg = morl::default_registry();
  std::swap(reg.specs[0], reg.specs[1]);
  CHECK_THROWS_AS(reg.validate(), std::invalid_argument);
}
