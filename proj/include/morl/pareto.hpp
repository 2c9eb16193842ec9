#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

namespace morl {

using Vec = Eigen::VectorXd;

// One sample's scores across the K objectives. Finiteness is enforced at
// construction; downstream code may assume clean values.
class RewardVector {
 public:
  explicit RewardVector(Vec values);
  RewardVector(std::initializer_list<double> values);

  const Vec& values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }
  double operator[](int i) const { return values_[i]; }

 private:
  Vec values_;
};

// First non-dominated front of a batch: unique sorted indices into it.
struct ParetoMask {
  std::vector<int> selected;
  int batch_size = 0;

  bool contains(int i) const;
};

// Strict dominance: a dominates b iff a is componentwise >= b and strictly
// greater somewhere. Throws on length mismatch.
bool dominates(const RewardVector& a, const RewardVector& b);

// Indices i such that no j in the batch dominates i (the first front).
// Naive O(N^2 K) scan; N stays small in every experiment. Throws on an
// empty batch or ragged lengths.
ParetoMask nd_set(std::span<const RewardVector> batch);

// |nd_set(batch)| / |batch|, in (0, 1].
double nd_fraction(std::span<const RewardVector> batch);

}  // namespace morl
