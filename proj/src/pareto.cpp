#include "morl/pareto.hpp"

#include <algorithm>
#include <stdexcept>

namespace morl {

RewardVector::RewardVector(Vec values) : values_(std::move(values)) {
  if (values_.size() < 1) {
    throw std::invalid_argument("RewardVector: needs at least one objective");
  }
  if (!values_.allFinite()) {
    throw std::invalid_argument("RewardVector: non-finite entry");
  }
}

RewardVector::RewardVector(std::initializer_list<double> values)
    : RewardVector(Eigen::Map<const Vec>(values.begin(),
                                         static_cast<Eigen::Index>(values.size()))) {}

bool ParetoMask::contains(int i) const {
  return std::binary_search(selected.begin(), selected.end(), i);
}

bool dominates(const RewardVector& a, const RewardVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dominates: length mismatch");
  }
  bool strict = false;
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return false;
    if (a[i] > b[i]) strict = true;
  }
  return strict;
}

ParetoMask nd_set(std::span<const RewardVector> batch) {
  if (batch.empty()) {
    throw std::invalid_argument("nd_set: empty batch");
  }
  const int n = static_cast<int>(batch.size());
  const int k = batch[0].size();
  for (const auto& r : batch) {
    if (r.size() != k) throw std::invalid_argument("nd_set: ragged batch");
  }

  ParetoMask mask;
  mask.batch_size = n;
  for (int i = 0; i < n; ++i) {
    bool nondominated = true;
    for (int j = 0; j < n && nondominated; ++j) {
      if (j != i && dominates(batch[j], batch[i])) nondominated = false;
    }
    if (nondominated) mask.selected.push_back(i);
  }
  return mask;
}

double nd_fraction(std::span<const RewardVector> batch) {
  const ParetoMask mask = nd_set(batch);
  return static_cast<double>(mask.selected.size()) /
         static_cast<double>(mask.batch_size);
}

}  // namespace morl
