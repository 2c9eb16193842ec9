#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "morl/rng.hpp"

namespace morl {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Activation { Tanh, Relu, Identity };

struct MlpSpec {
  int input_dim = 1;
  std::vector<int> hidden_dims;
  int output_dim = 1;
  Activation activation = Activation::Tanh;

  // layer l maps layer_in(l) -> layer_out(l); hidden layers apply the
  // activation, the last layer is linear
  int n_layers() const { return static_cast<int>(hidden_dims.size()) + 1; }
  int layer_in(int l) const;
  int layer_out(int l) const;
  void validate() const;
};

// Named parameter matrices with shape-matched gradient accumulators and
// Adam moment estimates. Iteration order is the sorted name order, which
// makes every whole-store operation deterministic.
class ParamStore {
 public:
  Mat& add(const std::string& name, int rows, int cols);
  bool has(const std::string& name) const;

  Mat& param(const std::string& name);
  const Mat& param(const std::string& name) const;
  Mat& grad(const std::string& name);
  const Mat& grad(const std::string& name) const;

  std::vector<std::string> names() const;
  std::int64_t total_size() const;

  void zero_grads();
  double grad_norm() const;
  void clip_grad_norm(double max_norm);

  // Standard Adam with bias correction. Zeroes the gradient accumulators
  // and throws (naming the parameter) if a gradient is non-finite.
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999,
                 double eps = 1e-8);
  std::int64_t adam_steps() const { return step_; }
  // drops moments and the step count; values and gradients stay
  void reset_optimizer();

  bool same_values(const ParamStore& other) const;  // bitwise parameter equality
  bool same_grads(const ParamStore& other) const;

  // named-array container, layout in docs/checkpoint_format.md
  void save(const std::string& path) const;
  static ParamStore load(const std::string& path);

 private:
  struct Entry {
    Mat value, grad, m, v;
  };
  const Entry& entry(const std::string& name) const;
  Entry& entry(const std::string& name);

  std::map<std::string, Entry> entries_;
  std::int64_t step_ = 0;
};

// Layer parameters live under "<prefix>.W<l>" / "<prefix>.b<l>".
void add_mlp_params(ParamStore& store, const MlpSpec& spec,
                    const std::string& prefix);
// Xavier-uniform weights, zero biases; optionally a zero last layer so the
// untrained net outputs exactly zero.
void init_mlp(ParamStore& store, const MlpSpec& spec, const std::string& prefix,
              Rng& rng, bool zero_head = false);

Vec mlp_forward(const ParamStore& store, const MlpSpec& spec,
                const std::string& prefix, const Vec& x);

// Accumulates d(upstream . y)/d(params) into the gradient buffers and
// returns the input gradient. Runs its own forward pass for activations.
Vec mlp_backprop(ParamStore& store, const MlpSpec& spec,
                 const std::string& prefix, const Vec& x, const Vec& upstream);

// Central-difference check of whatever gradient currently sits in the
// store's accumulators against `loss`, on n_coords randomly chosen
// coordinates. Returns the max relative error; the denominator floor makes
// a 1e-4 threshold correspond to a 1e-6 absolute floor.
double finite_diff_check(const std::function<double(ParamStore&)>& loss,
                         ParamStore& params, int n_coords, double h,
                         std::uint64_t seed, double floor = 1e-2);

}  // namespace morl
