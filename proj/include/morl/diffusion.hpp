#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "morl/dataset.hpp"
#include "morl/nn.hpp"
#include "morl/pen.hpp"
#include "morl/rng.hpp"

namespace morl {

// Reverse-diffusion over 2-D points. Each reverse transition is a Gaussian
// policy step with an exact log-density, which is what the policy-gradient
// fine-tuning differentiates.

struct DiffusionSchedule {
  int T = 0;
  Vec betas;       // index t-1 holds beta_t
  Vec alphas;      // 1 - beta_t
  Vec alpha_bars;  // prod_{s<=t} alpha_s
  Vec sigmas;      // reverse-transition std dev, strictly positive

  double beta(int t) const { return betas[t - 1]; }
  double alpha(int t) const { return alphas[t - 1]; }
  double alpha_bar(int t) const { return alpha_bars[t - 1]; }
  double sigma(int t) const { return sigmas[t - 1]; }
  void validate() const;
};

// Linear betas. sigma_t^2 is the DDPM posterior variance for t >= 2 and
// beta_1 at the final step (the posterior variance there is exactly zero,
// which would make the last transition's density improper).
DiffusionSchedule make_linear_schedule(int T = 20, double beta_min = 1e-4,
                                       double beta_max = 0.1);

constexpr int kPointDim = 2;
constexpr int kTimeEmbDim = 8;
constexpr int kCondDim = 16;

// sinusoidal embedding of the integer timestep
Vec time_embedding(int t);

// Denoiser: token embedding tables plus an MLP over
// (x_t, time embedding, condition embedding).
struct DenoiserConfig {
  int n_original = 8;
  int n_expansion = 16;
  int n_rewards = 4;
  std::vector<int> hidden_dims = {64, 64};

  MlpSpec mlp_spec() const;
};

void add_denoiser_params(ParamStore& store, const DenoiserConfig& cfg);
// Random token embeddings, Xavier hidden layers, zero output layer, zero
// reward-identifier embeddings (identifiers are no-ops until fine-tuned).
void init_denoiser(ParamStore& store, const DenoiserConfig& cfg, Rng& rng);

// Condition embedding assembly: original-token embedding plus the sum of
// expansion-token embeddings plus the sum of reward-identifier embeddings.
// The null condition is the zero vector and has no parameters.
Vec null_condition();
Vec original_condition(const ParamStore& store, int token);
Vec condition_embedding(const ParamStore& store, const PromptBundle& bundle);
// Routes a gradient w.r.t. the assembled embedding back onto the
// contributing table rows.
void accumulate_condition_grad(ParamStore& store, const PromptBundle& bundle,
                               const Vec& grad, bool original_only = false);

Vec denoiser_input(const Vec2& x_t, int t, const Vec& cond);

// q(x_t | x_0): sqrt(abar_t) x0 + sqrt(1 - abar_t) noise
Vec2 forward_noise(const Vec2& x0, int t, const Vec2& noise,
                   const DiffusionSchedule& sched);

Vec2 predict_noise(const ParamStore& store, const MlpSpec& spec,
                   const Vec2& x_t, int t, const Vec& cond);

enum class GuidanceMode { None, Cfg, Dual };

struct GuidanceSpec {
  GuidanceMode mode = GuidanceMode::None;
  double w = 5.0;        // cfg scale
  double w1 = 5.0;       // dual: original-prompt scale
  double w2 = 5.0;       // dual: expanded-prompt scale
};

// cfg:  w * eps(c) + (1-w) * eps(null)
// dual: w1 * eps(c) + (1-w1-w2) * eps(null) + w2 * eps(c_expanded)
// Both run through one code path so dual with w2 = 0 is bit-identical to
// cfg with w = w1.
Vec2 guided_noise(const ParamStore& store, const MlpSpec& spec, const Vec2& x_t,
                  int t, const Vec& cond_main,
                  const Vec* cond_second, const GuidanceSpec& guidance);

Vec2 posterior_mean(const Vec2& x_t, int t, const Vec2& eps_hat,
                    const DiffusionSchedule& sched);
// d(posterior mean)/d(eps_hat), a scalar multiple of the identity
double posterior_mean_eps_coeff(int t, const DiffusionSchedule& sched);

double gaussian_log_prob_2d(const Vec2& x, const Vec2& mean, double sigma);

struct StepResult {
  Vec2 x_prev;
  double log_prob = 0.0;
  Vec2 mean;
  double sigma = 0.0;
};

// One stochastic reverse step under the plain conditional model.
StepResult sample_step(const ParamStore& store, const MlpSpec& spec,
                       const Vec2& x_t, int t, const Vec& cond,
                       const DiffusionSchedule& sched, Rng& rng);

struct Trajectory {
  std::vector<Vec2> states;      // x_T .. x_0
  std::vector<Vec2> means;       // transition means, t = T .. 1
  std::vector<double> sigmas;
  std::vector<double> log_probs;
  PromptBundle bundle;
  GuidanceSpec guidance;
  std::uint64_t seed = 0;

  int T() const { return static_cast<int>(log_probs.size()); }
  const Vec2& x0() const { return states.back(); }
  int timestep(int step_index) const { return T() - step_index; }
};

// Full reverse rollout from x_T ~ N(0, I), recording everything the policy
// gradient needs. Deterministic given (params, bundle, guidance, seed).
Trajectory sample_trajectory(const ParamStore& store, const MlpSpec& spec,
                             const PromptBundle& bundle,
                             const GuidanceSpec& guidance,
                             const DiffusionSchedule& sched,
                             std::uint64_t seed);

// Gaussian log-density of the stored transition recomputed from the stored
// (mean, sigma, x_{t-1}).
double recompute_log_prob(const Trajectory& traj, int step_index);

// Accumulates -weight * d log p(x_{t-1} | x_t, cond, t) / d theta into the
// store's gradient buffers (descent orientation), routing condition
// gradients into the embedding tables. Throws if the stored transition mean
// cannot be reproduced (parameters changed since the rollout).
void accumulate_logprob_grad(ParamStore& store, const MlpSpec& spec,
                             const Trajectory& traj, int step_index,
                             const DiffusionSchedule& sched, double weight);

// Deterministic DDIM (eta = 0) over `steps` evenly spaced timesteps,
// starting from the given x_T. Evaluation only; no log-probs.
Vec2 ddim_sample(const ParamStore& store, const MlpSpec& spec,
                 const PromptBundle& bundle, const GuidanceSpec& guidance,
                 const DiffusionSchedule& sched, int steps, const Vec2& x_T);

// one transition per line: t, x_t, mean, sigma, x_{t-1}, log_prob
void dump_trajectory(const Trajectory& traj, std::ostream& os);

}  // namespace morl
