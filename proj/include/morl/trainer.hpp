#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "morl/dataset.hpp"
#include "morl/diffusion.hpp"
#include "morl/nn.hpp"
#include "morl/pareto.hpp"
#include "morl/pen.hpp"
#include "morl/rewards.hpp"

namespace morl {

enum class RunMode {
  Pareto,       // batch-wise non-dominated selection, joint update
  WeightedSum,  // scalarized baseline, no selection
  SingleReward, // scalarized with a one-hot weight on reward k
  T2IOnly,      // Pareto mode with the expansion policy frozen
  PenOnly,      // Pareto mode with the denoiser frozen
  NoJoint,      // sequential: PEN phase then T2I phase, same total budget
};

std::string to_string(RunMode mode);
RunMode parse_run_mode(const std::string& s);

struct OptimConfig {
  double lr_t2i = 1e-4;
  double lr_pen = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 0.1;  // global-norm clip applied during RL updates
};

struct PretrainConfig {
  int steps = 3000;
  int batch_size = 32;
  double lr = 1e-3;
  double lr_final = 5e-5;     // cosine-decayed to by the last step
  double cond_dropout = 0.1;  // classifier-free null replacement probability
};

enum class EvalSampler { Stochastic, Ddim };

struct EvalConfig {
  int samples_per_condition = 128;
  GuidanceSpec guidance{GuidanceMode::Cfg, 5.0, 5.0, 5.0};
  EvalSampler sampler = EvalSampler::Stochastic;
  int ddim_steps = 20;
};

struct RunConfig {
  RunMode mode = RunMode::Pareto;
  int single_reward_k = 1;  // SingleReward only
  int batch_size = 64;      // N
  int iterations = 200;     // E
  int n_rewards = 4;        // K
  std::vector<RewardSpec> reward_specs;  // empty: default registry, first K
  std::vector<double> weights;  // WeightedSum only; K entries summing to 1
  std::uint64_t seed = 0;
  int workers = 1;

  GuidanceSpec rollout_guidance{GuidanceMode::None, 1.0, 1.0, 0.0};
  OptimConfig optim;
  PretrainConfig pretrain;
  EvalConfig eval;
  PenConfig pen;
  ToyDataConfig data;
  std::vector<int> denoiser_hidden = {64, 64};
  int schedule_steps = 20;
  double beta_min = 1e-4;
  double beta_max = 0.1;

  bool pen_baseline = true;   // subtract the batch-mean reward in PEN updates
  bool pen_use_front = true;  // PEN learns from non-dominated samples only
  bool pareto_selection = true;  // false: every sample enters the front
  bool pooled_front = false;  // one front across the K conditioned batches

  void validate() const;  // throws ConfigError naming the offending field
};

struct System {
  DenoiserConfig denoiser_cfg;
  MlpSpec eps_spec;
  ParamStore t2i;
  PenPolicy pen;
  DiffusionSchedule sched;
  RewardRegistry rewards;
  ToyDataConfig data;
};

System make_system(const RunConfig& cfg);

struct IterationMetrics {
  int iteration = 0;
  int reward_id = 0;  // k for reward-conditioned batches, 0 for scalarized ones
  Vec mean_rewards;   // per-reward batch means
  double nd_fraction = 0.0;
  double grad_norm_t2i = 0.0;
  double grad_norm_pen = 0.0;
  double seconds = 0.0;  // wall time; lives in the timings sidecar, not metrics.csv
};

// ---- pretraining ----------------------------------------------------------

// Denoising score matching with classifier-free condition dropout. Throws
// if the loss goes non-finite. Optionally records the held-out loss every
// `eval_every` steps (step 0 included).
void pretrain(System& sys, const RunConfig& cfg, int steps,
              std::vector<std::pair<int, double>>* loss_log = nullptr,
              int eval_every = 100);

// Mean squared denoising error on a fixed, seed-derived evaluation set.
double denoising_eval_loss(const System& sys, const RunConfig& cfg,
                           int n_samples = 256);

// ---- RL iterations --------------------------------------------------------

struct BatchRollout {
  int condition = 0;
  PromptBundle bundle;
  double bundle_log_prob = 0.0;
  std::vector<Trajectory> trajs;
  std::vector<RewardVector> rewards;
};

int sample_condition(const RunConfig& cfg, int iteration);

// N rollouts under one expansion of `condition` with `prefs` prepended.
// slot tells the seed derivation which conditioned batch this is; rollouts
// are deterministic per (seed, iteration, slot, i) and independent of the
// worker count.
BatchRollout collect_batch(const System& sys, const RunConfig& cfg,
                           int iteration, int slot, int condition,
                           const std::vector<int>& prefs);

// Adds weights[i] * sum_t grad(-log p_theta) for each selected index into
// the t2i gradient buffers. Non-selected samples are never touched, so the
// full-batch masked update equals the update recomputed from the selected
// subset alone, bit for bit.
void accumulate_t2i(System& sys, const std::vector<Trajectory>& trajs,
                    const std::vector<double>& weights,
                    const std::vector<int>& selected);

std::vector<IterationMetrics> pareto_iteration(System& sys,
                                               const RunConfig& cfg,
                                               int iteration,
                                               bool update_t2i = true,
                                               bool update_pen = true);

IterationMetrics weighted_sum_iteration(System& sys, const RunConfig& cfg,
                                        int iteration,
                                        const std::vector<double>& weights,
                                        bool update_t2i = true,
                                        bool update_pen = true);

// Mode dispatch for one iteration (handles the NoJoint phase split).
std::vector<IterationMetrics> run_iteration(System& sys, const RunConfig& cfg,
                                            int iteration);

// ---- evaluation -----------------------------------------------------------

// Deterministic-seed evaluation: samples per condition with the given
// reward-preference identifiers, returns the mean reward vector.
Vec evaluate(const System& sys, const RunConfig& cfg,
             const std::vector<int>& prefs, std::uint64_t eval_seed);

// ---- full runs and metrics files ------------------------------------------

struct RunResult {
  std::vector<IterationMetrics> metrics;
  Vec baseline_means;  // evaluation right after pretraining
  Vec final_means;     // evaluation after the last iteration
};

RunResult run_training(System& sys, const RunConfig& cfg,
                       const std::vector<int>& eval_prefs);

std::string metrics_csv(const std::vector<IterationMetrics>& rows, int K);
std::string timings_csv(const std::vector<IterationMetrics>& rows);
void write_file(const std::string& path, const std::string& content);
std::vector<IterationMetrics> read_metrics_csv(const std::string& path, int* K);

}  // namespace morl
