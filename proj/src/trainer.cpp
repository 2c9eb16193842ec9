#include "morl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "morl/errors.hpp"

namespace morl {

namespace {

constexpr std::uint64_t kSaltInit = 0x1111'2222'3333'4444ULL;
constexpr std::uint64_t kSaltCondition = 0xC0DE'0001'0000'0001ULL;
constexpr std::uint64_t kSaltExpand = 0xE0E0'E0E0'E0E0'E0E0ULL;
constexpr std::uint64_t kSaltRollout = 0x5A5A'5A5A'5A5A'5A5AULL;
constexpr std::uint64_t kSaltPretrain = 0x9999'AAAA'BBBB'CCCCULL;
constexpr std::uint64_t kSaltPretrainEval = 0xDDDD'EEEE'FFFF'0123ULL;
constexpr std::uint64_t kSaltEval = 0x0F0F'1E1E'2D2D'3C3CULL;

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::vector<int> all_indices(int n) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Pareto: return "pareto";
    case RunMode::WeightedSum: return "weighted_sum";
    case RunMode::SingleReward: return "single_reward";
    case RunMode::T2IOnly: return "t2i_only";
    case RunMode::PenOnly: return "pen_only";
    case RunMode::NoJoint: return "no_joint";
  }
  return "pareto";
}

RunMode parse_run_mode(const std::string& s) {
  if (s == "pareto") return RunMode::Pareto;
  if (s == "weighted_sum") return RunMode::WeightedSum;
  if (s == "single_reward") return RunMode::SingleReward;
  if (s == "t2i_only") return RunMode::T2IOnly;
  if (s == "pen_only") return RunMode::PenOnly;
  if (s == "no_joint") return RunMode::NoJoint;
  throw ConfigError("run.mode: unknown mode '" + s + "'");
}

void RunConfig::validate() const {
  if (n_rewards < 1) throw ConfigError("run.rewards: K must be >= 1");
  if (batch_size < 1) throw ConfigError("run.batch_size: must be >= 1");
  if (iterations < 0) throw ConfigError("run.iterations: must be >= 0");
  if (workers < 1) throw ConfigError("run.workers: must be >= 1");
  if (schedule_steps < 1) throw ConfigError("schedule.timesteps: must be >= 1");

  const bool scalarized =
      mode == RunMode::WeightedSum || mode == RunMode::SingleReward;
  if (mode == RunMode::WeightedSum) {
    if (static_cast<int>(weights.size()) != n_rewards) {
      throw ConfigError("weights: weighted_sum mode needs exactly K entries");
    }
    double sum = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw ConfigError("weights: entries must be non-negative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("weights: entries must sum to 1");
    }
  } else if (!weights.empty()) {
    throw ConfigError("weights: only valid in weighted_sum mode");
  }
  if (mode == RunMode::SingleReward &&
      (single_reward_k < 1 || single_reward_k > n_rewards)) {
    throw ConfigError("single_reward.k: must lie in 1..K");
  }
  if (!scalarized && batch_size < 2) {
    throw ConfigError("run.batch_size: Pareto-selection modes need N >= 2");
  }
  if (pen.n_original != data.n_conditions) {
    throw ConfigError("pen: condition vocabulary must match data.conditions");
  }
}

System make_system(const RunConfig& cfg) {
  System sys{.denoiser_cfg = {.n_original = cfg.data.n_conditions,
                              .n_expansion = cfg.pen.n_expansion,
                              .n_rewards = cfg.n_rewards,
                              .hidden_dims = cfg.denoiser_hidden},
             .eps_spec = {},
             .t2i = {},
             .pen = PenPolicy(cfg.pen),
             .sched = make_linear_schedule(cfg.schedule_steps, cfg.beta_min,
                                           cfg.beta_max),
             .rewards = {},
             .data = cfg.data};
  if (cfg.reward_specs.empty()) {
    if (cfg.n_rewards > 4) {
      throw ConfigError("rewards.count: the default registry defines K <= 4");
    }
    sys.rewards = default_registry(cfg.data);
    sys.rewards.specs.resize(cfg.n_rewards);
  } else {
    if (static_cast<int>(cfg.reward_specs.size()) != cfg.n_rewards) {
      throw ConfigError("rewards: spec count must equal K");
    }
    sys.rewards.specs = cfg.reward_specs;
    sys.rewards.geometry = cfg.data;
  }
  sys.rewards.validate();
  sys.eps_spec = sys.denoiser_cfg.mlp_spec();
  add_denoiser_params(sys.t2i, sys.denoiser_cfg);
  Rng init_rng(derive_seed(cfg.seed, kSaltInit));
  init_denoiser(sys.t2i, sys.denoiser_cfg, init_rng);
  return sys;
}

// ---- pretraining -----------------------------------------------------------

namespace {

struct DenoisePair {
  int token;
  Vec2 x_t;
  int t;
  Vec2 noise;
  bool dropped;  // condition replaced by null
};

DenoisePair make_pair(const System& sys, Rng& rng, double dropout) {
  DenoisePair p;
  p.token = static_cast<int>(rng.below(sys.data.n_conditions));
  const Vec2 x0 = sample_point(sys.data, p.token, rng);
  p.t = 1 + static_cast<int>(rng.below(sys.sched.T));
  p.noise = Vec2(rng.normal(), rng.normal());
  p.x_t = forward_noise(x0, p.t, p.noise, sys.sched);
  p.dropped = rng.uniform() < dropout;
  return p;
}

}  // namespace

double denoising_eval_loss(const System& sys, const RunConfig& cfg,
                           int n_samples) {
  Rng rng(derive_seed(cfg.seed, kSaltPretrainEval));
  double loss = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const DenoisePair p = make_pair(sys, rng, /*dropout=*/0.0);
    const Vec cond = original_condition(sys.t2i, p.token);
    const Vec2 eps = predict_noise(sys.t2i, sys.eps_spec, p.x_t, p.t, cond);
    loss += (eps - p.noise).squaredNorm();
  }
  return loss / n_samples;
}

void pretrain(System& sys, const RunConfig& cfg, int steps,
              std::vector<std::pair<int, double>>* loss_log, int eval_every) {
  Rng rng(derive_seed(cfg.seed, kSaltPretrain));
  const int B = cfg.pretrain.batch_size;
  for (int step = 0; step < steps; ++step) {
    if (loss_log && step % eval_every == 0) {
      loss_log->emplace_back(step, denoising_eval_loss(sys, cfg));
    }
    // full rate for the first half, then cosine decay; the decay phase
    // settles the conditional means once the loss has plateaued
    const int hold = steps / 2;
    double lr = cfg.pretrain.lr;
    if (step >= hold && steps > hold + 1) {
      const double progress = static_cast<double>(step - hold) /
                              static_cast<double>(steps - 1 - hold);
      lr = cfg.pretrain.lr_final +
           0.5 * (cfg.pretrain.lr - cfg.pretrain.lr_final) *
               (1.0 + std::cos(3.14159265358979323846 * progress));
    }
    double batch_loss = 0.0;
    for (int b = 0; b < B; ++b) {
      const DenoisePair p = make_pair(sys, rng, cfg.pretrain.cond_dropout);
      const Vec cond =
          p.dropped ? null_condition() : original_condition(sys.t2i, p.token);
      const Vec in = denoiser_input(p.x_t, p.t, cond);
      const Vec eps = mlp_forward(sys.t2i, sys.eps_spec, "eps", in);
      batch_loss += (eps - Vec(p.noise)).squaredNorm();
      const Vec upstream = 2.0 * (eps - Vec(p.noise)) / B;
      const Vec in_grad = mlp_backprop(sys.t2i, sys.eps_spec, "eps", in, upstream);
      if (!p.dropped) {
        sys.t2i.grad("emb_orig").row(p.token) +=
            in_grad.tail<kCondDim>().transpose();
      }
    }
    batch_loss /= B;
    if (!std::isfinite(batch_loss)) {
      throw std::runtime_error("pretrain: loss diverged (non-finite) at step " +
                               std::to_string(step));
    }
    sys.t2i.adam_step(lr, cfg.optim.beta1, cfg.optim.beta2, cfg.optim.eps);
  }
  if (loss_log) {
    loss_log->emplace_back(steps, denoising_eval_loss(sys, cfg));
  }
}

// ---- RL iterations ---------------------------------------------------------

int sample_condition(const RunConfig& cfg, int iteration) {
  return static_cast<int>(
      derive_seed(cfg.seed, kSaltCondition, static_cast<std::uint64_t>(iteration)) %
      static_cast<std::uint64_t>(cfg.data.n_conditions));
}

BatchRollout collect_batch(const System& sys, const RunConfig& cfg,
                           int iteration, int slot, int condition,
                           const std::vector<int>& prefs) {
  BatchRollout batch;
  batch.condition = condition;

  Rng expand_rng(derive_seed(cfg.seed ^ kSaltExpand,
                             static_cast<std::uint64_t>(iteration),
                             static_cast<std::uint64_t>(slot)));
  Expansion ex = expand(sys.pen, condition, expand_rng);
  batch.bundle = prepend_reward_tokens(ex.bundle, prefs, cfg.n_rewards);
  batch.bundle_log_prob = ex.log_prob;

  const int N = cfg.batch_size;
  batch.trajs.resize(N);
  std::vector<Vec> reward_values(N);

  auto roll = [&](int i) {
    const std::uint64_t s =
        derive_seed(cfg.seed ^ kSaltRollout, static_cast<std::uint64_t>(iteration),
                    static_cast<std::uint64_t>(slot), static_cast<std::uint64_t>(i));
    batch.trajs[i] = sample_trajectory(sys.t2i, sys.eps_spec, batch.bundle,
                                       cfg.rollout_guidance, sys.sched, s);
    reward_values[i] =
        eval_reward_vector(sys.rewards, batch.trajs[i].x0(), condition).values();
  };

  const int workers = std::min(cfg.workers, N);
  if (workers <= 1) {
    for (int i = 0; i < N; ++i) roll(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int i = w; i < N; i += workers) roll(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  batch.rewards.reserve(N);
  for (int i = 0; i < N; ++i) {
    batch.rewards.emplace_back(std::move(reward_values[i]));
  }
  return batch;
}

void accumulate_t2i(System& sys, const std::vector<Trajectory>& trajs,
                    const std::vector<double>& weights,
                    const std::vector<int>& selected) {
  for (int i : selected) {
    const Trajectory& traj = trajs[i];
    for (int s = 0; s < traj.T(); ++s) {
      accumulate_logprob_grad(sys.t2i, sys.eps_spec, traj, s, sys.sched,
                              weights[i]);
    }
  }
}

namespace {

double batch_mean_reward(const BatchRollout& batch, int reward_index) {
  double sum = 0.0;
  for (const auto& r : batch.rewards) sum += r[reward_index];
  return sum / static_cast<double>(batch.rewards.size());
}

Vec batch_reward_means(const BatchRollout& batch, int K) {
  Vec means = Vec::Zero(K);
  for (const auto& r : batch.rewards) means += r.values();
  return means / static_cast<double>(batch.rewards.size());
}

// PEN REINFORCE for one conditioned batch: all samples share the bundle, so
// the update collapses to one call with the summed, normalized scalar. The
// batch-mean baseline is only meaningful when the update sums over a strict
// subset; over the full batch it cancels the gradient exactly, so it is
// skipped there.
void accumulate_pen(System& sys, const RunConfig& cfg, const BatchRollout& batch,
                    int reward_index, const std::vector<int>& selected) {
  const bool strict_subset =
      selected.size() < batch.rewards.size();
  const double baseline = (cfg.pen_baseline && strict_subset)
                              ? batch_mean_reward(batch, reward_index)
                              : 0.0;
  double total = 0.0;
  for (int j : selected) {
    total += batch.rewards[j][reward_index] - baseline;
  }
  total /= static_cast<double>(selected.size());
  pen_grad_update(sys.pen, batch.bundle, batch.bundle_log_prob, total);
}

// scalarized PEN update (weighted-sum / single-reward path)
void accumulate_pen_scalar(System& sys, const BatchRollout& batch,
                           const std::vector<double>& scalars) {
  double total = 0.0;
  for (double s : scalars) total += s;
  total /= static_cast<double>(scalars.size());
  pen_grad_update(sys.pen, batch.bundle, batch.bundle_log_prob, total);
}

}  // namespace

std::vector<IterationMetrics> pareto_iteration(System& sys, const RunConfig& cfg,
                                               int iteration, bool update_t2i,
                                               bool update_pen) {
  const double t_start = now_seconds();
  const int K = cfg.n_rewards;
  const int N = cfg.batch_size;
  const int condition = sample_condition(cfg, iteration);

  std::vector<BatchRollout> batches;
  batches.reserve(K);
  for (int k = 1; k <= K; ++k) {
    batches.push_back(collect_batch(sys, cfg, iteration, k, condition, {k}));
  }

  // per-k fronts by default; pooled mode ranks all K*N samples together and
  // projects the front back onto each batch
  std::vector<std::vector<int>> selected(K);
  if (!cfg.pareto_selection) {
    for (int k = 0; k < K; ++k) selected[k] = all_indices(N);
  } else if (cfg.pooled_front) {
    std::vector<RewardVector> pooled;
    pooled.reserve(K * N);
    for (const auto& b : batches) {
      pooled.insert(pooled.end(), b.rewards.begin(), b.rewards.end());
    }
    const ParetoMask mask = nd_set(pooled);
    for (int idx : mask.selected) {
      selected[idx / N].push_back(idx % N);
    }
  } else {
    for (int k = 0; k < K; ++k) {
      selected[k] = nd_set(batches[k].rewards).selected;
    }
  }

  for (int k = 0; k < K; ++k) {
    if (selected[k].empty()) continue;  // possible only under pooled fronts
    const double inv_front = 1.0 / static_cast<double>(selected[k].size());
    std::vector<double> weights(N, 0.0);
    for (int i : selected[k]) {
      weights[i] = batches[k].rewards[i][k] * inv_front;
    }
    if (update_t2i) {
      accumulate_t2i(sys, batches[k].trajs, weights, selected[k]);
    }
    if (update_pen) {
      accumulate_pen(sys, cfg, batches[k], k,
                     cfg.pen_use_front ? selected[k] : all_indices(N));
    }
  }

  const double norm_t2i = sys.t2i.grad_norm();
  const double norm_pen = sys.pen.params().grad_norm();
  if (update_t2i) {
    sys.t2i.clip_grad_norm(cfg.optim.clip_norm);
    sys.t2i.adam_step(cfg.optim.lr_t2i, cfg.optim.beta1, cfg.optim.beta2,
                      cfg.optim.eps);
  }
  if (update_pen) {
    sys.pen.params().clip_grad_norm(cfg.optim.clip_norm);
    sys.pen.params().adam_step(cfg.optim.lr_pen, cfg.optim.beta1,
                               cfg.optim.beta2, cfg.optim.eps);
  }

  const double seconds = now_seconds() - t_start;
  std::vector<IterationMetrics> rows;
  rows.reserve(K);
  for (int k = 0; k < K; ++k) {
    IterationMetrics m;
    m.iteration = iteration;
    m.reward_id = k + 1;
    m.mean_rewards = batch_reward_means(batches[k], K);
    m.nd_fraction = static_cast<double>(selected[k].size()) / N;
    m.grad_norm_t2i = norm_t2i;
    m.grad_norm_pen = norm_pen;
    m.seconds = seconds;
    rows.push_back(std::move(m));
  }
  return rows;
}

IterationMetrics weighted_sum_iteration(System& sys, const RunConfig& cfg,
                                        int iteration,
                                        const std::vector<double>& weights,
                                        bool update_t2i, bool update_pen) {
  const double t_start = now_seconds();
  const int K = cfg.n_rewards;
  const int N = cfg.batch_size;
  const int condition = sample_condition(cfg, iteration);

  // slot 1 so that, before any identifier embedding is trained, this batch
  // coincides with the first reward-conditioned batch of the pareto path
  BatchRollout batch = collect_batch(sys, cfg, iteration, 1, condition, {});

  std::vector<double> scalars(N, 0.0);
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < K; ++k) {
      scalars[i] += weights[k] * batch.rewards[i][k];
    }
  }

  if (update_t2i) {
    std::vector<double> sample_weights(N);
    for (int i = 0; i < N; ++i) {
      sample_weights[i] = scalars[i] / static_cast<double>(N);
    }
    accumulate_t2i(sys, batch.trajs, sample_weights, all_indices(N));
  }
  if (update_pen) {
    accumulate_pen_scalar(sys, batch, scalars);
  }

  const double norm_t2i = sys.t2i.grad_norm();
  const double norm_pen = sys.pen.params().grad_norm();
  if (update_t2i) {
    sys.t2i.clip_grad_norm(cfg.optim.clip_norm);
    sys.t2i.adam_step(cfg.optim.lr_t2i, cfg.optim.beta1, cfg.optim.beta2,
                      cfg.optim.eps);
  }
  if (update_pen) {
    sys.pen.params().clip_grad_norm(cfg.optim.clip_norm);
    sys.pen.params().adam_step(cfg.optim.lr_pen, cfg.optim.beta1,
                               cfg.optim.beta2, cfg.optim.eps);
  }

  IterationMetrics m;
  m.iteration = iteration;
  m.reward_id = cfg.mode == RunMode::SingleReward ? cfg.single_reward_k : 0;
  m.mean_rewards = batch_reward_means(batch, K);
  m.nd_fraction = nd_fraction(batch.rewards);  // diagnostic only in this mode
  m.grad_norm_t2i = norm_t2i;
  m.grad_norm_pen = norm_pen;
  m.seconds = now_seconds() - t_start;
  return m;
}

std::vector<IterationMetrics> run_iteration(System& sys, const RunConfig& cfg,
                                            int iteration) {
  switch (cfg.mode) {
    case RunMode::Pareto:
      return pareto_iteration(sys, cfg, iteration);
    case RunMode::T2IOnly:
      return pareto_iteration(sys, cfg, iteration, true, false);
    case RunMode::PenOnly:
      return pareto_iteration(sys, cfg, iteration, false, true);
    case RunMode::NoJoint: {
      // PEN phase against the frozen pretrained denoiser, then the denoiser
      // against the frozen PEN; the iteration budget is split evenly.
      const bool pen_phase = iteration < cfg.iterations / 2;
      return pareto_iteration(sys, cfg, iteration, !pen_phase, pen_phase);
    }
    case RunMode::WeightedSum:
      return {weighted_sum_iteration(sys, cfg, iteration, cfg.weights)};
    case RunMode::SingleReward: {
      std::vector<double> weights(cfg.n_rewards, 0.0);
      weights[cfg.single_reward_k - 1] = 1.0;
      return {weighted_sum_iteration(sys, cfg, iteration, weights)};
    }
  }
  return {};
}

// ---- evaluation ------------------------------------------------------------

Vec evaluate(const System& sys, const RunConfig& cfg,
             const std::vector<int>& prefs, std::uint64_t eval_seed) {
  const int n_cond = sys.data.n_conditions;
  const int per_cond = cfg.eval.samples_per_condition;
  Vec total = Vec::Zero(cfg.n_rewards);
  for (int c = 0; c < n_cond; ++c) {
    for (int s = 0; s < per_cond; ++s) {
      Rng expand_rng(derive_seed(eval_seed ^ kSaltEval,
                                 static_cast<std::uint64_t>(c),
                                 static_cast<std::uint64_t>(s), 0));
      Expansion ex = expand(sys.pen, c, expand_rng);
      const PromptBundle bundle =
          prepend_reward_tokens(ex.bundle, prefs, cfg.n_rewards);
      const std::uint64_t sample_seed =
          derive_seed(eval_seed ^ kSaltEval, static_cast<std::uint64_t>(c),
                      static_cast<std::uint64_t>(s), 1);
      Vec2 x0;
      if (cfg.eval.sampler == EvalSampler::Ddim) {
        Rng rng(sample_seed);
        const Vec2 x_T(rng.normal(), rng.normal());
        x0 = ddim_sample(sys.t2i, sys.eps_spec, bundle, cfg.eval.guidance,
                         sys.sched, cfg.eval.ddim_steps, x_T);
      } else {
        x0 = sample_trajectory(sys.t2i, sys.eps_spec, bundle,
                               cfg.eval.guidance, sys.sched, sample_seed)
                 .x0();
      }
      total += eval_reward_vector(sys.rewards, x0, c).values();
    }
  }
  return total / static_cast<double>(n_cond * per_cond);
}

// ---- full runs and metrics files -------------------------------------------

RunResult run_training(System& sys, const RunConfig& cfg,
                       const std::vector<int>& eval_prefs) {
  // fine-tuning starts from a fresh optimizer, matching a run resumed from
  // a params-only checkpoint
  sys.t2i.reset_optimizer();
  sys.pen.params().reset_optimizer();
  RunResult result;
  result.baseline_means = evaluate(sys, cfg, eval_prefs, cfg.seed);
  for (int e = 0; e < cfg.iterations; ++e) {
    auto rows = run_iteration(sys, cfg, e);
    result.metrics.insert(result.metrics.end(),
                          std::make_move_iterator(rows.begin()),
                          std::make_move_iterator(rows.end()));
  }
  result.final_means = evaluate(sys, cfg, eval_prefs, cfg.seed);
  return result;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string metrics_csv(const std::vector<IterationMetrics>& rows, int K) {
  std::ostringstream os;
  os << "iteration,reward_id";
  for (int k = 1; k <= K; ++k) os << ",mean_r" << k;
  os << ",nd_fraction,grad_norm_t2i,grad_norm_pen\n";
  for (const auto& m : rows) {
    os << m.iteration << ',' << m.reward_id;
    for (int k = 0; k < K; ++k) os << ',' << format_double(m.mean_rewards[k]);
    os << ',' << format_double(m.nd_fraction) << ','
       << format_double(m.grad_norm_t2i) << ','
       << format_double(m.grad_norm_pen) << '\n';
  }
  return os.str();
}

std::string timings_csv(const std::vector<IterationMetrics>& rows) {
  std::ostringstream os;
  os << "iteration,reward_id,seconds\n";
  for (const auto& m : rows) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", m.seconds);
    os << m.iteration << ',' << m.reward_id << ',' << buf << '\n';
  }
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << content;
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<IterationMetrics> read_metrics_csv(const std::string& path,
                                               int* K_out) {
  std::ifstream is(path);
  if (!is) throw ConfigError("metrics: cannot open " + path);
  std::string header;
  if (!std::getline(is, header)) {
    throw ConfigError("metrics: empty file " + path);
  }
  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  int K = 0;
  while (K + 2 < static_cast<int>(cols.size()) &&
         cols[K + 2] == "mean_r" + std::to_string(K + 1)) {
    ++K;
  }
  const std::vector<std::string> expected_tail = {"nd_fraction", "grad_norm_t2i",
                                                  "grad_norm_pen"};
  if (K == 0 || cols.size() != static_cast<size_t>(K) + 5 ||
      cols[0] != "iteration" || cols[1] != "reward_id" ||
      !std::equal(expected_tail.begin(), expected_tail.end(),
                  cols.begin() + 2 + K)) {
    throw ConfigError("metrics: unexpected columns in " + path);
  }
  if (K_out) *K_out = K;

  std::vector<IterationMetrics> rows;
  std::string line;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != static_cast<size_t>(K) + 5) {
      throw ConfigError("metrics: bad row at " + path + ":" +
                        std::to_string(line_no));
    }
    IterationMetrics m;
    m.iteration = std::stoi(cells[0]);
    m.reward_id = std::stoi(cells[1]);
    m.mean_rewards.resize(K);
    for (int k = 0; k < K; ++k) m.mean_rewards[k] = std::stod(cells[2 + k]);
    m.nd_fraction = std::stod(cells[2 + K]);
    m.grad_norm_t2i = std::stod(cells[3 + K]);
    m.grad_norm_pen = std::stod(cells[4 + K]);
    rows.push_back(std::move(m));
  }
  return rows;
}

}  // namespace morl
