#include "morl/diffusion.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace morl {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr const char* kEmbOrig = "emb_orig";
constexpr const char* kEmbExp = "emb_exp";
constexpr const char* kEmbReward = "emb_reward";
constexpr const char* kEpsPrefix = "eps";
}  // namespace

void DiffusionSchedule::validate() const {
  if (T < 1) throw std::invalid_argument("DiffusionSchedule: T must be >= 1");
  for (int t = 1; t <= T; ++t) {
    if (!(beta(t) > 0.0 && beta(t) < 1.0)) {
      throw std::invalid_argument("DiffusionSchedule: betas must lie in (0,1)");
    }
    if (t > 1 && beta(t) < beta(t - 1)) {
      throw std::invalid_argument("DiffusionSchedule: betas must be non-decreasing");
    }
    if (!(alpha_bar(t) > 0.0 && alpha_bar(t) < 1.0)) {
      throw std::invalid_argument("DiffusionSchedule: alpha_bar out of (0,1)");
    }
    if (t > 1 && alpha_bar(t) >= alpha_bar(t - 1)) {
      throw std::invalid_argument("DiffusionSchedule: alpha_bar must decrease");
    }
    if (!(sigma(t) > 0.0)) {
      throw std::invalid_argument("DiffusionSchedule: sigma must be positive");
    }
  }
}

DiffusionSchedule make_linear_schedule(int T, double beta_min, double beta_max) {
  if (T < 1) throw std::invalid_argument("make_linear_schedule: T must be >= 1");
  DiffusionSchedule s;
  s.T = T;
  s.betas.resize(T);
  s.alphas.resize(T);
  s.alpha_bars.resize(T);
  s.sigmas.resize(T);
  double abar = 1.0;
  for (int t = 1; t <= T; ++t) {
    const double frac = T == 1 ? 0.0
                               : static_cast<double>(t - 1) /
                                     static_cast<double>(T - 1);
    const double beta = beta_min + (beta_max - beta_min) * frac;
    const double prev_abar = abar;
    abar *= 1.0 - beta;
    s.betas[t - 1] = beta;
    s.alphas[t - 1] = 1.0 - beta;
    s.alpha_bars[t - 1] = abar;
    if (t == 1) {
      s.sigmas[0] = std::sqrt(beta);
    } else {
      s.sigmas[t - 1] = std::sqrt((1.0 - prev_abar) / (1.0 - abar) * beta);
    }
  }
  s.validate();
  return s;
}

Vec time_embedding(int t) {
  Vec emb(kTimeEmbDim);
  const int half = kTimeEmbDim / 2;
  for (int j = 0; j < half; ++j) {
    const double freq =
        std::pow(10000.0, -static_cast<double>(j) / static_cast<double>(half));
    emb[2 * j] = std::sin(t * freq);
    emb[2 * j + 1] = std::cos(t * freq);
  }
  return emb;
}

MlpSpec DenoiserConfig::mlp_spec() const {
  MlpSpec spec;
  spec.input_dim = kPointDim + kTimeEmbDim + kCondDim;
  spec.hidden_dims = hidden_dims;
  spec.output_dim = kPointDim;
  spec.activation = Activation::Tanh;
  return spec;
}

void add_denoiser_params(ParamStore& store, const DenoiserConfig& cfg) {
  store.add(kEmbOrig, cfg.n_original, kCondDim);
  store.add(kEmbExp, cfg.n_expansion, kCondDim);
  store.add(kEmbReward, cfg.n_rewards, kCondDim);
  add_mlp_params(store, cfg.mlp_spec(), kEpsPrefix);
}

void init_denoiser(ParamStore& store, const DenoiserConfig& cfg, Rng& rng) {
  // pretraining only ever conditions on original tokens, so expansion
  // embeddings start small (distinguishable but near the pretraining
  // distribution) and identifier embeddings start as exact no-ops
  const double orig_scale = 1.0 / std::sqrt(static_cast<double>(kCondDim));
  const double exp_scale = 0.05;
  for (const char* name : {kEmbOrig, kEmbExp}) {
    const double scale = name == kEmbOrig ? orig_scale : exp_scale;
    Mat& m = store.param(name);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = scale * rng.normal();
      }
    }
  }
  store.param(kEmbReward).setZero();
  init_mlp(store, cfg.mlp_spec(), kEpsPrefix, rng, /*zero_head=*/true);
}

Vec null_condition() { return Vec::Zero(kCondDim); }

Vec original_condition(const ParamStore& store, int token) {
  const Mat& emb = store.param(kEmbOrig);
  if (token < 0 || token >= emb.rows()) {
    throw std::invalid_argument("original_condition: token out of range");
  }
  return emb.row(token).transpose();
}

Vec condition_embedding(const ParamStore& store, const PromptBundle& bundle) {
  Vec cond = original_condition(store, bundle.original);
  const Mat& exp = store.param(kEmbExp);
  for (int e : bundle.expansions) {
    if (e < 0 || e >= exp.rows()) {
      throw std::invalid_argument("condition_embedding: expansion token out of range");
    }
    cond += exp.row(e).transpose();
  }
  const Mat& rew = store.param(kEmbReward);
  for (int k : bundle.reward_prefs) {
    if (k < 1 || k > rew.rows()) {
      throw std::invalid_argument("condition_embedding: reward identifier out of range");
    }
    cond += rew.row(k - 1).transpose();
  }
  return cond;
}

void accumulate_condition_grad(ParamStore& store, const PromptBundle& bundle,
                               const Vec& grad, bool original_only) {
  store.grad(kEmbOrig).row(bundle.original) += grad.transpose();
  if (original_only) return;
  for (int e : bundle.expansions) {
    store.grad(kEmbExp).row(e) += grad.transpose();
  }
  for (int k : bundle.reward_prefs) {
    store.grad(kEmbReward).row(k - 1) += grad.transpose();
  }
}

Vec denoiser_input(const Vec2& x_t, int t, const Vec& cond) {
  Vec in(kPointDim + kTimeEmbDim + kCondDim);
  in.head<kPointDim>() = x_t;
  in.segment<kTimeEmbDim>(kPointDim) = time_embedding(t);
  in.tail<kCondDim>() = cond;
  return in;
}

Vec2 forward_noise(const Vec2& x0, int t, const Vec2& noise,
                   const DiffusionSchedule& sched) {
  if (t < 1 || t > sched.T) {
    throw std::invalid_argument("forward_noise: t out of range");
  }
  const double abar = sched.alpha_bar(t);
  return std::sqrt(abar) * x0 + std::sqrt(1.0 - abar) * noise;
}

Vec2 predict_noise(const ParamStore& store, const MlpSpec& spec,
                   const Vec2& x_t, int t, const Vec& cond) {
  return mlp_forward(store, spec, kEpsPrefix, denoiser_input(x_t, t, cond));
}

namespace {

// shared coefficient layout for both guidance rules
struct GuidanceTerms {
  double main = 1.0;
  double null_text = 0.0;
  double second = 0.0;
};

GuidanceTerms guidance_terms(const GuidanceSpec& g) {
  GuidanceTerms c;
  switch (g.mode) {
    case GuidanceMode::None:
      c.main = 1.0;
      c.null_text = 0.0;
      c.second = 0.0;
      break;
    case GuidanceMode::Cfg:
      c.main = g.w;
      c.null_text = 1.0 - g.w;
      c.second = 0.0;
      break;
    case GuidanceMode::Dual:
      c.main = g.w1;
      c.null_text = 1.0 - g.w1 - g.w2;
      c.second = g.w2;
      break;
  }
  return c;
}

}  // namespace

Vec2 guided_noise(const ParamStore& store, const MlpSpec& spec, const Vec2& x_t,
                  int t, const Vec& cond_main, const Vec* cond_second,
                  const GuidanceSpec& guidance) {
  const GuidanceTerms c = guidance_terms(guidance);
  Vec2 eps = c.main * predict_noise(store, spec, x_t, t, cond_main);
  if (c.null_text != 0.0) {
    eps += c.null_text * predict_noise(store, spec, x_t, t, null_condition());
  }
  if (c.second != 0.0) {
    if (cond_second == nullptr) {
      throw std::invalid_argument("guided_noise: dual guidance needs a second condition");
    }
    eps += c.second * predict_noise(store, spec, x_t, t, *cond_second);
  }
  return eps;
}

Vec2 posterior_mean(const Vec2& x_t, int t, const Vec2& eps_hat,
                    const DiffusionSchedule& sched) {
  const double beta = sched.beta(t);
  const double abar = sched.alpha_bar(t);
  return (x_t - beta / std::sqrt(1.0 - abar) * eps_hat) /
         std::sqrt(sched.alpha(t));
}

double posterior_mean_eps_coeff(int t, const DiffusionSchedule& sched) {
  return -sched.beta(t) /
         (std::sqrt(sched.alpha(t)) * std::sqrt(1.0 - sched.alpha_bar(t)));
}

double gaussian_log_prob_2d(const Vec2& x, const Vec2& mean, double sigma) {
  const double var = sigma * sigma;
  return -std::log(2.0 * kPi * var) - (x - mean).squaredNorm() / (2.0 * var);
}

namespace {

StepResult step_from_eps(const Vec2& x_t, int t, const Vec2& eps_hat,
                         const DiffusionSchedule& sched, Rng& rng) {
  StepResult out;
  out.mean = posterior_mean(x_t, t, eps_hat, sched);
  out.sigma = sched.sigma(t);
  if (!(out.sigma > 0.0)) {
    throw std::invalid_argument("sample_step: sigma must be positive at a stochastic step");
  }
  out.x_prev = out.mean + out.sigma * Vec2(rng.normal(), rng.normal());
  out.log_prob = gaussian_log_prob_2d(out.x_prev, out.mean, out.sigma);
  return out;
}

}  // namespace

StepResult sample_step(const ParamStore& store, const MlpSpec& spec,
                       const Vec2& x_t, int t, const Vec& cond,
                       const DiffusionSchedule& sched, Rng& rng) {
  if (t < 1 || t > sched.T) {
    throw std::invalid_argument("sample_step: t out of range");
  }
  return step_from_eps(x_t, t, predict_noise(store, spec, x_t, t, cond), sched,
                       rng);
}

namespace {

// embeddings a rollout under `guidance` conditions on
struct RolloutConds {
  Vec main;
  Vec second;  // empty unless dual
};

RolloutConds rollout_conds(const ParamStore& store, const PromptBundle& bundle,
                           const GuidanceSpec& guidance) {
  RolloutConds c;
  if (guidance.mode == GuidanceMode::Dual) {
    c.main = original_condition(store, bundle.original);
    c.second = condition_embedding(store, bundle);
  } else {
    c.main = condition_embedding(store, bundle);
  }
  return c;
}

}  // namespace

Trajectory sample_trajectory(const ParamStore& store, const MlpSpec& spec,
                             const PromptBundle& bundle,
                             const GuidanceSpec& guidance,
                             const DiffusionSchedule& sched,
                             std::uint64_t seed) {
  const RolloutConds conds = rollout_conds(store, bundle, guidance);
  Rng rng(seed);

  Trajectory traj;
  traj.bundle = bundle;
  traj.guidance = guidance;
  traj.seed = seed;
  traj.states.reserve(sched.T + 1);
  traj.means.reserve(sched.T);
  traj.sigmas.reserve(sched.T);
  traj.log_probs.reserve(sched.T);

  Vec2 x(rng.normal(), rng.normal());
  traj.states.push_back(x);
  for (int t = sched.T; t >= 1; --t) {
    const Vec2 eps = guided_noise(store, spec, x, t, conds.main,
                                  conds.second.size() ? &conds.second : nullptr,
                                  guidance);
    const StepResult step = step_from_eps(x, t, eps, sched, rng);
    traj.states.push_back(step.x_prev);
    traj.means.push_back(step.mean);
    traj.sigmas.push_back(step.sigma);
    traj.log_probs.push_back(step.log_prob);
    x = step.x_prev;
  }
  return traj;
}

double recompute_log_prob(const Trajectory& traj, int step_index) {
  return gaussian_log_prob_2d(traj.states[step_index + 1],
                              traj.means[step_index], traj.sigmas[step_index]);
}

void accumulate_logprob_grad(ParamStore& store, const MlpSpec& spec,
                             const Trajectory& traj, int step_index,
                             const DiffusionSchedule& sched, double weight) {
  const int t = traj.timestep(step_index);
  const Vec2& x_t = traj.states[step_index];
  const Vec2& x_prev = traj.states[step_index + 1];

  const RolloutConds conds = rollout_conds(store, traj.bundle, traj.guidance);
  const GuidanceTerms coeffs = guidance_terms(traj.guidance);

  const Vec in_main = denoiser_input(x_t, t, conds.main);
  Vec2 eps = coeffs.main * mlp_forward(store, spec, kEpsPrefix, in_main);
  Vec in_null, in_second;
  if (coeffs.null_text != 0.0) {
    in_null = denoiser_input(x_t, t, null_condition());
    eps += coeffs.null_text * mlp_forward(store, spec, kEpsPrefix, in_null);
  }
  if (coeffs.second != 0.0) {
    in_second = denoiser_input(x_t, t, conds.second);
    eps += coeffs.second * mlp_forward(store, spec, kEpsPrefix, in_second);
  }

  const Vec2 mean = posterior_mean(x_t, t, eps, sched);
  if ((mean - traj.means[step_index]).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::logic_error(
        "accumulate_logprob_grad: stored mean not reproducible; parameters "
        "changed since the rollout");
  }
  const double sigma = traj.sigmas[step_index];

  // d log p / d mean, then through the posterior-mean map into eps_hat;
  // negated so the accumulators hold a descent direction.
  const Vec2 dlogp_dmean = (x_prev - mean) / (sigma * sigma);
  const Vec2 upstream =
      -weight * posterior_mean_eps_coeff(t, sched) * dlogp_dmean;

  const Vec in_grad_main =
      mlp_backprop(store, spec, kEpsPrefix, in_main, coeffs.main * upstream);
  accumulate_condition_grad(
      store, traj.bundle, in_grad_main.tail<kCondDim>(),
      /*original_only=*/traj.guidance.mode == GuidanceMode::Dual);
  if (coeffs.null_text != 0.0) {
    // the null condition has no parameters; only the MLP grads matter
    mlp_backprop(store, spec, kEpsPrefix, in_null, coeffs.null_text * upstream);
  }
  if (coeffs.second != 0.0) {
    const Vec in_grad_second = mlp_backprop(store, spec, kEpsPrefix, in_second,
                                            coeffs.second * upstream);
    accumulate_condition_grad(store, traj.bundle,
                              in_grad_second.tail<kCondDim>());
  }
}

Vec2 ddim_sample(const ParamStore& store, const MlpSpec& spec,
                 const PromptBundle& bundle, const GuidanceSpec& guidance,
                 const DiffusionSchedule& sched, int steps, const Vec2& x_T) {
  if (steps < 1 || steps > sched.T) {
    throw std::invalid_argument("ddim_sample: steps must lie in [1, T]");
  }
  const RolloutConds conds = rollout_conds(store, bundle, guidance);

  // evenly spaced timesteps ending at T; taus[i] = round((i+1) T / steps)
  std::vector<int> taus(steps);
  for (int i = 0; i < steps; ++i) {
    taus[i] = static_cast<int>(std::lround(
        static_cast<double>((i + 1) * sched.T) / static_cast<double>(steps)));
    taus[i] = std::max(taus[i], i + 1);
  }

  Vec2 x = x_T;
  for (int i = steps - 1; i >= 0; --i) {
    const int t = taus[i];
    const double abar = sched.alpha_bar(t);
    const double abar_prev = i > 0 ? sched.alpha_bar(taus[i - 1]) : 1.0;
    const Vec2 eps = guided_noise(store, spec, x, t, conds.main,
                                  conds.second.size() ? &conds.second : nullptr,
                                  guidance);
    const Vec2 x0_hat = (x - std::sqrt(1.0 - abar) * eps) / std::sqrt(abar);
    x = std::sqrt(abar_prev) * x0_hat + std::sqrt(1.0 - abar_prev) * eps;
  }
  return x;
}

void dump_trajectory(const Trajectory& traj, std::ostream& os) {
  for (int s = 0; s < traj.T(); ++s) {
    os << traj.timestep(s) << ' ' << traj.states[s].x() << ' '
       << traj.states[s].y() << ' ' << traj.means[s].x() << ' '
       << traj.means[s].y() << ' ' << traj.sigmas[s] << ' '
       << traj.states[s + 1].x() << ' ' << traj.states[s + 1].y() << ' '
       << traj.log_probs[s] << '\n';
  }
}

}  // namespace morl
