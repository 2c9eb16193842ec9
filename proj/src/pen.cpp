#include "morl/pen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace morl {

namespace {
constexpr const char* kLogits = "logits";

Eigen::VectorXd softmax_row(const Eigen::RowVectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - m).exp().transpose();
  p /= p.sum();
  return p;
}

double log_sum_exp(const Eigen::RowVectorXd& logits) {
  const double m = logits.maxCoeff();
  return m + std::log((logits.array() - m).exp().sum());
}
}  // namespace

PenPolicy::PenPolicy(PenConfig cfg) : cfg_(cfg) {
  if (cfg_.n_original < 1 || cfg_.slots < 1 || cfg_.n_expansion < 2) {
    throw std::invalid_argument("PenConfig: vocabulary/slot sizes too small");
  }
  store_.add(kLogits, cfg_.n_original * cfg_.slots, cfg_.n_expansion);
}

int PenPolicy::row(int original, int slot) const {
  if (original < 0 || original >= cfg_.n_original) {
    throw std::invalid_argument("PenPolicy: unknown condition token");
  }
  if (slot < 0 || slot >= cfg_.slots) {
    throw std::invalid_argument("PenPolicy: slot out of range");
  }
  return original * cfg_.slots + slot;
}

Eigen::VectorXd PenPolicy::probs(int original, int slot) const {
  return softmax_row(store_.param(kLogits).row(row(original, slot)));
}

double PenPolicy::slot_log_prob(int original, int slot, int token) const {
  if (token < 0 || token >= cfg_.n_expansion) {
    throw std::invalid_argument("PenPolicy: unknown expansion token");
  }
  const Eigen::RowVectorXd logits =
      store_.param(kLogits).row(row(original, slot));
  return logits[token] - log_sum_exp(logits);
}

Expansion expand(const PenPolicy& policy, int original, Rng& rng) {
  const PenConfig& cfg = policy.config();
  Expansion out;
  out.bundle.original = original;
  out.bundle.expansions.resize(cfg.slots);
  for (int l = 0; l < cfg.slots; ++l) {
    const Eigen::VectorXd p = policy.probs(original, l);
    const double u = rng.uniform();
    double acc = 0.0;
    int tok = cfg.n_expansion - 1;
    for (int e = 0; e < cfg.n_expansion; ++e) {
      acc += p[e];
      if (u < acc) {
        tok = e;
        break;
      }
    }
    out.bundle.expansions[l] = tok;
    out.log_prob += policy.slot_log_prob(original, l, tok);
  }
  return out;
}

PromptBundle prepend_reward_tokens(PromptBundle bundle, std::vector<int> prefs,
                                   int K) {
  for (int k : prefs) {
    if (k < 1 || k > K) {
      throw std::invalid_argument("prepend_reward_tokens: identifier out of range");
    }
  }
  std::sort(prefs.begin(), prefs.end());
  prefs.erase(std::unique(prefs.begin(), prefs.end()), prefs.end());
  bundle.reward_prefs = std::move(prefs);
  return bundle;
}

double bundle_log_prob(const PenPolicy& policy, const PromptBundle& bundle) {
  if (static_cast<int>(bundle.expansions.size()) != policy.config().slots) {
    throw std::invalid_argument("bundle_log_prob: wrong number of expansions");
  }
  double lp = 0.0;
  for (int l = 0; l < policy.config().slots; ++l) {
    lp += policy.slot_log_prob(bundle.original, l, bundle.expansions[l]);
  }
  return lp;
}

void pen_grad_update(PenPolicy& policy, const PromptBundle& bundle,
                     double log_prob, double reward_scalar) {
  if (!std::isfinite(reward_scalar)) {
    throw std::invalid_argument("pen_grad_update: non-finite reward");
  }
  if (std::abs(bundle_log_prob(policy, bundle) - log_prob) > 1e-9) {
    throw std::invalid_argument(
        "pen_grad_update: log_prob does not match bundle under current policy");
  }
  // d log p / d logits[row] = onehot(token) - softmax(row); accumulate the
  // negated ascent direction so adam_step (a descent update) climbs reward.
  Mat& g = policy.params().grad("logits");
  for (int l = 0; l < policy.config().slots; ++l) {
    const int r = bundle.original * policy.config().slots + l;
    const Eigen::VectorXd p = policy.probs(bundle.original, l);
    g.row(r) += reward_scalar * p.transpose();
    g(r, bundle.expansions[l]) -= reward_scalar;
  }
}

std::vector<std::string> default_expansion_vocab(int n) {
  std::vector<std::string> vocab;
  vocab.reserve(n);
  for (int i = 0; i < n; ++i) vocab.push_back("exp" + std::to_string(i));
  return vocab;
}

void save_vocab(const std::vector<std::string>& vocab, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  for (const auto& tok : vocab) os << tok << "\n";
}

std::vector<std::string> load_vocab(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  std::vector<std::string> vocab;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) vocab.push_back(line);
  }
  return vocab;
}

}  // namespace morl
