#pragma once

#include <string>
#include <vector>

#include "morl/nn.hpp"
#include "morl/rng.hpp"

namespace morl {

// Conditioning recipe for one rollout: the user's condition token, the
// sampled expansion tokens, and any reward-identifier tokens prepended to
// steer the denoiser toward specific objectives.
struct PromptBundle {
  int original = 0;
  std::vector<int> expansions;
  std::vector<int> reward_prefs;  // sorted unique subset of {1..K}
};

struct PenConfig {
  int n_original = 8;       // condition vocabulary size
  int slots = 2;            // expansion tokens per prompt (L)
  int n_expansion = 16;     // expansion vocabulary size
};

// Stochastic prompt expansion policy: an independent categorical
// distribution per (original token, slot), parameterized by a logits table.
// Zero logits (the initial state) give uniform expansions.
class PenPolicy {
 public:
  PenPolicy() : PenPolicy(PenConfig{}) {}
  explicit PenPolicy(PenConfig cfg);

  const PenConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  Eigen::VectorXd probs(int original, int slot) const;
  double slot_log_prob(int original, int slot, int token) const;

 private:
  int row(int original, int slot) const;
  friend struct PenAccess;

  PenConfig cfg_;
  ParamStore store_;
};

struct Expansion {
  PromptBundle bundle;
  double log_prob = 0.0;  // joint log-probability of the sampled expansion
};

// Samples the expansion tokens slot by slot. Throws on an out-of-vocabulary
// condition token.
Expansion expand(const PenPolicy& policy, int original, Rng& rng);

// Returns the bundle with reward_prefs set (set semantics: deduplicated,
// sorted). Throws if any identifier falls outside {1..K}.
PromptBundle prepend_reward_tokens(PromptBundle bundle, std::vector<int> prefs,
                                   int K);

double bundle_log_prob(const PenPolicy& policy, const PromptBundle& bundle);

// REINFORCE accumulation for the expansion policy, oriented so that a
// descent optimizer step increases expected reward. `log_prob` must match
// the bundle under the current policy (guards against stale rollouts).
void pen_grad_update(PenPolicy& policy, const PromptBundle& bundle,
                     double log_prob, double reward_scalar);

// Expansion vocabulary file: one token name per line, position = id.
std::vector<std::string> default_expansion_vocab(int n);
void save_vocab(const std::vector<std::string>& vocab, const std::string& path);
std::vector<std::string> load_vocab(const std::string& path);

}  // namespace morl
