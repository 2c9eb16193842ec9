#include "morl/manifest.hpp"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "morl/errors.hpp"
#include "morl/svg.hpp"

namespace morl {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::map<std::string, std::string> parse_ini(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("manifest line " + std::to_string(line_no) +
                          ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ConfigError("manifest line " + std::to_string(line_no) +
                          ": empty section name");
      }
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("manifest line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("manifest line " + std::to_string(line_no) +
                        ": empty key");
    }
    if (section.empty()) {
      throw ConfigError("manifest line " + std::to_string(line_no) + ": key '" +
                        key + "' outside any section");
    }
    const std::string full = section + "." + key;
    if (!kv.emplace(full, value).second) {
      throw ConfigError("manifest: duplicate key " + full);
    }
  }
  return kv;
}

namespace {

// typed reader that records which keys were consumed
class Fields {
 public:
  explicit Fields(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string str(const std::string& key, const std::string& fallback) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    used_.insert(key);
    return it->second;
  }

  std::string require(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError(key + ": missing required field");
    used_.insert(key);
    return it->second;
  }

  long long integer(const std::string& key, long long fallback) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    used_.insert(key);
    try {
      size_t pos = 0;
      const long long v = std::stoll(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw ConfigError(key + ": expected an integer, got '" + it->second + "'");
    }
  }

  double real(const std::string& key, double fallback) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    used_.insert(key);
    try {
      size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw ConfigError(key + ": expected a number, got '" + it->second + "'");
    }
  }

  bool boolean(const std::string& key, bool fallback) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    used_.insert(key);
    if (it->second == "true" || it->second == "1" || it->second == "on") {
      return true;
    }
    if (it->second == "false" || it->second == "0" || it->second == "off") {
      return false;
    }
    throw ConfigError(key + ": expected a boolean, got '" + it->second + "'");
  }

  void check_all_used() const {
    for (const auto& [key, _] : kv_) {
      if (!used_.count(key)) {
        throw ConfigError(key + ": unknown field");
      }
    }
  }

 private:
  std::map<std::string, std::string> kv_;
  std::set<std::string> used_;
};

GuidanceSpec parse_guidance(Fields& f, const std::string& section,
                            const GuidanceSpec& fallback) {
  GuidanceSpec g = fallback;
  const std::string mode = f.str(section + ".guidance", "");
  if (!mode.empty()) {
    if (mode == "none") {
      g.mode = GuidanceMode::None;
    } else if (mode == "cfg") {
      g.mode = GuidanceMode::Cfg;
    } else if (mode == "dual") {
      g.mode = GuidanceMode::Dual;
    } else {
      throw ConfigError(section + ".guidance: unknown mode '" + mode + "'");
    }
  }
  g.w = f.real(section + ".w", g.w);
  g.w1 = f.real(section + ".w1", g.w1);
  g.w2 = f.real(section + ".w2", g.w2);
  return g;
}

bool filesystem_safe(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
          c == '.')) {
      return false;
    }
  }
  return true;
}

}  // namespace

ExperimentManifest parse_manifest_text(const std::string& text) {
  Fields f(parse_ini(text));
  ExperimentManifest m;
  RunConfig& cfg = m.config;

  m.name = f.require("run.name");
  if (!filesystem_safe(m.name)) {
    throw ConfigError("run.name: must use only [A-Za-z0-9_.-]");
  }
  cfg.mode = parse_run_mode(f.require("run.mode"));
  cfg.seed = static_cast<std::uint64_t>(f.integer("run.seed", 0));
  cfg.iterations = static_cast<int>(f.integer("run.iterations", 200));
  cfg.batch_size = static_cast<int>(f.integer("run.batch_size", 64));
  cfg.workers = static_cast<int>(f.integer("run.workers", 1));
  m.out_dir = f.str("run.out_dir", "runs/" + m.name);
  m.plot = f.boolean("run.plot", true);

  cfg.n_rewards = static_cast<int>(f.integer("rewards.count", 4));
  // optional per-reward constant overrides on top of the default registry
  {
    RewardRegistry defaults = default_registry(cfg.data);
    bool any_override = false;
    std::vector<RewardSpec> specs;
    for (int k = 1; k <= cfg.n_rewards; ++k) {
      if (k > defaults.K()) break;
      RewardSpec spec = defaults.specs[k - 1];
      const std::string p = "rewards.r" + std::to_string(k) + ".";
      const std::string name_before = spec.name;
      spec.name = f.str(p + "name", spec.name);
      spec.bandwidth = f.real(p + "bandwidth", spec.bandwidth);
      spec.radius = f.real(p + "radius", spec.radius);
      spec.gain = f.real(p + "gain", spec.gain);
      spec.direction.x() = f.real(p + "direction_x", spec.direction.x());
      spec.direction.y() = f.real(p + "direction_y", spec.direction.y());
      if (spec.name != name_before || spec.bandwidth != defaults.specs[k - 1].bandwidth ||
          spec.radius != defaults.specs[k - 1].radius ||
          spec.gain != defaults.specs[k - 1].gain ||
          spec.direction != defaults.specs[k - 1].direction) {
        any_override = true;
      }
      specs.push_back(std::move(spec));
    }
    if (any_override) cfg.reward_specs = std::move(specs);
  }

  if (cfg.mode == RunMode::WeightedSum) {
    cfg.weights.resize(cfg.n_rewards);
    for (int k = 1; k <= cfg.n_rewards; ++k) {
      cfg.weights[k - 1] = f.real("weights.r" + std::to_string(k),
                                  std::numeric_limits<double>::quiet_NaN());
      if (!std::isfinite(cfg.weights[k - 1])) {
        throw ConfigError("weights.r" + std::to_string(k) +
                          ": required in weighted_sum mode");
      }
    }
  }
  cfg.single_reward_k = static_cast<int>(f.integer("single_reward.k", 1));

  cfg.pretrain.steps = static_cast<int>(f.integer("pretrain.steps", 3000));
  cfg.pretrain.batch_size =
      static_cast<int>(f.integer("pretrain.batch_size", 32));
  cfg.pretrain.lr = f.real("pretrain.lr", 1e-3);
  cfg.pretrain.lr_final = f.real("pretrain.lr_final", 5e-5);
  cfg.pretrain.cond_dropout = f.real("pretrain.cond_dropout", 0.1);

  cfg.optim.lr_t2i = f.real("optimizer.lr_t2i", 1e-4);
  cfg.optim.lr_pen = f.real("optimizer.lr_pen", 1e-4);
  cfg.optim.beta1 = f.real("optimizer.beta1", 0.9);
  cfg.optim.beta2 = f.real("optimizer.beta2", 0.999);
  cfg.optim.eps = f.real("optimizer.eps", 1e-8);
  cfg.optim.clip_norm = f.real("optimizer.clip_norm", 0.1);

  cfg.schedule_steps = static_cast<int>(f.integer("schedule.timesteps", 20));
  cfg.beta_min = f.real("schedule.beta_min", 1e-4);
  cfg.beta_max = f.real("schedule.beta_max", 0.1);

  cfg.data.n_conditions = static_cast<int>(f.integer("data.conditions", 8));
  cfg.data.ring_radius = f.real("data.ring_radius", 2.0);
  cfg.data.cluster_sigma = f.real("data.cluster_sigma", 0.3);

  cfg.pen.n_original = cfg.data.n_conditions;
  cfg.pen.slots = static_cast<int>(f.integer("pen.expansion_slots", 2));
  cfg.pen.n_expansion = static_cast<int>(f.integer("pen.expansion_vocab", 16));
  cfg.pen_baseline = f.boolean("pen.baseline", true);
  cfg.pen_use_front = f.boolean("pen.update_front_only", true);

  cfg.rollout_guidance = parse_guidance(
      f, "rollout", GuidanceSpec{GuidanceMode::None, 1.0, 1.0, 0.0});
  cfg.pareto_selection = f.boolean("selection.pareto", true);
  cfg.pooled_front = f.boolean("selection.pooled", false);

  cfg.eval.samples_per_condition =
      static_cast<int>(f.integer("eval.samples_per_condition", 128));
  cfg.eval.guidance =
      parse_guidance(f, "eval", GuidanceSpec{GuidanceMode::Cfg, 5.0, 5.0, 5.0});
  const std::string sampler = f.str("eval.sampler", "stochastic");
  if (sampler == "stochastic") {
    cfg.eval.sampler = EvalSampler::Stochastic;
  } else if (sampler == "ddim") {
    cfg.eval.sampler = EvalSampler::Ddim;
  } else {
    throw ConfigError("eval.sampler: unknown sampler '" + sampler + "'");
  }
  cfg.eval.ddim_steps = static_cast<int>(f.integer("eval.ddim_steps", 20));

  f.check_all_used();
  cfg.validate();
  return m;
}

ExperimentManifest load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("manifest: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_manifest_text(ss.str());
}

namespace {

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RunResult execute_manifest(const ExperimentManifest& manifest) {
  namespace fs = std::filesystem;
  const RunConfig& cfg = manifest.config;
  fs::create_directories(manifest.out_dir);
  const auto path = [&](const std::string& leaf) {
    return (fs::path(manifest.out_dir) / leaf).string();
  };

  System sys = make_system(cfg);

  std::vector<std::pair<int, double>> pretrain_losses;
  pretrain(sys, cfg, cfg.pretrain.steps, &pretrain_losses);
  {
    std::ostringstream os;
    os << "step,loss\n";
    for (const auto& [step, loss] : pretrain_losses) {
      os << step << ',' << format_full(loss) << '\n';
    }
    write_file(path("pretrain_loss.csv"), os.str());
  }

  // scalarized baselines carry no preference mechanism; the selection modes
  // evaluate with every identifier active, the paper's inference default
  std::vector<int> eval_prefs;
  if (cfg.mode != RunMode::WeightedSum && cfg.mode != RunMode::SingleReward) {
    for (int k = 1; k <= cfg.n_rewards; ++k) eval_prefs.push_back(k);
  }

  const RunResult result = run_training(sys, cfg, eval_prefs);

  write_file(path("metrics.csv"), metrics_csv(result.metrics, cfg.n_rewards));
  write_file(path("timings.csv"), timings_csv(result.metrics));
  sys.t2i.save(path("t2i.ckpt"));
  sys.pen.params().save(path("pen.ckpt"));
  save_vocab(default_expansion_vocab(cfg.pen.n_expansion), path("vocab.txt"));

  {
    std::ostringstream os;
    os << "name=" << manifest.name << '\n';
    os << "mode=" << to_string(cfg.mode) << '\n';
    os << "iterations=" << cfg.iterations << '\n';
    os << "batch_size=" << cfg.batch_size << '\n';
    os << "seed=" << cfg.seed << '\n';
    for (int k = 0; k < cfg.n_rewards; ++k) {
      os << "baseline_mean_r" << (k + 1) << '='
         << format_full(result.baseline_means[k]) << '\n';
    }
    for (int k = 0; k < cfg.n_rewards; ++k) {
      os << "final_mean_r" << (k + 1) << '='
         << format_full(result.final_means[k]) << '\n';
    }
    write_file(path("summary.txt"), os.str());
  }

  if (manifest.plot) {
    write_file(path("curves.svg"),
               render_metrics_svg(result.metrics, cfg.n_rewards));
  }
  return result;
}

}  // namespace morl
