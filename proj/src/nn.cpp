#include "morl/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are little-endian");

namespace morl {

int MlpSpec::layer_in(int l) const {
  return l == 0 ? input_dim : hidden_dims[l - 1];
}

int MlpSpec::layer_out(int l) const {
  return l == n_layers() - 1 ? output_dim : hidden_dims[l];
}

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1) {
    throw std::invalid_argument("MlpSpec: dims must be >= 1");
  }
  for (int h : hidden_dims) {
    if (h < 1) throw std::invalid_argument("MlpSpec: dims must be >= 1");
  }
}

Mat& ParamStore::add(const std::string& name, int rows, int cols) {
  if (entries_.count(name)) {
    throw std::invalid_argument("ParamStore: duplicate name " + name);
  }
  Entry e;
  e.value = Mat::Zero(rows, cols);
  e.grad = Mat::Zero(rows, cols);
  e.m = Mat::Zero(rows, cols);
  e.v = Mat::Zero(rows, cols);
  return entries_.emplace(name, std::move(e)).first->second.value;
}

bool ParamStore::has(const std::string& name) const {
  return entries_.count(name) > 0;
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw std::invalid_argument("ParamStore: unknown name " + name);
  }
  return it->second;
}

ParamStore::Entry& ParamStore::entry(const std::string& name) {
  return const_cast<Entry&>(static_cast<const ParamStore*>(this)->entry(name));
}

Mat& ParamStore::param(const std::string& name) { return entry(name).value; }
const Mat& ParamStore::param(const std::string& name) const {
  return entry(name).value;
}
Mat& ParamStore::grad(const std::string& name) { return entry(name).grad; }
const Mat& ParamStore::grad(const std::string& name) const {
  return entry(name).grad;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

std::int64_t ParamStore::total_size() const {
  std::int64_t n = 0;
  for (const auto& [_, e] : entries_) n += e.value.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [_, e] : entries_) e.grad.setZero();
}

double ParamStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& [_, e] : entries_) sq += e.grad.squaredNorm();
  return std::sqrt(sq);
}

void ParamStore::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& [_, e] : entries_) e.grad *= scale;
  }
}

void ParamStore::adam_step(double lr, double beta1, double beta2, double eps) {
  for (const auto& [name, e] : entries_) {
    if (!e.grad.allFinite()) {
      throw std::runtime_error("adam_step: non-finite gradient in " + name);
    }
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
  for (auto& [name, e] : entries_) {
    e.m = beta1 * e.m + (1.0 - beta1) * e.grad;
    e.v = beta2 * e.v + (1.0 - beta2) * e.grad.cwiseProduct(e.grad);
    const Mat m_hat = e.m / bc1;
    const Mat v_hat = e.v / bc2;
    e.value -= lr * m_hat.cwiseQuotient(v_hat.cwiseSqrt().array().matrix() +
                                        Mat::Constant(e.value.rows(),
                                                      e.value.cols(), eps));
    if (!e.value.allFinite()) {
      throw std::runtime_error("adam_step: non-finite value in " + name);
    }
    e.grad.setZero();
  }
}

void ParamStore::reset_optimizer() {
  step_ = 0;
  for (auto& [_, e] : entries_) {
    e.m.setZero();
    e.v.setZero();
  }
}

bool ParamStore::same_values(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (const auto& [name, e] : entries_) {
    auto it = other.entries_.find(name);
    if (it == other.entries_.end()) return false;
    const Mat& o = it->second.value;
    if (o.rows() != e.value.rows() || o.cols() != e.value.cols()) return false;
    if (std::memcmp(e.value.data(), o.data(),
                    sizeof(double) * static_cast<size_t>(e.value.size())) != 0) {
      return false;
    }
  }
  return true;
}

bool ParamStore::same_grads(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (const auto& [name, e] : entries_) {
    auto it = other.entries_.find(name);
    if (it == other.entries_.end()) return false;
    const Mat& o = it->second.grad;
    if (o.rows() != e.grad.rows() || o.cols() != e.grad.cols()) return false;
    if (std::memcmp(e.grad.data(), o.data(),
                    sizeof(double) * static_cast<size_t>(e.grad.size())) != 0) {
      return false;
    }
  }
  return true;
}

namespace {

constexpr char kMagic[8] = {'M', 'O', 'R', 'L', 'P', 'S', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

void ParamStore::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os.write(kMagic, sizeof kMagic);
  write_u32(os, kVersion);
  write_u32(os, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [name, e] : entries_) {
    write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<std::uint32_t>(e.value.rows()));
    write_u32(os, static_cast<std::uint32_t>(e.value.cols()));
    // row-major payload
    for (Eigen::Index r = 0; r < e.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < e.value.cols(); ++c) {
        const double d = e.value(r, c);
        os.write(reinterpret_cast<const char*>(&d), sizeof d);
      }
    }
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

ParamStore ParamStore::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("not a parameter checkpoint: " + path);
  }
  const std::uint32_t version = read_u32(is);
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version in " + path);
  }
  const std::uint32_t count = read_u32(is);
  ParamStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const std::uint32_t rows = read_u32(is);
    const std::uint32_t cols = read_u32(is);
    Mat& m = store.add(name, static_cast<int>(rows), static_cast<int>(cols));
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) {
        double d = 0.0;
        is.read(reinterpret_cast<char*>(&d), sizeof d);
        m(r, c) = d;
      }
    }
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
  }
  return store;
}

namespace {

double activate(double z, Activation act) {
  switch (act) {
    case Activation::Tanh:
      return std::tanh(z);
    case Activation::Relu:
      return z > 0.0 ? z : 0.0;
    case Activation::Identity:
      return z;
  }
  return z;
}

double activate_grad(double z, Activation act) {
  switch (act) {
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::Relu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::Identity:
      return 1.0;
  }
  return 1.0;
}

std::string weight_name(const std::string& prefix, int l) {
  return prefix + ".W" + std::to_string(l);
}

std::string bias_name(const std::string& prefix, int l) {
  return prefix + ".b" + std::to_string(l);
}

}  // namespace

void add_mlp_params(ParamStore& store, const MlpSpec& spec,
                    const std::string& prefix) {
  spec.validate();
  for (int l = 0; l < spec.n_layers(); ++l) {
    store.add(weight_name(prefix, l), spec.layer_out(l), spec.layer_in(l));
    store.add(bias_name(prefix, l), spec.layer_out(l), 1);
  }
}

void init_mlp(ParamStore& store, const MlpSpec& spec, const std::string& prefix,
              Rng& rng, bool zero_head) {
  for (int l = 0; l < spec.n_layers(); ++l) {
    Mat& w = store.param(weight_name(prefix, l));
    if (zero_head && l == spec.n_layers() - 1) {
      w.setZero();
    } else {
      const double s =
          std::sqrt(6.0 / static_cast<double>(spec.layer_in(l) + spec.layer_out(l)));
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
          w(r, c) = rng.uniform(-s, s);
        }
      }
    }
    store.param(bias_name(prefix, l)).setZero();
  }
}

Vec mlp_forward(const ParamStore& store, const MlpSpec& spec,
                const std::string& prefix, const Vec& x) {
  if (x.size() != spec.input_dim) {
    throw std::invalid_argument("mlp_forward: input length mismatch");
  }
  Vec a = x;
  for (int l = 0; l < spec.n_layers(); ++l) {
    Vec z = store.param(weight_name(prefix, l)) * a +
            store.param(bias_name(prefix, l)).col(0);
    if (l < spec.n_layers() - 1) {
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        z[i] = activate(z[i], spec.activation);
      }
    }
    a = std::move(z);
  }
  return a;
}

Vec mlp_backprop(ParamStore& store, const MlpSpec& spec,
                 const std::string& prefix, const Vec& x, const Vec& upstream) {
  if (x.size() != spec.input_dim) {
    throw std::invalid_argument("mlp_backprop: input length mismatch");
  }
  if (upstream.size() != spec.output_dim) {
    throw std::invalid_argument("mlp_backprop: upstream length mismatch");
  }
  const int L = spec.n_layers();
  std::vector<Vec> inputs(L);   // activation entering layer l
  std::vector<Vec> pre(L);      // pre-activation of layer l
  Vec a = x;
  for (int l = 0; l < L; ++l) {
    inputs[l] = a;
    Vec z = store.param(weight_name(prefix, l)) * a +
            store.param(bias_name(prefix, l)).col(0);
    pre[l] = z;
    if (l < L - 1) {
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        z[i] = activate(z[i], spec.activation);
      }
    }
    a = std::move(z);
  }

  Vec delta = upstream;  // d(loss)/d(pre-activation of current layer)
  for (int l = L - 1; l >= 0; --l) {
    store.grad(weight_name(prefix, l)).noalias() +=
        delta * inputs[l].transpose();
    store.grad(bias_name(prefix, l)).col(0) += delta;
    Vec back = store.param(weight_name(prefix, l)).transpose() * delta;
    if (l > 0) {
      for (Eigen::Index i = 0; i < back.size(); ++i) {
        back[i] *= activate_grad(pre[l - 1][i], spec.activation);
      }
    }
    delta = std::move(back);
  }
  return delta;
}

double finite_diff_check(const std::function<double(ParamStore&)>& loss,
                         ParamStore& params, int n_coords, double h,
                         std::uint64_t seed, double floor) {
  struct Coord {
    std::string name;
    Eigen::Index idx;
  };
  std::vector<Coord> coords;
  Rng rng(seed);
  const auto names = params.names();
  std::int64_t total = params.total_size();
  for (int i = 0; i < n_coords; ++i) {
    std::int64_t flat = static_cast<std::int64_t>(rng.below(
        static_cast<std::uint64_t>(total)));
    for (const auto& name : names) {
      const Eigen::Index sz = params.param(name).size();
      if (flat < sz) {
        coords.push_back({name, static_cast<Eigen::Index>(flat)});
        break;
      }
      flat -= sz;
    }
  }

  double max_rel = 0.0;
  for (const auto& [name, idx] : coords) {
    const double analytic = params.grad(name).data()[idx];
    double* p = params.param(name).data() + idx;
    const double saved = *p;
    *p = saved + h;
    const double up = loss(params);
    *p = saved - h;
    const double down = loss(params);
    *p = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom =
        std::max({std::abs(analytic), std::abs(numeric), floor});
    max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
  }
  return max_rel;
}

}  // namespace morl
