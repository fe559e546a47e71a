#pragma once

// Fully connected classifier N -> 2N -> 3N -> 3N -> 4N -> 7. Every hidden
// block is affine -> batch norm -> LeakyReLU -> inverted dropout. Trained with
// softmax cross-entropy and Adam; everything is seeded and single-threaded so
// (seed, data) determine the trained parameters bit-for-bit.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedbuf/error.hpp"
#include "fedbuf/features.hpp"
#include "fedbuf/flowdata.hpp"
#include "fedbuf/rng.hpp"

namespace fedbuf {

using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

inline constexpr int kHiddenLayers = 4;
inline constexpr std::array<int, kHiddenLayers> kWidthMultipliers = {2, 3, 3, 4};

struct Tensor {
  std::string name;
  Matrix value;
  bool trainable = true;
};

/// Ordered tensor list. Hidden layer l occupies slots 6l..6l+5 (weight, bias,
/// gamma, beta, running mean, running var); the output layer takes the last two.
struct ModelParams {
  int input_dim = 0;
  std::vector<Tensor> tensors;

  static constexpr int kPerHidden = 6;

  Matrix& weight(int layer) { return tensors[slot(layer, 0)].value; }
  const Matrix& weight(int layer) const { return tensors[slot(layer, 0)].value; }
  Matrix& bias(int layer) { return tensors[slot(layer, 1)].value; }
  const Matrix& bias(int layer) const { return tensors[slot(layer, 1)].value; }
  Matrix& gamma(int l) { return tensors[kPerHidden * l + 2].value; }
  const Matrix& gamma(int l) const { return tensors[kPerHidden * l + 2].value; }
  Matrix& beta(int l) { return tensors[kPerHidden * l + 3].value; }
  const Matrix& beta(int l) const { return tensors[kPerHidden * l + 3].value; }
  Matrix& running_mean(int l) { return tensors[kPerHidden * l + 4].value; }
  const Matrix& running_mean(int l) const { return tensors[kPerHidden * l + 4].value; }
  Matrix& running_var(int l) { return tensors[kPerHidden * l + 5].value; }
  const Matrix& running_var(int l) const { return tensors[kPerHidden * l + 5].value; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += static_cast<std::size_t>(t.value.size());
    return n;
  }

 private:
  // layer == kHiddenLayers addresses the output layer.
  static int slot(int layer, int which) {
    return layer < kHiddenLayers ? kPerHidden * layer + which : kPerHidden * kHiddenLayers + which;
  }
};

inline bool same_shape(const ModelParams& a, const ModelParams& b) {
  if (a.tensors.size() != b.tensors.size()) return false;
  for (std::size_t i = 0; i < a.tensors.size(); ++i)
    if (a.tensors[i].value.rows() != b.tensors[i].value.rows() ||
        a.tensors[i].value.cols() != b.tensors[i].value.cols())
      return false;
  return true;
}

inline ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  for (auto& t : z.tensors) t.value.setZero();
  return z;
}

inline std::vector<int> layer_widths(int input_dim) {
  std::vector<int> w{input_dim};
  for (int m : kWidthMultipliers) w.push_back(m * input_dim);
  w.push_back(kNumClasses);
  return w;
}

struct TrainConfig {
  double learning_rate = 0.001;
  int batch_size = 64;
  int epochs = 10;
  double dropout_p = 0.15;
  double leaky_slope = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int early_stop_patience = 3;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(dropout_p >= 0 && dropout_p < 1)) throw Error(ErrorCategory::Config, "dropout_p must be in [0, 1)");
    if (batch_size < 1) throw Error(ErrorCategory::Config, "batch_size must be >= 1");
    if (epochs < 1) throw Error(ErrorCategory::Config, "epochs must be >= 1");
    if (!(learning_rate > 0)) throw Error(ErrorCategory::Config, "learning_rate must be > 0");
    if (early_stop_patience < 1) throw Error(ErrorCategory::Config, "early_stop_patience must be >= 1");
  }
};

/// Uniform fan-in initialization with the LeakyReLU gain: bound = sqrt(6 / ((1 + a^2) fan_in)).
inline ModelParams init_params(int input_dim, std::uint64_t seed, double leaky_slope = 0.1) {
  if (input_dim < 1) throw Error(ErrorCategory::Shape, "input dimension must be >= 1");
  Rng rng = make_rng(seed, Stream::Init);
  const auto widths = layer_widths(input_dim);
  ModelParams p;
  p.input_dim = input_dim;
  auto dense = [&](const std::string& prefix, int fan_in, int fan_out) {
    const double bound = std::sqrt(6.0 / ((1.0 + leaky_slope * leaky_slope) * fan_in));
    Matrix w(fan_in, fan_out);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = (2.0 * uniform01(rng) - 1.0) * bound;
    p.tensors.push_back({prefix + ".weight", std::move(w), true});
    p.tensors.push_back({prefix + ".bias", Matrix::Zero(1, fan_out), true});
  };
  for (int l = 0; l < kHiddenLayers; ++l) {
    const int out = widths[l + 1];
    dense("fc" + std::to_string(l + 1), widths[l], out);
    const std::string bn = "bn" + std::to_string(l + 1);
    p.tensors.push_back({bn + ".gamma", Matrix::Ones(1, out), true});
    p.tensors.push_back({bn + ".beta", Matrix::Zero(1, out), true});
    p.tensors.push_back({bn + ".running_mean", Matrix::Zero(1, out), false});
    p.tensors.push_back({bn + ".running_var", Matrix::Ones(1, out), false});
  }
  dense("out", widths[kHiddenLayers], kNumClasses);
  return p;
}

/// Inputs as rows plus class codes.
struct Dataset {
  RowMatrix inputs;
  std::vector<int> targets;

  Eigen::Index size() const { return inputs.rows(); }
  bool empty() const { return inputs.rows() == 0; }
};

inline Dataset to_dataset(std::span<const FeatureVector> vs, int input_dim) {
  Dataset d;
  d.inputs.resize(static_cast<Eigen::Index>(vs.size()), input_dim);
  d.targets.reserve(vs.size());
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (static_cast<int>(vs[i].values.size()) != input_dim)
      throw Error(ErrorCategory::Shape, "feature vector has " + std::to_string(vs[i].values.size()) +
                                            " values, model expects " + std::to_string(input_dim));
    for (int j = 0; j < input_dim; ++j) d.inputs(static_cast<Eigen::Index>(i), j) = vs[i].values[j];
    d.targets.push_back(static_cast<int>(vs[i].label));
  }
  return d;
}

enum class Mode { Train, Eval };

struct HiddenCache {
  Matrix input;     // layer input
  Matrix xhat;      // normalized pre-activation
  RowVector inv_std;
  Matrix bn_out;    // gamma * xhat + beta, before the activation
  Matrix mask;      // 0 or 1/(1-p); empty when dropout is off
};

struct ForwardCache {
  std::array<HiddenCache, kHiddenLayers> hidden;
  Matrix output_input;
};

struct ForwardResult {
  Matrix logits;
  ForwardCache cache;
};

inline double leaky_relu(double x, double slope) { return x > 0 ? x : slope * x; }

/// Train mode uses batch statistics and updates the running ones; Eval mode
/// reads the running statistics and leaves params untouched.
inline ForwardResult forward(ModelParams& params, const Eigen::Ref<const Matrix>& x, Mode mode, Rng& rng,
                             const TrainConfig& cfg) {
  if (x.cols() != params.input_dim)
    throw Error(ErrorCategory::Shape, "input width " + std::to_string(x.cols()) + " does not match model N=" +
                                          std::to_string(params.input_dim));
  const Eigen::Index batch = x.rows();
  if (mode == Mode::Train && batch < 2)
    throw Error(ErrorCategory::Training, "batch too small for batch statistics");

  ForwardResult res;
  Matrix a = x;
  const double keep = 1.0 - cfg.dropout_p;
  for (int l = 0; l < kHiddenLayers; ++l) {
    HiddenCache& hc = res.cache.hidden[l];
    Matrix z = a * params.weight(l);
    z.rowwise() += params.bias(l).row(0);

    if (mode == Mode::Train) {
      const RowVector mu = z.colwise().mean();
      z.rowwise() -= mu;
      const RowVector var = z.array().square().colwise().mean().matrix();
      hc.inv_std = (var.array() + cfg.bn_eps).rsqrt().matrix();
      const double m = cfg.bn_momentum;
      const double unbiased = static_cast<double>(batch) / static_cast<double>(batch - 1);
      params.running_mean(l).row(0) = (1.0 - m) * params.running_mean(l).row(0) + m * mu;
      params.running_var(l).row(0) = (1.0 - m) * params.running_var(l).row(0) + (m * unbiased) * var;
    } else {
      z.rowwise() -= params.running_mean(l).row(0);
      hc.inv_std = (params.running_var(l).array() + cfg.bn_eps).rsqrt().matrix();
    }
    z.array().rowwise() *= hc.inv_std.array();
    Matrix y = z.array().rowwise() * params.gamma(l).row(0).array();
    y.rowwise() += params.beta(l).row(0);

    Matrix h = y.unaryExpr([s = cfg.leaky_slope](double v) { return leaky_relu(v, s); });
    if (mode == Mode::Train && cfg.dropout_p > 0) {
      hc.mask.resize(h.rows(), h.cols());
      const double scale = 1.0 / keep;
      for (Eigen::Index c = 0; c < h.cols(); ++c)
        for (Eigen::Index r = 0; r < h.rows(); ++r) hc.mask(r, c) = uniform01(rng) < keep ? scale : 0.0;
      h.array() *= hc.mask.array();
    }
    hc.input = std::move(a);
    hc.xhat = std::move(z);
    hc.bn_out = std::move(y);
    a = std::move(h);
  }
  res.logits = a * params.weight(kHiddenLayers);
  res.logits.rowwise() += params.bias(kHiddenLayers).row(0);
  res.cache.output_input = std::move(a);
  return res;
}

/// Eval-mode logits, computed in chunks so very large sets stay bounded in memory.
inline Matrix eval_logits(const ModelParams& params, const Eigen::Ref<const RowMatrix>& x,
                          const TrainConfig& cfg = {}) {
  Matrix out(x.rows(), kNumClasses);
  ModelParams& p = const_cast<ModelParams&>(params);  // Eval mode does not write
  Rng unused(0);
  constexpr Eigen::Index kChunk = 4096;
  for (Eigen::Index start = 0; start < x.rows(); start += kChunk) {
    const Eigen::Index n = std::min(kChunk, x.rows() - start);
    const Matrix chunk = x.middleRows(start, n);
    out.middleRows(start, n) = forward(p, chunk, Mode::Eval, unused, cfg).logits;
  }
  return out;
}

inline Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp().matrix();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

/// Mean softmax cross-entropy over rows.
inline double cross_entropy(const Matrix& logits, std::span<const int> targets) {
  double total = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    const double lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    total += lse - logits(i, targets[i]);
  }
  return total / static_cast<double>(logits.rows());
}

/// Argmax per row; ties go to the lowest class code.
inline std::vector<int> argmax_rows(const Matrix& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < logits.cols(); ++c)
      if (logits(i, c) > logits(i, best)) best = c;
    out[i] = best;
  }
  return out;
}

inline std::vector<int> predict(const ModelParams& params, const Eigen::Ref<const RowMatrix>& inputs,
                                const TrainConfig& cfg = {}) {
  return argmax_rows(eval_logits(params, inputs, cfg));
}

struct LossGrad {
  double loss = 0;
  ModelParams grads;
};

/// Train-mode loss and full backpropagation. The dropout mask drawn during the
/// forward pass is reused on the way back.
inline LossGrad loss_and_grad(ModelParams& params, const Eigen::Ref<const Matrix>& x, std::span<const int> targets,
                              const TrainConfig& cfg, Rng& rng) {
  if (static_cast<Eigen::Index>(targets.size()) != x.rows())
    throw Error(ErrorCategory::Shape, "targets and inputs differ in row count");
  auto fw = forward(params, x, Mode::Train, rng, cfg);
  LossGrad out;
  out.loss = cross_entropy(fw.logits, targets);
  if (!std::isfinite(out.loss)) throw Error(ErrorCategory::Training, "non-finite loss (training diverged)");

  const double batch = static_cast<double>(x.rows());
  Matrix delta = softmax_rows(fw.logits);
  for (Eigen::Index i = 0; i < delta.rows(); ++i) delta(i, targets[i]) -= 1.0;
  delta /= batch;

  out.grads = zeros_like(params);
  out.grads.weight(kHiddenLayers).noalias() = fw.cache.output_input.transpose() * delta;
  out.grads.bias(kHiddenLayers) = delta.colwise().sum();
  Matrix da = delta * params.weight(kHiddenLayers).transpose();

  for (int l = kHiddenLayers - 1; l >= 0; --l) {
    const HiddenCache& hc = fw.cache.hidden[l];
    if (hc.mask.size() > 0) da.array() *= hc.mask.array();
    const double slope = cfg.leaky_slope;
    da.array() *= hc.bn_out.array().unaryExpr([slope](double v) { return v > 0 ? 1.0 : slope; });
    // da is now dL/dy with y = gamma * xhat + beta
    out.grads.gamma(l) = (da.array() * hc.xhat.array()).colwise().sum().matrix();
    out.grads.beta(l) = da.colwise().sum();
    Matrix dxhat = da.array().rowwise() * params.gamma(l).row(0).array();
    const RowVector sum_dxhat = dxhat.colwise().sum();
    const RowVector sum_dxhat_xhat = (dxhat.array() * hc.xhat.array()).colwise().sum().matrix();
    Matrix dz = batch * dxhat;
    dz.rowwise() -= sum_dxhat;
    dz.array() -= hc.xhat.array().rowwise() * sum_dxhat_xhat.array();
    dz.array().rowwise() *= (hc.inv_std / batch).array();

    out.grads.weight(l).noalias() = hc.input.transpose() * dz;
    out.grads.bias(l) = dz.colwise().sum();
    if (l > 0) da.noalias() = dz * params.weight(l).transpose();
  }
  return out;
}

struct AdamState {
  std::vector<Matrix> m, v;
  long step = 0;

  static AdamState for_params(const ModelParams& p) {
    AdamState s;
    for (const auto& t : p.tensors) {
      s.m.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
      s.v.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
    }
    return s;
  }
};

/// Bias-corrected Adam on trainable tensors; running statistics are skipped.
inline void adam_step(ModelParams& params, AdamState& state, const ModelParams& grads, double lr,
                      double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  if (!same_shape(params, grads)) throw Error(ErrorCategory::Shape, "gradient shape mismatch");
  if (state.m.size() != params.tensors.size()) state = AdamState::for_params(params);
  ++state.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    if (!params.tensors[i].trainable) continue;
    const auto g = grads.tensors[i].value.array();
    auto m = state.m[i].array();
    auto v = state.v[i].array();
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.square();
    params.tensors[i].value.array() -= lr * (m / c1) / ((v / c2).sqrt() + eps);
  }
}

struct EvalResult {
  double loss = 0;
  std::vector<int> predictions;
};

inline EvalResult evaluate(const ModelParams& params, const Dataset& data, const TrainConfig& cfg = {}) {
  EvalResult r;
  if (data.empty()) return r;
  const Matrix logits = eval_logits(params, data.inputs, cfg);
  r.loss = cross_entropy(logits, data.targets);
  r.predictions = argmax_rows(logits);
  return r;
}

/// Proximal anchor for the FedProx local objective (mu/2)||theta - anchor||^2.
struct Proximal {
  const ModelParams* anchor = nullptr;
  double mu = 0;
};

struct TrainResult {
  ModelParams params;
  int epochs_run = 0;
  double best_val_loss = std::numeric_limits<double>::quiet_NaN();
  double train_loss = std::numeric_limits<double>::quiet_NaN();  // mean over the last epoch run
};

/// Mini-batch boundaries: full batches, with a trailing batch of one row
/// folded into its predecessor.
inline std::vector<std::pair<Eigen::Index, Eigen::Index>> batch_ranges(Eigen::Index n, int batch_size) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  for (Eigen::Index s = 0; s < n; s += batch_size) out.emplace_back(s, std::min<Eigen::Index>(s + batch_size, n));
  if (out.size() > 1 && out.back().second - out.back().first < 2) {
    out[out.size() - 2].second = out.back().second;
    out.pop_back();
  }
  return out;
}

inline TrainResult train_local(const ModelParams& init, const Dataset& train, const Dataset& val,
                               const TrainConfig& cfg, Proximal prox = {}) {
  cfg.validate();
  if (train.size() < 2) throw Error(ErrorCategory::Training, "batch too small for batch statistics");
  TrainResult res;
  res.params = init;
  ModelParams& params = res.params;
  AdamState adam = AdamState::for_params(params);
  Rng shuffle_rng = make_rng(cfg.seed, Stream::Shuffle);
  Rng dropout_rng = make_rng(cfg.seed, Stream::Dropout);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(train.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto ranges = batch_ranges(train.size(), cfg.batch_size);

  const bool early_stop = !val.empty();
  std::optional<ModelParams> best;
  int since_best = 0;
  Matrix xb;
  std::vector<int> yb;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0;
    for (auto [lo, hi] : ranges) {
      const Eigen::Index n = hi - lo;
      xb.resize(n, train.inputs.cols());
      yb.resize(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) {
        xb.row(i) = train.inputs.row(order[lo + i]);
        yb[i] = train.targets[order[lo + i]];
      }
      auto lg = loss_and_grad(params, xb, yb, cfg, dropout_rng);
      if (prox.anchor && prox.mu > 0) {
        for (std::size_t t = 0; t < params.tensors.size(); ++t)
          if (params.tensors[t].trainable)
            lg.grads.tensors[t].value += prox.mu * (params.tensors[t].value - prox.anchor->tensors[t].value);
      }
      adam_step(params, adam, lg.grads, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
      loss_sum += lg.loss * static_cast<double>(n);
    }
    res.train_loss = loss_sum / static_cast<double>(train.size());
    res.epochs_run = epoch + 1;
    if (!early_stop) continue;
    const double vl = evaluate(params, val, cfg).loss;
    if (!std::isfinite(vl)) throw Error(ErrorCategory::Training, "non-finite validation loss");
    if (!best || vl < res.best_val_loss) {
      res.best_val_loss = vl;
      best = params;
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      break;
    }
  }
  if (best) params = std::move(*best);
  return res;
}

// ---------------------------------------------------------------------------
// Checkpoint container (all integers little-endian):
//   magic   "FBCK" (4 bytes)
//   u32     version (1)
//   u32     input dimension N
//   u32     layer count (5)
//   u32     tensor count T
//   T times: u32 name length, name bytes (UTF-8), u32 rows, u32 cols,
//            rows*cols IEEE-754 binary64 values in row-major order
// Optional scaler bounds are stored as tensors "scaler.min" / "scaler.max"
// (1 x N) after the model tensors.

inline constexpr std::array<char, 4> kCheckpointMagic = {'F', 'B', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_f64(std::ostream& os, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorCategory::Parse, "truncated checkpoint");
  return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24;
}

inline double get_f64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error(ErrorCategory::Parse, "truncated checkpoint");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{b[i]} << (8 * i);
  return std::bit_cast<double>(bits);
}

inline void put_tensor(std::ostream& os, const std::string& name, const Matrix& m) {
  put_u32(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u32(os, static_cast<std::uint32_t>(m.rows()));
  put_u32(os, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(os, m(r, c));
}

}  // namespace detail

struct Checkpoint {
  ModelParams params;
  std::optional<Scaler> scaler;
};

inline void save_checkpoint(std::ostream& os, const ModelParams& params, const Scaler* scaler = nullptr) {
  os.write(kCheckpointMagic.data(), 4);
  detail::put_u32(os, kCheckpointVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(params.input_dim));
  detail::put_u32(os, kHiddenLayers + 1);
  detail::put_u32(os, static_cast<std::uint32_t>(params.tensors.size() + (scaler ? 2 : 0)));
  for (const auto& t : params.tensors) detail::put_tensor(os, t.name, t.value);
  if (scaler) {
    const auto n = static_cast<Eigen::Index>(scaler->size());
    detail::put_tensor(os, "scaler.min", Eigen::Map<const Matrix>(scaler->min().data(), 1, n));
    detail::put_tensor(os, "scaler.max", Eigen::Map<const Matrix>(scaler->max().data(), 1, n));
  }
}

inline void save_checkpoint(const std::string& path, const ModelParams& params, const Scaler* scaler = nullptr) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCategory::Io, "cannot open for writing: " + path);
  save_checkpoint(os, params, scaler);
  if (!os) throw Error(ErrorCategory::Io, "write failed: " + path);
}

inline Checkpoint load_checkpoint(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || magic != kCheckpointMagic)
    throw Error(ErrorCategory::Parse, "not a checkpoint (bad magic)");
  const auto version = detail::get_u32(is);
  if (version != kCheckpointVersion)
    throw Error(ErrorCategory::Parse, "unsupported checkpoint version " + std::to_string(version));
  const auto n = static_cast<int>(detail::get_u32(is));
  const auto layers = detail::get_u32(is);
  if (layers != kHiddenLayers + 1) throw Error(ErrorCategory::Shape, "unexpected layer count in checkpoint");
  const auto count = detail::get_u32(is);

  Checkpoint ck;
  ck.params = init_params(n, 0);  // template for names, shapes and flags
  std::vector<double> smin, smax;
  std::size_t next = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = detail::get_u32(is);
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw Error(ErrorCategory::Parse, "truncated checkpoint");
    const auto rows = detail::get_u32(is), cols = detail::get_u32(is);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = detail::get_f64(is);
    if (name == "scaler.min" || name == "scaler.max") {
      (name == "scaler.min" ? smin : smax).assign(m.data(), m.data() + m.size());
      continue;
    }
    if (next >= ck.params.tensors.size() || ck.params.tensors[next].name != name)
      throw Error(ErrorCategory::Shape, "unexpected tensor '" + name + "' in checkpoint");
    auto& t = ck.params.tensors[next++];
    if (t.value.rows() != m.rows() || t.value.cols() != m.cols())
      throw Error(ErrorCategory::Shape, "tensor '" + name + "' has unexpected shape");
    t.value = std::move(m);
  }
  if (next != ck.params.tensors.size()) throw Error(ErrorCategory::Shape, "checkpoint is missing tensors");
  if (!smin.empty() || !smax.empty()) ck.scaler = Scaler(std::move(smin), std::move(smax));
  return ck;
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCategory::Io, "cannot open checkpoint: " + path);
  return load_checkpoint(is);
}

}  // namespace fedbuf
