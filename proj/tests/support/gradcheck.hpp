#pragma once

// Finite-difference oracle shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fedbuf/nn.hpp"

namespace fedbuf::testing_support {

struct GradCheckResult {
  double max_tensor_error = 0;  // max over tensors of |a - n| / max(|a|, |n|, 1e-6), Euclidean norms
  double max_element_error = 0; // |a - n| / max(|a|, |n|, 1e-6), over checked coordinates
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
};

struct GradInstance {
  ModelParams params;
  Matrix x;
  std::vector<int> y;
};

inline GradInstance random_grad_instance(int n, int batch, std::uint64_t seed) {
  GradInstance g;
  g.params = init_params(n, seed);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  // Batch-norm affine parameters off their trivial values.
  for (int l = 0; l < kHiddenLayers; ++l) {
    for (Eigen::Index i = 0; i < g.params.gamma(l).size(); ++i) g.params.gamma(l)(i) = u(rng);
    for (Eigen::Index i = 0; i < g.params.beta(l).size(); ++i) g.params.beta(l)(i) = u(rng) - 1.0;
  }
  std::uniform_real_distribution<double> ux(0, 1);
  g.x.resize(batch, n);
  for (Eigen::Index i = 0; i < g.x.size(); ++i) g.x.data()[i] = ux(rng);
  std::uniform_int_distribution<int> uc(0, kNumClasses - 1);
  for (int i = 0; i < batch; ++i) g.y.push_back(uc(rng));
  return g;
}

namespace detail {
inline std::vector<bool> activation_signs(ModelParams p, const Matrix& x, const TrainConfig& cfg, double& loss,
                                          const std::vector<int>& y) {
  Rng rng(0);
  const auto fw = forward(p, x, Mode::Train, rng, cfg);
  loss = cross_entropy(fw.logits, y);
  std::vector<bool> s;
  for (const auto& hc : fw.cache.hidden)
    for (Eigen::Index i = 0; i < hc.bn_out.size(); ++i) s.push_back(hc.bn_out.data()[i] > 0);
  return s;
}
}  // namespace detail

/// Central differences with step h over every trainable coordinate, dropout
/// off, batch-norm in batch mode. Coordinates whose +-h perturbation moves any
/// LeakyReLU input across zero are skipped: the loss is not differentiable on
/// that interval, so the difference quotient is not a gradient estimate there.
inline GradCheckResult gradient_check(const GradInstance& inst, double h = 1e-4) {
  TrainConfig cfg;
  cfg.dropout_p = 0;
  ModelParams work = inst.params;
  Rng rng(0);
  const auto analytic = loss_and_grad(work, inst.x, inst.y, cfg, rng).grads;
  double base_loss = 0;
  const auto base_signs = detail::activation_signs(inst.params, inst.x, cfg, base_loss, inst.y);

  GradCheckResult res;
  for (std::size_t t = 0; t < inst.params.tensors.size(); ++t) {
    if (!inst.params.tensors[t].trainable) continue;
    double diff2 = 0, a2 = 0, n2 = 0;
    for (Eigen::Index i = 0; i < inst.params.tensors[t].value.size(); ++i) {
      ModelParams plus = inst.params, minus = inst.params;
      plus.tensors[t].value.data()[i] += h;
      minus.tensors[t].value.data()[i] -= h;
      double lp = 0, lm = 0;
      if (detail::activation_signs(plus, inst.x, cfg, lp, inst.y) != base_signs ||
          detail::activation_signs(minus, inst.x, cfg, lm, inst.y) != base_signs) {
        ++res.skipped_kinks;
        continue;
      }
      const double numeric = (lp - lm) / (2 * h);
      const double a = analytic.tensors[t].value.data()[i];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
      res.max_element_error =
          std::max(res.max_element_error, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6}));
      ++res.checked;
    }
    // Hidden-layer biases have an identically zero gradient (batch norm
    // subtracts them out), hence the absolute floor.
    const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-6});
    res.max_tensor_error = std::max(res.max_tensor_error, std::sqrt(diff2) / denom);
  }
  return res;
}

}  // namespace fedbuf::testing_support
