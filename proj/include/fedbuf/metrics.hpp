#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fedbuf/error.hpp"
#include "fedbuf/features.hpp"
#include "fedbuf/flowdata.hpp"
#include "fedbuf/nn.hpp"
#include "fedbuf/rng.hpp"

namespace fedbuf {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  void add(int truth, int predicted) { ++counts[truth][predicted]; }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& row : counts)
      for (auto c : row) t += c;
    return t;
  }
  std::uint64_t support(int c) const {
    return std::accumulate(counts[c].begin(), counts[c].end(), std::uint64_t{0});
  }
  std::uint64_t predicted(int c) const {
    std::uint64_t t = 0;
    for (const auto& row : counts) t += row[c];
    return t;
  }
};

inline ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw Error(ErrorCategory::Shape, "truth and predictions differ in length");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

struct ClassMetrics {
  ServiceLabel label;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::uint64_t support = 0;
  // False when the class is absent from both truth and predictions; such
  // classes are left out of the macro average.
  bool active = false;
};

inline std::vector<ClassMetrics> per_class_report(const ConfusionMatrix& cm) {
  std::vector<ClassMetrics> out;
  for (int c = 0; c < kNumClasses; ++c) {
    ClassMetrics m{static_cast<ServiceLabel>(c)};
    const double tp = static_cast<double>(cm.counts[c][c]);
    const auto sup = cm.support(c), pred = cm.predicted(c);
    m.support = sup;
    m.active = sup > 0 || pred > 0;
    m.precision = pred > 0 ? tp / static_cast<double>(pred) : 0.0;
    m.recall = sup > 0 ? tp / static_cast<double>(sup) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    out.push_back(m);
  }
  return out;
}

inline double macro_f1(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCategory::Usage, "macro F1 of an empty confusion matrix");
  double sum = 0;
  int active = 0;
  for (const auto& m : per_class_report(cm)) {
    if (!m.active) continue;
    sum += m.f1;
    ++active;
  }
  return sum / active;
}

struct StabilityStats {
  double mean = 0;
  double stddev = 0;
  double min = 0;
  std::size_t count = 0;
};

/// Population statistics over series[first..last] (inclusive); non-finite
/// entries (stalled rounds) are skipped.
inline StabilityStats stability(std::span<const double> series, std::size_t first, std::size_t last) {
  if (first > last || last >= series.size())
    throw Error(ErrorCategory::Usage, "stability window [" + std::to_string(first) + ", " + std::to_string(last) +
                                          "] is empty or outside the series (length " +
                                          std::to_string(series.size()) + ")");
  std::vector<double> xs;
  for (std::size_t i = first; i <= last; ++i)
    if (std::isfinite(series[i])) xs.push_back(series[i]);
  if (xs.empty()) throw Error(ErrorCategory::Usage, "stability window holds no finite values");
  StabilityStats s;
  s.count = xs.size();
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  s.min = *std::min_element(xs.begin(), xs.end());
  double ss = 0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(xs.size()));
  return s;
}

inline StabilityStats stability(std::span<const double> series) {
  if (series.empty()) throw Error(ErrorCategory::Usage, "stability of an empty series");
  return stability(series, 0, series.size() - 1);
}

struct FeatureImportance {
  std::string feature;
  int schema_index = 0;
  double mean_f1_drop = 0;
};

inline double macro_f1_of(const ModelParams& params, const Dataset& data) {
  const auto pred = predict(params, data.inputs);
  return macro_f1(confusion_matrix(data.targets, pred));
}

/// Mean macro-F1 drop when one column at a time is shuffled across the set.
/// Sorted by drop, descending; ties keep schema order.
inline std::vector<FeatureImportance> permutation_importance(const ModelParams& params, const Dataset& eval,
                                                             const FeatureSchema& schema, int repeats,
                                                             std::uint64_t seed) {
  if (eval.size() < 100) throw Error(ErrorCategory::Usage, "permutation importance needs >= 100 samples");
  if (repeats < 1) throw Error(ErrorCategory::Usage, "repeats must be >= 1");
  if (eval.inputs.cols() != schema.size() || params.input_dim != schema.size())
    throw Error(ErrorCategory::Shape, "schema has " + std::to_string(schema.size()) + " features, model has " +
                                          std::to_string(params.input_dim));
  const double baseline = macro_f1_of(params, eval);
  std::vector<FeatureImportance> out;
  Dataset work = eval;
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(eval.size()));
  for (int j = 0; j < schema.size(); ++j) {
    double drop = 0;
    for (int r = 0; r < repeats; ++r) {
      Rng rng = make_rng(seed, Stream::Importance, {static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(r)});
      std::iota(perm.begin(), perm.end(), Eigen::Index{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      for (Eigen::Index i = 0; i < eval.size(); ++i) work.inputs(i, j) = eval.inputs(perm[i], j);
      drop += baseline - macro_f1_of(params, work);
    }
    work.inputs.col(j) = eval.inputs.col(j);
    out.push_back({schema.names[j], j, drop / repeats});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const FeatureImportance& a, const FeatureImportance& b) { return a.mean_f1_drop > b.mean_f1_drop; });
  return out;
}

}  // namespace fedbuf
