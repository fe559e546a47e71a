#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fedbuf/metrics.hpp"

using namespace fedbuf;

namespace {

// Independent macro-F1: counts straight from the label lists, averaged over
// classes that appear in truth or predictions.
double oracle_macro_f1(const std::vector<int>& truth, const std::vector<int>& pred) {
  double sum = 0;
  int active = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    int tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      tp += truth[i] == c && pred[i] == c;
      fp += truth[i] != c && pred[i] == c;
      fn += truth[i] == c && pred[i] != c;
    }
    if (tp + fp + fn == 0) continue;
    ++active;
    sum += 2.0 * tp / (2.0 * tp + fp + fn);
  }
  return sum / active;
}

}  // namespace

TEST(MacroF1, HandCase) {
  const std::vector<int> truth{0, 0, 0, 1, 1, 2}, pred{0, 0, 1, 1, 2, 2};
  // F1: class 0 = 0.8, class 1 = 0.5, class 2 = 2/3
  const double expected = (0.8 + 0.5 + 2.0 / 3.0) / 3.0;
  EXPECT_NEAR(macro_f1(confusion_matrix(truth, pred)), expected, 1e-12);
  EXPECT_NEAR(expected, 0.655556, 1e-6);
}

TEST(MacroF1, TwoActiveClassesFromCounts) {
  ConfusionMatrix cm;
  cm.counts[0][0] = 8;
  cm.counts[0][1] = 2;
  cm.counts[1][0] = 3;
  cm.counts[1][1] = 7;
  const double p0 = 8.0 / 11.0, r0 = 8.0 / 10.0, p1 = 7.0 / 9.0, r1 = 7.0 / 10.0;
  const double f0 = 2 * p0 * r0 / (p0 + r0), f1 = 2 * p1 * r1 / (p1 + r1);
  EXPECT_NEAR(f0, 0.7619, 1e-4);
  EXPECT_NEAR(f1, 0.7368, 1e-4);
  EXPECT_NEAR(macro_f1(cm), (f0 + f1) / 2, 1e-12);
  EXPECT_NEAR(macro_f1(cm), 0.7494, 1e-4);
}

TEST(MacroF1, PerfectPredictionsScoreOne) {
  const std::vector<int> y{0, 1, 2, 3, 4, 5, 6, 6, 3};
  EXPECT_DOUBLE_EQ(macro_f1(confusion_matrix(y, y)), 1.0);
}

TEST(MacroF1, ZeroRecallClassCountsAsZero) {
  // Class 1 is present in truth but never predicted.
  const std::vector<int> truth{0, 0, 1, 1}, pred{0, 0, 0, 0};
  const auto report = per_class_report(confusion_matrix(truth, pred));
  EXPECT_TRUE(report[1].active);
  EXPECT_EQ(report[1].f1, 0.0);
  EXPECT_NEAR(macro_f1(confusion_matrix(truth, pred)), (2.0 / 3.0 + 0.0) / 2.0, 1e-12);
}

TEST(MacroF1, AbsentClassesAreExcluded) {
  const std::vector<int> y{2, 2, 5};
  const auto report = per_class_report(confusion_matrix(y, y));
  int active = 0;
  for (const auto& m : report) active += m.active;
  EXPECT_EQ(active, 2);
  EXPECT_DOUBLE_EQ(macro_f1(confusion_matrix(y, y)), 1.0);
}

TEST(MacroF1, EmptyMatrixIsAnError) {
  EXPECT_THROW(macro_f1(ConfusionMatrix{}), Error);
}

TEST(MacroF1, MatchesOracleAndBounds) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> cls(0, kNumClasses - 1);
  std::uniform_int_distribution<int> len(1, 300);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = len(rng);
    std::vector<int> t(n), p(n);
    for (int i = 0; i < n; ++i) {
      t[i] = cls(rng);
      p[i] = rng() % 3 == 0 ? cls(rng) : t[i];
    }
    const double f1 = macro_f1(confusion_matrix(t, p));
    EXPECT_NEAR(f1, oracle_macro_f1(t, p), 1e-12);
    EXPECT_GE(f1, 0.0);
    EXPECT_LE(f1, 1.0);

    // Relabeling both sides by a permutation leaves the score unchanged.
    std::array<int, kNumClasses> perm{};
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> t2(n), p2(n);
    for (int i = 0; i < n; ++i) {
      t2[i] = perm[t[i]];
      p2[i] = perm[p[i]];
    }
    EXPECT_NEAR(macro_f1(confusion_matrix(t2, p2)), f1, 1e-12);
  }
}

TEST(Stability, HandCases) {
  const std::vector<double> s{0.9, 0.5};
  const auto st = stability(s);
  EXPECT_NEAR(st.mean, 0.7, 1e-12);
  EXPECT_NEAR(st.stddev, 0.2, 1e-12);
  EXPECT_DOUBLE_EQ(st.min, 0.5);

  const std::vector<double> flat(10, 0.83);
  EXPECT_NEAR(stability(flat).stddev, 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(stability(flat).min, 0.83);
}

TEST(Stability, WindowIsInclusiveAndSkipsStalledRounds) {
  const std::vector<double> s{0.1, 0.2, std::nan(""), 0.6, 0.9};
  const auto st = stability(s, 1, 3);
  EXPECT_EQ(st.count, 2u);
  EXPECT_NEAR(st.mean, 0.4, 1e-12);
  EXPECT_NEAR(st.stddev, 0.2, 1e-12);
}

TEST(Stability, EmptyWindowIsAnError) {
  const std::vector<double> s{0.5, 0.6};
  EXPECT_THROW(stability(s, 1, 0), Error);
  EXPECT_THROW(stability(s, 0, 2), Error);
  EXPECT_THROW(stability(std::vector<double>{}), Error);
  const std::vector<double> nans{std::nan(""), std::nan("")};
  EXPECT_THROW(stability(nans), Error);
}

namespace {

// A model whose prediction depends on feature 0 only: hidden layers reduce to
// a scaled copy of the input through batch-norm running stats, and the output
// weights read feature 0.
struct ToyModel {
  ModelParams params;
  Dataset data;
  FeatureSchema schema;
};

ToyModel feature0_model(std::uint64_t seed) {
  ToyModel m;
  const int n = 3;
  m.params = init_params(n, seed);
  // Identity-like path for feature 0 through each hidden block.
  for (int l = 0; l <= kHiddenLayers; ++l) m.params.weight(l).setZero();
  for (int l = 0; l < kHiddenLayers; ++l) m.params.weight(l)(0, 0) = 1.0;
  m.params.weight(kHiddenLayers)(0, 1) = 10.0;
  m.params.bias(kHiddenLayers)(0, 0) = 0.0;  // class 1 iff normalized feature 0 > 0
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  m.data.inputs.resize(400, n);
  for (int i = 0; i < 400; ++i) {
    for (int j = 0; j < n; ++j) m.data.inputs(i, j) = u(rng);
    m.data.inputs(i, 2) = 0.25;  // constant column
    m.data.targets.push_back(m.data.inputs(i, 0) > 0 ? 1 : 0);
  }
  m.schema.names = {"A", "B", "C"};
  m.schema.columns = {0, 1, 2};
  return m;
}

}  // namespace

TEST(PermutationImportance, ConstantAndUnusedFeaturesDropNothing) {
  auto m = feature0_model(1);
  ASSERT_GT(macro_f1_of(m.params, m.data), 0.95);
  const auto ranking = permutation_importance(m.params, m.data, m.schema, 3, 5);
  ASSERT_EQ(ranking.size(), 3u);
  EXPECT_EQ(ranking[0].feature, "A");
  EXPECT_GT(ranking[0].mean_f1_drop, 0.3);
  for (std::size_t i = 1; i < ranking.size(); ++i) EXPECT_NEAR(ranking[i].mean_f1_drop, 0.0, 1e-12);
  // Ties keep schema order.
  EXPECT_EQ(ranking[1].feature, "B");
  EXPECT_EQ(ranking[2].feature, "C");
}

TEST(PermutationImportance, DeterministicAndValidated) {
  auto m = feature0_model(2);
  const auto a = permutation_importance(m.params, m.data, m.schema, 2, 9);
  const auto b = permutation_importance(m.params, m.data, m.schema, 2, 9);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].feature, b[i].feature);
    EXPECT_EQ(a[i].mean_f1_drop, b[i].mean_f1_drop);
  }
  Dataset small = m.data;
  small.inputs.conservativeResize(99, Eigen::NoChange);
  small.targets.resize(99);
  EXPECT_THROW(permutation_importance(m.params, small, m.schema, 1, 1), Error);
  FeatureSchema wrong = m.schema;
  wrong.names.push_back("D");
  wrong.columns.push_back(3);
  EXPECT_THROW(permutation_importance(m.params, m.data, wrong, 1, 1), Error);
}
