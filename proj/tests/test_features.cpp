#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "fedbuf/features.hpp"
#include "fedbuf/synthgen.hpp"

using namespace fedbuf;

namespace {

FlowRecord make_flow(std::vector<PacketMeta> packets) {
  FlowRecord f;
  f.packets = std::move(packets);
  for (const auto& p : f.packets) (p.direction == Direction::ClientToServer ? f.total_packets_fwd : f.total_packets_bwd)++;
  f.total_bytes_fwd = 1000;
  f.total_bytes_bwd = 3000;
  f.duration = 0.5;
  return f;
}

double at(const FeatureVector& v, const FeatureSchema& s, const std::string& name) {
  const int i = s.index_of(name);
  EXPECT_GE(i, 0) << name;
  return v.values.at(i);
}

constexpr auto F = Direction::ClientToServer;
constexpr auto B = Direction::ServerToClient;

}  // namespace

TEST(Schema, ComponentCountsSumTo243) {
  const int k = 30;
  const int expected = 2 * k + k + 4 * k + 16 + 8 + 9;  // sequences, flags, directional, stats, base
  const auto s = build_schema(k);
  EXPECT_EQ(expected, 243);
  EXPECT_EQ(s.size(), expected);
  EXPECT_EQ(s.names.front(), "PS_1");
  std::set<std::string> unique(s.names.begin(), s.names.end());
  EXPECT_EQ(unique.size(), s.names.size());
  EXPECT_EQ(std::count(s.names.begin(), s.names.end(), "DST_PS_2"), 1);
}

TEST(Schema, CompactProfileIsA64ColumnProjection) {
  const auto full = build_schema();
  const auto compact = compact_schema();
  ASSERT_EQ(compact.size(), 64);
  EXPECT_GE(compact.index_of("DST_PS_2"), 0);
  for (int i = 0; i < compact.size(); ++i) EXPECT_EQ(full.names[compact.columns[i]], compact.names[i]);
  EXPECT_THROW(schema_for_profile("huge"), Error);
}

TEST(Extract, ServerSizesHandCase) {
  const auto s = build_schema();
  const auto f = make_flow({{1250, 0, F}, {1200, 2, B}, {300, 1, F}, {800, 4, B}});
  const auto v = extract(f, s);
  EXPECT_EQ(at(v, s, "DST_PS_1"), 1200);
  EXPECT_EQ(at(v, s, "DST_PS_2"), 800);
  EXPECT_EQ(at(v, s, "DST_PS_3"), 0);
  EXPECT_EQ(at(v, s, "DST_PS_MEAN"), 1000);
  EXPECT_EQ(at(v, s, "DST_PS_MIN"), 800);
  EXPECT_EQ(at(v, s, "DST_PS_MAX"), 1200);
  // population std: sqrt((200^2 + 200^2) / 2)
  EXPECT_DOUBLE_EQ(at(v, s, "DST_PS_STD"), std::sqrt((200.0 * 200 + 200.0 * 200) / 2));
  EXPECT_EQ(at(v, s, "SRC_PS_2"), 300);
  EXPECT_EQ(at(v, s, "DIR_2"), 1);
  EXPECT_EQ(at(v, s, "DIR_3"), 0);
  EXPECT_EQ(at(v, s, "PPI_PACKET_COUNT"), 4);
  EXPECT_DOUBLE_EQ(at(v, s, "BYTES_RATIO"), 0.75);
}

TEST(Extract, SinglePacketHasZeroIatStats) {
  const auto s = build_schema();
  const auto v = extract(make_flow({{1250, 0, F}}), s);
  EXPECT_EQ(at(v, s, "IAT_1"), 0);
  for (const char* n : {"SRC_IAT_MEAN", "SRC_IAT_STD", "SRC_IAT_MIN", "SRC_IAT_MAX", "IAT_STD"})
    EXPECT_EQ(at(v, s, n), 0) << n;
  EXPECT_EQ(at(v, s, "SRC_PS_MEAN"), 1250);
  EXPECT_EQ(at(v, s, "SRC_PS_STD"), 0);
}

TEST(Extract, NoServerPacketsZeroesDstFeatures) {
  const auto s = build_schema();
  const auto v = extract(make_flow({{1250, 0, F}, {400, 3, F}, {90, 2, F}}), s);
  for (int i = 0; i < s.size(); ++i)
    if (s.names[i].starts_with("DST_") && s.names[i] != "DST_PACKET_COUNT") EXPECT_EQ(v.values[i], 0) << s.names[i];
  EXPECT_EQ(at(v, s, "DST_PACKET_COUNT"), 0);
}

TEST(Extract, DirectionalConsistencyOnGeneratedFlows) {
  GenConfig cfg = default_gen_config();
  cfg.n_clients = 2;
  cfg.n_rounds = 8;
  cfg.rate_min = cfg.rate_max = 50;
  const auto s = build_schema();
  for (const auto& f : generate(cfg)) {
    const auto v = extract(f, s);
    EXPECT_EQ(v.values, extract(f, s).values);  // pure
    EXPECT_EQ(at(v, s, "SRC_PACKET_COUNT") + at(v, s, "DST_PACKET_COUNT"), static_cast<double>(f.packets.size()));

    // Whole-flow size statistics equal the statistics of the merged directional sequences.
    std::vector<double> merged;
    for (int k = 1; k <= 30; ++k) {
      if (k <= at(v, s, "SRC_PACKET_COUNT")) merged.push_back(at(v, s, "SRC_PS_" + std::to_string(k)));
      if (k <= at(v, s, "DST_PACKET_COUNT")) merged.push_back(at(v, s, "DST_PS_" + std::to_string(k)));
    }
    double mean = 0;
    for (double x : merged) mean += x;
    mean /= merged.size();
    double var = 0;
    for (double x : merged) var += (x - mean) * (x - mean);
    EXPECT_NEAR(at(v, s, "PS_MEAN"), mean, 1e-9);
    EXPECT_NEAR(at(v, s, "PS_STD"), std::sqrt(var / merged.size()), 1e-9);
    EXPECT_EQ(at(v, s, "PS_MIN"), *std::min_element(merged.begin(), merged.end()));
    EXPECT_EQ(at(v, s, "PS_MAX"), *std::max_element(merged.begin(), merged.end()));
  }
}

namespace {
FeatureVector fv(std::vector<double> values) {
  FeatureVector v;
  v.values = std::move(values);
  return v;
}
}  // namespace

TEST(Scaler, FitBounds) {
  const std::vector<FeatureVector> one{fv({3, -1, 7})};
  const auto s1 = fit_scaler(one);
  EXPECT_EQ(s1.min(), one[0].values);
  EXPECT_EQ(s1.max(), one[0].values);

  const std::vector<FeatureVector> two{fv({0, 0}), fv({1, 1})};
  const auto s2 = fit_scaler(two);
  EXPECT_EQ(s2.min(), (std::vector<double>{0, 0}));
  EXPECT_EQ(s2.max(), (std::vector<double>{1, 1}));

  const std::vector<FeatureVector> col{fv({2}), fv({4}), fv({10})};
  const auto s3 = fit_scaler(col);
  EXPECT_EQ(s3.min()[0], 2);
  EXPECT_EQ(s3.max()[0], 10);

  EXPECT_THROW(fit_scaler(std::vector<FeatureVector>{}), Error);
}

TEST(Scaler, ApplyHandCasesAndClamp) {
  const Scaler s({2, 5}, {10, 5});
  EXPECT_EQ(apply_scaler(fv({2, 5}), s).values[0], 0.0);
  EXPECT_EQ(apply_scaler(fv({10, 5}), s).values[0], 1.0);
  EXPECT_DOUBLE_EQ(apply_scaler(fv({4, 5}), s).values[0], 0.25);
  EXPECT_EQ(apply_scaler(fv({99, 5}), s).values[0], 1.0);
  EXPECT_EQ(apply_scaler(fv({-3, 5}), s).values[0], 0.0);
  EXPECT_EQ(apply_scaler(fv({4, 123}), s).values[1], 0.0);  // degenerate column
  EXPECT_THROW(apply_scaler(fv({1, 2, 3}), s), Error);
}

TEST(Scaler, OutputAlwaysInUnitInterval) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> d(0, 1e6);
  const Scaler s({-5, 0, 1e3}, {5, 1e-9, 1e3 + 1});
  for (int i = 0; i < 10000; ++i) {
    const auto out = apply_scaler(fv({d(rng), d(rng), d(rng)}), s);
    for (double x : out.values) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    }
  }
}
