#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "fedbuf/features.hpp"
#include "fedbuf/synthgen.hpp"

using namespace fedbuf;

TEST(Diurnal, PeakTroughAndFlat) {
  EXPECT_NEAR(diurnal_multiplier_at(14.0, 0.0, 0.1), 1.0, 1e-12);
  EXPECT_NEAR(diurnal_multiplier_at(2.0, 0.0, 0.1), 0.1, 1e-12);
  for (int r = 0; r < 24; ++r) EXPECT_DOUBLE_EQ(diurnal_multiplier(r, 1.7, 1.0), 1.0);
}

TEST(Diurnal, RangeAndPeriodEightRounds) {
  for (double phase : {-2.0, 0.0, 1.3})
    for (int r = 0; r < 40; ++r) {
      const double m = diurnal_multiplier(r, phase, 0.2);
      EXPECT_GE(m, 0.2 - 1e-12);
      EXPECT_LE(m, 1.0 + 1e-12);
      EXPECT_NEAR(m, diurnal_multiplier(r + 8, phase, 0.2), 1e-12);
    }
}

TEST(ClientProfiles, LargeAlphaIsNearUniform) {
  GenConfig cfg = default_gen_config();
  cfg.dirichlet_alpha = 1e6;
  for (const auto& p : sample_client_profiles(cfg)) {
    double sum = 0;
    for (double w : p.service_mix) {
      EXPECT_NEAR(w, 1.0 / 7.0, 0.01);
      sum += w;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(ClientProfiles, DeterministicWithFourteenIds) {
  const GenConfig cfg = default_gen_config();
  const auto a = sample_client_profiles(cfg), b = sample_client_profiles(cfg);
  ASSERT_EQ(a.size(), 14u);
  for (int i = 0; i < 14; ++i) {
    EXPECT_EQ(a[i].client_id, i);
    EXPECT_EQ(a[i].service_mix, b[i].service_mix);
    EXPECT_EQ(a[i].base_rate, b[i].base_rate);
    EXPECT_EQ(a[i].diurnal_phase, b[i].diurnal_phase);
    EXPECT_GE(a[i].base_rate, cfg.rate_min);
    EXPECT_LE(a[i].base_rate, cfg.rate_max);
  }
}

TEST(ClientProfiles, InvalidConfigIsRejected) {
  GenConfig cfg = default_gen_config();
  cfg.dirichlet_alpha = 0;
  EXPECT_THROW(sample_client_profiles(cfg), Error);
  cfg = default_gen_config();
  cfg.night_floor = 0;
  EXPECT_THROW(sample_client_profiles(cfg), Error);
}

TEST(Generate, ZeroRateGivesEmptyCorpus) {
  GenConfig cfg = default_gen_config();
  cfg.rate_min = cfg.rate_max = 0;
  EXPECT_TRUE(generate(cfg).empty());
}

TEST(Generate, PacketCountsClampedAndFlowsValid) {
  GenConfig cfg = default_gen_config();
  cfg.n_clients = 3;
  cfg.n_rounds = 16;
  cfg.rate_min = cfg.rate_max = 60;
  const auto flows = generate(cfg);
  ASSERT_FALSE(flows.empty());
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const auto& f = flows[i];
    EXPECT_GE(f.packets.size(), 2u);
    EXPECT_LE(f.packets.size(), 30u);
    EXPECT_EQ(validate(f), "");
    EXPECT_EQ(f.flow_id, i);
    if (i) EXPECT_LE(flows[i - 1].start_time, f.start_time);
    EXPECT_LT(round_of(f.start_time), cfg.n_rounds);
  }
}

TEST(Generate, TroughVolumeFollowsMultiplier) {
  // Expected counts are base_rate * multiplier; at night_floor 0.05 the trough
  // round (hour 1.5) sits at 0.05 + 0.95 * (1 + cos(2pi*12.5/24)) / 2 ~= 0.059
  // of the peak round (hour 13.5, ~0.996).
  const double trough_expected = diurnal_multiplier_at(1.5, 0, 0.05);
  const double peak_expected = diurnal_multiplier_at(13.5, 0, 0.05);
  ASSERT_LT(trough_expected / peak_expected, 0.15);

  double trough = 0, peak = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GenConfig cfg = default_gen_config();
    cfg.seed = seed;
    cfg.n_clients = 4;
    cfg.n_rounds = 16;
    cfg.rate_min = cfg.rate_max = 100;
    cfg.phase_min = cfg.phase_max = 0;
    cfg.night_floor = 0.05;
    for (const auto& f : generate(cfg)) {
      const int slot = round_of(f.start_time) % 8;
      if (slot == 0) trough += 1;
      if (slot == 4) peak += 1;
    }
  }
  EXPECT_LE(trough, 0.15 * peak);
}

TEST(Generate, IdenticalConfigGivesIdenticalBytes) {
  GenConfig cfg = default_gen_config();
  cfg.n_clients = 5;
  cfg.n_rounds = 8;
  cfg.rate_min = 20;
  cfg.rate_max = 40;
  std::ostringstream a, b;
  write_flows(a, generate(cfg));
  write_flows(b, generate(cfg));
  EXPECT_EQ(a.str(), b.str());
  cfg.seed += 1;
  std::ostringstream c;
  write_flows(c, generate(cfg));
  EXPECT_NE(a.str(), c.str());
}

TEST(Generate, CellsAreScheduleIndependent) {
  GenConfig cfg = default_gen_config();
  cfg.n_clients = 3;
  cfg.n_rounds = 4;
  const auto clients = sample_client_profiles(cfg);
  // Cell contents do not depend on which other cells were drawn first.
  const auto late_first = generate_cell(cfg, clients[2], 3);
  const auto early = generate_cell(cfg, clients[0], 0);
  const auto late_again = generate_cell(cfg, clients[2], 3);
  EXPECT_EQ(late_first, late_again);
  (void)early;
}

TEST(Generate, LabelMarginalsMatchServiceMix) {
  GenConfig cfg = default_gen_config();
  cfg.n_clients = 1;
  cfg.n_rounds = 40;
  cfg.rate_min = cfg.rate_max = 500;
  cfg.night_floor = 1.0;
  const auto mix = sample_client_profiles(cfg)[0].service_mix;
  std::array<double, kNumClasses> counts{};
  const auto flows = generate(cfg);
  ASSERT_GT(flows.size(), 10000u);
  for (const auto& f : flows) counts[static_cast<int>(f.label)] += 1;
  // Pearson chi-square over classes with non-negligible expected counts.
  double chi2 = 0;
  int dof = -1;
  for (int c = 0; c < kNumClasses; ++c) {
    const double expected = mix[c] * static_cast<double>(flows.size());
    if (expected < 5) continue;
    chi2 += (counts[c] - expected) * (counts[c] - expected) / expected;
    ++dof;
  }
  // 0.999 quantile of chi-square with 6 dof is 22.46.
  EXPECT_LT(chi2, 22.46) << "dof " << dof;
}

TEST(Generate, SecondServerPacketSeparatesClasses) {
  GenConfig cfg = default_gen_config();
  cfg.n_clients = 4;
  cfg.n_rounds = 16;
  cfg.rate_min = cfg.rate_max = 80;
  const auto flows = generate(cfg);
  const auto schema = build_schema();
  const int col = schema.index_of("DST_PS_2");
  ASSERT_GE(col, 0);
  // Decision-stump oracle: nearest planted mode on DST_PS_2 alone.
  const auto profiles = default_service_profiles();
  std::size_t correct = 0;
  for (const auto& f : flows) {
    const double x = extract(f, schema).values[col];
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c)
      if (std::abs(x - profiles[c].dst_ps2_mode) < std::abs(x - profiles[best].dst_ps2_mode)) best = c;
    correct += best == static_cast<int>(f.label);
  }
  EXPECT_GT(static_cast<double>(correct) / flows.size(), 0.5);
}

TEST(ServiceProfiles, DistinctSecondServerPacketModes) {
  const auto p = default_service_profiles();
  std::set<double> modes;
  for (const auto& s : p) modes.insert(s.dst_ps2_mode);
  EXPECT_GE(modes.size(), 6u);
}
