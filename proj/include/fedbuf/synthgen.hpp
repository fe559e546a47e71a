#pragma once

// Synthetic multi-client QUIC flow corpus: diurnal Poisson volumes, Dirichlet
// service mixes per client, and per-service packet statistics with a planted
// signature on the size of the second server-to-client packet.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "fedbuf/error.hpp"
#include "fedbuf/flowdata.hpp"
#include "fedbuf/rng.hpp"

namespace fedbuf {

struct Gaussian {
  double mean = 0;
  double stddev = 0;
};

struct ServiceProfile {
  ServiceLabel label = ServiceLabel::Discord;
  Gaussian pkt_size_fwd;   // bytes
  Gaussian pkt_size_bwd;   // bytes
  Gaussian log_iat;        // log of milliseconds
  Gaussian pkt_count;      // packets in the PPI list, clamped to [2, 30]
  double dst_ps2_mode = 0; // centre of the 2nd server-to-client packet size
  double dst_ps2_stddev = 20;
  double server_share = 0.5;  // probability that packets after the 2nd go server-to-client
  double extra_packets = 20;  // mean packets beyond the PPI window
};

struct ClientProfile {
  int client_id = 0;
  std::array<double, kNumClasses> service_mix{};
  double base_rate = 0;     // flows per round at the diurnal peak
  double diurnal_phase = 0; // hours
  double night_floor = 1;
};

struct GenConfig {
  std::uint64_t seed = 42;
  int n_clients = 14;
  int n_rounds = 112;
  double dirichlet_alpha = 1.0;
  double rate_min = 350;
  double rate_max = 650;
  double phase_min = -2;  // hours
  double phase_max = 2;
  double night_floor = 0.05;
  std::vector<ServiceProfile> profiles;
};

inline std::vector<ServiceProfile> default_service_profiles() {
  using L = ServiceLabel;
  // Broad, overlapping size/timing distributions; the 2nd server packet is the
  // sharpest discriminator.
  return {
      {L::Discord, {220, 120}, {480, 260}, {2.6, 1.1}, {12, 5}, 1420, 18, 0.55, 10},
      {L::FacebookGraph, {340, 180}, {620, 320}, {2.2, 1.2}, {14, 6}, 1010, 18, 0.55, 25},
      {L::GoogleWWW, {300, 160}, {700, 340}, {2.0, 1.2}, {16, 6}, 1180, 18, 0.6, 30},
      {L::Instagram, {320, 170}, {760, 340}, {2.1, 1.2}, {18, 6}, 880, 18, 0.62, 60},
      {L::Snapchat, {280, 150}, {660, 320}, {2.4, 1.1}, {15, 6}, 740, 18, 0.58, 35},
      {L::Spotify, {240, 130}, {820, 360}, {2.8, 1.0}, {13, 5}, 1300, 18, 0.6, 80},
      {L::YouTube, {260, 140}, {980, 340}, {1.8, 1.2}, {20, 6}, 590, 18, 0.7, 200},
  };
}

inline GenConfig default_gen_config() {
  GenConfig cfg;
  cfg.profiles = default_service_profiles();
  return cfg;
}

inline void validate(const GenConfig& cfg) {
  auto bad = [](const std::string& field, const std::string& msg) {
    return Error(ErrorCategory::Config, "generator." + field + ": " + msg);
  };
  if (cfg.n_clients < 1) throw bad("n_clients", "must be >= 1");
  if (cfg.n_rounds < 1) throw bad("n_rounds", "must be >= 1");
  if (!(cfg.dirichlet_alpha > 0)) throw bad("dirichlet_alpha", "must be > 0");
  if (!(cfg.rate_min >= 0) || cfg.rate_max < cfg.rate_min) throw bad("rate_min", "need 0 <= rate_min <= rate_max");
  if (cfg.phase_max < cfg.phase_min) throw bad("phase_min", "need phase_min <= phase_max");
  if (!(cfg.night_floor > 0 && cfg.night_floor <= 1)) throw bad("night_floor", "must be in (0, 1]");
  if (cfg.profiles.size() != static_cast<std::size_t>(kNumClasses))
    throw bad("profiles", "need exactly one profile per service");
  for (const auto& p : cfg.profiles) {
    if (p.pkt_size_fwd.stddev < 0 || p.pkt_size_bwd.stddev < 0 || p.log_iat.stddev < 0 ||
        p.pkt_count.stddev < 0 || p.dst_ps2_stddev < 0)
      throw bad("profiles", "standard deviations must be >= 0");
    if (!(p.pkt_size_fwd.mean > 0 && p.pkt_size_bwd.mean > 0 && p.pkt_count.mean > 0 &&
          p.dst_ps2_mode > 0))
      throw bad("profiles", "means must be > 0");
  }
}

/// Hour of day at the midpoint of a 3-hour round.
inline double round_hour(int round) { return 3.0 * (round % 8) + 1.5; }

/// Diurnal volume multiplier in [night_floor, 1], peaking at 14:00 + phase.
inline double diurnal_multiplier_at(double hour_of_day, double phase, double night_floor) {
  const double c = std::cos(2.0 * std::numbers::pi * (hour_of_day - 14.0 - phase) / 24.0);
  return night_floor + (1.0 - night_floor) * (1.0 + c) / 2.0;
}

inline double diurnal_multiplier(int round, double phase, double night_floor) {
  return diurnal_multiplier_at(round_hour(round), phase, night_floor);
}

inline std::vector<ClientProfile> sample_client_profiles(const GenConfig& cfg) {
  validate(cfg);
  Rng rng = make_rng(cfg.seed, Stream::ClientProfiles);
  std::gamma_distribution<double> gamma(cfg.dirichlet_alpha, 1.0);
  std::uniform_real_distribution<double> rate(cfg.rate_min, cfg.rate_max);
  std::uniform_real_distribution<double> phase(cfg.phase_min, cfg.phase_max);

  std::vector<ClientProfile> out;
  out.reserve(cfg.n_clients);
  for (int c = 0; c < cfg.n_clients; ++c) {
    ClientProfile p;
    p.client_id = c;
    double sum = 0;
    for (auto& w : p.service_mix) sum += (w = gamma(rng));
    if (sum > 0) {
      for (auto& w : p.service_mix) w /= sum;
    } else {
      p.service_mix.fill(1.0 / kNumClasses);
    }
    p.base_rate = cfg.rate_max > cfg.rate_min ? rate(rng) : cfg.rate_min;
    p.diurnal_phase = cfg.phase_max > cfg.phase_min ? phase(rng) : cfg.phase_min;
    p.night_floor = cfg.night_floor;
    out.push_back(p);
  }
  return out;
}

namespace detail {

inline std::uint32_t sample_size(Rng& rng, double mean, double stddev) {
  // Truncated normal on [64, 1500] by rejection, with a clamp fallback.
  std::normal_distribution<double> d(mean, stddev);
  for (int i = 0; i < 16; ++i) {
    const double s = d(rng);
    if (s >= 64 && s <= 1500) return static_cast<std::uint32_t>(std::lround(s));
  }
  return static_cast<std::uint32_t>(std::lround(std::clamp(mean, 64.0, 1500.0)));
}

inline FlowRecord sample_flow(Rng& rng, const ServiceProfile& sp, int client, int round) {
  FlowRecord f;
  f.client_id = client;
  f.label = sp.label;
  // Millisecond resolution; strictly inside the round.
  std::uniform_int_distribution<std::int64_t> offset_ms(0, static_cast<std::int64_t>(kRoundSeconds) * 1000 - 1);
  f.start_time = round * kRoundSeconds + static_cast<double>(offset_ms(rng)) / 1000.0;

  std::normal_distribution<double> count_d(sp.pkt_count.mean, sp.pkt_count.stddev);
  const int n = static_cast<int>(std::clamp(std::lround(count_d(rng)), 2L, static_cast<long>(kMaxPackets)));
  std::lognormal_distribution<double> iat_d(sp.log_iat.mean, sp.log_iat.stddev);
  std::bernoulli_distribution server(sp.server_share);

  int server_seen = 0;
  double elapsed_ms = 0;
  std::uint64_t bytes_f = 0, bytes_b = 0, pk_f = 0, pk_b = 0;
  for (int k = 0; k < n; ++k) {
    PacketMeta p;
    // Client opens, server answers, the rest is mixed.
    if (k == 0)
      p.direction = Direction::ClientToServer;
    else if (k == 1)
      p.direction = Direction::ServerToClient;
    else
      p.direction = server(rng) ? Direction::ServerToClient : Direction::ClientToServer;

    if (p.direction == Direction::ServerToClient) {
      ++server_seen;
      p.size = server_seen == 2 ? sample_size(rng, sp.dst_ps2_mode, sp.dst_ps2_stddev)
                                : sample_size(rng, sp.pkt_size_bwd.mean, sp.pkt_size_bwd.stddev);
      bytes_b += p.size;
      ++pk_b;
    } else {
      p.size = k == 0 ? sample_size(rng, 1250, 20)
                      : sample_size(rng, sp.pkt_size_fwd.mean, sp.pkt_size_fwd.stddev);
      bytes_f += p.size;
      ++pk_f;
    }
    p.inter_arrival = k == 0 ? 0.0 : std::round(iat_d(rng) * 1000.0) / 1000.0;
    elapsed_ms += p.inter_arrival;
    f.packets.push_back(p);
  }

  std::poisson_distribution<long> extra_d(sp.extra_packets);
  const long extra = extra_d(rng);
  std::binomial_distribution<long> extra_server(extra, sp.server_share);
  const long extra_b = extra_server(rng);
  const long extra_f = extra - extra_b;
  f.total_packets_fwd = pk_f + static_cast<std::uint64_t>(extra_f);
  f.total_packets_bwd = pk_b + static_cast<std::uint64_t>(extra_b);
  f.total_bytes_fwd = bytes_f + static_cast<std::uint64_t>(extra_f * sp.pkt_size_fwd.mean);
  f.total_bytes_bwd = bytes_b + static_cast<std::uint64_t>(extra_b * sp.pkt_size_bwd.mean);
  const double tail_ms = static_cast<double>(extra) * std::exp(sp.log_iat.mean);
  f.duration = std::round(elapsed_ms + tail_ms) / 1000.0;
  return f;
}

}  // namespace detail

/// Flows for one (round, client) cell, drawn from its own substream.
inline std::vector<FlowRecord> generate_cell(const GenConfig& cfg, const ClientProfile& cp, int round) {
  Rng rng = make_rng(cfg.seed, Stream::Cell,
                     {static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(cp.client_id)});
  const double mean = cp.base_rate * diurnal_multiplier(round, cp.diurnal_phase, cp.night_floor);
  std::vector<FlowRecord> out;
  if (mean <= 0) return out;
  std::poisson_distribution<long> count_d(mean);
  std::discrete_distribution<int> label_d(cp.service_mix.begin(), cp.service_mix.end());
  const long count = count_d(rng);
  out.reserve(count);
  for (long i = 0; i < count; ++i) {
    const int label = label_d(rng);
    out.push_back(detail::sample_flow(rng, cfg.profiles[label], cp.client_id, round));
  }
  return out;
}

/// The whole corpus sorted by start time; flow ids follow that order.
inline std::vector<FlowRecord> generate(const GenConfig& cfg) {
  const auto clients = sample_client_profiles(cfg);
  std::vector<FlowRecord> flows;
  for (int r = 0; r < cfg.n_rounds; ++r)
    for (const auto& cp : clients) {
      auto cell = generate_cell(cfg, cp, r);
      flows.insert(flows.end(), std::make_move_iterator(cell.begin()), std::make_move_iterator(cell.end()));
    }
  std::stable_sort(flows.begin(), flows.end(),
                   [](const FlowRecord& a, const FlowRecord& b) { return a.start_time < b.start_time; });
  for (std::size_t i = 0; i < flows.size(); ++i) flows[i].flow_id = i;
  return flows;
}

}  // namespace fedbuf
