#pragma once

// Flow featurization: bidirectional and per-direction packet sequences,
// per-direction and whole-flow statistics, base flow fields, and min-max
// scaling.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "fedbuf/error.hpp"
#include "fedbuf/flowdata.hpp"

namespace fedbuf {

struct FeatureSchema {
  std::vector<std::string> names;
  int max_packets = kMaxPackets;
  // Column indices into the full extraction layout for max_packets.
  std::vector<int> columns;

  int size() const { return static_cast<int>(names.size()); }

  int index_of(std::string_view name) const {
    for (int i = 0; i < size(); ++i)
      if (names[i] == name) return i;
    return -1;
  }
};

struct FeatureVector {
  std::vector<double> values;
  ServiceLabel label = ServiceLabel::Discord;
  int client_id = 0;
  int round = 0;
};

namespace detail {

inline std::vector<std::string> full_feature_names(int k) {
  std::vector<std::string> n;
  auto seq = [&](const std::string& prefix) {
    for (int i = 1; i <= k; ++i) n.push_back(prefix + std::to_string(i));
  };
  seq("PS_");
  seq("IAT_");
  seq("DIR_");
  seq("SRC_PS_");
  seq("DST_PS_");
  seq("SRC_IAT_");
  seq("DST_IAT_");
  for (const char* dir : {"SRC_", "DST_"})
    for (const char* what : {"PS_", "IAT_"})
      for (const char* stat : {"MEAN", "STD", "MIN", "MAX"}) n.push_back(std::string(dir) + what + stat);
  for (const char* what : {"PS_", "IAT_"})
    for (const char* stat : {"MEAN", "STD", "MIN", "MAX"}) n.push_back(std::string(what) + stat);
  for (const char* base : {"DURATION", "TOTAL_PACKETS_FWD", "TOTAL_PACKETS_BWD", "TOTAL_BYTES_FWD",
                           "TOTAL_BYTES_BWD", "PPI_PACKET_COUNT", "SRC_PACKET_COUNT",
                           "DST_PACKET_COUNT", "BYTES_RATIO"})
    n.push_back(base);
  return n;
}

// Population statistics; an empty sample gives all zeros.
struct Stats {
  double mean = 0, std = 0, min = 0, max = 0;
};

inline Stats stats_of(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  double sum = 0;
  s.min = xs.front();
  s.max = xs.front();
  for (double x : xs) {
    sum += x;
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean = sum / static_cast<double>(xs.size());
  double ss = 0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return s;
}

inline std::vector<double> extract_full(const FlowRecord& flow, int k) {
  const int n = std::min<int>(static_cast<int>(flow.packets.size()), k);
  std::vector<double> ps(k, 0.0), iat(k, 0.0), dir(k, 0.0);
  std::vector<double> src_ps, dst_ps, src_iat, dst_iat, all_ps, all_iat;
  for (int i = 0; i < n; ++i) {
    const auto& p = flow.packets[i];
    ps[i] = p.size;
    iat[i] = p.inter_arrival;
    const bool server = p.direction == Direction::ServerToClient;
    dir[i] = server ? 1.0 : 0.0;
    (server ? dst_ps : src_ps).push_back(p.size);
    (server ? dst_iat : src_iat).push_back(p.inter_arrival);
    all_ps.push_back(p.size);
    all_iat.push_back(p.inter_arrival);
  }

  std::vector<double> out;
  out.reserve(7 * k + 33);
  auto append = [&](const std::vector<double>& v) { out.insert(out.end(), v.begin(), v.end()); };
  auto padded = [&](const std::vector<double>& v) {
    for (int i = 0; i < k; ++i) out.push_back(i < static_cast<int>(v.size()) ? v[i] : 0.0);
  };
  auto append_stats = [&](const std::vector<double>& v) {
    const auto s = stats_of(v);
    out.insert(out.end(), {s.mean, s.std, s.min, s.max});
  };
  append(ps);
  append(iat);
  append(dir);
  padded(src_ps);
  padded(dst_ps);
  padded(src_iat);
  padded(dst_iat);
  append_stats(src_ps);
  append_stats(src_iat);
  append_stats(dst_ps);
  append_stats(dst_iat);
  append_stats(all_ps);
  append_stats(all_iat);

  const double bf = static_cast<double>(flow.total_bytes_fwd), bb = static_cast<double>(flow.total_bytes_bwd);
  out.push_back(flow.duration);
  out.push_back(static_cast<double>(flow.total_packets_fwd));
  out.push_back(static_cast<double>(flow.total_packets_bwd));
  out.push_back(bf);
  out.push_back(bb);
  out.push_back(n);
  out.push_back(static_cast<double>(src_ps.size()));
  out.push_back(static_cast<double>(dst_ps.size()));
  out.push_back(bf + bb > 0 ? bb / (bf + bb) : 0.0);
  return out;
}

}  // namespace detail

/// Full schema: 7 * max_packets + 33 columns (243 for 30 packets).
inline FeatureSchema build_schema(int max_packets = kMaxPackets) {
  if (max_packets < 1 || max_packets > kMaxPackets)
    throw Error(ErrorCategory::Config, "max_packets must be in [1, 30]");
  FeatureSchema s;
  s.max_packets = max_packets;
  s.names = detail::full_feature_names(max_packets);
  s.columns.resize(s.names.size());
  for (std::size_t i = 0; i < s.columns.size(); ++i) s.columns[i] = static_cast<int>(i);
  return s;
}

/// Projection of the full schema onto the named columns, in the given order.
inline FeatureSchema project_schema(const FeatureSchema& full, const std::vector<std::string>& keep) {
  FeatureSchema s;
  s.max_packets = full.max_packets;
  std::unordered_set<std::string> seen;
  for (const auto& name : keep) {
    const int i = full.index_of(name);
    if (i < 0) throw Error(ErrorCategory::Config, "unknown feature: " + name);
    if (!seen.insert(name).second) throw Error(ErrorCategory::Config, "duplicate feature: " + name);
    s.names.push_back(name);
    s.columns.push_back(full.columns[i]);
  }
  return s;
}

/// 64-column reduced profile: first 8 packets of each sequence kind plus the
/// per-direction statistics.
inline FeatureSchema compact_schema() {
  std::vector<std::string> keep;
  for (const char* prefix : {"PS_", "DIR_", "SRC_PS_", "DST_PS_", "SRC_IAT_", "DST_IAT_"})
    for (int i = 1; i <= 8; ++i) keep.push_back(prefix + std::to_string(i));
  for (const char* dir : {"SRC_", "DST_"})
    for (const char* what : {"PS_", "IAT_"})
      for (const char* stat : {"MEAN", "STD", "MIN", "MAX"}) keep.push_back(std::string(dir) + what + stat);
  return project_schema(build_schema(kMaxPackets), keep);
}

inline FeatureSchema schema_for_profile(const std::string& profile) {
  if (profile == "full") return build_schema(kMaxPackets);
  if (profile == "compact") return compact_schema();
  throw Error(ErrorCategory::Config, "features.profile: unknown profile '" + profile + "' (valid: full, compact)");
}

inline FeatureVector extract(const FlowRecord& flow, const FeatureSchema& schema) {
  const auto full = detail::extract_full(flow, schema.max_packets);
  FeatureVector v;
  v.values.reserve(schema.columns.size());
  for (int c : schema.columns) v.values.push_back(full[c]);
  v.label = flow.label;
  v.client_id = flow.client_id;
  v.round = round_of(flow.start_time);
  return v;
}

inline std::vector<FeatureVector> extract_all(std::span<const FlowRecord> flows, const FeatureSchema& schema) {
  std::vector<FeatureVector> out;
  out.reserve(flows.size());
  for (const auto& f : flows) out.push_back(extract(f, schema));
  return out;
}

class Scaler {
 public:
  Scaler() = default;
  Scaler(std::vector<double> min, std::vector<double> max) : min_(std::move(min)), max_(std::move(max)) {
    if (min_.size() != max_.size()) throw Error(ErrorCategory::Shape, "scaler bounds differ in length");
    for (std::size_t i = 0; i < min_.size(); ++i)
      if (!(min_[i] <= max_[i])) throw Error(ErrorCategory::Shape, "scaler min > max");
  }

  std::size_t size() const { return min_.size(); }
  const std::vector<double>& min() const { return min_; }
  const std::vector<double>& max() const { return max_; }

  double scale(std::size_t i, double value) const {
    const double range = max_[i] - min_[i];
    if (!(range > 0)) return 0.0;  // degenerate column
    return std::clamp((value - min_[i]) / range, 0.0, 1.0);
  }

 private:
  std::vector<double> min_, max_;
};

inline Scaler fit_scaler(std::span<const FeatureVector> vectors) {
  if (vectors.empty()) throw Error(ErrorCategory::Usage, "cannot fit a scaler on an empty set");
  const std::size_t n = vectors.front().values.size();
  std::vector<double> lo = vectors.front().values, hi = vectors.front().values;
  for (const auto& v : vectors) {
    if (v.values.size() != n) throw Error(ErrorCategory::Shape, "feature vectors differ in length");
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = std::min(lo[i], v.values[i]);
      hi[i] = std::max(hi[i], v.values[i]);
    }
  }
  return Scaler(std::move(lo), std::move(hi));
}

inline FeatureVector apply_scaler(const FeatureVector& v, const Scaler& s) {
  if (v.values.size() != s.size())
    throw Error(ErrorCategory::Shape, "dimension mismatch: vector has " + std::to_string(v.values.size()) +
                                          " features, scaler has " + std::to_string(s.size()));
  FeatureVector out = v;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = s.scale(i, v.values[i]);
  return out;
}

inline void apply_scaler_inplace(std::vector<FeatureVector>& vs, const Scaler& s) {
  for (auto& v : vs) v = apply_scaler(v, s);
}

inline void write_feature_matrix(const std::string& path, const FeatureSchema& schema,
                                 std::span<const FeatureVector> vectors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCategory::Io, "cannot open for writing: " + path);
  for (const auto& n : schema.names) os << n << ',';
  os << "label\n";
  for (const auto& v : vectors) {
    for (double x : v.values) os << detail::format_double(x) << ',';
    os << to_string(v.label) << '\n';
  }
}

}  // namespace fedbuf
