#pragma once

// Flow-record data model, the native wide-CSV format, and round partitioning.
//
// Native CSV columns (header row required, LF line endings, '.' decimal point):
//   flow_id,client_id,start_time,duration,total_packets_fwd,total_packets_bwd,
//   total_bytes_fwd,total_bytes_bwd,label,ps_1..ps_30,iat_1..iat_30,dir_1..dir_30
// Packet cells past a flow's packet count are left empty. dir_k is F
// (client to server) or B (server to client). Columns are located by header
// name, so any column order is accepted on load.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fedbuf/error.hpp"

namespace fedbuf {

inline constexpr int kNumClasses = 7;
inline constexpr int kMaxPackets = 30;
inline constexpr double kRoundSeconds = 10800.0;

enum class ServiceLabel : int {
  Discord = 0,
  FacebookGraph = 1,
  GoogleWWW = 2,
  Instagram = 3,
  Snapchat = 4,
  Spotify = 5,
  YouTube = 6,
};

inline constexpr std::array<std::string_view, kNumClasses> kLabelNames = {
    "Discord", "FacebookGraph", "GoogleWWW", "Instagram", "Snapchat", "Spotify", "YouTube"};

inline std::string_view to_string(ServiceLabel l) { return kLabelNames[static_cast<int>(l)]; }

inline std::optional<ServiceLabel> parse_label(std::string_view s) {
  for (int i = 0; i < kNumClasses; ++i)
    if (kLabelNames[i] == s) return static_cast<ServiceLabel>(i);
  return std::nullopt;
}

inline std::string valid_labels_list() {
  std::string out;
  for (int i = 0; i < kNumClasses; ++i) {
    if (i) out += ", ";
    out += kLabelNames[i];
  }
  return out;
}

enum class Direction : std::uint8_t { ClientToServer, ServerToClient };

struct PacketMeta {
  std::uint32_t size = 1;     // bytes
  double inter_arrival = 0;   // milliseconds since the previous packet
  Direction direction = Direction::ClientToServer;

  bool operator==(const PacketMeta&) const = default;
};

struct FlowRecord {
  std::uint64_t flow_id = 0;
  int client_id = 0;
  double start_time = 0;  // seconds since experiment epoch
  double duration = 0;    // seconds
  std::uint64_t total_packets_fwd = 0;
  std::uint64_t total_packets_bwd = 0;
  std::uint64_t total_bytes_fwd = 0;
  std::uint64_t total_bytes_bwd = 0;
  ServiceLabel label = ServiceLabel::Discord;
  std::vector<PacketMeta> packets;  // first packets in arrival order, at most 30

  bool operator==(const FlowRecord&) const = default;
};

/// Round index of a start time under half-open intervals [r*len, (r+1)*len).
inline int round_of(double start_time, double round_seconds = kRoundSeconds) {
  return static_cast<int>(std::floor(start_time / round_seconds));
}

/// Returns an empty string when valid, otherwise the first violated rule.
inline std::string validate(const FlowRecord& f) {
  if (f.client_id < 0) return "client_id must be non-negative";
  if (!(f.start_time >= 0) || !std::isfinite(f.start_time)) return "start_time must be finite and >= 0";
  if (!(f.duration >= 0) || !std::isfinite(f.duration)) return "duration must be finite and >= 0";
  if (f.packets.empty()) return "flow must carry at least one packet";
  if (f.packets.size() > static_cast<std::size_t>(kMaxPackets)) return "packet count exceeds 30";
  std::uint64_t fwd = 0, bwd = 0;
  for (std::size_t i = 0; i < f.packets.size(); ++i) {
    const auto& p = f.packets[i];
    if (p.size < 1) return "packet size must be >= 1";
    if (!(p.inter_arrival >= 0) || !std::isfinite(p.inter_arrival)) return "inter-arrival must be >= 0";
    if (i == 0 && p.inter_arrival != 0) return "first packet inter-arrival must be 0";
    (p.direction == Direction::ClientToServer ? fwd : bwd)++;
  }
  if (f.total_packets_fwd < fwd || f.total_packets_bwd < bwd)
    return "flow totals smaller than packet counts in the packet list";
  return {};
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline std::string flow_csv_header() {
  std::string h =
      "flow_id,client_id,start_time,duration,total_packets_fwd,total_packets_bwd,"
      "total_bytes_fwd,total_bytes_bwd,label";
  for (const char* prefix : {"ps_", "iat_", "dir_"})
    for (int k = 1; k <= kMaxPackets; ++k) h += "," + std::string(prefix) + std::to_string(k);
  return h;
}

inline void write_flow_row(std::ostream& os, const FlowRecord& f) {
  using detail::format_double;
  os << f.flow_id << ',' << f.client_id << ',' << format_double(f.start_time) << ','
     << format_double(f.duration) << ',' << f.total_packets_fwd << ',' << f.total_packets_bwd
     << ',' << f.total_bytes_fwd << ',' << f.total_bytes_bwd << ',' << to_string(f.label);
  const auto n = f.packets.size();
  for (std::size_t k = 0; k < kMaxPackets; ++k) {
    os << ',';
    if (k < n) os << f.packets[k].size;
  }
  for (std::size_t k = 0; k < kMaxPackets; ++k) {
    os << ',';
    if (k < n) os << format_double(f.packets[k].inter_arrival);
  }
  for (std::size_t k = 0; k < kMaxPackets; ++k) {
    os << ',';
    if (k < n) os << (f.packets[k].direction == Direction::ClientToServer ? 'F' : 'B');
  }
  os << '\n';
}

inline void write_flows(std::ostream& os, const std::vector<FlowRecord>& flows) {
  os << flow_csv_header() << '\n';
  for (const auto& f : flows) write_flow_row(os, f);
}

inline void write_flows(const std::string& path, const std::vector<FlowRecord>& flows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCategory::Io, "cannot open for writing: " + path);
  write_flows(os, flows);
  if (!os) throw Error(ErrorCategory::Io, "write failed: " + path);
}

inline std::vector<FlowRecord> load_flows(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) return {};
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = detail::split_csv_line(line);
  std::map<std::string, std::size_t, std::less<>> col;
  for (std::size_t i = 0; i < header.size(); ++i) col.emplace(std::string(header[i]), i);

  auto require = [&](const char* name) {
    auto it = col.find(name);
    if (it == col.end()) throw Error(ErrorCategory::Parse, std::string("missing column: ") + name);
    return it->second;
  };
  const std::size_t c_id = require("flow_id"), c_client = require("client_id"),
                    c_start = require("start_time"), c_dur = require("duration"),
                    c_pf = require("total_packets_fwd"), c_pb = require("total_packets_bwd"),
                    c_bf = require("total_bytes_fwd"), c_bb = require("total_bytes_bwd"),
                    c_label = require("label");

  // Packet column triplets, possibly more than 30 so over-long rows are reported.
  struct PacketCols {
    std::size_t ps, iat, dir;
  };
  std::vector<PacketCols> pcols;
  for (int k = 1;; ++k) {
    auto ps = col.find("ps_" + std::to_string(k));
    if (ps == col.end()) break;
    auto iat = col.find("iat_" + std::to_string(k));
    auto dir = col.find("dir_" + std::to_string(k));
    if (iat == col.end() || dir == col.end())
      throw Error(ErrorCategory::Parse, "incomplete packet columns for packet " + std::to_string(k));
    pcols.push_back({ps->second, iat->second, dir->second});
  }

  std::vector<FlowRecord> flows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    auto fail = [&](const std::string& field, const std::string& msg) -> Error {
      return Error(ErrorCategory::Parse,
                   "row " + std::to_string(line_no) + ", field " + field + ": " + msg);
    };
    if (cells.size() != header.size())
      throw fail("*", "expected " + std::to_string(header.size()) + " cells, got " +
                          std::to_string(cells.size()));

    FlowRecord f;
    auto num = [&](std::size_t c, const char* name, auto& out) {
      if (!detail::parse_number(cells[c], out))
        throw fail(name, "not a valid number: '" + std::string(cells[c]) + "'");
    };
    num(c_id, "flow_id", f.flow_id);
    num(c_client, "client_id", f.client_id);
    num(c_start, "start_time", f.start_time);
    num(c_dur, "duration", f.duration);
    num(c_pf, "total_packets_fwd", f.total_packets_fwd);
    num(c_pb, "total_packets_bwd", f.total_packets_bwd);
    num(c_bf, "total_bytes_fwd", f.total_bytes_fwd);
    num(c_bb, "total_bytes_bwd", f.total_bytes_bwd);
    auto label = parse_label(cells[c_label]);
    if (!label)
      throw fail("label", "unknown label '" + std::string(cells[c_label]) +
                              "'; valid labels: " + valid_labels_list());
    f.label = *label;

    bool ended = false;
    for (std::size_t k = 0; k < pcols.size(); ++k) {
      const auto ps = cells[pcols[k].ps], iat = cells[pcols[k].iat], dir = cells[pcols[k].dir];
      const std::string idx = std::to_string(k + 1);
      if (ps.empty() && iat.empty() && dir.empty()) {
        ended = true;
        continue;
      }
      if (ended) throw fail("ps_" + idx, "packet cells must be contiguous");
      if (k >= static_cast<std::size_t>(kMaxPackets)) throw fail("ps_" + idx, "packet count exceeds 30");
      PacketMeta p;
      if (!detail::parse_number(ps, p.size)) throw fail("ps_" + idx, "invalid packet size");
      if (!detail::parse_number(iat, p.inter_arrival)) throw fail("iat_" + idx, "invalid inter-arrival");
      if (dir == "F")
        p.direction = Direction::ClientToServer;
      else if (dir == "B")
        p.direction = Direction::ServerToClient;
      else
        throw fail("dir_" + idx, "direction must be F or B");
      f.packets.push_back(p);
    }
    if (auto why = validate(f); !why.empty()) throw fail("*", why);
    flows.push_back(std::move(f));
  }
  return flows;
}

inline std::vector<FlowRecord> load_flows(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCategory::Io, "cannot open flow file: " + path);
  return load_flows(is);
}

/// Flows bucketed by round, then by client; both levels ordered ascending.
using RoundPartition = std::map<int, std::map<int, std::vector<FlowRecord>>>;

inline RoundPartition partition_by_round(const std::vector<FlowRecord>& flows,
                                         double round_seconds = kRoundSeconds) {
  if (!(round_seconds > 0)) throw Error(ErrorCategory::Usage, "round_seconds must be positive");
  RoundPartition out;
  for (const auto& f : flows) out[round_of(f.start_time, round_seconds)][f.client_id].push_back(f);
  return out;
}

}  // namespace fedbuf
