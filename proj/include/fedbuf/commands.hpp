#pragma once

// Experiment commands behind the fedbuf CLI: generate, run, compare,
// importance. Each returns what it wrote so callers (and tests) can inspect
// it without re-reading files.

#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fedbuf/config.hpp"
#include "fedbuf/error.hpp"
#include "fedbuf/fed.hpp"
#include "fedbuf/flowdata.hpp"
#include "fedbuf/metrics.hpp"
#include "fedbuf/nn.hpp"
#include "fedbuf/synthgen.hpp"

namespace fedbuf {

namespace fs = std::filesystem;

/// 64-bit FNV-1a over a file's bytes.
inline std::uint64_t file_checksum(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCategory::Io, "cannot open: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) {
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCategory::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

inline std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCategory::Io, "cannot open for writing: " + path.string());
  return os;
}

// ----------------------------------------------------------------- generate

struct GenerateOutput {
  fs::path corpus;
  fs::path manifest;
  std::size_t flow_count = 0;
  std::uint64_t checksum = 0;
};

inline GenerateOutput cmd_generate(const ExperimentConfig& cfg, const fs::path& corpus_path) {
  const auto gen = cfg.gen_config();
  const auto flows = generate(gen);
  if (corpus_path.has_parent_path()) ensure_dir(corpus_path.parent_path());
  write_flows(corpus_path.string(), flows);

  std::vector<std::size_t> per_client(gen.n_clients, 0), per_round(gen.n_rounds, 0);
  for (const auto& f : flows) {
    ++per_client[f.client_id];
    ++per_round[round_of(f.start_time)];
  }
  GenerateOutput out;
  out.corpus = corpus_path;
  out.manifest = corpus_path.parent_path() / (corpus_path.stem().string() + ".manifest.json");
  out.flow_count = flows.size();
  out.checksum = file_checksum(corpus_path.string());

  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << out.checksum;
  nlohmann::ordered_json m;
  m["seed"] = gen.seed;
  m["n_clients"] = gen.n_clients;
  m["n_rounds"] = gen.n_rounds;
  m["flow_count"] = flows.size();
  m["fnv1a64"] = hex.str();
  m["per_client"] = per_client;
  m["per_round"] = per_round;
  auto os = open_out(out.manifest);
  os << m.dump(2) << '\n';
  return out;
}

// ---------------------------------------------------------------------- run

inline RoundPartition load_partitioned_corpus(const std::string& path, const ExperimentConfig& cfg,
                                              std::vector<FlowRecord>* all = nullptr) {
  if (!fs::exists(path)) throw Error(ErrorCategory::Io, "missing corpus: " + path);
  auto flows = load_flows(path);
  for (const auto& f : flows)
    if (f.client_id >= cfg.generator.n_clients)
      throw Error(ErrorCategory::Config, "corpus has client_id " + std::to_string(f.client_id) +
                                             " but generator.n_clients = " + std::to_string(cfg.generator.n_clients));
  auto part = partition_by_round(flows);
  if (all) *all = std::move(flows);
  return part;
}

struct RunOutput {
  std::vector<fs::path> files;
  std::vector<RoundReport> rounds;              // federated scenarios
  std::optional<CentralizedResult> centralized;  // centralized scenario
  std::optional<StabilityStats> window_stats;
};

inline std::string run_label(Scenario s, Aggregator a) {
  return s == Scenario::Centralized ? std::string(to_string(s))
                                    : std::string(to_string(s)) + "-" + std::string(to_string(a));
}

inline void write_per_class(const fs::path& path, const ConfusionMatrix& cm) {
  auto os = open_out(path);
  os << "class,precision,recall,f1,support\n";
  for (const auto& m : per_class_report(cm)) {
    os << to_string(m.label) << ',';
    if (m.active)
      os << detail::format_double(m.precision) << ',' << detail::format_double(m.recall) << ','
         << detail::format_double(m.f1);
    else
      os << ",,";  // undefined: class absent from truth and predictions
    os << ',' << m.support << '\n';
  }
}

inline RunOutput cmd_run(const ExperimentConfig& cfg, Scenario scenario, Aggregator aggregator,
                         const fs::path& out_dir, std::ostream* log = nullptr) {
  ensure_dir(out_dir);
  ExperimentConfig c = cfg;
  c.aggregator = aggregator;
  FedConfig fc = c.fed_config();
  const std::string label = run_label(scenario, aggregator);
  RunOutput out;

  std::vector<FlowRecord> flows;
  const auto corpus = load_partitioned_corpus(c.io.corpus, c, &flows);

  if (scenario == Scenario::Centralized) {
    auto res = run_centralized(flows, fc);
    const auto summary = out_dir / (label + ".summary.csv");
    {
      auto os = open_out(summary);
      os << "scenario,n_train,n_val,n_test,epochs_run,train_f1,val_f1,test_f1,test_loss\n";
      os << label << ',' << res.n_train << ',' << res.n_val << ',' << res.n_test << ',' << res.epochs_run << ','
         << detail::format_double(res.train_f1) << ',' << detail::format_double(res.val_f1) << ','
         << detail::format_double(res.test_f1) << ',' << detail::format_double(res.test_loss) << '\n';
    }
    const auto per_class = out_dir / (label + ".per_class.csv");
    write_per_class(per_class, res.test_cm);
    const auto model = out_dir / (label + ".model.bin");
    save_checkpoint(model.string(), res.params, &res.scaler);
    out.files = {summary, per_class, model};
    out.centralized = std::move(res);
    return out;
  }

  if (c.checkpoint_every > 0) {
    fc.checkpoint_dir = (out_dir / (label + ".checkpoints")).string();
    ensure_dir(fc.checkpoint_dir);
  }
  const Strategy strategy = scenario == Scenario::FedBuffered ? Strategy::Buffered : Strategy::Unbuffered;
  auto res = run_federated(corpus, strategy, fc, [&](const RoundReport& r) {
    if (log)
      *log << label << " round " << r.round << ": participants " << r.aggregate.participated << ", macro F1 "
           << r.aggregate.macro_f1 << '\n';
  });
  const auto rounds = out_dir / (label + ".rounds.csv");
  {
    auto os = open_out(rounds);
    write_round_reports(os, res.rounds);
  }
  const auto clients = out_dir / (label + ".clients.csv");
  {
    auto os = open_out(clients);
    write_client_reports(os, res.rounds);
  }
  const auto series = aggregate_f1_series(res.rounds);
  const auto summary = out_dir / (label + ".summary.csv");
  {
    auto os = open_out(summary);
    os << "scenario,aggregator,window_start,window_end,rounds_evaluated,mean_f1,std_f1,min_f1\n";
    os << to_string(scenario) << ',' << to_string(aggregator) << ',' << c.evaluation.window_start << ','
       << c.evaluation.window_end << ',';
    try {
      const auto st = stability(series, c.evaluation.window_start, c.evaluation.window_end);
      out.window_stats = st;
      os << st.count << ',' << detail::format_double(st.mean) << ',' << detail::format_double(st.stddev) << ','
         << detail::format_double(st.min) << '\n';
    } catch (const Error&) {
      os << "0,nan,nan,nan\n";
    }
  }
  const auto model = out_dir / (label + ".model.bin");
  save_checkpoint(model.string(), res.global);
  out.files = {rounds, clients, summary, model};
  out.rounds = std::move(res.rounds);
  return out;
}

// ------------------------------------------------------------------ compare

struct LoadedReport {
  std::string label;
  std::string scenario;
  std::string aggregator;
  std::vector<double> series;  // aggregate macro F1 per round (federated)
  std::optional<double> centralized_f1;
};

namespace detail {
inline std::vector<std::string> read_csv_rows(const std::string& path, std::string& header) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCategory::Io, "cannot open report: " + path);
  std::vector<std::string> rows;
  std::string line;
  if (!std::getline(is, header)) throw Error(ErrorCategory::Parse, "empty report: " + path);
  while (std::getline(is, line))
    if (!line.empty()) rows.push_back(line);
  return rows;
}
}  // namespace detail

/// Reads a federated `*.rounds.csv` or a centralized `*.summary.csv`.
inline LoadedReport load_report(const std::string& path) {
  std::string header;
  const auto rows = detail::read_csv_rows(path, header);
  LoadedReport r;
  r.label = fs::path(path).filename().string();
  for (const char* suffix : {".rounds.csv", ".summary.csv"})
    if (r.label.ends_with(suffix)) r.label.resize(r.label.size() - std::strlen(suffix));

  if (header == round_report_header()) {
    for (const auto& row : rows) {
      const auto cells = detail::split_csv_line(row);
      if (cells.size() != 8) throw Error(ErrorCategory::Parse, "malformed round row in " + path);
      int round = 0;
      double f1 = 0;
      if (!detail::parse_number(cells[0], round) || !detail::parse_number(cells[6], f1))
        throw Error(ErrorCategory::Parse, "malformed round row in " + path);
      r.scenario = std::string(cells[1]);
      r.aggregator = std::string(cells[2]);
      if (round >= static_cast<int>(r.series.size()))
        r.series.resize(round + 1, std::numeric_limits<double>::quiet_NaN());
      r.series[round] = f1;
    }
    return r;
  }
  const auto cols = detail::split_csv_line(header);
  if (!cols.empty() && cols[0] == "scenario" && rows.size() == 1) {
    const auto cells = detail::split_csv_line(rows[0]);
    for (std::size_t i = 0; i < cols.size() && i < cells.size(); ++i) {
      if (cols[i] == "test_f1") {
        double v = 0;
        if (!detail::parse_number(cells[i], v)) throw Error(ErrorCategory::Parse, "bad test_f1 in " + path);
        r.centralized_f1 = v;
      }
    }
    if (r.centralized_f1) {
      r.scenario = "centralized";
      return r;
    }
  }
  throw Error(ErrorCategory::Parse, "not a round report or centralized summary: " + path);
}

struct CompareRow {
  std::string label, scenario, aggregator;
  StabilityStats stats;
  std::optional<double> gap_vs_centralized;  // centralized F1 - mean F1
};

struct Comparison {
  std::vector<CompareRow> rows;
  std::vector<std::vector<double>> std_ratio;  // rows[i].stddev / rows[j].stddev
};

inline double std_ratio(double a, double b) {
  if (a == b) return 1.0;
  if (b == 0) return std::numeric_limits<double>::infinity();
  return a / b;
}

inline Comparison compare_reports(const std::vector<LoadedReport>& reports, int window_start, int window_end) {
  if (reports.size() < 2) throw Error(ErrorCategory::Usage, "compare needs at least two reports");
  if (window_start < 0 || window_end < window_start) throw Error(ErrorCategory::Usage, "invalid window");
  Comparison cmp;
  std::optional<double> central;
  for (const auto& r : reports)
    if (r.centralized_f1) central = r.centralized_f1;
  for (const auto& r : reports) {
    CompareRow row{r.label, r.scenario, r.aggregator};
    if (r.centralized_f1) {
      row.stats = {*r.centralized_f1, 0.0, *r.centralized_f1, 1};
    } else {
      if (static_cast<int>(r.series.size()) <= window_end)
        throw Error(ErrorCategory::Usage, "incompatible round ranges: report '" + r.label + "' covers rounds 0.." +
                                              std::to_string(static_cast<int>(r.series.size()) - 1) +
                                              ", window ends at " + std::to_string(window_end));
      row.stats = stability(r.series, window_start, window_end);
      if (central) row.gap_vs_centralized = *central - row.stats.mean;
    }
    cmp.rows.push_back(row);
  }
  for (const auto& a : cmp.rows) {
    cmp.std_ratio.emplace_back();
    for (const auto& b : cmp.rows) cmp.std_ratio.back().push_back(std_ratio(a.stats.stddev, b.stats.stddev));
  }
  return cmp;
}

inline void write_comparison(std::ostream& os, const Comparison& cmp) {
  os << "report,scenario,aggregator,mean_f1,std_f1,min_f1,gap_vs_centralized\n";
  for (const auto& r : cmp.rows) {
    os << r.label << ',' << r.scenario << ',' << r.aggregator << ',' << detail::format_double(r.stats.mean) << ','
       << detail::format_double(r.stats.stddev) << ',' << detail::format_double(r.stats.min) << ',';
    if (r.gap_vs_centralized) os << detail::format_double(*r.gap_vs_centralized);
    os << '\n';
  }
}

inline void write_std_ratios(std::ostream& os, const Comparison& cmp) {
  os << "std_ratio";
  for (const auto& r : cmp.rows) os << ',' << r.label;
  os << '\n';
  for (std::size_t i = 0; i < cmp.rows.size(); ++i) {
    os << cmp.rows[i].label;
    for (double v : cmp.std_ratio[i]) os << ',' << detail::format_double(v);
    os << '\n';
  }
}

inline Comparison cmd_compare(const std::vector<std::string>& paths, int window_start, int window_end,
                              const fs::path& out_dir) {
  std::vector<LoadedReport> reports;
  for (const auto& p : paths) reports.push_back(load_report(p));
  auto cmp = compare_reports(reports, window_start, window_end);
  ensure_dir(out_dir);
  {
    auto os = open_out(out_dir / "compare.csv");
    write_comparison(os, cmp);
  }
  {
    auto os = open_out(out_dir / "compare_std_ratios.csv");
    write_std_ratios(os, cmp);
  }
  return cmp;
}

// --------------------------------------------------------------- importance

inline std::vector<FeatureImportance> cmd_importance(const ExperimentConfig& cfg, const std::string& checkpoint,
                                                     const fs::path& out_dir) {
  const auto ck = load_checkpoint(checkpoint);
  FedConfig fc = cfg.fed_config();
  if (ck.params.input_dim != fc.schema.size())
    throw Error(ErrorCategory::Shape, "checkpoint has N=" + std::to_string(ck.params.input_dim) + " but the '" +
                                          cfg.feature_profile + "' schema has N=" + std::to_string(fc.schema.size()));
  std::vector<FlowRecord> flows;
  load_partitioned_corpus(cfg.io.corpus, cfg, &flows);
  auto split = centralized_split_raw(flows, fc);
  // The checkpoint's own scaler wins; otherwise refit as training did.
  const Scaler scaler = ck.scaler ? *ck.scaler : fit_scaler(split.train);
  const std::size_t keep =
      std::min(split.test.size(), static_cast<std::size_t>(std::max(cfg.evaluation.importance_max_samples, 100)));
  split.test.resize(keep);
  apply_scaler_inplace(split.test, scaler);
  const Dataset eval = to_dataset(split.test, fc.schema.size());
  auto ranking = permutation_importance(ck.params, eval, fc.schema, cfg.evaluation.importance_repeats, cfg.seed);
  ensure_dir(out_dir);
  auto os = open_out(out_dir / "importance.csv");
  os << "rank,feature,mean_f1_drop\n";
  for (std::size_t i = 0; i < ranking.size(); ++i)
    os << i + 1 << ',' << ranking[i].feature << ',' << detail::format_double(ranking[i].mean_f1_drop) << '\n';
  return ranking;
}

}  // namespace fedbuf
