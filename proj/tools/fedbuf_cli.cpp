// fedbuf: generate a synthetic corpus, run centralized / federated
// experiments, compare round reports, and rank features by permutation
// importance.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fedbuf/commands.hpp"
#include "fedbuf/config.hpp"
#include "fedbuf/error.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  std::string corpus;
};

fedbuf::ExperimentConfig load(const CommonOptions& o) {
  fedbuf::ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = fedbuf::load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (!o.corpus.empty()) cfg.io.corpus = o.corpus;
  if (!o.out.empty()) cfg.io.out_dir = o.out;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "INI experiment config");
  cmd->add_option("--seed", o.seed, "Experiment seed (overrides the config)");
  cmd->add_option("--workers", o.workers, "Parallel client workers")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--corpus", o.corpus, "Flow CSV (overrides io.corpus)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated QUIC service classification simulator with client-side FIFO buffering"};
  app.require_subcommand(1);

  CommonOptions gen_opts, run_opts, cmp_opts, imp_opts;

  auto* gen = app.add_subcommand("generate", "Write a synthetic flow corpus and its manifest");
  add_common(gen, gen_opts);

  auto* run = app.add_subcommand("run", "Run one scenario and write per-round reports");
  add_common(run, run_opts);
  std::string scenario, aggregator;
  run->add_option("--scenario", scenario, "centralized | fed-unbuffered | fed-buffered");
  run->add_option("--aggregator", aggregator, "fedavg | fedprox | fedadagrad | fedyogi | fedadam");

  auto* cmp = app.add_subcommand("compare", "Compare round reports over a round window");
  add_common(cmp, cmp_opts);
  std::vector<std::string> reports;
  std::optional<int> window_start, window_end;
  cmp->add_option("reports", reports, "*.rounds.csv or centralized *.summary.csv files")->required();
  cmp->add_option("--window-start", window_start, "First round of the window (inclusive)");
  cmp->add_option("--window-end", window_end, "Last round of the window (inclusive)");

  auto* imp = app.add_subcommand("importance", "Permutation feature importance of a centralized checkpoint");
  add_common(imp, imp_opts);
  std::string checkpoint;
  imp->add_option("--checkpoint", checkpoint, "Model checkpoint (centralized.model.bin)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) std::cerr << "error[usage]: " << e.what() << '\n';
    return code;
  }

  try {
    if (*gen) {
      auto cfg = load(gen_opts);
      const std::filesystem::path corpus =
          gen_opts.out.empty() ? std::filesystem::path(cfg.io.corpus) : std::filesystem::path(gen_opts.out) / "corpus.csv";
      const auto res = fedbuf::cmd_generate(cfg, corpus);
      std::cout << "wrote " << res.flow_count << " flows to " << res.corpus.string() << " (manifest "
                << res.manifest.string() << ")\n";
    } else if (*run) {
      auto cfg = load(run_opts);
      const auto sc = scenario.empty() ? cfg.scenario : fedbuf::parse_scenario(scenario);
      const auto ag = aggregator.empty() ? cfg.aggregator : fedbuf::parse_aggregator(aggregator);
      const auto res = fedbuf::cmd_run(cfg, sc, ag, cfg.io.out_dir, &std::cerr);
      if (res.centralized)
        std::cout << "centralized: train F1 " << res.centralized->train_f1 << ", val F1 " << res.centralized->val_f1
                  << ", test F1 " << res.centralized->test_f1 << '\n';
      if (res.window_stats)
        std::cout << fedbuf::run_label(sc, ag) << ": window mean F1 " << res.window_stats->mean << ", std "
                  << res.window_stats->stddev << ", min " << res.window_stats->min << '\n';
      for (const auto& f : res.files) std::cout << "wrote " << f.string() << '\n';
    } else if (*cmp) {
      auto cfg = load(cmp_opts);
      const auto cmpres = fedbuf::cmd_compare(reports, window_start.value_or(cfg.evaluation.window_start),
                                              window_end.value_or(cfg.evaluation.window_end), cfg.io.out_dir);
      fedbuf::write_comparison(std::cout, cmpres);
      std::cout << '\n';
      fedbuf::write_std_ratios(std::cout, cmpres);
    } else if (*imp) {
      auto cfg = load(imp_opts);
      const auto ranking = fedbuf::cmd_importance(cfg, checkpoint, cfg.io.out_dir);
      const std::size_t show = std::min<std::size_t>(10, ranking.size());
      for (std::size_t i = 0; i < show; ++i)
        std::cout << i + 1 << ". " << ranking[i].feature << " " << ranking[i].mean_f1_drop << '\n';
      std::cout << "wrote " << (std::filesystem::path(cfg.io.out_dir) / "importance.csv").string() << '\n';
    }
  } catch (const fedbuf::Error& e) {
    std::cerr << "error[" << fedbuf::to_string(e.category()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
