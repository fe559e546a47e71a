#pragma once

// Experiment configuration as flat INI sections (key = value). Every key has
// a default, so an empty file is a valid configuration; unknown sections or
// keys are rejected by name.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "fedbuf/error.hpp"
#include "fedbuf/fed.hpp"
#include "fedbuf/features.hpp"
#include "fedbuf/synthgen.hpp"

namespace fedbuf {

struct EvaluationConfig {
  int window_start = 56;
  int window_end = 111;
  int importance_repeats = 3;
  int importance_max_samples = 2000;
};

struct IoConfig {
  std::string corpus = "corpus.csv";
  std::string out_dir = "out";
};

struct ExperimentConfig {
  std::uint64_t seed = 42;
  int workers = 1;
  GenConfig generator = default_gen_config();
  std::string feature_profile = "full";
  std::size_t scaler_min_flows = 200;
  TrainConfig client_train{};
  TrainConfig central_train{.learning_rate = 0.01, .batch_size = 1024};
  Scenario scenario = Scenario::FedBuffered;
  Aggregator aggregator = Aggregator::FedAvg;
  double prox_mu = 0.01;
  ServerHyper server{};
  BufferCapacities buffers{};
  std::size_t min_val_for_early_stop = 64;
  int checkpoint_every = 0;
  EvaluationConfig evaluation{};
  IoConfig io{};

  GenConfig gen_config() const {
    GenConfig g = generator;
    g.seed = seed;
    return g;
  }

  FedConfig fed_config() const {
    FedConfig f;
    f.schema = schema_for_profile(feature_profile);
    f.client_train = client_train;
    f.central_train = central_train;
    f.aggregator = aggregator;
    f.prox_mu = prox_mu;
    f.server = server;
    f.buffers = buffers;
    f.min_val_for_early_stop = min_val_for_early_stop;
    f.scaler_min_flows = scaler_min_flows;
    f.n_clients = generator.n_clients;
    f.n_rounds = generator.n_rounds;
    f.seed = seed;
    f.workers = workers;
    f.checkpoint_every = checkpoint_every;
    return f;
  }

  void validate() const {
    fedbuf::validate(gen_config());
    schema_for_profile(feature_profile);
    client_train.validate();
    central_train.validate();
    if (buffers.train == 0 || buffers.val == 0 || buffers.test == 0)
      throw Error(ErrorCategory::Config, "federation: buffer capacities must be positive");
    if (workers < 1) throw Error(ErrorCategory::Config, "experiment.workers must be >= 1");
    if (!(server.tau > 0)) throw Error(ErrorCategory::Config, "federation.server_tau must be > 0");
    if (prox_mu < 0) throw Error(ErrorCategory::Config, "federation.prox_mu must be >= 0");
    if (evaluation.window_start < 0 || evaluation.window_end < evaluation.window_start)
      throw Error(ErrorCategory::Config, "evaluation: need 0 <= window_start <= window_end");
    if (evaluation.importance_repeats < 1) throw Error(ErrorCategory::Config, "evaluation.importance_repeats must be >= 1");
  }
};

namespace detail {

// One table drives both directions so parse and serialize cannot drift apart.
template <typename Visitor>
void visit_fields(ExperimentConfig& c, Visitor&& v) {
  v("experiment", "seed", c.seed);
  v("experiment", "workers", c.workers);

  auto& g = c.generator;
  v("generator", "n_clients", g.n_clients);
  v("generator", "n_rounds", g.n_rounds);
  v("generator", "dirichlet_alpha", g.dirichlet_alpha);
  v("generator", "rate_min", g.rate_min);
  v("generator", "rate_max", g.rate_max);
  v("generator", "phase_min", g.phase_min);
  v("generator", "phase_max", g.phase_max);
  v("generator", "night_floor", g.night_floor);
  for (auto& p : g.profiles) {
    const std::string s = "service." + std::string(to_string(p.label));
    v(s, "fwd_size_mean", p.pkt_size_fwd.mean);
    v(s, "fwd_size_std", p.pkt_size_fwd.stddev);
    v(s, "bwd_size_mean", p.pkt_size_bwd.mean);
    v(s, "bwd_size_std", p.pkt_size_bwd.stddev);
    v(s, "iat_log_mean", p.log_iat.mean);
    v(s, "iat_log_std", p.log_iat.stddev);
    v(s, "count_mean", p.pkt_count.mean);
    v(s, "count_std", p.pkt_count.stddev);
    v(s, "dst_ps2_mode", p.dst_ps2_mode);
    v(s, "dst_ps2_std", p.dst_ps2_stddev);
    v(s, "server_share", p.server_share);
    v(s, "extra_packets", p.extra_packets);
  }

  v("features", "profile", c.feature_profile);
  v("features", "scaler_min_flows", c.scaler_min_flows);

  v("training", "client_lr", c.client_train.learning_rate);
  v("training", "client_batch", c.client_train.batch_size);
  v("training", "central_lr", c.central_train.learning_rate);
  v("training", "central_batch", c.central_train.batch_size);
  v("training", "epochs", c.client_train.epochs);
  v("training", "dropout", c.client_train.dropout_p);
  v("training", "leaky_slope", c.client_train.leaky_slope);
  v("training", "adam_beta1", c.client_train.adam_beta1);
  v("training", "adam_beta2", c.client_train.adam_beta2);
  v("training", "adam_eps", c.client_train.adam_eps);
  v("training", "patience", c.client_train.early_stop_patience);

  v("federation", "scenario", c.scenario);
  v("federation", "aggregator", c.aggregator);
  v("federation", "prox_mu", c.prox_mu);
  v("federation", "server_eta", c.server.eta);
  v("federation", "server_beta1", c.server.beta1);
  v("federation", "server_beta2", c.server.beta2);
  v("federation", "server_tau", c.server.tau);
  v("federation", "train_buffer", c.buffers.train);
  v("federation", "val_buffer", c.buffers.val);
  v("federation", "test_buffer", c.buffers.test);
  v("federation", "min_val_for_early_stop", c.min_val_for_early_stop);
  v("federation", "checkpoint_every", c.checkpoint_every);

  v("evaluation", "window_start", c.evaluation.window_start);
  v("evaluation", "window_end", c.evaluation.window_end);
  v("evaluation", "importance_repeats", c.evaluation.importance_repeats);
  v("evaluation", "importance_max_samples", c.evaluation.importance_max_samples);

  v("io", "corpus", c.io.corpus);
  v("io", "out_dir", c.io.out_dir);
}

// Training knobs other than lr/batch are shared by the centralized run.
inline void sync_central(ExperimentConfig& c) {
  const double lr = c.central_train.learning_rate;
  const int batch = c.central_train.batch_size;
  c.central_train = c.client_train;
  c.central_train.learning_rate = lr;
  c.central_train.batch_size = batch;
}

template <typename T>
std::string to_text(const T& value) {
  if constexpr (std::is_same_v<T, std::string>) {
    return value;
  } else if constexpr (std::is_same_v<T, Scenario> || std::is_same_v<T, Aggregator>) {
    return std::string(to_string(value));
  } else if constexpr (std::is_floating_point_v<T>) {
    return format_double(value);
  } else {
    return std::to_string(value);
  }
}

template <typename T>
T from_text(const std::string& text, const std::string& key) {
  if constexpr (std::is_same_v<T, std::string>) {
    return text;
  } else if constexpr (std::is_same_v<T, Scenario>) {
    try {
      return parse_scenario(text);
    } catch (const Error& e) {
      throw Error(ErrorCategory::Config, key + ": " + e.what());
    }
  } else if constexpr (std::is_same_v<T, Aggregator>) {
    try {
      return parse_aggregator(text);
    } catch (const Error& e) {
      throw Error(ErrorCategory::Config, key + ": " + e.what());
    }
  } else {
    T out{};
    if (!parse_number(text, out)) throw Error(ErrorCategory::Config, key + ": invalid value '" + text + "'");
    return out;
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCategory::Config, std::string("malformed config: ") + e.what());
  }
  ExperimentConfig cfg;
  std::map<std::string, std::set<std::string>> known;
  detail::visit_fields(cfg, [&](const std::string& section, const std::string& key, auto& field) {
    known[section].insert(key);
    using T = std::decay_t<decltype(field)>;
    if (auto value = tree.get_optional<std::string>(pt::ptree::path_type(section + "/" + key, '/')))
      field = detail::from_text<T>(*value, section + "." + key);
  });
  for (const auto& [section, body] : tree) {
    auto it = known.find(section);
    if (it == known.end()) throw Error(ErrorCategory::Config, "unknown config section [" + section + "]");
    for (const auto& [key, _] : body)
      if (!it->second.count(key)) throw Error(ErrorCategory::Config, "unknown config field " + section + "." + key);
  }
  detail::sync_central(cfg);
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCategory::Io, "cannot open config: " + path);
  return parse_config(is);
}

inline void write_config(std::ostream& os, const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  std::string current;
  detail::visit_fields(copy, [&](const std::string& section, const std::string& key, auto& field) {
    if (section != current) {
      os << (current.empty() ? "" : "\n") << '[' << section << "]\n";
      current = section;
    }
    os << key << " = " << detail::to_text(field) << '\n';
  });
}

}  // namespace fedbuf
