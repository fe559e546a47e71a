#pragma once

// Synchronous federated round engine: client FIFO buffers, the unbuffered and
// buffered data-handling strategies, local training (with the optional
// proximal term), FedAvg and the server-side adaptive aggregators, and the
// experiment driver that produces per-round reports.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <deque>
#include <exception>
#include <filesystem>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "fedbuf/error.hpp"
#include "fedbuf/features.hpp"
#include "fedbuf/flowdata.hpp"
#include "fedbuf/metrics.hpp"
#include "fedbuf/nn.hpp"
#include "fedbuf/rng.hpp"

namespace fedbuf {

enum class Aggregator { FedAvg, FedProx, FedAdagrad, FedYogi, FedAdam };
enum class Scenario { Centralized, FedUnbuffered, FedBuffered };
enum class Strategy { Unbuffered, Buffered };

inline constexpr std::array<std::string_view, 5> kAggregatorNames = {"fedavg", "fedprox", "fedadagrad", "fedyogi",
                                                                     "fedadam"};
inline constexpr std::array<std::string_view, 3> kScenarioNames = {"centralized", "fed-unbuffered", "fed-buffered"};

inline std::string_view to_string(Aggregator a) { return kAggregatorNames[static_cast<int>(a)]; }
inline std::string_view to_string(Scenario s) { return kScenarioNames[static_cast<int>(s)]; }

namespace detail {
template <std::size_t N>
std::string join_names(const std::array<std::string_view, N>& names) {
  std::string out;
  for (std::size_t i = 0; i < N; ++i) out += (i ? ", " : "") + std::string(names[i]);
  return out;
}
}  // namespace detail

inline Aggregator parse_aggregator(std::string_view s) {
  for (std::size_t i = 0; i < kAggregatorNames.size(); ++i)
    if (kAggregatorNames[i] == s) return static_cast<Aggregator>(i);
  throw Error(ErrorCategory::Usage, "unknown aggregator '" + std::string(s) +
                                        "'; valid: " + detail::join_names(kAggregatorNames));
}

inline Scenario parse_scenario(std::string_view s) {
  for (std::size_t i = 0; i < kScenarioNames.size(); ++i)
    if (kScenarioNames[i] == s) return static_cast<Scenario>(i);
  throw Error(ErrorCategory::Usage, "unknown scenario '" + std::string(s) +
                                        "'; valid: " + detail::join_names(kScenarioNames));
}

inline bool is_adaptive(Aggregator a) {
  return a == Aggregator::FedAdagrad || a == Aggregator::FedYogi || a == Aggregator::FedAdam;
}

/// Fixed-capacity FIFO; pushing past capacity evicts the oldest entries.
template <typename T>
class FifoBuffer {
 public:
  explicit FifoBuffer(std::size_t capacity = 0) : capacity_(capacity) {}

  /// Returns the number of evicted entries.
  std::size_t push(std::span<const T> items) {
    const std::size_t before = entries_.size();
    // Only the newest `capacity_` items can survive.
    const std::size_t skip = items.size() > capacity_ ? items.size() - capacity_ : 0;
    for (std::size_t i = skip; i < items.size(); ++i) {
      if (entries_.size() == capacity_) entries_.pop_front();
      entries_.push_back(items[i]);
    }
    return before + items.size() - entries_.size();
  }
  std::size_t push(const std::vector<T>& items) { return push(std::span<const T>(items)); }

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool full() const { return entries_.size() == capacity_; }
  bool empty() const { return entries_.empty(); }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  const T& operator[](std::size_t i) const { return entries_[i]; }

  std::vector<T> snapshot() const { return {entries_.begin(), entries_.end()}; }

 private:
  std::size_t capacity_;
  std::deque<T> entries_;
};

struct BufferCapacities {
  std::size_t train = 6400;
  std::size_t val = 914;
  std::size_t test = 1828;
};

struct ServerHyper {
  double eta = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double tau = 1e-3;
};

struct FedConfig {
  FeatureSchema schema = build_schema();
  TrainConfig client_train{};                          // lr 0.001, batch 64, 10 epochs
  TrainConfig central_train{.learning_rate = 0.01, .batch_size = 1024};
  Aggregator aggregator = Aggregator::FedAvg;
  double prox_mu = 0.01;
  ServerHyper server{};
  BufferCapacities buffers{};
  std::size_t min_val_for_early_stop = 64;  // buffered strategy only
  std::size_t scaler_min_flows = 200;
  int n_clients = 14;
  int n_rounds = 112;
  std::uint64_t seed = 42;
  int workers = 1;
  int checkpoint_every = 0;  // rounds; 0 disables
  std::string checkpoint_dir;
};

struct ClientState {
  int client_id = 0;
  std::optional<Scaler> scaler;
  std::vector<FlowRecord> pending;  // raw flows seen before the scaler is fitted
  FifoBuffer<FeatureVector> train_buf, val_buf, test_buf;

  ClientState(int id, const BufferCapacities& caps)
      : client_id(id), train_buf(caps.train), val_buf(caps.val), test_buf(caps.test) {}
};

/// Scaled vectors to ingest this round. The scaler is fitted once, on the
/// first `min_flows` flows the client has seen, and frozen thereafter; flows
/// seen before that point are held raw. The buffered strategy then ingests the
/// whole backlog, the unbuffered one only the current round.
inline std::vector<FeatureVector> featurize_round(ClientState& client, std::span<const FlowRecord> flows,
                                                  const FeatureSchema& schema, std::size_t min_flows,
                                                  Strategy strategy) {
  if (client.scaler) {
    auto vs = extract_all(flows, schema);
    apply_scaler_inplace(vs, *client.scaler);
    return vs;
  }
  client.pending.insert(client.pending.end(), flows.begin(), flows.end());
  if (client.pending.empty() || client.pending.size() < std::max<std::size_t>(min_flows, 1)) return {};
  auto backlog = extract_all(client.pending, schema);
  client.scaler = fit_scaler(backlog);
  std::vector<FeatureVector> out;
  if (strategy == Strategy::Buffered) {
    out = std::move(backlog);
  } else {
    out = extract_all(flows, schema);
  }
  apply_scaler_inplace(out, *client.scaler);
  client.pending.clear();
  client.pending.shrink_to_fit();
  return out;
}

struct RoundData {
  std::vector<FeatureVector> train, val, test;
  bool ready = false;
};

inline RoundData ingest_round(ClientState& client, std::vector<FeatureVector> new_flows, Strategy strategy, Rng& rng) {
  RoundData d;
  if (strategy == Strategy::Unbuffered) {
    std::shuffle(new_flows.begin(), new_flows.end(), rng);
    const std::size_t n = new_flows.size();
    const auto n_train = static_cast<std::size_t>(std::floor(0.7 * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::floor(0.1 * static_cast<double>(n)));
    auto it = std::make_move_iterator(new_flows.begin());
    d.train.assign(it, it + n_train);
    d.val.assign(it + n_train, it + n_train + n_val);
    d.test.assign(it + n_train + n_val, std::make_move_iterator(new_flows.end()));
    d.ready = d.train.size() >= 2;
    return d;
  }
  std::vector<FeatureVector> to_train, to_val, to_test;
  for (auto& v : new_flows) {
    const double u = uniform01(rng);
    (u < 0.7 ? to_train : u < 0.8 ? to_val : to_test).push_back(std::move(v));
  }
  client.train_buf.push(to_train);
  client.val_buf.push(to_val);
  client.test_buf.push(to_test);
  d.ready = client.train_buf.full();
  if (d.ready) {
    d.train = client.train_buf.snapshot();
    d.val = client.val_buf.snapshot();
    d.test = client.test_buf.snapshot();
  }
  return d;
}

struct ClientUpdate {
  int client_id = 0;
  bool participated = false;
  std::optional<ModelParams> params;
  std::size_t n_train = 0;
  double train_loss = std::numeric_limits<double>::quiet_NaN();
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  int epochs_run = 0;
  std::string failure;  // reason when training diverged
};

/// One client's local training from the broadcast global model. A validation
/// set smaller than `min_val` disables early stopping.
inline ClientUpdate local_round(int client_id, const ModelParams& global, const RoundData& data,
                                const TrainConfig& cfg, Aggregator aggregator, double mu, std::size_t min_val = 1) {
  ClientUpdate up;
  up.client_id = client_id;
  if (!data.ready) return up;
  const int n = global.input_dim;
  const Dataset train = to_dataset(data.train, n);
  const Dataset val = data.val.size() >= std::max<std::size_t>(min_val, 1) ? to_dataset(data.val, n) : Dataset{};
  Proximal prox;
  if (aggregator == Aggregator::FedProx) prox = {&global, mu};
  try {
    auto res = train_local(global, train, val, cfg, prox);
    up.participated = true;
    up.params = std::move(res.params);
    up.n_train = data.train.size();
    up.train_loss = res.train_loss;
    up.val_loss = res.best_val_loss;
    up.epochs_run = res.epochs_run;
  } catch (const Error& e) {
    if (e.category() != ErrorCategory::Training) throw;
    up.failure = e.what();
  }
  return up;
}

namespace detail {
inline std::vector<const ClientUpdate*> participants(std::span<const ClientUpdate> updates,
                                                     const ModelParams& global) {
  std::vector<const ClientUpdate*> ps;
  for (const auto& u : updates)
    if (u.participated && u.params) {
      if (!same_shape(*u.params, global)) throw Error(ErrorCategory::Shape, "client update shape mismatch");
      ps.push_back(&u);
    }
  std::stable_sort(ps.begin(), ps.end(), [](auto* a, auto* b) { return a->client_id < b->client_id; });
  return ps;
}

inline std::vector<double> weights_of(const std::vector<const ClientUpdate*>& ps) {
  double total = 0;
  for (auto* p : ps) total += static_cast<double>(p->n_train);
  std::vector<double> w;
  for (auto* p : ps) w.push_back(total > 0 ? static_cast<double>(p->n_train) / total : 1.0 / ps.size());
  return w;
}
}  // namespace detail

/// Sample-weighted average of every tensor (running statistics included),
/// accumulated in ascending client order. Returns nullopt when nobody
/// participated (stalled round).
inline std::optional<ModelParams> aggregate_fedavg(std::span<const ClientUpdate> updates, const ModelParams& global) {
  const auto ps = detail::participants(updates, global);
  if (ps.empty()) return std::nullopt;
  const auto w = detail::weights_of(ps);
  ModelParams out = zeros_like(global);
  for (std::size_t k = 0; k < ps.size(); ++k)
    for (std::size_t t = 0; t < out.tensors.size(); ++t)
      out.tensors[t].value += w[k] * ps[k]->params->tensors[t].value;
  return out;
}

struct ServerState {
  ModelParams global;
  Aggregator kind = Aggregator::FedAvg;
  ServerHyper hyper;
  std::vector<Matrix> m, v;

  ServerState(ModelParams g, Aggregator k, ServerHyper h) : global(std::move(g)), kind(k), hyper(h) {
    if (!(hyper.tau > 0)) throw Error(ErrorCategory::Config, "server tau must be > 0");
    for (const auto& t : global.tensors) {
      m.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
      v.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
    }
  }
};

/// Server-side adaptive step on the weighted mean client delta. Running
/// statistics are averaged directly.
inline std::optional<ModelParams> aggregate_adaptive(std::span<const ClientUpdate> updates, ServerState& server) {
  const ModelParams& global = server.global;
  const auto ps = detail::participants(updates, global);
  if (ps.empty()) return std::nullopt;
  const auto w = detail::weights_of(ps);
  const auto& h = server.hyper;
  ModelParams out = global;
  for (std::size_t t = 0; t < out.tensors.size(); ++t) {
    Matrix acc = Matrix::Zero(global.tensors[t].value.rows(), global.tensors[t].value.cols());
    if (!global.tensors[t].trainable) {
      for (std::size_t k = 0; k < ps.size(); ++k) acc += w[k] * ps[k]->params->tensors[t].value;
      out.tensors[t].value = std::move(acc);
      continue;
    }
    for (std::size_t k = 0; k < ps.size(); ++k)
      acc += w[k] * (ps[k]->params->tensors[t].value - global.tensors[t].value);
    const auto delta = acc.array();
    auto m = server.m[t].array();
    auto v = server.v[t].array();
    m = h.beta1 * m + (1.0 - h.beta1) * delta;
    const auto d2 = delta.square();
    switch (server.kind) {
      case Aggregator::FedAdagrad: v = v + d2; break;
      case Aggregator::FedAdam: v = h.beta2 * v + (1.0 - h.beta2) * d2; break;
      case Aggregator::FedYogi: v = v - (1.0 - h.beta2) * d2 * (v - d2).sign(); break;
      default: throw Error(ErrorCategory::Usage, "aggregate_adaptive called with a non-adaptive aggregator");
    }
    out.tensors[t].value.array() = global.tensors[t].value.array() + h.eta * m / (v.sqrt() + h.tau);
  }
  return out;
}

/// Applies the configured aggregator; returns false for a stalled round.
inline bool aggregate(std::span<const ClientUpdate> updates, ServerState& server) {
  auto next = is_adaptive(server.kind) ? aggregate_adaptive(updates, server) : aggregate_fedavg(updates, server.global);
  if (!next) return false;
  server.global = std::move(*next);
  return true;
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index must only
/// touch its own outputs; the first exception is rethrown.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const auto threads = static_cast<std::size_t>(std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(n, 1))));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  pool.clear();
  if (error) std::rethrow_exception(error);
}

struct ClientRoundEntry {
  int client_id = -1;
  std::size_t participated = 0;  // 0/1 per client, participant count in the aggregate row
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double macro_f1 = std::numeric_limits<double>::quiet_NaN();
  double loss = std::numeric_limits<double>::quiet_NaN();  // test cross-entropy
};

struct RoundReport {
  int round = 0;
  Scenario scenario = Scenario::FedBuffered;
  Aggregator aggregator = Aggregator::FedAvg;
  std::vector<ClientRoundEntry> clients;
  ClientRoundEntry aggregate;  // client_id stays -1
  bool stalled = false;
};

struct ExperimentResult {
  std::vector<RoundReport> rounds;
  ModelParams global;
};

inline ModelParams initial_global(const FedConfig& cfg) {
  return init_params(cfg.schema.size(), derive_seed(cfg.seed, Stream::Init), cfg.client_train.leaky_slope);
}

inline TrainConfig client_train_config(const FedConfig& cfg, int client, int round) {
  TrainConfig tc = cfg.client_train;
  tc.seed = derive_seed(cfg.seed, Stream::Shuffle, {static_cast<std::uint64_t>(client), static_cast<std::uint64_t>(round)});
  return tc;
}

/// Federated experiment over rounds [0, n_rounds). Each round: broadcast,
/// ingest, local training, aggregation, then evaluation of the new global
/// model on every participant's test set.
inline ExperimentResult run_federated(const RoundPartition& corpus, Strategy strategy, const FedConfig& cfg,
                                      const std::function<void(const RoundReport&)>& on_round = {}) {
  if (cfg.n_clients < 1 || cfg.n_rounds < 1) throw Error(ErrorCategory::Config, "n_clients and n_rounds must be >= 1");
  cfg.client_train.validate();
  std::vector<ClientState> clients;
  for (int c = 0; c < cfg.n_clients; ++c) clients.emplace_back(c, cfg.buffers);
  ServerState server(initial_global(cfg), cfg.aggregator, cfg.server);
  const Scenario scenario = strategy == Strategy::Buffered ? Scenario::FedBuffered : Scenario::FedUnbuffered;
  const std::size_t min_val = strategy == Strategy::Buffered ? cfg.min_val_for_early_stop : 1;
  const std::vector<FlowRecord> no_flows;

  ExperimentResult result;
  for (int r = 0; r < cfg.n_rounds; ++r) {
    const auto round_it = corpus.find(r);
    std::vector<ClientUpdate> updates(clients.size());
    std::vector<std::vector<FeatureVector>> test_sets(clients.size());
    const ModelParams& broadcast = server.global;

    parallel_for(clients.size(), cfg.workers, [&](std::size_t c) {
      ClientState& client = clients[c];
      const std::vector<FlowRecord>* flows = &no_flows;
      if (round_it != corpus.end())
        if (auto it = round_it->second.find(client.client_id); it != round_it->second.end()) flows = &it->second;
      auto scaled = featurize_round(client, *flows, cfg.schema, cfg.scaler_min_flows, strategy);
      Rng split_rng = make_rng(cfg.seed, Stream::Split,
                               {static_cast<std::uint64_t>(client.client_id), static_cast<std::uint64_t>(r)});
      RoundData data = ingest_round(client, std::move(scaled), strategy, split_rng);
      updates[c] = local_round(client.client_id, broadcast, data, client_train_config(cfg, client.client_id, r),
                               cfg.aggregator, cfg.prox_mu, min_val);
      if (updates[c].participated) test_sets[c] = std::move(data.test);
    });

    RoundReport report;
    report.round = r;
    report.scenario = scenario;
    report.aggregator = cfg.aggregator;
    report.stalled = !aggregate(updates, server);

    report.clients.resize(clients.size());
    parallel_for(clients.size(), cfg.workers, [&](std::size_t c) {
      ClientRoundEntry& e = report.clients[c];
      e.client_id = clients[c].client_id;
      e.participated = updates[c].participated ? 1 : 0;
      e.n_train = updates[c].n_train;
      if (!updates[c].participated || test_sets[c].empty()) return;
      const Dataset test = to_dataset(test_sets[c], server.global.input_dim);
      const auto ev = evaluate(server.global, test, cfg.client_train);
      e.n_test = test_sets[c].size();
      e.macro_f1 = macro_f1(confusion_matrix(test.targets, ev.predictions));
      e.loss = ev.loss;
    });

    ClientRoundEntry& agg = report.aggregate;
    double f1_sum = 0, loss_sum = 0;
    for (const auto& e : report.clients) {
      agg.participated += e.participated;
      agg.n_train += e.n_train;
      if (e.n_test == 0) continue;
      agg.n_test += e.n_test;
      f1_sum += static_cast<double>(e.n_test) * e.macro_f1;
      loss_sum += static_cast<double>(e.n_test) * e.loss;
    }
    if (agg.n_test > 0) {
      agg.macro_f1 = f1_sum / static_cast<double>(agg.n_test);
      agg.loss = loss_sum / static_cast<double>(agg.n_test);
    }

    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_dir.empty() && (r + 1) % cfg.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "global_round_%04d.bin", r);
      save_checkpoint((std::filesystem::path(cfg.checkpoint_dir) / name).string(), server.global);
    }
    if (on_round) on_round(report);
    result.rounds.push_back(std::move(report));
  }
  result.global = std::move(server.global);
  return result;
}

struct CentralizedResult {
  double train_f1 = 0, val_f1 = 0, test_f1 = 0;
  double test_loss = 0;
  std::size_t n_train = 0, n_val = 0, n_test = 0;
  int epochs_run = 0;
  ModelParams params;
  Scaler scaler;
  ConfusionMatrix test_cm;
  Dataset test;
};

/// Seeded 70/10/20 split of the whole corpus; the scaler is fitted on the
/// training part.
struct CentralizedSplit {
  std::vector<FeatureVector> train, val, test;
  Scaler scaler;
};

/// Unscaled split; `scaler` is left empty.
inline CentralizedSplit centralized_split_raw(std::span<const FlowRecord> flows, const FedConfig& cfg) {
  if (flows.size() < 10) throw Error(ErrorCategory::Usage, "centralized training needs at least 10 flows");
  std::vector<std::size_t> order(flows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(cfg.seed, Stream::Centralized);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n = flows.size();
  const auto n_train = static_cast<std::size_t>(std::floor(0.7 * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(0.1 * static_cast<double>(n)));
  CentralizedSplit s;
  for (std::size_t i = 0; i < n; ++i) {
    auto v = extract(flows[order[i]], cfg.schema);
    (i < n_train ? s.train : i < n_train + n_val ? s.val : s.test).push_back(std::move(v));
  }
  return s;
}

inline CentralizedSplit centralized_split(std::span<const FlowRecord> flows, const FedConfig& cfg) {
  auto s = centralized_split_raw(flows, cfg);
  s.scaler = fit_scaler(s.train);
  apply_scaler_inplace(s.train, s.scaler);
  apply_scaler_inplace(s.val, s.scaler);
  apply_scaler_inplace(s.test, s.scaler);
  return s;
}

inline CentralizedResult run_centralized(std::span<const FlowRecord> flows, const FedConfig& cfg) {
  auto split = centralized_split(flows, cfg);
  const int n = cfg.schema.size();
  const Dataset train = to_dataset(split.train, n), val = to_dataset(split.val, n);
  CentralizedResult r;
  r.test = to_dataset(split.test, n);
  TrainConfig tc = cfg.central_train;
  tc.seed = derive_seed(cfg.seed, Stream::Centralized, {1});
  auto trained = train_local(initial_global(cfg), train, val, tc);
  r.params = std::move(trained.params);
  r.epochs_run = trained.epochs_run;
  r.scaler = split.scaler;
  r.n_train = train.size();
  r.n_val = val.size();
  r.n_test = r.test.size();
  auto f1_of = [&](const Dataset& d) { return d.empty() ? 0.0 : macro_f1_of(r.params, d); };
  r.train_f1 = f1_of(train);
  r.val_f1 = f1_of(val);
  const auto ev = evaluate(r.params, r.test, tc);
  r.test_cm = confusion_matrix(r.test.targets, ev.predictions);
  r.test_f1 = macro_f1(r.test_cm);
  r.test_loss = ev.loss;
  return r;
}

// Per-round CSV, one row per round: the aggregate over participating clients
// (n_test-weighted macro F1 and test loss; NaN for stalled rounds).
inline std::string round_report_header() {
  return "round,scenario,aggregator,participants,n_train,n_test,macro_f1,loss";
}

inline void write_round_reports(std::ostream& os, std::span<const RoundReport> reports) {
  os << round_report_header() << '\n';
  for (const auto& r : reports) {
    const auto& e = r.aggregate;
    os << r.round << ',' << to_string(r.scenario) << ',' << to_string(r.aggregator) << ',' << e.participated << ','
       << e.n_train << ',' << e.n_test << ',' << detail::format_double(e.macro_f1) << ','
       << detail::format_double(e.loss) << '\n';
  }
}

// Per-client detail: one row per (round, client).
inline std::string client_report_header() { return "round,client_id,participated,n_train,n_test,macro_f1,loss"; }

inline void write_client_reports(std::ostream& os, std::span<const RoundReport> reports) {
  os << client_report_header() << '\n';
  for (const auto& r : reports)
    for (const auto& e : r.clients)
      os << r.round << ',' << e.client_id << ',' << e.participated << ',' << e.n_train << ',' << e.n_test << ','
         << detail::format_double(e.macro_f1) << ',' << detail::format_double(e.loss) << '\n';
}

/// Aggregate macro-F1 per round, indexed by round number.
inline std::vector<double> aggregate_f1_series(std::span<const RoundReport> reports) {
  std::vector<double> s;
  for (const auto& r : reports) {
    if (r.round >= static_cast<int>(s.size())) s.resize(r.round + 1, std::numeric_limits<double>::quiet_NaN());
    s[r.round] = r.aggregate.macro_f1;
  }
  return s;
}

}  // namespace fedbuf
