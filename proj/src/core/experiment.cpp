/*
 * Copyright 2026 The fedstat Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "core/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <thread>

#include "core/record.hpp"

namespace fs = std::filesystem;

namespace fedstat {

using record::fmt_double;
using record::parse;
using record::read_text_file;
using record::write_text_file;

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

struct ConfigCursor {
  const std::string* source = nullptr;
  int line = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw_config(*source + ":" + std::to_string(line) + ": " + msg);
  }
};

double parse_double_value(const std::string& v, const ConfigCursor& at) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
    at.fail("expected a finite number, got '" + v + "'");
  return out;
}

long long parse_int_value(const std::string& v, const ConfigCursor& at) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    at.fail("expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t parse_u64_value(const std::string& v, const ConfigCursor& at) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    at.fail("expected a non-negative integer, got '" + v + "'");
  return out;
}

std::size_t parse_size_value(const std::string& v, const ConfigCursor& at) {
  long long out = parse_int_value(v, at);
  if (out < 0) at.fail("expected a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(out);
}

bool parse_bool_value(const std::string& v, const ConfigCursor& at) {
  if (v == "on" || v == "true" || v == "yes" || v == "1") return true;
  if (v == "off" || v == "false" || v == "no" || v == "0") return false;
  at.fail("expected on/off, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(v);
  while (std::getline(ss, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& v, const ConfigCursor& at) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(v)) out.push_back(parse_size_value(item, at));
  return out;
}

// Strategy-level keys, usable both as file-level defaults and inside a
// [strategy] block. Returns false if the key is not one of them.
bool apply_strategy_key(StrategyConfig& sc, const std::string& key,
                        const std::string& value, const ConfigCursor& at) {
  if (key == "rounds") {
    sc.rounds = static_cast<int>(parse_int_value(value, at));
  } else if (key == "local_epochs") {
    sc.local_epochs = static_cast<int>(parse_int_value(value, at));
  } else if (key == "batch_size") {
    sc.batch_size = static_cast<int>(parse_int_value(value, at));
  } else if (key == "learning_rate") {
    sc.learning_rate = parse_double_value(value, at);
  } else if (key == "reset_optimizer_each_round") {
    sc.reset_optimizer_each_round = parse_bool_value(value, at);
  } else {
    return false;
  }
  return true;
}

std::string sanitize_for_filename(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
                    c == '-' || c == '_';
    out.push_back(ok ? c : '_');
  }
  if (out.empty()) out = "_";
  return out;
}

std::vector<int> sorted_client_ids(const std::vector<ClientPartition>& clients) {
  std::vector<int> ids;
  ids.reserve(clients.size());
  for (const auto& c : clients) ids.push_back(c.client_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

const ClientPartition& client_by_id(const std::vector<ClientPartition>& clients, int id) {
  for (const auto& c : clients) {
    if (c.client_id == id) return c;
  }
  throw_data("no client with id " + std::to_string(id));
}

}  // namespace

void RunConfig::validate() const {
  if (num_clients == 0) throw_config("num_clients must be at least 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw_config("train_fraction must lie strictly between 0 and 1");
  if (hidden.empty()) throw_config("hidden must list at least one layer width");
  for (std::size_t h : hidden) {
    if (h == 0) throw_config("hidden layer widths must be positive");
  }
  if (source.kind == SourceConfig::Kind::csv) {
    if (source.csv_path.empty()) throw_config("csv source needs csv_path");
    if (source.label_column.empty()) throw_config("csv source needs label_column");
  }
  if (smote.enabled && smote.k < 1) throw_config("smote_k must be at least 1");
  if (strategies.empty()) throw_config("config defines no [strategy] blocks");
  std::set<std::string> seen;
  for (const auto& s : strategies) {
    s.validate();
    if (!seen.insert(strategy_name(s.strategy)).second)
      throw_config("strategy " + strategy_name(s.strategy) + " listed twice");
  }
}

RunConfig parse_run_config(const std::string& text, const std::string& source_name) {
  RunConfig cfg;
  StrategyConfig defaults;
  ConfigCursor at{&source_name, 0};

  // Block parsing state: index into cfg.strategies, or -1 for the global
  // section. Names arrive as a block key, so presence is tracked separately.
  int block = -1;
  std::vector<bool> block_named;

  std::stringstream ss(text);
  std::string raw;
  while (std::getline(ss, raw)) {
    ++at.line;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line == "[strategy]") {
        cfg.strategies.push_back(defaults);
        block_named.push_back(false);
        block = static_cast<int>(cfg.strategies.size()) - 1;
        continue;
      }
      at.fail("unknown section '" + line + "'");
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) at.fail("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) at.fail("empty key");

    if (block >= 0) {
      StrategyConfig& sc = cfg.strategies[static_cast<std::size_t>(block)];
      if (key == "name") {
        sc.strategy = strategy_from_name(value);
        block_named[static_cast<std::size_t>(block)] = true;
      } else if (!apply_strategy_key(sc, key, value, at)) {
        at.fail("unknown key '" + key + "' in [strategy] block");
      }
      continue;
    }

    if (key == "seed") {
      cfg.seed = parse_u64_value(value, at);
    } else if (key == "num_clients") {
      cfg.num_clients = parse_size_value(value, at);
    } else if (key == "train_fraction") {
      cfg.train_fraction = parse_double_value(value, at);
    } else if (key == "dataset") {
      if (value == "csv") {
        cfg.source.kind = SourceConfig::Kind::csv;
      } else if (value == "synth") {
        cfg.source.kind = SourceConfig::Kind::synth;
      } else {
        at.fail("dataset must be csv or synth, got '" + value + "'");
      }
    } else if (key == "csv_path") {
      cfg.source.csv_path = value;
    } else if (key == "label_column") {
      cfg.source.label_column = value;
    } else if (key == "features") {
      cfg.source.feature_columns = split_list(value);
    } else if (key == "synth_samples_per_client") {
      cfg.source.synth.samples_per_client = parse_size_value(value, at);
    } else if (key == "synth_features") {
      cfg.source.synth.num_features = parse_size_value(value, at);
    } else if (key == "synth_classes") {
      cfg.source.synth.num_classes = parse_size_value(value, at);
    } else if (key == "synth_shift") {
      cfg.source.synth.shift_magnitude = parse_double_value(value, at);
    } else if (key == "synth_scale") {
      cfg.source.synth.scale_magnitude = parse_double_value(value, at);
    } else if (key == "synth_drift") {
      try {
        cfg.source.synth.drift_mode = drift_mode_from_name(value);
      } catch (const Error&) {
        at.fail("unknown drift mode '" + value + "'");
      }
    } else if (key == "synth_class_separation") {
      cfg.source.synth.class_separation = parse_double_value(value, at);
    } else if (key == "synth_tail_rate") {
      cfg.source.synth.tail_rate = parse_double_value(value, at);
    } else if (key == "smote") {
      cfg.smote.enabled = parse_bool_value(value, at);
    } else if (key == "smote_k") {
      cfg.smote.k = static_cast<int>(parse_int_value(value, at));
    } else if (key == "smote_target") {
      cfg.smote.target_per_class = parse_size_value(value, at);
    } else if (key == "stats_before_smote") {
      cfg.stats_before_smote = parse_bool_value(value, at);
    } else if (key == "parallel_strategies") {
      cfg.parallel_strategies = parse_bool_value(value, at);
    } else if (key == "hidden") {
      cfg.hidden = parse_size_list(value, at);
    } else if (!apply_strategy_key(defaults, key, value, at)) {
      at.fail("unknown key '" + key + "'");
    }
  }

  for (std::size_t i = 0; i < block_named.size(); ++i) {
    if (!block_named[i])
      throw_config(source_name + ": [strategy] block " + std::to_string(i + 1) +
                   " has no name");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_text_file(path), path);
}

MaterializedRun materialize_run(const RunConfig& cfg) {
  MaterializedRun out;
  if (cfg.source.kind == SourceConfig::Kind::csv) {
    LabeledDataset ds =
        load_csv(cfg.source.csv_path, cfg.source.label_column, cfg.source.feature_columns);
    std::vector<LabeledDataset> parts = stratified_partition(ds, cfg.num_clients, cfg.seed);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const int id = static_cast<int>(i) + 1;
      TrainTestSplit split = train_test_split(
          parts[i], cfg.train_fraction,
          derive_seed(cfg.seed, "client_split", static_cast<std::uint64_t>(id)), true);
      ClientPartition c;
      c.client_id = id;
      c.train = std::move(split.train);
      c.test = std::move(split.test);
      out.clients.push_back(std::move(c));
    }
  } else {
    SynthSpec spec = cfg.source.synth;
    spec.num_clients = cfg.num_clients;
    spec.train_fraction = cfg.train_fraction;
    spec.seed = cfg.seed;
    SynthResult res = synth_noniid_generate(spec);
    out.synth_metadata = synth_metadata_record(res);
    out.clients = std::move(res.clients);
  }

  if (cfg.smote.enabled) {
    if (cfg.stats_before_smote) {
      for (const auto& c : out.clients)
        out.stats_override.push_back(compute_local_stats(c.train, c.client_id));
    }
    for (auto& c : out.clients) {
      SmoteResult res = smote_upsample(
          c.train, cfg.smote.target_per_class, cfg.smote.k,
          derive_seed(cfg.seed, "client_smote", static_cast<std::uint64_t>(c.client_id)));
      c.train = std::move(res.data);
      for (const auto& w : res.warnings)
        out.smote_warnings.push_back("client " + std::to_string(c.client_id) + ": " + w);
    }
  }
  assign_weights(out.clients);
  return out;
}

std::string run_metadata_record(const RunConfig& cfg, const MaterializedRun& run) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["seed"] = cfg.seed;
  j["num_clients"] = cfg.num_clients;
  j["train_fraction"] = cfg.train_fraction;

  nlohmann::ordered_json src;
  if (cfg.source.kind == SourceConfig::Kind::csv) {
    src["kind"] = "csv";
    src["csv_path"] = cfg.source.csv_path;
    src["label_column"] = cfg.source.label_column;
    src["feature_columns"] = cfg.source.feature_columns;
  } else {
    src["kind"] = "synth";
    src["samples_per_client"] = cfg.source.synth.samples_per_client;
    src["num_features"] = cfg.source.synth.num_features;
    src["num_classes"] = cfg.source.synth.num_classes;
    src["shift_magnitude"] = cfg.source.synth.shift_magnitude;
    src["scale_magnitude"] = cfg.source.synth.scale_magnitude;
    src["drift_mode"] = drift_mode_name(cfg.source.synth.drift_mode);
    src["class_separation"] = cfg.source.synth.class_separation;
    src["tail_rate"] = cfg.source.synth.tail_rate;
  }
  j["source"] = src;

  j["smote"] = {{"enabled", cfg.smote.enabled},
                {"k", cfg.smote.k},
                {"target_per_class", cfg.smote.target_per_class}};
  j["stats_before_smote"] = cfg.stats_before_smote;
  j["parallel_strategies"] = cfg.parallel_strategies;
  j["hidden"] = cfg.hidden;

  nlohmann::ordered_json strategies = nlohmann::ordered_json::array();
  for (const auto& s : cfg.strategies) {
    strategies.push_back({{"name", strategy_name(s.strategy)},
                          {"rounds", s.rounds},
                          {"local_epochs", s.local_epochs},
                          {"batch_size", s.batch_size},
                          {"learning_rate", s.learning_rate},
                          {"reset_optimizer_each_round", s.reset_optimizer_each_round}});
  }
  j["strategies"] = strategies;

  j["constants"] = {{"adam_beta1", 0.9},
                    {"adam_beta2", 0.999},
                    {"adam_eps", 1e-8},
                    {"batch_norm_eps", kBatchNormEps},
                    {"batch_norm_momentum", kBatchNormMomentum},
                    {"layer_norm_eps", kLayerNormEps},
                    {"normalize_eps", kNormalizeEps}};
  j["conventions"] = {
      {"averaging", "train_row_proportional_weights"},
      {"label_encoding", "first_occurrence_order"},
      {"init", "glorot_uniform_weights_zero_biases"},
      {"statavg_normalization_source", "global_stats"},
      {"baseline_normalization_source", "local_stats"},
      {"fedbn_evaluation_model", "mean_of_per_client_bn_composites"}};

  nlohmann::ordered_json seeds;
  seeds["master"] = cfg.seed;
  seeds["train"] = derive_seed(cfg.seed, "train");
  if (cfg.source.kind == SourceConfig::Kind::csv) {
    seeds["stratified_partition"] = derive_seed(cfg.seed, "stratified_partition");
    nlohmann::ordered_json splits = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < cfg.num_clients; ++i)
      splits.push_back(derive_seed(cfg.seed, "client_split",
                                   static_cast<std::uint64_t>(i) + 1));
    seeds["client_split"] = splits;
  } else {
    seeds["synth"] = cfg.seed;
  }
  if (cfg.smote.enabled) {
    nlohmann::ordered_json sm = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < cfg.num_clients; ++i)
      sm.push_back(derive_seed(cfg.seed, "client_smote",
                               static_cast<std::uint64_t>(i) + 1));
    seeds["client_smote"] = sm;
  }
  j["seeds"] = seeds;

  nlohmann::ordered_json clients = nlohmann::ordered_json::array();
  for (int id : sorted_client_ids(run.clients)) {
    const ClientPartition& c = client_by_id(run.clients, id);
    clients.push_back({{"client_id", c.client_id},
                       {"train_rows", c.train.size()},
                       {"test_rows", c.test.size()},
                       {"weight", c.weight},
                       {"train_class_counts", c.train.class_counts()}});
  }
  j["clients"] = clients;
  j["smote_warnings"] = run.smote_warnings;
  return j.dump(2) + "\n";
}

RunConfig run_config_from_metadata(const std::string& text, const std::string& source) {
  const nlohmann::json j = parse(text, source);
  try {
    RunConfig cfg;
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.num_clients = j.at("num_clients").get<std::size_t>();
    cfg.train_fraction = j.at("train_fraction").get<double>();

    const auto& src = j.at("source");
    const std::string kind = src.at("kind").get<std::string>();
    if (kind == "csv") {
      cfg.source.kind = SourceConfig::Kind::csv;
      cfg.source.csv_path = src.at("csv_path").get<std::string>();
      cfg.source.label_column = src.at("label_column").get<std::string>();
      cfg.source.feature_columns = src.at("feature_columns").get<std::vector<std::string>>();
    } else if (kind == "synth") {
      cfg.source.kind = SourceConfig::Kind::synth;
      cfg.source.synth.samples_per_client = src.at("samples_per_client").get<std::size_t>();
      cfg.source.synth.num_features = src.at("num_features").get<std::size_t>();
      cfg.source.synth.num_classes = src.at("num_classes").get<std::size_t>();
      cfg.source.synth.shift_magnitude = src.at("shift_magnitude").get<double>();
      cfg.source.synth.scale_magnitude = src.at("scale_magnitude").get<double>();
      cfg.source.synth.drift_mode = drift_mode_from_name(src.at("drift_mode").get<std::string>());
      cfg.source.synth.class_separation = src.at("class_separation").get<double>();
      cfg.source.synth.tail_rate = src.at("tail_rate").get<double>();
    } else {
      throw_data(source + ": unknown source kind '" + kind + "'");
    }

    const auto& sm = j.at("smote");
    cfg.smote.enabled = sm.at("enabled").get<bool>();
    cfg.smote.k = sm.at("k").get<int>();
    cfg.smote.target_per_class = sm.at("target_per_class").get<std::size_t>();
    cfg.stats_before_smote = j.at("stats_before_smote").get<bool>();
    cfg.parallel_strategies = j.value("parallel_strategies", false);
    cfg.hidden = j.at("hidden").get<std::vector<std::size_t>>();

    for (const auto& s : j.at("strategies")) {
      StrategyConfig sc;
      sc.strategy = strategy_from_name(s.at("name").get<std::string>());
      sc.rounds = s.at("rounds").get<int>();
      sc.local_epochs = s.at("local_epochs").get<int>();
      sc.batch_size = s.at("batch_size").get<int>();
      sc.learning_rate = s.at("learning_rate").get<double>();
      sc.reset_optimizer_each_round = s.at("reset_optimizer_each_round").get<bool>();
      cfg.strategies.push_back(sc);
    }
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw_data(source + ": bad run metadata: " + e.what());
  }
}

namespace {

struct BestRoundMetrics {
  double accuracy = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double f1 = 0.0;
};

BestRoundMetrics cross_client_means(const std::vector<MetricReport>& reports) {
  BestRoundMetrics m;
  if (reports.empty()) return m;
  for (const auto& r : reports) {
    m.accuracy += r.macro_accuracy;
    m.tpr += r.macro_tpr;
    m.fpr += r.macro_fpr;
    m.f1 += r.macro_f1;
  }
  const double n = static_cast<double>(reports.size());
  m.accuracy /= n;
  m.tpr /= n;
  m.fpr /= n;
  m.f1 /= n;
  return m;
}

}  // namespace

TrainOutcome cmd_train(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.out_dir.empty()) throw_config("train: no output directory given");
  fs::create_directories(cfg.out_dir);

  MaterializedRun run = materialize_run(cfg);
  write_text_file(cfg.out_dir + "/metadata.json", run_metadata_record(cfg, run));
  if (!run.synth_metadata.empty())
    write_text_file(cfg.out_dir + "/synth_metadata.json", run.synth_metadata);

  const std::vector<int> ids = sorted_client_ids(run.clients);
  const std::vector<LocalStats>* stats_override =
      run.stats_override.empty() ? nullptr : &run.stats_override;

  ModelSpec spec;
  spec.hidden = cfg.hidden;

  // Every strategy sees the same data, seed and model shape; results land
  // in config order either way, so the parallel path writes identical bytes.
  std::vector<StrategyConfig> scfgs;
  for (const auto& strat : cfg.strategies) {
    scfgs.push_back(strat);
    scfgs.back().seed = derive_seed(cfg.seed, "train");
  }
  std::vector<FederationResult> results(scfgs.size());
  if (cfg.parallel_strategies && scfgs.size() > 1) {
    std::vector<std::exception_ptr> errors(scfgs.size());
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < scfgs.size(); ++i) {
      workers.emplace_back([&, i] {
        try {
          results[i] = run_federation(run.clients, spec, scfgs[i], nullptr,
                                      stats_override);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (std::size_t i = 0; i < scfgs.size(); ++i)
      results[i] = run_federation(run.clients, spec, scfgs[i], nullptr, stats_override);
  }

  TrainOutcome outcome;
  std::string summary_csv = "strategy,best_round,accuracy,tpr,fpr,f1\n";
  for (std::size_t si = 0; si < scfgs.size(); ++si) {
    const StrategyConfig& scfg = scfgs[si];
    FederationResult& result = results[si];

    const std::string name = strategy_name(scfg.strategy);
    const std::string dir = cfg.out_dir + "/" + name;
    fs::create_directories(dir);

    std::string history;
    for (const auto& rec : result.history) history += to_record(rec) + "\n";
    write_text_file(dir + "/history.jsonl", history);
    write_text_file(dir + "/best_model.json", to_record(result.best_model) + "\n");
    if (scfg.strategy == Strategy::fedbn) {
      for (std::size_t i = 0; i < result.best_client_models.size(); ++i) {
        write_text_file(dir + "/best_model_client_" + std::to_string(ids[i]) + ".json",
                        to_record(result.best_client_models[i]) + "\n");
      }
    }

    std::vector<MetricReport> reports;
    nlohmann::ordered_json per_client = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < result.best_confusions.size(); ++i) {
      const ConfusionMatrix& cm = result.best_confusions[i];
      reports.push_back(macro_report(cm));
      write_text_file(dir + "/best_confusion_client_" + std::to_string(ids[i]) + ".csv",
                      confusion_to_csv(cm, result.class_names));
      per_client.push_back(
          {{"client_id", ids[i]},
           {"report", parse(to_record(reports.back(), result.class_names), "report")}});
    }
    const BestRoundMetrics mean = cross_client_means(reports);

    nlohmann::ordered_json best;
    best["version"] = 1;
    best["strategy"] = name;
    best["best_round"] = result.best_round;
    best["best_mean_test_accuracy"] = result.best_mean_test_accuracy;
    best["normalization_source"] = result.normalization_source;
    // FedBN has no universal global model; its accuracy is the mean over
    // per-client models that pair aggregated layers with local BN groups.
    best["evaluation_model"] = scfg.strategy == Strategy::fedbn
                                   ? "mean_of_per_client_bn_composites"
                                   : "aggregated_global";
    best["cross_client"] = {{"accuracy", mean.accuracy},
                            {"tpr", mean.tpr},
                            {"fpr", mean.fpr},
                            {"f1", mean.f1}};
    best["per_client"] = per_client;
    write_text_file(dir + "/best_metrics.json", best.dump(2) + "\n");

    summary_csv += name + "," + std::to_string(result.best_round) + "," +
                   fmt_double(mean.accuracy) + "," + fmt_double(mean.tpr) + "," +
                   fmt_double(mean.fpr) + "," + fmt_double(mean.f1) + "\n";

    StrategySummary s;
    s.strategy = name;
    s.best_round = result.best_round;
    s.best_mean_test_accuracy = result.best_mean_test_accuracy;
    s.accuracy = mean.accuracy;
    s.tpr = mean.tpr;
    s.fpr = mean.fpr;
    s.f1 = mean.f1;
    outcome.summaries.push_back(s);
  }
  write_text_file(cfg.out_dir + "/summary.csv", summary_csv);
  return outcome;
}

void cmd_synth(const SynthSpec& spec, const std::string& out_dir) {
  if (out_dir.empty()) throw_config("synth: no output directory given");
  SynthResult res = synth_noniid_generate(spec);
  fs::create_directories(out_dir);
  for (const auto& c : res.clients) {
    const std::string dir = out_dir + "/client_" + std::to_string(c.client_id);
    fs::create_directories(dir);
    write_csv(c.train, dir + "/train.csv");
    write_csv(c.test, dir + "/test.csv");
  }
  write_text_file(out_dir + "/metadata.json", synth_metadata_record(res));
}

StatsSummary cmd_stats_aggregate(const std::vector<std::string>& input_paths,
                                 const std::string& out_path) {
  if (input_paths.empty()) throw_config("stats: no input record files given");
  if (out_path.empty()) throw_config("stats: no output path given");
  std::vector<LocalStats> locals;
  for (const auto& path : input_paths) {
    const std::string text = read_text_file(path);
    if (!record_is_local_stats(text))
      throw_data(path + ": not a client statistics record");
    locals.push_back(local_stats_from_record(text, path));
    if (locals.back().mean.size() != locals.front().mean.size())
      throw_data(path + " has " + std::to_string(locals.back().mean.size()) +
                 " features but " + input_paths.front() + " has " +
                 std::to_string(locals.front().mean.size()));
  }
  GlobalStats g = aggregate_stats(locals);
  write_stats(g, out_path);
  return {g.total_count, g.mean.size()};
}

StatsSummary cmd_stats_compute(const std::string& csv_path,
                               const std::string& label_column,
                               const std::vector<std::string>& feature_columns,
                               int client_id, const std::string& out_path) {
  if (out_path.empty()) throw_config("stats: no output path given");
  LabeledDataset ds = load_csv(csv_path, label_column, feature_columns);
  LocalStats ls = compute_local_stats(ds, client_id);
  write_stats(ls, out_path);
  return {ls.count, ls.mean.size()};
}

namespace {

void write_accuracy_curves(const std::string& run_dir, const std::string& out_dir,
                           const std::vector<std::string>& strategy_names,
                           const std::vector<int>& ids) {
  for (const auto& name : strategy_names) {
    const std::string path = run_dir + "/" + name + "/history.jsonl";
    const std::string text = read_text_file(path);

    std::string csv = "round,mean_test_accuracy,mean_train_loss";
    for (int id : ids) csv += ",client_" + std::to_string(id) + "_accuracy";
    csv += "\n";

    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      RoundRecord rec =
          round_record_from_record(line, path + ":" + std::to_string(lineno));
      if (rec.per_client_accuracy.size() != ids.size())
        throw_data(path + ": round " + std::to_string(rec.round) + " reports " +
                   std::to_string(rec.per_client_accuracy.size()) +
                   " clients, metadata lists " + std::to_string(ids.size()));
      csv += std::to_string(rec.round) + "," + fmt_double(rec.mean_test_accuracy) +
             "," + fmt_double(rec.mean_train_loss);
      for (double a : rec.per_client_accuracy) csv += "," + fmt_double(a);
      csv += "\n";
    }
    write_text_file(out_dir + "/accuracy_curve_" + sanitize_for_filename(name) + ".csv",
                    csv);
  }
}

void write_feature_stats(const std::string& out_dir,
                         const std::vector<ClientPartition>& clients,
                         const std::vector<int>& ids) {
  std::string csv = "client_id,feature,count,mean,variance\n";
  for (int id : ids) {
    const ClientPartition& c = client_by_id(clients, id);
    LocalStats ls = compute_local_stats(c.train, c.client_id);
    for (std::size_t s = 0; s < ls.mean.size(); ++s) {
      csv += std::to_string(id) + "," + c.train.feature_names[s] + "," +
             std::to_string(ls.count) + "," + fmt_double(ls.mean[s]) + "," +
             fmt_double(ls.variance[s]) + "\n";
    }
  }
  write_text_file(out_dir + "/feature_stats.csv", csv);
}

void write_histograms(const std::string& out_dir, const ReportOptions& options,
                      const std::vector<ClientPartition>& clients,
                      const std::vector<int>& ids) {
  if (options.class_label.empty())
    throw_config("report: histograms need both a feature and a class label");
  if (options.bins < 1) throw_config("report: bins must be at least 1");

  const LabeledDataset& first = client_by_id(clients, ids.front()).train;
  const auto fit = std::find(first.feature_names.begin(), first.feature_names.end(),
                             options.feature);
  if (fit == first.feature_names.end())
    throw_config("report: unknown feature '" + options.feature + "'");
  const std::size_t fidx = static_cast<std::size_t>(fit - first.feature_names.begin());
  const auto cit =
      std::find(first.class_names.begin(), first.class_names.end(), options.class_label);
  if (cit == first.class_names.end())
    throw_config("report: unknown class '" + options.class_label + "'");
  const int cls = static_cast<int>(cit - first.class_names.begin());

  // Shared bin edges: the value range of this feature within the chosen
  // class, pooled over every client's training rows.
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (int id : ids) {
    const LabeledDataset& ds = client_by_id(clients, id).train;
    for (std::size_t r = 0; r < ds.size(); ++r) {
      if (ds.labels[r] != cls) continue;
      const double v = ds.features.at(r, fidx);
      if (!any) {
        lo = hi = v;
        any = true;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!any)
    throw_data("report: no rows of class '" + options.class_label + "' in any client");
  if (hi == lo) hi = lo + 1.0;  // degenerate range, one meaningful bin

  const int bins = options.bins;
  const double width = (hi - lo) / static_cast<double>(bins);
  const std::string stem = "histogram_" + sanitize_for_filename(options.feature) + "_" +
                           sanitize_for_filename(options.class_label);
  for (int id : ids) {
    const LabeledDataset& ds = client_by_id(clients, id).train;
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    for (std::size_t r = 0; r < ds.size(); ++r) {
      if (ds.labels[r] != cls) continue;
      const double v = ds.features.at(r, fidx);
      int b = static_cast<int>(std::floor((v - lo) / width));
      b = std::clamp(b, 0, bins - 1);  // the top edge belongs to the last bin
      ++counts[static_cast<std::size_t>(b)];
    }
    std::string csv = "bin_lo,bin_hi,count\n";
    for (int b = 0; b < bins; ++b) {
      csv += fmt_double(lo + width * b) + "," + fmt_double(lo + width * (b + 1)) + "," +
             std::to_string(counts[static_cast<std::size_t>(b)]) + "\n";
    }
    write_text_file(out_dir + "/" + stem + "_client_" + std::to_string(id) + ".csv", csv);
  }
}

}  // namespace

void cmd_report(const std::string& run_dir, const std::string& out_dir,
                const ReportOptions& options) {
  if (run_dir.empty()) throw_config("report: no run directory given");
  if (out_dir.empty()) throw_config("report: no output directory given");
  const std::string meta_path = run_dir + "/metadata.json";
  const std::string meta_text = read_text_file(meta_path);
  const RunConfig cfg = run_config_from_metadata(meta_text, meta_path);

  std::vector<int> ids;
  std::vector<std::string> strategy_names;
  {
    const nlohmann::json j = parse(meta_text, meta_path);
    try {
      for (const auto& c : j.at("clients")) ids.push_back(c.at("client_id").get<int>());
      for (const auto& s : j.at("strategies"))
        strategy_names.push_back(s.at("name").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw_data(meta_path + ": bad run metadata: " + e.what());
    }
  }
  std::sort(ids.begin(), ids.end());

  fs::create_directories(out_dir);
  write_accuracy_curves(run_dir, out_dir, strategy_names, ids);

  if (options.feature_stats || !options.feature.empty()) {
    // Re-derive the client datasets the run trained on; everything needed
    // is pinned by the metadata record.
    MaterializedRun run = materialize_run(cfg);
    if (options.feature_stats) write_feature_stats(out_dir, run.clients, ids);
    if (!options.feature.empty()) write_histograms(out_dir, options, run.clients, ids);
  }
}

}  // namespace fedstat
