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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/fl.hpp"

namespace fedstat {

struct SourceConfig {
  enum class Kind { csv, synth };
  Kind kind = Kind::synth;
  std::string csv_path;
  std::string label_column;
  std::vector<std::string> feature_columns;
  SynthSpec synth;  // seed and client count are filled from the run config
};

struct SmoteConfig {
  bool enabled = false;
  int k = 5;
  std::size_t target_per_class = 0;  // 0 balances to the majority class
};

// A full experiment description. Parsed from a flat key = value file with
// one [strategy] block per strategy; keys outside any block set globals and
// strategy defaults (see parse_run_config).
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t num_clients = 5;
  double train_fraction = 0.8;
  SourceConfig source;
  SmoteConfig smote;
  // When set, normalization statistics describe the pre-upsampling data
  // instead of the data the optimizer sees.
  bool stats_before_smote = false;
  std::vector<std::size_t> hidden{128, 128, 128};
  std::vector<StrategyConfig> strategies;
  // Train the strategies concurrently. Runs share no mutable state and the
  // artifacts are written sequentially afterwards, so output bytes do not
  // depend on this switch.
  bool parallel_strategies = false;
  std::string out_dir;

  void validate() const;
};

RunConfig parse_run_config(const std::string& text, const std::string& source_name);
RunConfig load_run_config(const std::string& path);

struct MaterializedRun {
  std::vector<ClientPartition> clients;
  // stats_before_smote: the pre-upsampling moments, matched by client_id.
  std::vector<LocalStats> stats_override;
  std::vector<std::string> smote_warnings;
  std::string synth_metadata;  // empty for csv sources
};

// Deterministically derives the per-client datasets for a config:
// csv = load, stratified partition, per-client split, optional upsampling;
// synth = generator. Same config, same bytes.
MaterializedRun materialize_run(const RunConfig& cfg);

std::string run_metadata_record(const RunConfig& cfg, const MaterializedRun& run);
RunConfig run_config_from_metadata(const std::string& text, const std::string& source);

struct StrategySummary {
  std::string strategy;
  int best_round = 0;
  double best_mean_test_accuracy = 0.0;
  // Cross-client means of the per-client macro metrics at the best round.
  double accuracy = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double f1 = 0.0;
};

struct TrainOutcome {
  std::vector<StrategySummary> summaries;
};

// Runs every strategy in the config on identical client data and writes
// per-strategy round history, best-round artifacts, a summary table and a
// metadata record under cfg.out_dir.
TrainOutcome cmd_train(const RunConfig& cfg);

// Writes per-client train/test CSV files plus the generator metadata
// sidecar under out_dir.
void cmd_synth(const SynthSpec& spec, const std::string& out_dir);

struct StatsSummary {
  std::size_t count = 0;
  std::size_t num_features = 0;
};

// Pools local statistics records into one shared record.
StatsSummary cmd_stats_aggregate(const std::vector<std::string>& input_paths,
                                 const std::string& out_path);

// Computes one client's statistics record straight from a CSV file.
StatsSummary cmd_stats_compute(const std::string& csv_path,
                               const std::string& label_column,
                               const std::vector<std::string>& feature_columns,
                               int client_id, const std::string& out_path);

struct ReportOptions {
  std::string feature;     // histogram feature (needs class_label too)
  std::string class_label;
  int bins = 30;
  bool feature_stats = true;
};

// Turns a finished run directory into plot-ready CSV files: accuracy curves
// per strategy, a per-client feature moment table, and optional per-client
// histograms with shared bin edges.
void cmd_report(const std::string& run_dir, const std::string& out_dir,
                const ReportOptions& options);

}  // namespace fedstat
