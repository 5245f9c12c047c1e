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
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/metrics.hpp"
#include "core/nn.hpp"
#include "core/stats.hpp"

namespace fedstat {

// Federation strategies. They differ in two places only: how client inputs
// are standardized before training, and how parameter groups are merged.
//   StatAvg  shared statistics exchanged once at round 0, every client
//            standardizes train and test with the pooled values; plain
//            weighted parameter averaging afterwards
//   FedAvg   each client standardizes with its own statistics; weighted
//            averaging of every group
//   FedLN    FedAvg plus layer-norm layers in the model (norm parameters
//            averaged like everything else)
//   FedBN    FedAvg plus batch-norm layers whose groups are excluded from
//            averaging; every client keeps its own
enum class Strategy { statavg, fedavg, fedln, fedbn };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);
NormKind strategy_norm_kind(Strategy s);

struct StrategyConfig {
  Strategy strategy = Strategy::fedavg;
  int rounds = 50;
  int local_epochs = 2;
  int batch_size = 512;
  double learning_rate = 0.002;
  std::uint64_t seed = 0;
  // Client optimizer state persists across rounds by default; this resets
  // it at the start of every local update instead.
  bool reset_optimizer_each_round = false;

  void validate() const;
};

struct RoundRecord {
  std::string strategy;
  int round = 0;  // 1-based
  double mean_test_accuracy = 0.0;
  std::vector<double> per_client_accuracy;
  double mean_train_loss = 0.0;
};

std::string to_record(const RoundRecord& r);
RoundRecord round_record_from_record(const std::string& text, const std::string& source);

struct ClientState {
  int client_id = 0;
  double weight = 0.0;
  LabeledDataset train;  // standardized
  LabeledDataset test;   // standardized with the same statistics
  LocalStats stats;      // moments of the raw training data
  ModelParams model;
  AdamState optimizer;
  std::mt19937_64 shuffle_rng;
  double last_round_mean_loss = 0.0;
};

// Round-0 statistics exchange: local moments per client, pooled on the
// server side. Callers standardize every client's data with the result.
GlobalStats exchange_statistics(const std::vector<ClientPartition>& clients);

// Runs local_epochs passes of seeded mini-batch Adam starting from the
// broadcast model and returns the updated parameters. FedBN clients adopt
// only non-BN groups from the broadcast and keep their own BN groups.
ModelParams local_update(ClientState& client, const ModelParams& broadcast,
                         const StrategyConfig& cfg);

// Elementwise weighted average of every parameter group. Weights must sum
// to 1 within 1e-6.
ModelParams fedavg_aggregate(const std::vector<ModelParams>& models,
                             const std::vector<double>& weights);

// Weighted average of every non-BN group; BN groups are left at neutral
// initialization values in the returned model and are never consumed
// (clients keep their own, see compose_with_client_bn).
ModelParams fedbn_aggregate(const std::vector<ModelParams>& models,
                            const std::vector<double>& weights);

// Client view of a FedBN broadcast: aggregated non-BN groups plus the
// client's own BN groups.
ModelParams compose_with_client_bn(const ModelParams& aggregated,
                                   const ModelParams& client_model);

struct FederationResult {
  std::vector<RoundRecord> history;
  int best_round = 0;  // 1-based, first round achieving the best mean accuracy
  double best_mean_test_accuracy = 0.0;
  ModelParams best_model;
  std::vector<ModelParams> best_client_models;   // FedBN composites
  std::vector<ConfusionMatrix> best_confusions;  // per client, at best round
  std::vector<std::string> class_names;
  std::string normalization_source;  // "global_stats" or "local_stats"
};

// Called after each aggregation with the freshly updated client models and
// the aggregated model; used by tests and diagnostics.
using RoundObserver = std::function<void(
    int round, const std::vector<ClientState>& clients, const ModelParams& aggregated)>;

// Full simulation: standardization phase, then `rounds` iterations of
// broadcast, local update (clients visited in ascending client_id),
// aggregation and evaluation of the aggregated model on every client's
// test data. Throws a numeric error if a training loss turns non-finite.
// stats_override replaces the moments computed from each client's training
// data (matched by client_id); callers use it when the statistics should
// describe a different view of the data than the one being trained on.
FederationResult run_federation(const std::vector<ClientPartition>& clients,
                                const ModelSpec& model_spec,
                                const StrategyConfig& cfg,
                                const RoundObserver& observer = nullptr,
                                const std::vector<LocalStats>* stats_override = nullptr);

}  // namespace fedstat
