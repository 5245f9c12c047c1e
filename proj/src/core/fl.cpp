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

#include "core/fl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/record.hpp"

namespace fedstat {

namespace {

void weighted_sum(std::vector<double>* acc, const std::vector<double>& x, double w) {
  for (std::size_t i = 0; i < acc->size(); ++i) (*acc)[i] += w * x[i];
}

void check_aggregation_inputs(const std::vector<ModelParams>& models,
                              const std::vector<double>& weights) {
  if (models.empty()) throw_data("aggregate: no models");
  if (models.size() != weights.size())
    throw_data("aggregate: model and weight counts differ");
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw_data("aggregate: invalid weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw_data("aggregate: weights must sum to 1");
  for (std::size_t i = 1; i < models.size(); ++i)
    check_same_model_structure(models[0], models[i], "aggregate");
}

// Weighted average of every group; when skip_bn is set, batch-norm groups
// are reset to neutral values instead (the FedBN server never consumes
// them, clients keep their own).
ModelParams average_models(const std::vector<ModelParams>& models,
                           const std::vector<double>& weights, bool skip_bn) {
  check_aggregation_inputs(models, weights);
  ModelParams out = models[0];
  for (std::size_t g = 0; g < out.groups.size(); ++g) {
    ParamGroup& group = out.groups[g];
    switch (group.kind) {
      case ParamGroup::Kind::dense: {
        std::fill(group.dense.weight.v.begin(), group.dense.weight.v.end(), 0.0);
        std::fill(group.dense.bias.begin(), group.dense.bias.end(), 0.0);
        for (std::size_t i = 0; i < models.size(); ++i) {
          weighted_sum(&group.dense.weight.v, models[i].groups[g].dense.weight.v,
                       weights[i]);
          weighted_sum(&group.dense.bias, models[i].groups[g].dense.bias, weights[i]);
        }
        break;
      }
      case ParamGroup::Kind::layer_norm: {
        std::fill(group.ln.gain.begin(), group.ln.gain.end(), 0.0);
        std::fill(group.ln.bias.begin(), group.ln.bias.end(), 0.0);
        for (std::size_t i = 0; i < models.size(); ++i) {
          weighted_sum(&group.ln.gain, models[i].groups[g].ln.gain, weights[i]);
          weighted_sum(&group.ln.bias, models[i].groups[g].ln.bias, weights[i]);
        }
        break;
      }
      case ParamGroup::Kind::batch_norm: {
        if (skip_bn) {
          std::fill(group.bn.gain.begin(), group.bn.gain.end(), 1.0);
          std::fill(group.bn.bias.begin(), group.bn.bias.end(), 0.0);
          std::fill(group.bn.running_mean.begin(), group.bn.running_mean.end(), 0.0);
          std::fill(group.bn.running_var.begin(), group.bn.running_var.end(), 1.0);
          group.bn.momentum = kBatchNormMomentum;
          break;
        }
        std::fill(group.bn.gain.begin(), group.bn.gain.end(), 0.0);
        std::fill(group.bn.bias.begin(), group.bn.bias.end(), 0.0);
        std::fill(group.bn.running_mean.begin(), group.bn.running_mean.end(), 0.0);
        std::fill(group.bn.running_var.begin(), group.bn.running_var.end(), 0.0);
        for (std::size_t i = 0; i < models.size(); ++i) {
          weighted_sum(&group.bn.gain, models[i].groups[g].bn.gain, weights[i]);
          weighted_sum(&group.bn.bias, models[i].groups[g].bn.bias, weights[i]);
          weighted_sum(&group.bn.running_mean, models[i].groups[g].bn.running_mean,
                       weights[i]);
          weighted_sum(&group.bn.running_var, models[i].groups[g].bn.running_var,
                       weights[i]);
        }
        break;
      }
    }
  }
  return out;
}

}  // namespace

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::statavg: return "StatAvg";
    case Strategy::fedavg: return "FedAvg";
    case Strategy::fedln: return "FedLN";
    case Strategy::fedbn: return "FedBN";
  }
  return "FedAvg";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "StatAvg") return Strategy::statavg;
  if (name == "FedAvg") return Strategy::fedavg;
  if (name == "FedLN") return Strategy::fedln;
  if (name == "FedBN") return Strategy::fedbn;
  throw_config("unknown strategy '" + name + "'");
}

NormKind strategy_norm_kind(Strategy s) {
  switch (s) {
    case Strategy::fedln: return NormKind::layer_norm;
    case Strategy::fedbn: return NormKind::batch_norm;
    case Strategy::statavg:
    case Strategy::fedavg: return NormKind::none;
  }
  return NormKind::none;
}

void StrategyConfig::validate() const {
  if (rounds < 1) throw_config("rounds must be at least 1");
  if (local_epochs < 1) throw_config("local_epochs must be at least 1");
  if (batch_size < 1) throw_config("batch_size must be at least 1");
  if (!std::isfinite(learning_rate) || learning_rate < 0.0)
    throw_config("learning_rate must be finite and non-negative");
}

std::string to_record(const RoundRecord& r) {
  using record::fmt_double;
  std::string out = "{\"strategy\":\"" + r.strategy + "\"";
  out += ",\"round\":" + std::to_string(r.round);
  out += ",\"mean_test_accuracy\":" + fmt_double(r.mean_test_accuracy);
  out += ",\"per_client_accuracy\":" + record::fmt_double_array(r.per_client_accuracy);
  out += ",\"mean_train_loss\":" + fmt_double(r.mean_train_loss);
  out += "}";
  return out;
}

RoundRecord round_record_from_record(const std::string& text,
                                     const std::string& source) {
  nlohmann::json j = record::parse(text, source);
  RoundRecord r;
  r.strategy = j.at("strategy").get<std::string>();
  r.round = j.at("round").get<int>();
  r.mean_test_accuracy = j.at("mean_test_accuracy").get<double>();
  r.per_client_accuracy = j.at("per_client_accuracy").get<std::vector<double>>();
  r.mean_train_loss = j.at("mean_train_loss").get<double>();
  return r;
}

GlobalStats exchange_statistics(const std::vector<ClientPartition>& clients) {
  if (clients.empty()) throw_data("statistics exchange: no clients");
  std::vector<LocalStats> locals;
  locals.reserve(clients.size());
  for (const auto& c : clients) {
    locals.push_back(compute_local_stats(c.train, c.client_id));
  }
  return aggregate_stats(locals);
}

ModelParams local_update(ClientState& client, const ModelParams& broadcast,
                         const StrategyConfig& cfg) {
  cfg.validate();
  if (cfg.strategy == Strategy::fedbn && !client.model.groups.empty()) {
    client.model = compose_with_client_bn(broadcast, client.model);
  } else {
    client.model = broadcast;
  }
  if (cfg.reset_optimizer_each_round) {
    client.optimizer = make_adam_state(client.model.spec);
  }

  const bool has_bn = client.model.spec.norm == NormKind::batch_norm;
  const AdamConfig adam{cfg.learning_rate, 0.9, 0.999, 1e-8};
  const std::size_t d = client.train.size();
  const std::size_t s = client.train.num_features();
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  if (d == 0) throw_data("local update: client has no training rows");

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);

  double loss_sum = 0.0;
  std::size_t steps = 0;
  for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), client.shuffle_rng);
    for (std::size_t start = 0; start < d; start += batch) {
      const std::size_t n = std::min(batch, d - start);
      if (has_bn && n == 1) continue;  // batch-norm cannot train on one row
      Matrix xb(n, s);
      std::vector<int> yb(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double* src = client.train.features.row(order[start + i]);
        std::copy(src, src + s, xb.row(i));
        yb[i] = client.train.labels[order[start + i]];
      }
      LossGrads lg = loss_and_grads(client.model, xb, yb);
      if (!std::isfinite(lg.loss))
        throw_numeric("training loss became non-finite on client " +
                      std::to_string(client.client_id));
      adam_step(client.model, lg.grads, client.optimizer, adam);
      loss_sum += lg.loss;
      ++steps;
    }
  }
  client.last_round_mean_loss = steps > 0 ? loss_sum / static_cast<double>(steps) : 0.0;
  return client.model;
}

ModelParams fedavg_aggregate(const std::vector<ModelParams>& models,
                             const std::vector<double>& weights) {
  return average_models(models, weights, false);
}

ModelParams fedbn_aggregate(const std::vector<ModelParams>& models,
                            const std::vector<double>& weights) {
  return average_models(models, weights, true);
}

ModelParams compose_with_client_bn(const ModelParams& aggregated,
                                   const ModelParams& client_model) {
  check_same_model_structure(aggregated, client_model, "compose_with_client_bn");
  ModelParams out = aggregated;
  for (std::size_t g = 0; g < out.groups.size(); ++g) {
    if (out.groups[g].kind == ParamGroup::Kind::batch_norm) {
      out.groups[g].bn = client_model.groups[g].bn;
    }
  }
  return out;
}

FederationResult run_federation(const std::vector<ClientPartition>& clients,
                                const ModelSpec& model_spec,
                                const StrategyConfig& cfg,
                                const RoundObserver& observer,
                                const std::vector<LocalStats>* stats_override) {
  cfg.validate();
  if (clients.empty()) throw_data("run_federation: no clients");
  for (const auto& c : clients) {
    if (c.train.size() == 0) throw_data("run_federation: a client has no training rows");
    if (c.test.size() == 0) throw_data("run_federation: a client has no test rows");
    if (c.train.num_features() != clients.front().train.num_features() ||
        c.train.class_names != clients.front().train.class_names)
      throw_data("run_federation: clients disagree on schema");
  }
  {
    double wsum = 0.0;
    for (const auto& c : clients) wsum += c.weight;
    if (std::abs(wsum - 1.0) > 1e-6)
      throw_data("run_federation: client weights must sum to 1");
  }

  ModelSpec spec = model_spec;
  spec.input_dim = clients.front().train.num_features();
  spec.num_classes = clients.front().train.num_classes();
  spec.norm = strategy_norm_kind(cfg.strategy);
  spec.validate();

  auto stats_for = [&](const ClientPartition& part) {
    if (stats_override == nullptr) return compute_local_stats(part.train, part.client_id);
    for (const auto& ls : *stats_override) {
      if (ls.client_id == part.client_id) return ls;
    }
    throw_data("run_federation: no statistics override for client " +
               std::to_string(part.client_id));
  };

  const bool shared_stats = cfg.strategy == Strategy::statavg;
  GlobalStats pooled;
  if (shared_stats) {
    if (stats_override != nullptr) {
      pooled = aggregate_stats(*stats_override);
    } else {
      pooled = exchange_statistics(clients);
    }
  }

  // Client states, ascending client_id.
  std::vector<const ClientPartition*> ordered;
  for (const auto& c : clients) ordered.push_back(&c);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const ClientPartition* a, const ClientPartition* b) {
                     return a->client_id < b->client_id;
                   });

  ModelParams global = init_params(spec, derive_seed(cfg.seed, "model_init"));

  std::vector<ClientState> states(ordered.size());
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const ClientPartition& part = *ordered[i];
    ClientState& st = states[i];
    st.client_id = part.client_id;
    st.weight = part.weight;
    st.stats = stats_for(part);
    const GlobalStats norm_stats =
        shared_stats ? pooled : stats_as_global(st.stats);
    st.train = normalize(part.train, norm_stats);
    st.test = normalize(part.test, norm_stats);
    st.model = global;
    st.optimizer = make_adam_state(spec);
    st.shuffle_rng = make_rng(
        derive_seed(cfg.seed, "client_shuffle", static_cast<std::uint64_t>(part.client_id)));
  }

  FederationResult result;
  result.normalization_source = shared_stats ? "global_stats" : "local_stats";
  result.class_names = clients.front().train.class_names;

  std::vector<double> weights(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) weights[i] = states[i].weight;

  const std::string name = strategy_name(cfg.strategy);
  const std::size_t num_classes = spec.num_classes;
  for (int round = 1; round <= cfg.rounds; ++round) {
    std::vector<ModelParams> locals;
    locals.reserve(states.size());
    for (auto& st : states) locals.push_back(local_update(st, global, cfg));

    ModelParams aggregated = cfg.strategy == Strategy::fedbn
                                 ? fedbn_aggregate(locals, weights)
                                 : fedavg_aggregate(locals, weights);
    if (observer) observer(round, states, aggregated);

    RoundRecord rec;
    rec.strategy = name;
    rec.round = round;
    std::vector<ConfusionMatrix> confusions;
    std::vector<ModelParams> composites;
    double acc_sum = 0.0, loss_sum = 0.0;
    for (auto& st : states) {
      ModelParams eval_model = cfg.strategy == Strategy::fedbn
                                   ? compose_with_client_bn(aggregated, st.model)
                                   : aggregated;
      std::vector<int> preds = predict(eval_model, st.test.features);
      const double acc = accuracy_score(st.test.labels, preds);
      rec.per_client_accuracy.push_back(acc);
      acc_sum += acc;
      loss_sum += st.last_round_mean_loss;
      confusions.push_back(confusion(st.test.labels, preds, num_classes));
      if (cfg.strategy == Strategy::fedbn) composites.push_back(std::move(eval_model));
    }
    rec.mean_test_accuracy = acc_sum / static_cast<double>(states.size());
    rec.mean_train_loss = loss_sum / static_cast<double>(states.size());

    if (result.history.empty() ||
        rec.mean_test_accuracy > result.best_mean_test_accuracy) {
      result.best_round = round;
      result.best_mean_test_accuracy = rec.mean_test_accuracy;
      result.best_model = aggregated;
      result.best_client_models = composites;
      result.best_confusions = std::move(confusions);
    }
    result.history.push_back(std::move(rec));
    global = std::move(aggregated);
  }
  return result;
}

}  // namespace fedstat
