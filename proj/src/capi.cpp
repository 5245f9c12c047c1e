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

#include "fedstat/fedstat.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <memory>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/experiment.hpp"
#include "core/stats.hpp"

struct fedstat_dataset {
  fedstat::LabeledDataset ds;
};

struct fedstat_local_stats {
  fedstat::LocalStats s;
};

struct fedstat_global_stats {
  fedstat::GlobalStats s;
};

namespace {

std::string& tl_error() {
  thread_local std::string err;
  return err;
}

template <typename F>
fedstat_status guarded(F&& f) noexcept {
  try {
    f();
    tl_error().clear();
    return FEDSTAT_OK;
  } catch (const fedstat::Error& e) {
    tl_error() = e.what();
    return static_cast<fedstat_status>(e.code());
  } catch (const std::exception& e) {
    tl_error() = e.what();
    return FEDSTAT_ERROR_INTERNAL;
  } catch (...) {
    tl_error() = "unknown failure";
    return FEDSTAT_ERROR_INTERNAL;
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) fedstat::throw_config(what);
}

std::string cstr(const char* s, const std::string& what) {
  require(s != nullptr, what + " must not be NULL");
  return std::string(s);
}

std::vector<std::string> string_list(const char* const* items, size_t count,
                                     const std::string& what) {
  std::vector<std::string> out;
  if (count > 0) require(items != nullptr, what + " must not be NULL");
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    require(items[i] != nullptr, what + "[" + std::to_string(i) + "] must not be NULL");
    out.emplace_back(items[i]);
  }
  return out;
}

// Keeps only the named strategies, preserving config order. Names may be a
// single strategy or a comma-separated list.
void apply_strategy_filter(fedstat::RunConfig& cfg, const std::string& filter) {
  std::vector<fedstat::Strategy> wanted;
  std::size_t pos = 0;
  while (pos <= filter.size()) {
    std::size_t comma = filter.find(',', pos);
    if (comma == std::string::npos) comma = filter.size();
    std::string name = filter.substr(pos, comma - pos);
    name.erase(0, name.find_first_not_of(" \t"));
    if (auto end = name.find_last_not_of(" \t"); end != std::string::npos)
      name.resize(end + 1);
    else
      name.clear();
    if (!name.empty()) wanted.push_back(fedstat::strategy_from_name(name));
    pos = comma + 1;
  }
  require(!wanted.empty(), "strategy filter selects nothing");

  std::vector<fedstat::StrategyConfig> kept;
  for (const auto& sc : cfg.strategies) {
    if (std::find(wanted.begin(), wanted.end(), sc.strategy) != wanted.end())
      kept.push_back(sc);
  }
  for (fedstat::Strategy w : wanted) {
    const bool present = std::any_of(kept.begin(), kept.end(), [w](const auto& sc) {
      return sc.strategy == w;
    });
    require(present, "strategy " + fedstat::strategy_name(w) +
                         " is not defined in the config file");
  }
  cfg.strategies = std::move(kept);
}

}  // namespace

extern "C" {

const char* fedstat_version(void) {
#ifdef FEDSTAT_VERSION
  return FEDSTAT_VERSION;
#else
  return "0.0.0";
#endif
}

const char* fedstat_last_error(void) { return tl_error().c_str(); }

/* ---- datasets ---------------------------------------------------------- */

fedstat_status fedstat_dataset_load_csv(const char* path, const char* label_column,
                                        const char* const* feature_columns,
                                        size_t num_feature_columns, int strict,
                                        fedstat_dataset** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    auto handle = std::make_unique<fedstat_dataset>();
    handle->ds = fedstat::load_csv(
        cstr(path, "path"), cstr(label_column, "label_column"),
        string_list(feature_columns, num_feature_columns, "feature_columns"),
        strict != 0);
    *out = handle.release();
  });
}

void fedstat_dataset_free(fedstat_dataset* ds) { delete ds; }

size_t fedstat_dataset_rows(const fedstat_dataset* ds) {
  return ds == nullptr ? 0 : ds->ds.size();
}

size_t fedstat_dataset_num_features(const fedstat_dataset* ds) {
  return ds == nullptr ? 0 : ds->ds.num_features();
}

size_t fedstat_dataset_num_classes(const fedstat_dataset* ds) {
  return ds == nullptr ? 0 : ds->ds.num_classes();
}

size_t fedstat_dataset_dropped_rows(const fedstat_dataset* ds) {
  return ds == nullptr ? 0 : ds->ds.dropped_rows;
}

const char* fedstat_dataset_feature_name(const fedstat_dataset* ds, size_t index) {
  if (ds == nullptr || index >= ds->ds.feature_names.size()) return nullptr;
  return ds->ds.feature_names[index].c_str();
}

const char* fedstat_dataset_class_name(const fedstat_dataset* ds, size_t index) {
  if (ds == nullptr || index >= ds->ds.class_names.size()) return nullptr;
  return ds->ds.class_names[index].c_str();
}

fedstat_status fedstat_dataset_row(const fedstat_dataset* ds, size_t row,
                                   double* out_features, int* out_label) {
  return guarded([&] {
    require(ds != nullptr, "ds must not be NULL");
    require(row < ds->ds.size(), "row " + std::to_string(row) + " out of range");
    if (out_features != nullptr) {
      const double* src = ds->ds.features.row(row);
      std::memcpy(out_features, src, ds->ds.num_features() * sizeof(double));
    }
    if (out_label != nullptr) *out_label = ds->ds.labels[row];
  });
}

/* ---- client statistics -------------------------------------------------- */

fedstat_status fedstat_local_stats_compute(const fedstat_dataset* ds, int client_id,
                                           fedstat_local_stats** out) {
  return guarded([&] {
    require(ds != nullptr, "ds must not be NULL");
    require(out != nullptr, "out must not be NULL");
    auto handle = std::make_unique<fedstat_local_stats>();
    handle->s = fedstat::compute_local_stats(ds->ds, client_id);
    *out = handle.release();
  });
}

fedstat_status fedstat_local_stats_read(const char* path, fedstat_local_stats** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    auto handle = std::make_unique<fedstat_local_stats>();
    handle->s = fedstat::read_local_stats(cstr(path, "path"));
    *out = handle.release();
  });
}

fedstat_status fedstat_local_stats_write(const fedstat_local_stats* s, const char* path) {
  return guarded([&] {
    require(s != nullptr, "stats must not be NULL");
    fedstat::write_stats(s->s, cstr(path, "path"));
  });
}

void fedstat_local_stats_free(fedstat_local_stats* s) { delete s; }

int fedstat_local_stats_client_id(const fedstat_local_stats* s) {
  return s == nullptr ? 0 : s->s.client_id;
}

size_t fedstat_local_stats_count(const fedstat_local_stats* s) {
  return s == nullptr ? 0 : s->s.count;
}

size_t fedstat_local_stats_num_features(const fedstat_local_stats* s) {
  return s == nullptr ? 0 : s->s.mean.size();
}

fedstat_status fedstat_local_stats_values(const fedstat_local_stats* s, double* out_mean,
                                          double* out_variance) {
  return guarded([&] {
    require(s != nullptr, "stats must not be NULL");
    if (out_mean != nullptr)
      std::copy(s->s.mean.begin(), s->s.mean.end(), out_mean);
    if (out_variance != nullptr)
      std::copy(s->s.variance.begin(), s->s.variance.end(), out_variance);
  });
}

fedstat_status fedstat_global_stats_aggregate(const fedstat_local_stats* const* parts,
                                              size_t num_parts,
                                              fedstat_global_stats** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    require(parts != nullptr || num_parts == 0, "parts must not be NULL");
    std::vector<fedstat::LocalStats> locals;
    locals.reserve(num_parts);
    for (size_t i = 0; i < num_parts; ++i) {
      require(parts[i] != nullptr,
              "parts[" + std::to_string(i) + "] must not be NULL");
      locals.push_back(parts[i]->s);
    }
    auto handle = std::make_unique<fedstat_global_stats>();
    handle->s = fedstat::aggregate_stats(locals);
    *out = handle.release();
  });
}

fedstat_status fedstat_global_stats_read(const char* path, fedstat_global_stats** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    auto handle = std::make_unique<fedstat_global_stats>();
    handle->s = fedstat::read_global_stats(cstr(path, "path"));
    *out = handle.release();
  });
}

fedstat_status fedstat_global_stats_write(const fedstat_global_stats* s,
                                          const char* path) {
  return guarded([&] {
    require(s != nullptr, "stats must not be NULL");
    fedstat::write_stats(s->s, cstr(path, "path"));
  });
}

void fedstat_global_stats_free(fedstat_global_stats* s) { delete s; }

size_t fedstat_global_stats_count(const fedstat_global_stats* s) {
  return s == nullptr ? 0 : s->s.total_count;
}

size_t fedstat_global_stats_num_features(const fedstat_global_stats* s) {
  return s == nullptr ? 0 : s->s.mean.size();
}

fedstat_status fedstat_global_stats_values(const fedstat_global_stats* s,
                                           double* out_mean, double* out_variance) {
  return guarded([&] {
    require(s != nullptr, "stats must not be NULL");
    if (out_mean != nullptr)
      std::copy(s->s.mean.begin(), s->s.mean.end(), out_mean);
    if (out_variance != nullptr)
      std::copy(s->s.variance.begin(), s->s.variance.end(), out_variance);
  });
}

/* ---- experiment commands ------------------------------------------------ */

fedstat_status fedstat_run_train(const char* config_path, const char* out_dir,
                                 const uint64_t* seed_override,
                                 const char* strategy_filter,
                                 const char* csv_path_override,
                                 const char* label_column_override,
                                 const char* const* feature_columns_override,
                                 size_t num_feature_columns_override) {
  return guarded([&] {
    fedstat::RunConfig cfg = fedstat::load_run_config(cstr(config_path, "config_path"));
    cfg.out_dir = cstr(out_dir, "out_dir");
    if (seed_override != nullptr) cfg.seed = *seed_override;
    if (strategy_filter != nullptr) apply_strategy_filter(cfg, strategy_filter);
    if (csv_path_override != nullptr) {
      cfg.source.kind = fedstat::SourceConfig::Kind::csv;
      cfg.source.csv_path = csv_path_override;
    }
    if (label_column_override != nullptr)
      cfg.source.label_column = label_column_override;
    if (num_feature_columns_override > 0)
      cfg.source.feature_columns = string_list(
          feature_columns_override, num_feature_columns_override, "feature_columns");
    fedstat::cmd_train(cfg);
  });
}

fedstat_status fedstat_run_synth(const char* config_path, const char* out_dir,
                                 const uint64_t* seed_override) {
  return guarded([&] {
    fedstat::RunConfig cfg = fedstat::load_run_config(cstr(config_path, "config_path"));
    require(cfg.source.kind == fedstat::SourceConfig::Kind::synth,
            "synth needs a config with dataset = synth");
    if (seed_override != nullptr) cfg.seed = *seed_override;
    fedstat::SynthSpec spec = cfg.source.synth;
    spec.num_clients = cfg.num_clients;
    spec.train_fraction = cfg.train_fraction;
    spec.seed = cfg.seed;
    fedstat::cmd_synth(spec, cstr(out_dir, "out_dir"));
  });
}

fedstat_status fedstat_run_stats_aggregate(const char* const* input_paths,
                                           size_t num_inputs, const char* out_path,
                                           size_t* out_count,
                                           size_t* out_num_features) {
  return guarded([&] {
    fedstat::StatsSummary summary = fedstat::cmd_stats_aggregate(
        string_list(input_paths, num_inputs, "input_paths"), cstr(out_path, "out_path"));
    if (out_count != nullptr) *out_count = summary.count;
    if (out_num_features != nullptr) *out_num_features = summary.num_features;
  });
}

fedstat_status fedstat_run_stats_compute(const char* csv_path, const char* label_column,
                                         const char* const* feature_columns,
                                         size_t num_feature_columns, int client_id,
                                         const char* out_path, size_t* out_count,
                                         size_t* out_num_features) {
  return guarded([&] {
    fedstat::StatsSummary summary = fedstat::cmd_stats_compute(
        cstr(csv_path, "csv_path"), cstr(label_column, "label_column"),
        string_list(feature_columns, num_feature_columns, "feature_columns"), client_id,
        cstr(out_path, "out_path"));
    if (out_count != nullptr) *out_count = summary.count;
    if (out_num_features != nullptr) *out_num_features = summary.num_features;
  });
}

fedstat_status fedstat_run_report(const char* run_dir, const char* out_dir,
                                  const char* feature, const char* class_label,
                                  int bins, int feature_stats) {
  return guarded([&] {
    fedstat::ReportOptions options;
    if (feature != nullptr) options.feature = feature;
    if (class_label != nullptr) options.class_label = class_label;
    options.bins = bins;
    options.feature_stats = feature_stats != 0;
    fedstat::cmd_report(cstr(run_dir, "run_dir"), cstr(out_dir, "out_dir"), options);
  });
}

} /* extern "C" */
