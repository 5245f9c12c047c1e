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

#include "core/stats.hpp"

#include <algorithm>
#include <cmath>

#include "core/record.hpp"

namespace fedstat {

namespace {

void check_moments(const std::vector<double>& mean,
                   const std::vector<double>& variance, std::size_t count) {
  if (count == 0) throw_data("stats: count must be positive");
  if (mean.size() != variance.size())
    throw_data("stats: mean and variance dimensions differ");
  if (mean.empty()) throw_data("stats: no features");
  for (double m : mean) {
    if (!std::isfinite(m)) throw_data("stats: non-finite mean");
  }
  for (double v : variance) {
    if (!std::isfinite(v) || v < 0.0) throw_data("stats: invalid variance");
  }
}

}  // namespace

void LocalStats::validate() const { check_moments(mean, variance, count); }

void GlobalStats::validate() const { check_moments(mean, variance, total_count); }

LocalStats compute_local_stats(const LabeledDataset& ds, int client_id) {
  ds.validate();
  if (ds.size() == 0) throw_data("cannot compute statistics of an empty dataset");
  const std::size_t d = ds.size();
  const std::size_t s = ds.num_features();

  LocalStats stats;
  stats.client_id = client_id;
  stats.count = d;
  stats.mean.resize(s);
  stats.variance.resize(s);

  // Two-pass moments in extended precision; population variance.
  for (std::size_t j = 0; j < s; ++j) {
    long double sum = 0.0L;
    for (std::size_t i = 0; i < d; ++i) sum += ds.features.at(i, j);
    const long double mean = sum / static_cast<long double>(d);
    long double sq = 0.0L;
    for (std::size_t i = 0; i < d; ++i) {
      const long double diff = ds.features.at(i, j) - mean;
      sq += diff * diff;
    }
    stats.mean[j] = static_cast<double>(mean);
    stats.variance[j] = static_cast<double>(sq / static_cast<long double>(d));
  }
  stats.validate();
  return stats;
}

GlobalStats aggregate_stats(const std::vector<LocalStats>& parts) {
  if (parts.empty()) throw_data("aggregate_stats: empty input");
  for (const auto& p : parts) p.validate();
  const std::size_t s = parts.front().mean.size();
  for (const auto& p : parts) {
    if (p.mean.size() != s)
      throw_data("aggregate_stats: feature dimensions differ across clients");
  }

  std::vector<const LocalStats*> ordered;
  ordered.reserve(parts.size());
  for (const auto& p : parts) ordered.push_back(&p);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const LocalStats* a, const LocalStats* b) {
                     return a->client_id < b->client_id;
                   });

  long double total = 0.0L;
  for (const auto* p : ordered) total += static_cast<long double>(p->count);

  GlobalStats global;
  global.total_count = 0;
  for (const auto* p : ordered) global.total_count += p->count;
  global.mean.resize(s);
  global.variance.resize(s);

  for (std::size_t j = 0; j < s; ++j) {
    long double mean = 0.0L;
    for (const auto* p : ordered) {
      const long double w = static_cast<long double>(p->count) / total;
      mean += w * static_cast<long double>(p->mean[j]);
    }
    // The pooled mean lies between the extreme client means; clamp away the
    // last-ulp rounding so the bound holds exactly.
    double lo = ordered.front()->mean[j], hi = lo;
    for (const auto* p : ordered) {
      lo = std::min(lo, p->mean[j]);
      hi = std::max(hi, p->mean[j]);
    }
    global.mean[j] = std::clamp(static_cast<double>(mean), lo, hi);

    long double var = 0.0L;
    for (const auto* p : ordered) {
      const long double w = static_cast<long double>(p->count) / total;
      const long double gap = static_cast<long double>(p->mean[j]) - mean;
      var += w * (static_cast<long double>(p->variance[j]) + gap * gap);
    }
    global.variance[j] = std::max(0.0, static_cast<double>(var));
  }
  global.validate();
  return global;
}

GlobalStats stats_as_global(const LocalStats& stats) {
  stats.validate();
  GlobalStats global;
  global.total_count = stats.count;
  global.mean = stats.mean;
  global.variance = stats.variance;
  return global;
}

LabeledDataset normalize(const LabeledDataset& ds, const GlobalStats& stats,
                         double eps) {
  ds.validate();
  stats.validate();
  if (ds.num_features() != stats.mean.size())
    throw_data("normalize: dataset and statistics dimensions differ");

  LabeledDataset out = ds;
  const std::size_t s = ds.num_features();
  std::vector<double> denom(s);
  for (std::size_t j = 0; j < s; ++j) {
    denom[j] = std::max(std::sqrt(stats.variance[j]), eps);
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    double* row = out.features.row(i);
    for (std::size_t j = 0; j < s; ++j) {
      row[j] = (row[j] - stats.mean[j]) / denom[j];
    }
  }
  return out;
}

LabeledDataset denormalize(const LabeledDataset& ds, const GlobalStats& stats,
                           double eps) {
  ds.validate();
  stats.validate();
  if (ds.num_features() != stats.mean.size())
    throw_data("denormalize: dataset and statistics dimensions differ");

  LabeledDataset out = ds;
  const std::size_t s = ds.num_features();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    double* row = out.features.row(i);
    for (std::size_t j = 0; j < s; ++j) {
      row[j] = row[j] * std::max(std::sqrt(stats.variance[j]), eps) + stats.mean[j];
    }
  }
  return out;
}

std::string to_record(const LocalStats& stats) {
  stats.validate();
  std::string out = "{\"version\":1";
  out += ",\"client_id\":" + std::to_string(stats.client_id);
  out += ",\"count\":" + std::to_string(stats.count);
  out += ",\"mean\":" + record::fmt_double_array(stats.mean);
  out += ",\"variance\":" + record::fmt_double_array(stats.variance);
  out += "}";
  return out;
}

std::string to_record(const GlobalStats& stats) {
  stats.validate();
  std::string out = "{\"version\":1";
  out += ",\"count\":" + std::to_string(stats.total_count);
  out += ",\"mean\":" + record::fmt_double_array(stats.mean);
  out += ",\"variance\":" + record::fmt_double_array(stats.variance);
  out += "}";
  return out;
}

namespace {

void parse_moments(const nlohmann::json& j, const std::string& source,
                   std::vector<double>* mean, std::vector<double>* variance) {
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw_data(source + ": unsupported or missing record version");
  if (!j.contains("mean") || !j.contains("variance") || !j.contains("count"))
    throw_data(source + ": statistics record is missing required fields");
  *mean = j["mean"].get<std::vector<double>>();
  *variance = j["variance"].get<std::vector<double>>();
}

}  // namespace

LocalStats local_stats_from_record(const std::string& text, const std::string& source) {
  nlohmann::json j = record::parse(text, source);
  LocalStats stats;
  parse_moments(j, source, &stats.mean, &stats.variance);
  if (!j.contains("client_id"))
    throw_data(source + ": local statistics record has no client_id");
  stats.client_id = j["client_id"].get<int>();
  stats.count = j["count"].get<std::size_t>();
  stats.validate();
  return stats;
}

GlobalStats global_stats_from_record(const std::string& text, const std::string& source) {
  nlohmann::json j = record::parse(text, source);
  GlobalStats stats;
  parse_moments(j, source, &stats.mean, &stats.variance);
  stats.total_count = j["count"].get<std::size_t>();
  stats.validate();
  return stats;
}

bool record_is_local_stats(const std::string& text) {
  nlohmann::json j = record::parse(text, "statistics record");
  return j.contains("client_id");
}

LocalStats read_local_stats(const std::string& path) {
  return local_stats_from_record(record::read_text_file(path), path);
}

GlobalStats read_global_stats(const std::string& path) {
  return global_stats_from_record(record::read_text_file(path), path);
}

void write_stats(const LocalStats& stats, const std::string& path) {
  record::write_text_file(path, to_record(stats) + "\n");
}

void write_stats(const GlobalStats& stats, const std::string& path) {
  record::write_text_file(path, to_record(stats) + "\n");
}

}  // namespace fedstat
