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

namespace fedstat {

// Per-feature first and second moments of one client's training data.
// Variances are population variances (divide by the row count), matching
// the normalization applied later.
struct LocalStats {
  int client_id = 0;
  std::size_t count = 0;
  std::vector<double> mean;
  std::vector<double> variance;

  void validate() const;
};

// Pooled moments across clients. By construction these equal the moments
// of the concatenation of all client datasets.
struct GlobalStats {
  std::size_t total_count = 0;
  std::vector<double> mean;
  std::vector<double> variance;

  void validate() const;
};

LocalStats compute_local_stats(const LabeledDataset& ds, int client_id);

// Count-weighted pooling: mean_g = sum_i w_i * mean_i and
// var_g = sum_i w_i * (var_i + (mean_i - mean_g)^2) with w_i the count
// fractions. Inputs are processed in ascending client_id so the result does
// not depend on argument order. Accumulation runs in extended precision.
GlobalStats aggregate_stats(const std::vector<LocalStats>& parts);

// Treats a single client's moments as normalization statistics. Used by
// baselines that standardize each client with its own statistics.
GlobalStats stats_as_global(const LocalStats& stats);

inline constexpr double kNormalizeEps = 1e-8;

// Feature-wise standardization x -> (x - mean) / max(std, eps). Applied
// identically to training and testing data of a client.
LabeledDataset normalize(const LabeledDataset& ds, const GlobalStats& stats,
                         double eps = kNormalizeEps);

// Inverse of normalize (up to rounding).
LabeledDataset denormalize(const LabeledDataset& ds, const GlobalStats& stats,
                           double eps = kNormalizeEps);

// Wire format: one JSON object per record, floats at 17 significant digits.
// A local record carries client_id; a global record does not.
std::string to_record(const LocalStats& stats);
std::string to_record(const GlobalStats& stats);
LocalStats local_stats_from_record(const std::string& text, const std::string& source);
GlobalStats global_stats_from_record(const std::string& text, const std::string& source);
bool record_is_local_stats(const std::string& text);

LocalStats read_local_stats(const std::string& path);
GlobalStats read_global_stats(const std::string& path);
void write_stats(const LocalStats& stats, const std::string& path);
void write_stats(const GlobalStats& stats, const std::string& path);

}  // namespace fedstat
