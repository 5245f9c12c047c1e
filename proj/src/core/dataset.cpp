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

#include "core/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "core/csv.hpp"
#include "core/record.hpp"

namespace fedstat {

namespace {

bool parse_double(const std::string& cell, double* out) {
  std::size_t b = cell.find_first_not_of(" \t");
  if (b == std::string::npos) return false;
  std::size_t e = cell.find_last_not_of(" \t") + 1;
  const char* first = cell.data() + b;
  const char* last = cell.data() + e;
  if (first < last && *first == '+') ++first;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return false;
  if (!std::isfinite(value)) return false;
  *out = value;
  return true;
}

LabeledDataset take_rows(const LabeledDataset& ds,
                         const std::vector<std::size_t>& rows) {
  LabeledDataset out;
  out.feature_names = ds.feature_names;
  out.class_names = ds.class_names;
  out.features = Matrix(rows.size(), ds.num_features());
  out.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double* src = ds.features.row(rows[i]);
    std::copy(src, src + ds.num_features(), out.features.row(i));
    out.labels[i] = ds.labels[rows[i]];
  }
  return out;
}

std::vector<std::vector<std::size_t>> rows_by_class(const LabeledDataset& ds) {
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  }
  return by_class;
}

}  // namespace

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes(), 0);
  for (int label : labels) counts[static_cast<std::size_t>(label)]++;
  return counts;
}

void LabeledDataset::validate() const {
  if (features.rows != labels.size())
    throw_data("dataset row count does not match label count");
  if (features.cols != feature_names.size())
    throw_data("dataset column count does not match feature name count");
  const int c = static_cast<int>(num_classes());
  for (int label : labels) {
    if (label < 0 || label >= c) throw_data("label out of range");
  }
  for (double x : features.v) {
    if (!std::isfinite(x)) throw_data("dataset contains non-finite feature value");
  }
}

LabeledDataset load_csv(const std::string& path, const std::string& label_column,
                        const std::vector<std::string>& feature_columns,
                        bool strict) {
  csv::Table table = csv::read_file(path);

  auto column_index = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < table.header.size(); ++i) {
      if (table.header[i] == name) return i;
    }
    return std::nullopt;
  };

  auto label_idx = column_index(label_column);
  if (!label_idx)
    throw_data("label column '" + label_column + "' not found in " + path);

  std::vector<std::size_t> feat_idx;
  LabeledDataset ds;
  if (feature_columns.empty()) {
    for (std::size_t i = 0; i < table.header.size(); ++i) {
      if (i == *label_idx) continue;
      feat_idx.push_back(i);
      ds.feature_names.push_back(table.header[i]);
    }
  } else {
    for (const std::string& name : feature_columns) {
      auto idx = column_index(name);
      if (!idx)
        throw_data("feature column '" + name + "' not found in " + path);
      if (*idx == *label_idx)
        throw_data("feature column '" + name + "' is the label column");
      feat_idx.push_back(*idx);
      ds.feature_names.push_back(name);
    }
  }
  if (feat_idx.empty()) throw_data("no feature columns selected from " + path);

  const std::size_t s = feat_idx.size();
  std::vector<std::size_t> column_hits(s, 0);
  std::vector<double> row_buf(s);
  std::size_t line_no = 1;  // header was line 1
  for (const auto& row : table.rows) {
    ++line_no;
    bool ok = row.size() == table.header.size();
    if (ok) {
      for (std::size_t j = 0; j < s; ++j) {
        if (parse_double(row[feat_idx[j]], &row_buf[j])) {
          column_hits[j]++;
        } else {
          ok = false;
          break;
        }
      }
    }
    if (ok && row[*label_idx].empty()) ok = false;
    if (!ok) {
      if (strict)
        throw_data(path + ": malformed row at line " + std::to_string(line_no));
      ds.dropped_rows++;
      continue;
    }

    const std::string& label_value = row[*label_idx];
    int label = -1;
    for (std::size_t k = 0; k < ds.class_names.size(); ++k) {
      if (ds.class_names[k] == label_value) {
        label = static_cast<int>(k);
        break;
      }
    }
    if (label < 0) {
      label = static_cast<int>(ds.class_names.size());
      ds.class_names.push_back(label_value);
    }
    ds.labels.push_back(label);
    ds.features.v.insert(ds.features.v.end(), row_buf.begin(), row_buf.end());
  }

  ds.features.rows = ds.labels.size();
  ds.features.cols = s;
  // A column that never parsed is the likelier root cause than the row
  // drops it forced, so report it first. A file without data rows stays a
  // plain emptiness error.
  if (!table.rows.empty()) {
    for (std::size_t j = 0; j < s; ++j) {
      if (column_hits[j] == 0)
        throw_data("feature column '" + ds.feature_names[j] + "' in " + path +
                   " has no numeric values");
    }
  }
  if (ds.size() == 0) throw_data("no usable data rows in " + path);
  ds.validate();
  return ds;
}

void write_csv(const LabeledDataset& ds, const std::string& path,
               const std::string& label_column) {
  std::string out;
  std::vector<std::string> header = ds.feature_names;
  header.push_back(label_column);
  out += csv::join_row(header);
  out += "\n";
  std::vector<std::string> row(ds.num_features() + 1);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.num_features(); ++j) {
      row[j] = record::fmt_double(ds.features.at(i, j));
    }
    row[ds.num_features()] = ds.class_names[static_cast<std::size_t>(ds.labels[i])];
    out += csv::join_row(row);
    out += "\n";
  }
  record::write_text_file(path, out);
}

std::vector<LabeledDataset> stratified_partition(const LabeledDataset& ds,
                                                 std::size_t num_clients,
                                                 std::uint64_t seed) {
  if (num_clients == 0) throw_config("num_clients must be positive");
  ds.validate();
  auto by_class = rows_by_class(ds);
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    if (by_class[k].size() < num_clients)
      throw_data("class '" + ds.class_names[k] + "' has " +
                 std::to_string(by_class[k].size()) + " rows, fewer than " +
                 std::to_string(num_clients) + " clients");
  }

  auto rng = make_rng(derive_seed(seed, "stratified_partition"));
  std::vector<std::vector<std::size_t>> part_rows(num_clients);
  for (auto& rows : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t j = 0; j < rows.size(); ++j) {
      part_rows[j % num_clients].push_back(rows[j]);
    }
  }

  std::vector<LabeledDataset> parts;
  parts.reserve(num_clients);
  for (const auto& rows : part_rows) parts.push_back(take_rows(ds, rows));
  return parts;
}

TrainTestSplit train_test_split(const LabeledDataset& ds, double train_fraction,
                                std::uint64_t seed, bool stratified) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0))
    throw_config("train_fraction must lie in [0, 1]");
  ds.validate();

  auto rng = make_rng(derive_seed(seed, "train_test_split"));
  std::vector<std::size_t> train_rows, test_rows;
  if (stratified) {
    auto by_class = rows_by_class(ds);
    for (std::size_t k = 0; k < by_class.size(); ++k) {
      auto& rows = by_class[k];
      if (rows.size() < 2)
        throw_data("class '" + ds.class_names[k] +
                   "' has fewer than 2 rows; cannot split stratified");
      std::shuffle(rows.begin(), rows.end(), rng);
      std::size_t n_train =
          static_cast<std::size_t>(train_fraction * static_cast<double>(rows.size()));
      for (std::size_t j = 0; j < rows.size(); ++j) {
        (j < n_train ? train_rows : test_rows).push_back(rows[j]);
      }
    }
  } else {
    std::vector<std::size_t> rows(ds.size());
    std::iota(rows.begin(), rows.end(), 0);
    std::shuffle(rows.begin(), rows.end(), rng);
    std::size_t n_train =
        static_cast<std::size_t>(train_fraction * static_cast<double>(rows.size()));
    train_rows.assign(rows.begin(), rows.begin() + n_train);
    test_rows.assign(rows.begin() + n_train, rows.end());
  }
  return TrainTestSplit{take_rows(ds, train_rows), take_rows(ds, test_rows)};
}

SmoteResult smote_upsample(const LabeledDataset& ds, std::size_t target_per_class,
                           int k_neighbors, std::uint64_t seed) {
  if (k_neighbors < 1) throw_config("smote k must be at least 1");
  ds.validate();
  auto by_class = rows_by_class(ds);
  std::size_t majority = 0;
  for (const auto& rows : by_class) majority = std::max(majority, rows.size());
  if (target_per_class == 0) target_per_class = majority;
  if (target_per_class < majority)
    throw_config("smote target " + std::to_string(target_per_class) +
                 " is below the majority class count " + std::to_string(majority));

  SmoteResult result;
  result.data = ds;
  const std::size_t s = ds.num_features();

  for (std::size_t k = 0; k < by_class.size(); ++k) {
    const auto& members = by_class[k];
    if (members.empty() || members.size() >= target_per_class) continue;

    std::size_t needed = target_per_class - members.size();
    int k_eff = k_neighbors;
    if (members.size() == 1) {
      // No neighbor exists; the lone sample is replicated verbatim.
      result.warnings.push_back("class '" + ds.class_names[k] +
                                "' has a single sample; replicating it");
      k_eff = 0;
    } else if (static_cast<std::size_t>(k_eff) > members.size() - 1) {
      k_eff = static_cast<int>(members.size() - 1);
      result.warnings.push_back("class '" + ds.class_names[k] + "': k clamped to " +
                                std::to_string(k_eff));
    }

    // Neighbor lists are found lazily; large classes that need little
    // upsampling never pay for a full pairwise pass.
    std::vector<std::vector<std::size_t>> knn(members.size());
    auto neighbors_of = [&](std::size_t mi) -> const std::vector<std::size_t>& {
      if (!knn[mi].empty() || k_eff == 0) return knn[mi];
      std::vector<std::pair<double, std::size_t>> dist;
      dist.reserve(members.size() - 1);
      const double* a = ds.features.row(members[mi]);
      for (std::size_t mj = 0; mj < members.size(); ++mj) {
        if (mj == mi) continue;
        const double* b = ds.features.row(members[mj]);
        double d2 = 0.0;
        for (std::size_t f = 0; f < s; ++f) {
          double diff = a[f] - b[f];
          d2 += diff * diff;
        }
        dist.emplace_back(d2, mj);
      }
      std::sort(dist.begin(), dist.end());
      knn[mi].reserve(static_cast<std::size_t>(k_eff));
      for (int n = 0; n < k_eff; ++n) knn[mi].push_back(dist[static_cast<std::size_t>(n)].second);
      return knn[mi];
    };

    auto rng = make_rng(derive_seed(seed, "smote_class", k));
    std::uniform_int_distribution<std::size_t> pick_member(0, members.size() - 1);
    std::uniform_real_distribution<double> pick_mix(0.0, 1.0);
    for (std::size_t n = 0; n < needed; ++n) {
      std::size_t mi = pick_member(rng);
      std::size_t base = members[mi];
      std::size_t neighbor = base;
      double mix = 0.0;
      if (k_eff > 0) {
        const auto& nn = neighbors_of(mi);
        std::uniform_int_distribution<std::size_t> pick_nn(0, nn.size() - 1);
        neighbor = members[nn[pick_nn(rng)]];
        mix = pick_mix(rng);
      }
      const double* xb = ds.features.row(base);
      const double* xn = ds.features.row(neighbor);
      for (std::size_t f = 0; f < s; ++f) {
        result.data.features.v.push_back(xb[f] + mix * (xn[f] - xb[f]));
      }
      result.data.labels.push_back(static_cast<int>(k));
      result.parents.push_back(SmoteParent{base, neighbor, mix});
    }
  }

  result.data.features.rows = result.data.labels.size();
  result.data.validate();
  return result;
}

std::string drift_mode_name(DriftMode m) {
  switch (m) {
    case DriftMode::none: return "none";
    case DriftMode::covariate_shift: return "covariate_shift";
    case DriftMode::concept_drift: return "concept_drift";
  }
  return "none";
}

DriftMode drift_mode_from_name(const std::string& name) {
  if (name == "none") return DriftMode::none;
  if (name == "covariate_shift") return DriftMode::covariate_shift;
  if (name == "concept_drift") return DriftMode::concept_drift;
  throw_config("unknown drift mode '" + name + "'");
}

void SynthSpec::validate() const {
  if (num_clients == 0) throw_config("synth: num_clients must be positive");
  if (num_features == 0) throw_config("synth: num_features must be positive");
  if (num_classes < 2) throw_config("synth: need at least 2 classes");
  if (samples_per_client < 2 * num_classes)
    throw_config("synth: samples_per_client must be at least 2 * num_classes");
  if (!std::isfinite(shift_magnitude) || shift_magnitude < 0.0)
    throw_config("synth: shift_magnitude must be finite and non-negative");
  if (!std::isfinite(scale_magnitude) || scale_magnitude < 0.0)
    throw_config("synth: scale_magnitude must be finite and non-negative");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw_config("synth: train_fraction must lie in (0, 1)");
  if (!(class_separation > 0.0) || !std::isfinite(class_separation))
    throw_config("synth: class_separation must be positive");
  if (!(tail_rate >= 0.0 && tail_rate <= 1.0))
    throw_config("synth: tail_rate must lie in [0, 1]");
}

void assign_weights(std::vector<ClientPartition>& clients) {
  double total = 0.0;
  for (const auto& c : clients) total += static_cast<double>(c.train.size());
  if (total <= 0.0) throw_data("no training rows across clients");
  for (auto& c : clients) {
    c.weight = static_cast<double>(c.train.size()) / total;
  }
}

SynthResult synth_noniid_generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t s = spec.num_features;
  const std::size_t c = spec.num_classes;

  SynthResult result;
  result.spec = spec;

  std::vector<std::string> feature_names(s), class_names(c);
  for (std::size_t j = 0; j < s; ++j) feature_names[j] = "f" + std::to_string(j);
  for (std::size_t k = 0; k < c; ++k) class_names[k] = "class_" + std::to_string(k);

  // Shared class centers, drawn once so every client sees the same base
  // class geometry.
  auto base_rng = make_rng(derive_seed(spec.seed, "synth_base"));
  std::normal_distribution<double> center_draw(0.0, spec.class_separation);
  result.class_means.assign(c, std::vector<double>(s));
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t j = 0; j < s; ++j) result.class_means[k][j] = center_draw(base_rng);
  }

  for (std::size_t ci = 0; ci < spec.num_clients; ++ci) {
    const int client_id = static_cast<int>(ci) + 1;
    auto rng = make_rng(derive_seed(spec.seed, "synth_client", ci));
    std::normal_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> signed_unit(-1.0, 1.0);
    std::uniform_real_distribution<double> unit_interval(0.0, 1.0);

    SynthClientMeta meta;
    if (spec.drift_mode == DriftMode::covariate_shift) {
      meta.offsets.resize(s);
      meta.scales.resize(s);
      meta.tail_offsets.resize(s);
      meta.tail_scales.resize(s);
      for (std::size_t j = 0; j < s; ++j)
        meta.offsets[j] = kBulkShiftFraction * spec.shift_magnitude * signed_unit(rng);
      for (std::size_t j = 0; j < s; ++j)
        meta.scales[j] = std::exp(kBulkScaleFraction * spec.scale_magnitude * signed_unit(rng));
      for (std::size_t j = 0; j < s; ++j)
        meta.tail_offsets[j] = spec.shift_magnitude * signed_unit(rng);
      for (std::size_t j = 0; j < s; ++j)
        meta.tail_scales[j] =
            spec.shift_magnitude *
            std::exp(kTailLogSpan * spec.scale_magnitude * unit_interval(rng));
    } else if (spec.drift_mode == DriftMode::concept_drift) {
      meta.class_offsets.assign(c, std::vector<double>(s));
      for (std::size_t k = 0; k < c; ++k) {
        for (std::size_t j = 0; j < s; ++j)
          meta.class_offsets[k][j] = spec.shift_magnitude * signed_unit(rng);
      }
    }

    LabeledDataset data;
    data.feature_names = feature_names;
    data.class_names = class_names;
    data.features = Matrix(spec.samples_per_client, s);
    data.labels.resize(spec.samples_per_client);

    std::size_t row = 0;
    for (std::size_t k = 0; k < c; ++k) {
      std::size_t count = spec.samples_per_client / c +
                          ((k < spec.samples_per_client % c) ? 1 : 0);
      for (std::size_t n = 0; n < count; ++n, ++row) {
        double* x = data.features.row(row);
        data.labels[row] = static_cast<int>(k);
        for (std::size_t j = 0; j < s; ++j) {
          x[j] = result.class_means[k][j] + unit(rng);
        }
        switch (spec.drift_mode) {
          case DriftMode::none:
            break;
          case DriftMode::covariate_shift:
            for (std::size_t j = 0; j < s; ++j)
              x[j] = meta.scales[j] * x[j] + meta.offsets[j];
            if (unit_interval(rng) < spec.tail_rate) {
              for (std::size_t j = 0; j < s; ++j)
                x[j] += meta.tail_offsets[j] + meta.tail_scales[j] * unit(rng);
            }
            break;
          case DriftMode::concept_drift:
            for (std::size_t j = 0; j < s; ++j) x[j] += meta.class_offsets[k][j];
            break;
        }
      }
    }
    data.validate();

    TrainTestSplit split = train_test_split(
        data, spec.train_fraction, derive_seed(spec.seed, "synth_split", ci), true);
    ClientPartition part;
    part.client_id = client_id;
    part.train = std::move(split.train);
    part.test = std::move(split.test);
    result.clients.push_back(std::move(part));
    result.client_meta.push_back(std::move(meta));
  }

  assign_weights(result.clients);
  return result;
}

std::string synth_metadata_record(const SynthResult& result) {
  using record::fmt_double;
  using record::fmt_double_array;
  const SynthSpec& spec = result.spec;
  std::string out = "{\"version\":1";
  out += ",\"seed\":" + std::to_string(spec.seed);
  out += ",\"num_clients\":" + std::to_string(spec.num_clients);
  out += ",\"samples_per_client\":" + std::to_string(spec.samples_per_client);
  out += ",\"num_features\":" + std::to_string(spec.num_features);
  out += ",\"num_classes\":" + std::to_string(spec.num_classes);
  out += ",\"shift_magnitude\":" + fmt_double(spec.shift_magnitude);
  out += ",\"scale_magnitude\":" + fmt_double(spec.scale_magnitude);
  out += ",\"drift_mode\":\"" + drift_mode_name(spec.drift_mode) + "\"";
  out += ",\"train_fraction\":" + fmt_double(spec.train_fraction);
  out += ",\"class_separation\":" + fmt_double(spec.class_separation);
  out += ",\"tail_rate\":" + fmt_double(spec.tail_rate);
  out += ",\"class_means\":[";
  for (std::size_t k = 0; k < result.class_means.size(); ++k) {
    if (k > 0) out += ",";
    out += fmt_double_array(result.class_means[k]);
  }
  out += "],\"clients\":[";
  for (std::size_t ci = 0; ci < result.client_meta.size(); ++ci) {
    const auto& meta = result.client_meta[ci];
    if (ci > 0) out += ",";
    out += "{\"client_id\":" + std::to_string(result.clients[ci].client_id);
    out += ",\"train_rows\":" + std::to_string(result.clients[ci].train.size());
    out += ",\"test_rows\":" + std::to_string(result.clients[ci].test.size());
    if (!meta.offsets.empty()) {
      out += ",\"offsets\":" + fmt_double_array(meta.offsets);
      out += ",\"scales\":" + fmt_double_array(meta.scales);
      out += ",\"tail_offsets\":" + fmt_double_array(meta.tail_offsets);
      out += ",\"tail_scales\":" + fmt_double_array(meta.tail_scales);
    }
    if (!meta.class_offsets.empty()) {
      out += ",\"class_offsets\":[";
      for (std::size_t k = 0; k < meta.class_offsets.size(); ++k) {
        if (k > 0) out += ",";
        out += fmt_double_array(meta.class_offsets[k]);
      }
      out += "]";
    }
    out += "}";
  }
  out += "]}";
  return out;
}

}  // namespace fedstat
