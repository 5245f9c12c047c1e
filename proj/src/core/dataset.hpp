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

#include "core/common.hpp"

namespace fedstat {

// A fully numeric feature matrix plus integer class labels. Label encoding
// follows first occurrence order in the source, so the mapping is stable
// for a given file.
struct LabeledDataset {
  Matrix features;                         // D x S
  std::vector<int> labels;                 // D entries in [0, num_classes)
  std::vector<std::string> feature_names;  // S entries
  std::vector<std::string> class_names;    // C entries, encoding order
  std::size_t dropped_rows = 0;            // malformed rows skipped at load

  std::size_t size() const { return labels.size(); }
  std::size_t num_features() const { return features.cols; }
  std::size_t num_classes() const { return class_names.size(); }
  std::vector<std::size_t> class_counts() const;

  // Shape consistency, label range, and absence of NaN/Inf.
  void validate() const;
};

// Loads a CSV file with a header row. label_column selects the class column;
// feature_columns selects and orders the features (empty means every other
// column). Rows with unparseable feature cells are dropped and counted
// unless strict is set, in which case they raise a data error. A feature
// column with no parseable value at all is always an error rather than a
// silent coercion.
LabeledDataset load_csv(const std::string& path, const std::string& label_column,
                        const std::vector<std::string>& feature_columns = {},
                        bool strict = false);

void write_csv(const LabeledDataset& ds, const std::string& path,
               const std::string& label_column = "label");

// Splits ds into num_clients label-stratified parts: per class, rows are
// shuffled with the seeded generator and dealt round-robin, so per-class
// counts across parts differ by at most one. Every class must have at
// least num_clients rows.
std::vector<LabeledDataset> stratified_partition(const LabeledDataset& ds,
                                                 std::size_t num_clients,
                                                 std::uint64_t seed);

struct TrainTestSplit {
  LabeledDataset train;
  LabeledDataset test;
};

// Seeded shuffle then split. Stratified mode keeps class proportions by
// sending floor(train_fraction * class_count) rows of each class to train
// and the remainder to test; it requires at least 2 rows per class.
TrainTestSplit train_test_split(const LabeledDataset& ds, double train_fraction,
                                std::uint64_t seed, bool stratified = true);

// Provenance of one synthetic minority sample: it lies on the segment
// between rows base_row and neighbor_row of the *input* dataset, at
// parameter mix in [0, 1].
struct SmoteParent {
  std::size_t base_row = 0;
  std::size_t neighbor_row = 0;
  double mix = 0.0;
};

struct SmoteResult {
  LabeledDataset data;               // originals first, synthetics appended
  std::vector<SmoteParent> parents;  // one entry per appended row
  std::vector<std::string> warnings;
};

// Minority-class interpolation upsampling. Every class below
// target_per_class is grown to exactly that count by sampling a class
// member, one of its k nearest same-class neighbors (Euclidean), and a
// uniform mix on the connecting segment. target_per_class == 0 means
// "balance to the current majority count". k is clamped to class size - 1
// with a warning when too large.
SmoteResult smote_upsample(const LabeledDataset& ds, std::size_t target_per_class,
                           int k_neighbors, std::uint64_t seed);

enum class DriftMode { none, covariate_shift, concept_drift };

std::string drift_mode_name(DriftMode m);
DriftMode drift_mode_from_name(const std::string& name);

struct SynthSpec {
  std::size_t num_clients = 2;
  std::size_t samples_per_client = 1000;
  std::size_t num_features = 8;
  std::size_t num_classes = 2;
  double shift_magnitude = 0.0;
  double scale_magnitude = 0.0;
  DriftMode drift_mode = DriftMode::none;
  std::uint64_t seed = 0;
  // Secondary knobs with sensible defaults; all recorded in run metadata.
  double train_fraction = 0.8;
  double class_separation = 1.0;  // std of class-center draws
  double tail_rate = 0.05;        // rows hit by client-specific tail noise

  void validate() const;
};

// One client's share of a federation: disjoint train/test rows plus the
// client's weight (its fraction of all training rows).
struct ClientPartition {
  int client_id = 0;
  LabeledDataset train;
  LabeledDataset test;
  double weight = 0.0;
};

// Recomputes weights as train-row fractions; they sum to 1.
void assign_weights(std::vector<ClientPartition>& clients);

// Fractions of shift_magnitude / scale_magnitude applied to every row of a
// covariate_shift client (the bulk), as opposed to the full magnitudes that
// place and spread its rare tail rows.
inline constexpr double kBulkShiftFraction = 0.25;
inline constexpr double kBulkScaleFraction = 0.25;
// Log range of the per-client per-feature tail noise std at
// scale_magnitude 1: draws span shift_magnitude * [1, e^kTailLogSpan], so
// client variance estimates for the same feature can disagree by orders of
// magnitude, the way bursty count-like features behave.
inline constexpr double kTailLogSpan = 6.0;

// Realized per-client distortion parameters, kept for metadata sidecars and
// for tests that assert on the drawn values.
struct SynthClientMeta {
  std::vector<double> offsets;       // covariate_shift: bulk per-feature shift
  std::vector<double> scales;        // covariate_shift: bulk per-feature scale
  std::vector<double> tail_offsets;  // covariate_shift: tail displacement
  std::vector<double> tail_scales;   // covariate_shift: tail noise std
  std::vector<std::vector<double>> class_offsets;  // concept_drift: C x S
};

struct SynthResult {
  std::vector<ClientPartition> clients;
  std::vector<std::vector<double>> class_means;  // C x S shared centers
  std::vector<SynthClientMeta> client_meta;
  SynthSpec spec;
};

// Draws shared unit-variance Gaussian class clusters once, then materializes
// each client under the chosen drift mode:
//   none            iid copies of the base distribution
//   covariate_shift every row gets a mild per-client per-feature affine map
//                   (offset uniform in +-kBulkShiftFraction*shift_magnitude,
//                   scale log-uniform with range kBulkScaleFraction *
//                   scale_magnitude), and a tail_rate fraction of rows is
//                   additionally displaced to a client-specific location
//                   (uniform in +-shift_magnitude per feature) with
//                   client-specific Gaussian spread (std = shift_magnitude
//                   * exp(kTailLogSpan * scale_magnitude * U(0,1)) per
//                   feature).
//                   The rare heavy tails dominate each client's sample
//                   moments, so per-client statistics disagree strongly
//                   about a population whose class geometry is shared, the
//                   way bursty count-like features do. A pure affine map
//                   alone would be no test of normalization choices: it is
//                   cancelled exactly by per-client standardization (an
//                   affine map commutes with sample mean and std).
//   concept_drift   per-client per-class offsets uniform in
//                   +-shift_magnitude (same input regions, shifted class
//                   geometry)
// Each client's rows are then split train/test with train_fraction.
SynthResult synth_noniid_generate(const SynthSpec& spec);

std::string synth_metadata_record(const SynthResult& result);

}  // namespace fedstat
