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

namespace fedstat {

// Square count matrix indexed [true][predicted].
struct ConfusionMatrix {
  std::size_t num_classes = 0;
  std::vector<std::int64_t> counts;  // row-major C x C

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t c) : num_classes(c), counts(c * c, 0) {}

  std::int64_t& at(std::size_t t, std::size_t p) { return counts[t * num_classes + p]; }
  std::int64_t at(std::size_t t, std::size_t p) const { return counts[t * num_classes + p]; }
  std::int64_t total() const;
  std::int64_t row_total(std::size_t t) const;
  std::int64_t col_total(std::size_t p) const;
};

ConfusionMatrix confusion(const std::vector<int>& truth,
                          const std::vector<int>& predicted,
                          std::size_t num_classes);

// One-vs-rest counts and rates for a single class. Ratios with a zero
// denominator are reported as 0.
struct ClassMetrics {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0.0;  // (tp + tn) / (tp + tn + fp + fn)
  double tpr = 0.0;       // tp / (tp + fn)
  double fpr = 0.0;       // fp / (fp + tn)
  double f1 = 0.0;        // 2 tp / (2 tp + fp + fn)
};

ClassMetrics per_class_metrics(const ConfusionMatrix& m, std::size_t cls);

struct MetricReport {
  std::vector<ClassMetrics> per_class;
  // Unweighted means over classes.
  double macro_accuracy = 0.0;
  double macro_tpr = 0.0;
  double macro_fpr = 0.0;
  double macro_f1 = 0.0;
  // Count-pooled variants, reported alongside for comparison.
  double micro_tpr = 0.0;
  double micro_fpr = 0.0;
};

MetricReport macro_report(const ConfusionMatrix& m);

// Plain fraction of matching entries; used for round-by-round curves.
double accuracy_score(const std::vector<int>& truth, const std::vector<int>& predicted);

std::string to_record(const MetricReport& report,
                      const std::vector<std::string>& class_names);
std::string confusion_to_csv(const ConfusionMatrix& m,
                             const std::vector<std::string>& class_names);

}  // namespace fedstat
