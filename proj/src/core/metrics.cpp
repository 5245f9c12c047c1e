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

#include "core/metrics.hpp"

#include "core/common.hpp"
#include "core/record.hpp"

namespace fedstat {

namespace {

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (std::int64_t c : counts) t += c;
  return t;
}

std::int64_t ConfusionMatrix::row_total(std::size_t t) const {
  std::int64_t sum = 0;
  for (std::size_t p = 0; p < num_classes; ++p) sum += at(t, p);
  return sum;
}

std::int64_t ConfusionMatrix::col_total(std::size_t p) const {
  std::int64_t sum = 0;
  for (std::size_t t = 0; t < num_classes; ++t) sum += at(t, p);
  return sum;
}

ConfusionMatrix confusion(const std::vector<int>& truth,
                          const std::vector<int>& predicted,
                          std::size_t num_classes) {
  if (truth.size() != predicted.size())
    throw_data("confusion: label vectors have different lengths");
  if (num_classes == 0) throw_data("confusion: num_classes must be positive");
  ConfusionMatrix m(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    int t = truth[i], p = predicted[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= num_classes ||
        static_cast<std::size_t>(p) >= num_classes)
      throw_data("confusion: label out of range");
    m.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p))++;
  }
  return m;
}

ClassMetrics per_class_metrics(const ConfusionMatrix& m, std::size_t cls) {
  if (cls >= m.num_classes) throw_data("per_class_metrics: class out of range");
  ClassMetrics r;
  const std::int64_t total = m.total();
  r.tp = m.at(cls, cls);
  r.fn = m.row_total(cls) - r.tp;
  r.fp = m.col_total(cls) - r.tp;
  r.tn = total - r.tp - r.fn - r.fp;
  r.accuracy = ratio(r.tp + r.tn, total);
  r.tpr = ratio(r.tp, r.tp + r.fn);
  r.fpr = ratio(r.fp, r.fp + r.tn);
  r.f1 = ratio(2 * r.tp, 2 * r.tp + r.fp + r.fn);
  return r;
}

MetricReport macro_report(const ConfusionMatrix& m) {
  if (m.num_classes == 0) throw_data("macro_report: empty confusion matrix");
  MetricReport report;
  report.per_class.reserve(m.num_classes);
  std::int64_t tp_sum = 0, fn_sum = 0, fp_sum = 0, tn_sum = 0;
  for (std::size_t c = 0; c < m.num_classes; ++c) {
    ClassMetrics cm = per_class_metrics(m, c);
    report.macro_accuracy += cm.accuracy;
    report.macro_tpr += cm.tpr;
    report.macro_fpr += cm.fpr;
    report.macro_f1 += cm.f1;
    tp_sum += cm.tp;
    fn_sum += cm.fn;
    fp_sum += cm.fp;
    tn_sum += cm.tn;
    report.per_class.push_back(cm);
  }
  const double c = static_cast<double>(m.num_classes);
  report.macro_accuracy /= c;
  report.macro_tpr /= c;
  report.macro_fpr /= c;
  report.macro_f1 /= c;
  report.micro_tpr = ratio(tp_sum, tp_sum + fn_sum);
  report.micro_fpr = ratio(fp_sum, fp_sum + tn_sum);
  return report;
}

double accuracy_score(const std::vector<int>& truth, const std::vector<int>& predicted) {
  if (truth.size() != predicted.size())
    throw_data("accuracy_score: label vectors have different lengths");
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == predicted[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::string to_record(const MetricReport& report,
                      const std::vector<std::string>& class_names) {
  using record::fmt_double;
  std::string out = "{\"version\":1";
  out += ",\"macro\":{\"accuracy\":" + fmt_double(report.macro_accuracy);
  out += ",\"tpr\":" + fmt_double(report.macro_tpr);
  out += ",\"fpr\":" + fmt_double(report.macro_fpr);
  out += ",\"f1\":" + fmt_double(report.macro_f1) + "}";
  out += ",\"micro\":{\"tpr\":" + fmt_double(report.micro_tpr);
  out += ",\"fpr\":" + fmt_double(report.micro_fpr) + "}";
  out += ",\"per_class\":[";
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const ClassMetrics& cm = report.per_class[c];
    if (c > 0) out += ",";
    out += "{\"class\":\"";
    out += (c < class_names.size() ? class_names[c] : std::to_string(c));
    out += "\",\"tp\":" + std::to_string(cm.tp);
    out += ",\"fp\":" + std::to_string(cm.fp);
    out += ",\"fn\":" + std::to_string(cm.fn);
    out += ",\"tn\":" + std::to_string(cm.tn);
    out += ",\"accuracy\":" + fmt_double(cm.accuracy);
    out += ",\"tpr\":" + fmt_double(cm.tpr);
    out += ",\"fpr\":" + fmt_double(cm.fpr);
    out += ",\"f1\":" + fmt_double(cm.f1);
    out += "}";
  }
  out += "]}";
  return out;
}

std::string confusion_to_csv(const ConfusionMatrix& m,
                             const std::vector<std::string>& class_names) {
  auto name = [&](std::size_t c) {
    return c < class_names.size() ? class_names[c] : std::to_string(c);
  };
  std::string out = "true\\predicted";
  for (std::size_t p = 0; p < m.num_classes; ++p) out += "," + name(p);
  out += "\n";
  for (std::size_t t = 0; t < m.num_classes; ++t) {
    out += name(t);
    for (std::size_t p = 0; p < m.num_classes; ++p)
      out += "," + std::to_string(m.at(t, p));
    out += "\n";
  }
  return out;
}

}  // namespace fedstat
