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

// Command line front end for the fedstat shared library. All behavior
// lives behind the C API; this file only parses flags, forwards them, and
// prints results. Failures exit with the status code of the failing call
// (2 config, 3 data, 4 numeric, 1 internal) and one diagnostic line on
// stderr of the form "fedstat: <kind> error: <message>".

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedstat/fedstat.h"

namespace {

const char* status_kind(fedstat_status s) {
  switch (s) {
    case FEDSTAT_OK: return "ok";
    case FEDSTAT_ERROR_CONFIG: return "config";
    case FEDSTAT_ERROR_DATA: return "data";
    case FEDSTAT_ERROR_NUMERIC: return "numeric";
    case FEDSTAT_ERROR_INTERNAL: break;
  }
  return "internal";
}

int report_failure(fedstat_status s) {
  std::cerr << "fedstat: " << status_kind(s) << " error: " << fedstat_last_error()
            << "\n";
  return static_cast<int>(s);
}

// Flags may be given repeatedly or as one comma-separated value; both forms
// end up as a flat list here.
std::vector<std::string> flatten_list(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& item : raw) {
    std::size_t pos = 0;
    while (pos <= item.size()) {
      std::size_t comma = item.find(',', pos);
      if (comma == std::string::npos) comma = item.size();
      std::string part = item.substr(pos, comma - pos);
      const auto a = part.find_first_not_of(" \t");
      if (a != std::string::npos) {
        const auto b = part.find_last_not_of(" \t");
        out.push_back(part.substr(a, b - a + 1));
      }
      pos = comma + 1;
    }
  }
  return out;
}

std::vector<const char*> c_pointers(const std::vector<std::string>& items) {
  std::vector<const char*> out;
  out.reserve(items.size());
  for (const auto& s : items) out.push_back(s.c_str());
  return out;
}

void echo_summary_table(const std::string& out_dir) {
  std::ifstream in(out_dir + "/summary.csv");
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    std::string row;
    std::size_t pos = 0;
    int col = 0;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      std::string cell = line.substr(pos, comma - pos);
      if (col >= 2 && cell.find_first_not_of("0123456789.eE+-") == std::string::npos &&
          !cell.empty()) {
        // Round long fractions for the console; the file keeps full precision.
        try {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.4f", std::stod(cell));
          cell = buf;
        } catch (...) {
        }
      }
      row += cell;
      if (comma < line.size()) row += "  ";
      pos = comma + 1;
      ++col;
    }
    std::cout << "  " << row << "\n";
  }
}

void print_feature_table(const std::vector<double>& mean,
                         const std::vector<double>& variance) {
  std::printf("  %7s  %14s  %14s  %14s\n", "feature", "mean", "variance", "std");
  for (std::size_t j = 0; j < mean.size(); ++j)
    std::printf("  %7zu  %14.6g  %14.6g  %14.6g\n", j, mean[j], variance[j],
                std::sqrt(variance[j]));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated learning simulator with shareable normalization statistics"};
  app.set_version_flag("--version", []() { return std::string(fedstat_version()); });
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Run every configured strategy and write run artifacts");
  std::string train_config, train_out, train_strategy, train_dataset, train_label;
  std::vector<std::string> train_features;
  std::uint64_t train_seed = 0;
  bool train_seed_set = false;
  train->add_option("--config", train_config, "Run configuration file")->required();
  train->add_option("--out", train_out, "Output directory for run artifacts")->required();
  train->add_option("--seed", train_seed, "Override the config seed")
      ->each([&](const std::string&) { train_seed_set = true; });
  train->add_option("--strategy", train_strategy,
                    "Run only these strategies (name or comma-separated names)");
  train->add_option("--dataset", train_dataset,
                    "Override the data source with this CSV file");
  train->add_option("--label-column", train_label, "Class column of the CSV override");
  train->add_option("--features", train_features,
                    "Feature columns of the CSV override (repeat or comma-separate)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate the configured synthetic federation as CSV files");
  std::string synth_config, synth_out;
  std::uint64_t synth_seed = 0;
  bool synth_seed_set = false;
  synth->add_option("--config", synth_config, "Run configuration file")->required();
  synth->add_option("--out", synth_out, "Output directory for client CSV files")->required();
  synth->add_option("--seed", synth_seed, "Override the config seed")
      ->each([&](const std::string&) { synth_seed_set = true; });

  // stats
  auto* stats = app.add_subcommand("stats", "Compute or pool client statistics records");
  stats->require_subcommand(1);
  auto* aggregate = stats->add_subcommand("aggregate", "Pool client records into a shared record");
  std::vector<std::string> agg_inputs;
  std::string agg_out;
  aggregate->add_option("inputs", agg_inputs, "Client statistics record files")
      ->required()
      ->expected(-1);
  aggregate->add_option("--out", agg_out, "Output path for the pooled record")->required();
  auto* compute = stats->add_subcommand("compute", "Compute a client record from a CSV file");
  std::string comp_csv, comp_label, comp_out;
  std::vector<std::string> comp_features;
  int comp_client_id = 1;
  compute->add_option("--csv", comp_csv, "Input CSV file")->required();
  compute->add_option("--label-column", comp_label, "Class column")->required();
  compute->add_option("--features", comp_features,
                      "Feature columns (repeat or comma-separate; default all others)");
  compute->add_option("--client-id", comp_client_id, "Client id stored in the record");
  compute->add_option("--out", comp_out, "Output path for the record")->required();

  // report
  auto* report = app.add_subcommand("report", "Derive plot-ready CSV files from a finished run");
  std::string rep_run, rep_out, rep_feature, rep_class;
  int rep_bins = 30;
  bool rep_no_feature_stats = false;
  report->add_option("--run", rep_run, "Run directory written by train")->required();
  report->add_option("--out", rep_out, "Output directory for report files")->required();
  report->add_option("--feature", rep_feature, "Feature for per-client histograms");
  report->add_option("--class", rep_class, "Class label the histograms condition on");
  report->add_option("--bins", rep_bins, "Histogram bin count");
  report->add_flag("--no-feature-stats", rep_no_feature_stats,
                   "Skip the per-client feature moment table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "fedstat: config error: " << e.what() << "\n";
    return static_cast<int>(FEDSTAT_ERROR_CONFIG);
  }

  if (train->parsed()) {
    const std::vector<std::string> features = flatten_list(train_features);
    const std::vector<const char*> fptrs = c_pointers(features);
    const fedstat_status s = fedstat_run_train(
        train_config.c_str(), train_out.c_str(),
        train_seed_set ? &train_seed : nullptr,
        train_strategy.empty() ? nullptr : train_strategy.c_str(),
        train_dataset.empty() ? nullptr : train_dataset.c_str(),
        train_label.empty() ? nullptr : train_label.c_str(),
        fptrs.empty() ? nullptr : fptrs.data(), fptrs.size());
    if (s != FEDSTAT_OK) return report_failure(s);
    std::cout << "run artifacts written to " << train_out << "\n";
    echo_summary_table(train_out);
    return 0;
  }

  if (synth->parsed()) {
    const fedstat_status s = fedstat_run_synth(synth_config.c_str(), synth_out.c_str(),
                                               synth_seed_set ? &synth_seed : nullptr);
    if (s != FEDSTAT_OK) return report_failure(s);
    std::cout << "synthetic federation written to " << synth_out << "\n";
    return 0;
  }

  if (stats->parsed()) {
    size_t count = 0, features = 0;
    if (aggregate->parsed()) {
      const std::vector<const char*> inputs = c_pointers(agg_inputs);
      const fedstat_status s = fedstat_run_stats_aggregate(
          inputs.data(), inputs.size(), agg_out.c_str(), &count, &features);
      if (s != FEDSTAT_OK) return report_failure(s);
      std::cout << "pooled " << agg_inputs.size() << " records (" << count
                << " rows, " << features << " features) into " << agg_out << "\n";
      fedstat_global_stats* pooled = nullptr;
      if (fedstat_global_stats_read(agg_out.c_str(), &pooled) == FEDSTAT_OK) {
        std::vector<double> mean(features), variance(features);
        if (fedstat_global_stats_values(pooled, mean.data(), variance.data()) ==
            FEDSTAT_OK)
          print_feature_table(mean, variance);
        fedstat_global_stats_free(pooled);
      }
      return 0;
    }
    const std::vector<std::string> cols = flatten_list(comp_features);
    const std::vector<const char*> cptrs = c_pointers(cols);
    const fedstat_status s = fedstat_run_stats_compute(
        comp_csv.c_str(), comp_label.c_str(), cptrs.empty() ? nullptr : cptrs.data(),
        cptrs.size(), comp_client_id, comp_out.c_str(), &count, &features);
    if (s != FEDSTAT_OK) return report_failure(s);
    std::cout << "statistics of " << count << " rows (" << features
              << " features) written to " << comp_out << "\n";
    fedstat_local_stats* rec = nullptr;
    if (fedstat_local_stats_read(comp_out.c_str(), &rec) == FEDSTAT_OK) {
      std::vector<double> mean(features), variance(features);
      if (fedstat_local_stats_values(rec, mean.data(), variance.data()) == FEDSTAT_OK)
        print_feature_table(mean, variance);
      fedstat_local_stats_free(rec);
    }
    return 0;
  }

  // report
  const fedstat_status s = fedstat_run_report(
      rep_run.c_str(), rep_out.c_str(), rep_feature.empty() ? nullptr : rep_feature.c_str(),
      rep_class.empty() ? nullptr : rep_class.c_str(), rep_bins, rep_no_feature_stats ? 0 : 1);
  if (s != FEDSTAT_OK) return report_failure(s);
  std::cout << "report written to " << rep_out << "\n";
  return 0;
}
