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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "core/common.hpp"
#include "core/dataset.hpp"

namespace testutil {

// Scratch directory under the system temp root, wiped on construction and
// destruction so reruns never see stale artifacts.
class TempDir {
public:
  explicit TempDir(const std::string& name)
      : path_((std::filesystem::temp_directory_path() / ("fedstat_" + name)).string()) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::string& path() const { return path_; }
  std::string file(const std::string& leaf) const { return path_ + "/" + leaf; }

private:
  std::string path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Labeled dataset with the given per-class row counts; feature values are
// seeded Gaussian noise around class-specific centers.
inline fedstat::LabeledDataset make_dataset(const std::vector<std::size_t>& class_counts,
                                            std::size_t num_features,
                                            std::uint64_t seed) {
  fedstat::LabeledDataset ds;
  for (std::size_t j = 0; j < num_features; ++j)
    ds.feature_names.push_back("f" + std::to_string(j));
  for (std::size_t k = 0; k < class_counts.size(); ++k)
    ds.class_names.push_back("c" + std::to_string(k));

  std::size_t total = 0;
  for (std::size_t n : class_counts) total += n;
  ds.features = fedstat::Matrix(total, num_features);
  ds.labels.reserve(total);

  auto rng = fedstat::make_rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::size_t row = 0;
  for (std::size_t k = 0; k < class_counts.size(); ++k) {
    for (std::size_t n = 0; n < class_counts[k]; ++n, ++row) {
      ds.labels.push_back(static_cast<int>(k));
      for (std::size_t j = 0; j < num_features; ++j)
        ds.features.at(row, j) = 2.0 * static_cast<double>(k) + noise(rng);
    }
  }
  return ds;
}

}  // namespace testutil
