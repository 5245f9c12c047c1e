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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include <doctest.h>

#include "core/dataset.hpp"
#include "test_util.hpp"

using namespace fedstat;

namespace {

std::map<std::string, std::size_t> counts_by_name(const LabeledDataset& ds) {
  std::map<std::string, std::size_t> out;
  for (int lbl : ds.labels) out[ds.class_names[static_cast<std::size_t>(lbl)]]++;
  return out;
}

}  // namespace

TEST_CASE("load_csv parses quoted fields and keeps label encoding order") {
  testutil::TempDir tmp("csv_basic");
  testutil::write_file(tmp.file("d.csv"),
                       "x,\"name, quoted\",label\n"
                       "1.5,2,dog\n"
                       "2.5,\"3\",cat\n"
                       "0.5,\"4\"\"5\",dog\n");
  // The doubled quote in "4""5" makes that cell the non-numeric 4"5, which
  // drops the row; the column still has numeric values elsewhere.
  LabeledDataset ds = load_csv(tmp.file("d.csv"), "label");
  CHECK(ds.size() == 2);
  CHECK(ds.dropped_rows == 1);
  REQUIRE(ds.feature_names.size() == 2);
  CHECK(ds.feature_names[0] == "x");
  CHECK(ds.feature_names[1] == "name, quoted");
  REQUIRE(ds.class_names.size() == 2);
  CHECK(ds.class_names[0] == "dog");
  CHECK(ds.class_names[1] == "cat");
  CHECK(ds.labels == std::vector<int>{0, 1});
  CHECK(ds.features.at(0, 0) == 1.5);
  CHECK(ds.features.at(1, 1) == 3.0);
}

TEST_CASE("load_csv drops malformed rows unless strict") {
  testutil::TempDir tmp("csv_strict");
  std::string text = "a,b,label\n";
  for (int i = 0; i < 9; ++i)
    text += std::to_string(i) + "," + std::to_string(2 * i) + ",c" +
            std::to_string(i % 2) + "\n";
  text += "oops,not,numeric,extra\n";
  testutil::write_file(tmp.file("d.csv"), text);

  LabeledDataset ds = load_csv(tmp.file("d.csv"), "label");
  CHECK(ds.size() == 9);
  CHECK(ds.dropped_rows == 1);

  CHECK_THROWS_WITH_AS(load_csv(tmp.file("d.csv"), "label", {}, true),
                       doctest::Contains("malformed row at line 11"), Error);
}

TEST_CASE("feature_columns selects and orders the feature matrix") {
  testutil::TempDir tmp("csv_select");
  testutil::write_file(tmp.file("d.csv"),
                       "a,b,c,label\n1,2,3,x\n4,5,6,y\n");
  LabeledDataset ds = load_csv(tmp.file("d.csv"), "label", {"c", "a"});
  REQUIRE(ds.feature_names == std::vector<std::string>{"c", "a"});
  CHECK(ds.features.at(0, 0) == 3.0);
  CHECK(ds.features.at(0, 1) == 1.0);
  CHECK(ds.features.at(1, 0) == 6.0);
  CHECK(ds.features.at(1, 1) == 4.0);
}

TEST_CASE("load_csv error paths") {
  testutil::TempDir tmp("csv_errors");
  testutil::write_file(tmp.file("d.csv"), "a,b,label\n1,2,x\n3,4,y\n");

  CHECK_THROWS_WITH_AS(load_csv(tmp.file("absent.csv"), "label"),
                       doctest::Contains("cannot open CSV file"), Error);
  CHECK_THROWS_WITH_AS(load_csv(tmp.file("d.csv"), "nope"),
                       doctest::Contains("label column 'nope' not found"), Error);
  CHECK_THROWS_WITH_AS(load_csv(tmp.file("d.csv"), "label", {"ghost"}),
                       doctest::Contains("feature column 'ghost' not found"), Error);
  CHECK_THROWS_WITH_AS(load_csv(tmp.file("d.csv"), "label", {"label"}),
                       doctest::Contains("is the label column"), Error);

  testutil::write_file(tmp.file("text.csv"), "a,b,label\nfoo,2,x\nbar,4,y\n");
  CHECK_THROWS_WITH_AS(load_csv(tmp.file("text.csv"), "label"),
                       doctest::Contains("feature column 'a'"), Error);

  testutil::write_file(tmp.file("empty.csv"), "a,label\n");
  CHECK_THROWS_WITH_AS(load_csv(tmp.file("empty.csv"), "label"),
                       doctest::Contains("no usable data rows"), Error);
}

TEST_CASE("write_csv then load_csv reproduces the dataset") {
  testutil::TempDir tmp("csv_roundtrip");
  auto ds = testutil::make_dataset({6, 4, 3}, 3, 9);
  write_csv(ds, tmp.file("out.csv"), "target");
  LabeledDataset back = load_csv(tmp.file("out.csv"), "target");
  CHECK(back.size() == ds.size());
  CHECK(back.feature_names == ds.feature_names);
  CHECK(back.class_names == ds.class_names);
  CHECK(back.labels == ds.labels);
  CHECK(back.features.v == ds.features.v);  // 17 significant digits round trip
}

TEST_CASE("stratified_partition deals classes evenly") {
  SUBCASE("10 of A and 5 of B over 5 clients gives 2 A and 1 B each") {
    auto ds = testutil::make_dataset({10, 5}, 2, 1);
    auto parts = stratified_partition(ds, 5, 33);
    REQUIRE(parts.size() == 5);
    for (const auto& p : parts) {
      auto c = counts_by_name(p);
      CHECK(c["c0"] == 2);
      CHECK(c["c1"] == 1);
    }
  }
  SUBCASE("7 rows over 3 clients splits 3/2/2 in some order") {
    auto ds = testutil::make_dataset({7}, 2, 2);
    auto parts = stratified_partition(ds, 3, 8);
    std::vector<std::size_t> sizes;
    for (const auto& p : parts) sizes.push_back(p.size());
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<std::size_t>{2, 2, 3});
  }
  SUBCASE("a single client receives the whole dataset") {
    auto ds = testutil::make_dataset({8, 5}, 3, 3);
    auto parts = stratified_partition(ds, 1, 12);
    REQUIRE(parts.size() == 1);
    CHECK(parts[0].size() == 13);
    auto c = counts_by_name(parts[0]);
    CHECK(c["c0"] == 8);
    CHECK(c["c1"] == 5);
  }
  SUBCASE("partition is disjoint and exhaustive") {
    auto ds = testutil::make_dataset({23, 17, 11}, 4, 14);
    auto parts = stratified_partition(ds, 4, 5);
    std::multiset<std::vector<double>> original, reassembled;
    for (std::size_t i = 0; i < ds.size(); ++i)
      original.insert(std::vector<double>(ds.features.row(i), ds.features.row(i) + 4));
    for (const auto& p : parts)
      for (std::size_t i = 0; i < p.size(); ++i)
        reassembled.insert(std::vector<double>(p.features.row(i), p.features.row(i) + 4));
    CHECK(original == reassembled);
  }
  SUBCASE("a class smaller than the client count is an error") {
    auto ds = testutil::make_dataset({10, 3}, 2, 4);
    CHECK_THROWS_WITH_AS(stratified_partition(ds, 5, 1),
                         "class 'c1' has 3 rows, fewer than 5 clients", Error);
  }
}

TEST_CASE("train_test_split fractions") {
  SUBCASE("100 rows at 0.8 split 80/20") {
    auto ds = testutil::make_dataset({50, 50}, 2, 21);
    auto split = train_test_split(ds, 0.8, 7);
    CHECK(split.train.size() == 80);
    CHECK(split.test.size() == 20);
  }
  SUBCASE("5 rows at 0.8 split 4/1") {
    auto ds = testutil::make_dataset({5}, 2, 22);
    auto split = train_test_split(ds, 0.8, 7, false);
    CHECK(split.train.size() == 4);
    CHECK(split.test.size() == 1);
  }
  SUBCASE("stratified split keeps per-class proportions") {
    auto ds = testutil::make_dataset({10, 10}, 2, 23);
    auto split = train_test_split(ds, 0.8, 7);
    auto c = counts_by_name(split.train);
    CHECK(c["c0"] == 8);
    CHECK(c["c1"] == 8);
  }
  SUBCASE("a class with fewer than 2 rows cannot split stratified") {
    auto ds = testutil::make_dataset({10, 1}, 2, 24);
    CHECK_THROWS_WITH_AS(train_test_split(ds, 0.8, 7),
                         "class 'c1' has fewer than 2 rows; cannot split stratified",
                         Error);
  }
  SUBCASE("train_fraction outside [0, 1] is a config error") {
    auto ds = testutil::make_dataset({4}, 2, 25);
    CHECK_THROWS_AS(train_test_split(ds, 1.5, 7), Error);
  }
}

TEST_CASE("smote_upsample grows minorities on recorded segments") {
  SUBCASE("two points with target 10 interpolate on [0, 1]") {
    LabeledDataset ds;
    ds.feature_names = {"x"};
    ds.class_names = {"minor", "major"};
    ds.features = Matrix(12, 1);
    ds.features.at(0, 0) = 0.0;
    ds.features.at(1, 0) = 1.0;
    ds.labels = {0, 0};
    for (int i = 0; i < 10; ++i) {
      ds.labels.push_back(1);
      ds.features.at(static_cast<std::size_t>(2 + i), 0) = 5.0 + i;
    }
    SmoteResult res = smote_upsample(ds, 10, 1, 42);
    CHECK(res.data.size() == 20);
    CHECK(res.parents.size() == 8);
    auto counts = counts_by_name(res.data);
    CHECK(counts["minor"] == 10);
    CHECK(counts["major"] == 10);
    for (std::size_t i = 0; i < 8; ++i) {
      const double v = res.data.features.at(12 + i, 0);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      CHECK(res.data.labels[12 + i] == 0);
    }
  }
  SUBCASE("synthetic rows reconstruct exactly from their recorded parents") {
    auto ds = testutil::make_dataset({30, 12, 5}, 4, 77);
    SmoteResult res = smote_upsample(ds, 0, 5, 9);
    auto counts = counts_by_name(res.data);
    CHECK(counts["c0"] == 30);
    CHECK(counts["c1"] == 30);
    CHECK(counts["c2"] == 30);
    REQUIRE(res.parents.size() == res.data.size() - ds.size());
    for (std::size_t i = 0; i < res.parents.size(); ++i) {
      const SmoteParent& par = res.parents[i];
      const std::size_t row = ds.size() + i;
      CHECK(par.mix >= 0.0);
      CHECK(par.mix <= 1.0);
      CHECK(ds.labels[par.base_row] == res.data.labels[row]);
      CHECK(ds.labels[par.neighbor_row] == res.data.labels[row]);
      long double dist2 = 0.0L;
      for (std::size_t j = 0; j < 4; ++j) {
        const double xb = ds.features.at(par.base_row, j);
        const double xn = ds.features.at(par.neighbor_row, j);
        const double expect = xb + par.mix * (xn - xb);
        const long double diff = res.data.features.at(row, j) - expect;
        dist2 += diff * diff;
      }
      CHECK(std::sqrt(static_cast<double>(dist2)) < 1e-9);
    }
  }
  SUBCASE("balanced input is a no-op") {
    auto ds = testutil::make_dataset({15, 15}, 3, 6);
    SmoteResult res = smote_upsample(ds, 0, 5, 1);
    CHECK(res.data.size() == 30);
    CHECK(res.parents.empty());
    CHECK(res.warnings.empty());
    CHECK(res.data.features.v == ds.features.v);
  }
  SUBCASE("k larger than the class clamps with a warning") {
    auto ds = testutil::make_dataset({4, 20}, 2, 11);
    SmoteResult res = smote_upsample(ds, 0, 10, 2);
    auto counts = counts_by_name(res.data);
    CHECK(counts["c0"] == 20);
    REQUIRE(res.warnings.size() == 1);
    CHECK(res.warnings[0] == "class 'c0': k clamped to 3");
  }
  SUBCASE("a single-sample class replicates with a warning") {
    auto ds = testutil::make_dataset({1, 6}, 2, 12);
    SmoteResult res = smote_upsample(ds, 0, 5, 3);
    auto counts = counts_by_name(res.data);
    CHECK(counts["c0"] == 6);
    REQUIRE(res.warnings.size() == 1);
    CHECK(res.warnings[0] == "class 'c0' has a single sample; replicating it");
    for (std::size_t i = 0; i < res.parents.size(); ++i) {
      const SmoteParent& par = res.parents[i];
      CHECK(par.base_row == par.neighbor_row);
      for (std::size_t j = 0; j < ds.num_features(); ++j)
        CHECK(res.data.features.at(ds.size() + i, j) ==
              ds.features.at(par.base_row, j));
    }
  }
  SUBCASE("a target below the majority count is a config error") {
    auto ds = testutil::make_dataset({10, 4}, 2, 13);
    CHECK_THROWS_WITH_AS(smote_upsample(ds, 7, 5, 1),
                         "smote target 7 is below the majority class count 10", Error);
    CHECK_THROWS_WITH_AS(smote_upsample(ds, 10, 0, 1), "smote k must be at least 1",
                         Error);
  }
  SUBCASE("same seed reproduces the same synthetics") {
    auto ds = testutil::make_dataset({25, 9}, 3, 14);
    SmoteResult a = smote_upsample(ds, 0, 5, 100);
    SmoteResult b = smote_upsample(ds, 0, 5, 100);
    CHECK(a.data.features.v == b.data.features.v);
    SmoteResult c = smote_upsample(ds, 0, 5, 101);
    CHECK(a.data.features.v != c.data.features.v);
  }
}

TEST_CASE("synthetic generator determinism and layout") {
  SynthSpec spec;
  spec.num_clients = 3;
  spec.samples_per_client = 120;
  spec.num_features = 4;
  spec.num_classes = 3;
  spec.shift_magnitude = 2.0;
  spec.scale_magnitude = 0.5;
  spec.drift_mode = DriftMode::covariate_shift;
  spec.seed = 42;

  SynthResult a = synth_noniid_generate(spec);
  SynthResult b = synth_noniid_generate(spec);
  REQUIRE(a.clients.size() == 3);
  for (std::size_t ci = 0; ci < 3; ++ci) {
    CHECK(a.clients[ci].client_id == static_cast<int>(ci) + 1);
    CHECK(a.clients[ci].train.size() + a.clients[ci].test.size() == 120);
    CHECK(a.clients[ci].train.features.v == b.clients[ci].train.features.v);
    CHECK(a.clients[ci].test.features.v == b.clients[ci].test.features.v);
    CHECK(a.clients[ci].train.labels == b.clients[ci].train.labels);
  }
  CHECK(a.clients[0].train.class_names == std::vector<std::string>{
                                              "class_0", "class_1", "class_2"});
  CHECK(a.clients[0].train.feature_names ==
        std::vector<std::string>{"f0", "f1", "f2", "f3"});

  double weight_sum = 0.0;
  for (const auto& c : a.clients) weight_sum += c.weight;
  CHECK(weight_sum == doctest::Approx(1.0).epsilon(1e-12));

  SynthSpec other = spec;
  other.seed = 43;
  SynthResult c = synth_noniid_generate(other);
  CHECK(a.clients[0].train.features.v != c.clients[0].train.features.v);
}

TEST_CASE("iid mode gives clients statistically identical data") {
  SynthSpec spec;
  spec.num_clients = 4;
  spec.samples_per_client = 4000;
  spec.num_features = 6;
  spec.num_classes = 2;
  spec.drift_mode = DriftMode::none;
  spec.seed = 5;
  SynthResult res = synth_noniid_generate(spec);

  // Client means of the same feature are averages of ~3200 train draws from
  // one distribution; with per-feature std sigma <= ~2 their difference
  // stays within 5 * sigma / sqrt(n) except with negligible probability.
  for (std::size_t j = 0; j < spec.num_features; ++j) {
    std::vector<double> means;
    for (const auto& c : res.clients) {
      double sum = 0.0;
      for (std::size_t i = 0; i < c.train.size(); ++i) sum += c.train.features.at(i, j);
      means.push_back(sum / static_cast<double>(c.train.size()));
    }
    const double n = static_cast<double>(res.clients[0].train.size());
    for (double m : means)
      CHECK(std::abs(m - means[0]) < 5.0 * 2.0 / std::sqrt(n));
  }
  for (const auto& meta : res.client_meta) {
    CHECK(meta.offsets.empty());
    CHECK(meta.class_offsets.empty());
  }
}

TEST_CASE("covariate shift draws per-client offsets inside the magnitude bounds") {
  SynthSpec spec;
  spec.num_clients = 5;
  spec.samples_per_client = 60;
  spec.num_features = 3;
  spec.num_classes = 2;
  spec.shift_magnitude = 5.0;
  spec.scale_magnitude = 1.0;
  spec.drift_mode = DriftMode::covariate_shift;
  spec.seed = 77;
  SynthResult res = synth_noniid_generate(spec);

  REQUIRE(res.client_meta.size() == 5);
  for (const auto& meta : res.client_meta) {
    REQUIRE(meta.offsets.size() == 3);
    REQUIRE(meta.tail_offsets.size() == 3);
    for (double o : meta.offsets) CHECK(std::abs(o) <= 5.0);
    for (double o : meta.tail_offsets) CHECK(std::abs(o) <= 5.0);
    for (double s : meta.scales) CHECK(s > 0.0);
    for (double s : meta.tail_scales) CHECK(s > 0.0);
  }
}

TEST_CASE("two clients with a large shift realize different distortions") {
  SynthSpec spec;
  spec.num_clients = 2;
  spec.samples_per_client = 50;
  spec.num_features = 1;
  spec.num_classes = 2;
  spec.shift_magnitude = 10.0;
  spec.drift_mode = DriftMode::covariate_shift;
  spec.seed = 1;
  SynthResult res = synth_noniid_generate(spec);
  REQUIRE(res.client_meta.size() == 2);
  CHECK(res.client_meta[0].offsets[0] != res.client_meta[1].offsets[0]);
  CHECK(std::abs(res.client_meta[0].offsets[0]) <= 10.0);
  CHECK(std::abs(res.client_meta[1].offsets[0]) <= 10.0);
}

TEST_CASE("concept drift shifts class geometry per client") {
  SynthSpec spec;
  spec.num_clients = 3;
  spec.samples_per_client = 40;
  spec.num_features = 2;
  spec.num_classes = 4;
  spec.shift_magnitude = 3.0;
  spec.drift_mode = DriftMode::concept_drift;
  spec.seed = 8;
  SynthResult res = synth_noniid_generate(spec);
  for (const auto& meta : res.client_meta) {
    REQUIRE(meta.class_offsets.size() == 4);
    for (const auto& row : meta.class_offsets) {
      REQUIRE(row.size() == 2);
      for (double o : row) CHECK(std::abs(o) <= 3.0);
    }
    CHECK(meta.offsets.empty());
  }
}

TEST_CASE("synthetic metadata record carries the realized parameters") {
  SynthSpec spec;
  spec.num_clients = 2;
  spec.samples_per_client = 30;
  spec.num_features = 2;
  spec.num_classes = 2;
  spec.shift_magnitude = 1.0;
  spec.scale_magnitude = 0.5;
  spec.drift_mode = DriftMode::covariate_shift;
  spec.seed = 3;
  SynthResult res = synth_noniid_generate(spec);
  auto j = nlohmann::json::parse(synth_metadata_record(res));
  CHECK(j["num_clients"] == 2);
  CHECK(j["drift_mode"] == "covariate_shift");
  CHECK(j["tail_rate"] == 0.05);
  REQUIRE(j["clients"].size() == 2);
  CHECK(j["clients"][0]["offsets"].size() == 2);
  CHECK(j["clients"][0]["tail_offsets"].size() == 2);
  CHECK(j["clients"][0]["tail_scales"].size() == 2);
  CHECK(j["class_means"].size() == 2);
  for (std::size_t ci = 0; ci < 2; ++ci)
    for (std::size_t k = 0; k < 2; ++k)
      CHECK(j["clients"][ci]["offsets"][k].get<double>() ==
            res.client_meta[ci].offsets[k]);
}

TEST_CASE("assign_weights yields train-row fractions that sum to one") {
  std::vector<ClientPartition> clients(3);
  for (int i = 0; i < 3; ++i) {
    clients[static_cast<std::size_t>(i)].client_id = i + 1;
    clients[static_cast<std::size_t>(i)].train =
        testutil::make_dataset({static_cast<std::size_t>(10 * (i + 1))}, 2,
                               static_cast<std::uint64_t>(i));
  }
  assign_weights(clients);
  CHECK(clients[0].weight == doctest::Approx(10.0 / 60.0).epsilon(1e-12));
  CHECK(clients[1].weight == doctest::Approx(20.0 / 60.0).epsilon(1e-12));
  CHECK(clients[2].weight == doctest::Approx(30.0 / 60.0).epsilon(1e-12));
}

TEST_CASE("synth spec validation") {
  SynthSpec spec;
  spec.num_classes = 1;
  CHECK_THROWS_WITH_AS(spec.validate(), "synth: need at least 2 classes", Error);
  spec.num_classes = 3;
  spec.samples_per_client = 5;
  CHECK_THROWS_WITH_AS(spec.validate(),
                       "synth: samples_per_client must be at least 2 * num_classes",
                       Error);
  spec.samples_per_client = 50;
  spec.shift_magnitude = -1.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.shift_magnitude = 0.0;
  spec.train_fraction = 1.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.train_fraction = 0.8;
  CHECK_NOTHROW(spec.validate());
  CHECK(drift_mode_from_name("covariate_shift") == DriftMode::covariate_shift);
  CHECK(drift_mode_name(DriftMode::concept_drift) == "concept_drift");
  CHECK_THROWS_WITH_AS(drift_mode_from_name("sideways"),
                       "unknown drift mode 'sideways'", Error);
}
