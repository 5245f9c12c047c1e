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
#include <numeric>
#include <random>

#include <doctest.h>

#include "core/nn.hpp"
#include "test_util.hpp"

using namespace fedstat;

namespace {

Matrix random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix m(rows, cols);
  auto rng = make_rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (auto& x : m.v) x = dist(rng);
  return m;
}

std::vector<int> random_labels(std::size_t rows, std::size_t classes,
                               std::uint64_t seed) {
  std::vector<int> y(rows);
  auto rng = make_rng(seed);
  std::uniform_int_distribution<int> dist(0, static_cast<int>(classes) - 1);
  for (auto& v : y) v = dist(rng);
  return y;
}

// Collects every trainable scalar's address in update order, for tests that
// perturb or inspect individual parameters.
std::vector<double*> trainable_slots(ModelParams& params) {
  std::vector<double*> out;
  for (auto& g : params.groups) {
    switch (g.kind) {
      case ParamGroup::Kind::dense:
        for (auto& w : g.dense.weight.v) out.push_back(&w);
        for (auto& b : g.dense.bias) out.push_back(&b);
        break;
      case ParamGroup::Kind::layer_norm:
        for (auto& v : g.ln.gain) out.push_back(&v);
        for (auto& v : g.ln.bias) out.push_back(&v);
        break;
      case ParamGroup::Kind::batch_norm:
        for (auto& v : g.bn.gain) out.push_back(&v);
        for (auto& v : g.bn.bias) out.push_back(&v);
        break;
    }
  }
  return out;
}

ModelSpec small_spec(NormKind norm) {
  ModelSpec spec;
  spec.input_dim = 4;
  spec.hidden = {5};
  spec.norm = norm;
  spec.num_classes = 3;
  return spec;
}

}  // namespace

TEST_CASE("param_count matches the closed-form layer sums") {
  ModelSpec spec;
  spec.input_dim = 8;
  spec.hidden = {128, 128, 128};
  spec.num_classes = 6;
  spec.norm = NormKind::none;
  // 8*128+128 + 2*(128*128+128) + 128*6+6
  CHECK(param_count(spec) == 34950);
  spec.norm = NormKind::layer_norm;
  CHECK(param_count(spec) == 34950 + 3 * 2 * 128);
  spec.norm = NormKind::batch_norm;
  CHECK(param_count(spec) == 34950 + 3 * 2 * 128);

  ModelSpec flat;
  flat.input_dim = 10;
  flat.hidden = {};
  flat.num_classes = 4;
  CHECK(param_count(flat) == 10 * 4 + 4);

  ModelParams p = init_params(spec, 1);
  CHECK(trainable_slots(p).size() == param_count(spec));
}

TEST_CASE("model spec validation") {
  ModelSpec spec;
  spec.input_dim = 0;
  spec.num_classes = 3;
  CHECK_THROWS_WITH_AS(spec.validate(), "model: input_dim must be positive", Error);
  spec.input_dim = 4;
  spec.num_classes = 1;
  CHECK_THROWS_WITH_AS(spec.validate(), "model: need at least 2 classes", Error);
  spec.num_classes = 2;
  spec.hidden = {8, 0};
  CHECK_THROWS_WITH_AS(spec.validate(), "model: hidden widths must be positive", Error);
  CHECK(norm_kind_from_name("batch_norm") == NormKind::batch_norm);
  CHECK(norm_kind_name(NormKind::layer_norm) == "layer_norm");
  CHECK_THROWS_WITH_AS(norm_kind_from_name("spectral"),
                       "unknown norm kind 'spectral'", Error);
}

TEST_CASE("init_params draws Glorot weights and neutral everything else") {
  ModelSpec spec = small_spec(NormKind::batch_norm);
  ModelParams a = init_params(spec, 7);
  ModelParams b = init_params(spec, 7);
  ModelParams c = init_params(spec, 8);

  bool identical = true, differs = false;
  REQUIRE(a.groups.size() == 3);  // dense, batch_norm, dense
  for (std::size_t gi = 0; gi < a.groups.size(); ++gi) {
    if (a.groups[gi].kind != ParamGroup::Kind::dense) continue;
    const auto& d = a.groups[gi].dense;
    identical = identical && d.weight.v == b.groups[gi].dense.weight.v;
    differs = differs || d.weight.v != c.groups[gi].dense.weight.v;
    const double limit =
        std::sqrt(6.0 / static_cast<double>(d.weight.rows + d.weight.cols));
    for (double w : d.weight.v) {
      CHECK(std::abs(w) <= limit);
    }
    for (double bias : d.bias) CHECK(bias == 0.0);
  }
  CHECK(identical);
  CHECK(differs);

  const auto& bn = a.groups[1].bn;
  CHECK(std::all_of(bn.gain.begin(), bn.gain.end(), [](double v) { return v == 1.0; }));
  CHECK(std::all_of(bn.bias.begin(), bn.bias.end(), [](double v) { return v == 0.0; }));
  CHECK(std::all_of(bn.running_mean.begin(), bn.running_mean.end(),
                    [](double v) { return v == 0.0; }));
  CHECK(std::all_of(bn.running_var.begin(), bn.running_var.end(),
                    [](double v) { return v == 1.0; }));
}

TEST_CASE("forward emits probability rows") {
  for (NormKind norm : {NormKind::none, NormKind::layer_norm, NormKind::batch_norm}) {
    CAPTURE(norm_kind_name(norm));
    ModelParams params = init_params(small_spec(norm), 3);
    Matrix batch = random_batch(9, 4, 10);
    Matrix probs = forward(params, batch, Mode::train);
    REQUIRE(probs.rows == 9);
    REQUIRE(probs.cols == 3);
    for (std::size_t i = 0; i < probs.rows; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < probs.cols; ++j) {
        CHECK(probs.at(i, j) >= 0.0);
        sum += probs.at(i, j);
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("a zero-parameter model is the uniform predictor") {
  ModelSpec spec = small_spec(NormKind::none);
  ModelParams params = init_params(spec, 1);
  for (double* p : trainable_slots(params)) *p = 0.0;
  Matrix batch = random_batch(6, 4, 11);
  Matrix probs = forward(params, batch);
  for (double v : probs.v) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  std::vector<int> labels = random_labels(6, 3, 12);
  CHECK(loss_only(params, batch, labels, Mode::eval) ==
        doctest::Approx(std::log(3.0)).epsilon(1e-12));
  std::vector<int> pred = predict(params, batch);
  CHECK(std::all_of(pred.begin(), pred.end(), [](int c) { return c == 0; }));
}

TEST_CASE("softmax cross-entropy stays finite on huge logits") {
  ModelSpec spec;
  spec.input_dim = 2;
  spec.hidden = {};
  spec.num_classes = 2;
  ModelParams params = init_params(spec, 1);
  params.groups[0].dense.weight.at(0, 0) = 500.0;
  params.groups[0].dense.weight.at(1, 0) = -500.0;
  Matrix batch(1, 2);
  batch.at(0, 0) = 2.0;
  batch.at(0, 1) = 0.0;
  Matrix probs = forward(params, batch);
  CHECK(probs.at(0, 0) == 1.0);
  CHECK(probs.at(0, 1) == 0.0);
  const double loss = loss_only(params, batch, {1}, Mode::eval);
  CHECK(std::isfinite(loss));
  CHECK(loss == doctest::Approx(2000.0).epsilon(1e-9));
}

TEST_CASE("per-sample computation is invariant to duplicating a batch") {
  for (NormKind norm : {NormKind::none, NormKind::layer_norm, NormKind::batch_norm}) {
    CAPTURE(norm_kind_name(norm));
    ModelSpec spec = small_spec(norm);
    Matrix batch = random_batch(5, 4, 20);
    std::vector<int> labels = random_labels(5, 3, 21);

    Matrix doubled(10, 4);
    std::vector<int> labels2;
    for (int rep = 0; rep < 2; ++rep)
      for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 4; ++j)
          doubled.at(5 * static_cast<std::size_t>(rep) + i, j) = batch.at(i, j);
        labels2.push_back(labels[i]);
      }

    ModelParams p1 = init_params(spec, 30);
    ModelParams p2 = init_params(spec, 30);
    LossGrads g1 = loss_and_grads(p1, batch, labels);
    LossGrads g2 = loss_and_grads(p2, doubled, labels2);
    CHECK(std::abs(g1.loss - g2.loss) < 1e-12);
    auto s1 = trainable_slots(g1.grads);
    auto s2 = trainable_slots(g2.grads);
    REQUIRE(s1.size() == s2.size());
    for (std::size_t i = 0; i < s1.size(); ++i)
      CHECK(std::abs(*s1[i] - *s2[i]) < 1e-12);
  }
}

TEST_CASE("analytic gradients match finite differences") {
  for (NormKind norm : {NormKind::none, NormKind::layer_norm, NormKind::batch_norm}) {
    CAPTURE(norm_kind_name(norm));
    ModelSpec spec = small_spec(norm);
    Matrix batch = random_batch(7, 4, 40);
    std::vector<int> labels = random_labels(7, 3, 41);

    ModelParams params = init_params(spec, 50);
    ModelParams pristine = params;  // loss_and_grads moves BN running stats
    LossGrads lg = loss_and_grads(params, batch, labels);

    auto grad_slots = trainable_slots(lg.grads);
    const double h = 1e-5;
    double max_rel = 0.0;
    for (std::size_t i = 0; i < grad_slots.size(); ++i) {
      ModelParams probe = pristine;
      auto slots = trainable_slots(probe);
      const double saved = *slots[i];
      *slots[i] = saved + h;
      const double up = loss_only(probe, batch, labels, Mode::train);
      *slots[i] = saved - h;
      const double down = loss_only(probe, batch, labels, Mode::train);
      const double fd = (up - down) / (2.0 * h);
      const double an = *grad_slots[i];
      const double rel =
          std::abs(an - fd) / std::max(std::max(std::abs(an), std::abs(fd)), 1e-6);
      max_rel = std::max(max_rel, rel);
    }
    CHECK(max_rel < 1e-4);
  }
}

TEST_CASE("layer norm output is insensitive to the input scale") {
  ModelSpec spec = small_spec(NormKind::layer_norm);
  ModelParams params = init_params(spec, 60);
  Matrix batch = random_batch(6, 4, 61);
  // The epsilon inside the norm denominator bounds how exact the invariance
  // can be; values of a few units keep its share under the tolerance.
  for (auto& x : batch.v) x *= 10.0;
  Matrix scaled = batch;
  for (auto& x : scaled.v) x *= 1000.0;

  // The first dense layer has zero bias at init, so scaling the input scales
  // its output; relu commutes with positive scaling and the row norm then
  // removes the factor again.
  ForwardCache c1, c2;
  forward(params, batch, Mode::train, &c1);
  forward(params, scaled, Mode::train, &c2);
  const Matrix& n1 = c1.hidden[0].xhat;
  const Matrix& n2 = c2.hidden[0].xhat;
  REQUIRE(n1.v.size() == n2.v.size());
  for (std::size_t i = 0; i < n1.v.size(); ++i)
    CHECK(std::abs(n1.v[i] - n2.v[i]) < 1e-6);
}

TEST_CASE("batch norm train mode needs two rows and eval mode has no side effects") {
  ModelSpec spec = small_spec(NormKind::batch_norm);
  ModelParams params = init_params(spec, 70);
  Matrix one = random_batch(1, 4, 71);
  CHECK_THROWS_WITH_AS(forward(params, one, Mode::train),
                       "batch_norm needs batches of at least 2 rows in train mode",
                       Error);
  CHECK_NOTHROW(forward(params, one, Mode::eval));

  Matrix two = random_batch(2, 4, 72);
  ModelParams before = params;
  forward(params, two, Mode::eval);
  CHECK(params.groups[1].bn.running_mean == before.groups[1].bn.running_mean);
  CHECK(params.groups[1].bn.running_var == before.groups[1].bn.running_var);

  forward(params, two, Mode::train);
  CHECK(params.groups[1].bn.running_mean != before.groups[1].bn.running_mean);
}

TEST_CASE("batch norm folds batch moments into the running statistics") {
  ModelSpec spec = small_spec(NormKind::batch_norm);
  ModelParams params = init_params(spec, 80);
  Matrix batch = random_batch(8, 4, 81);

  // Recompute the dense pre-activation by hand to know the batch moments.
  const auto& d = params.groups[0].dense;
  Matrix z(8, 5);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t o = 0; o < 5; ++o) {
      double acc = d.bias[o];
      for (std::size_t j = 0; j < 4; ++j) acc += d.weight.at(o, j) * batch.at(i, j);
      z.at(i, o) = acc;
    }
  std::vector<double> mean(5, 0.0), var(5, 0.0);
  for (std::size_t o = 0; o < 5; ++o) {
    for (std::size_t i = 0; i < 8; ++i) mean[o] += z.at(i, o);
    mean[o] /= 8.0;
    for (std::size_t i = 0; i < 8; ++i) {
      const double dlt = z.at(i, o) - mean[o];
      var[o] += dlt * dlt;
    }
    var[o] /= 8.0;
  }

  std::vector<double> rm0 = params.groups[1].bn.running_mean;
  std::vector<double> rv0 = params.groups[1].bn.running_var;
  forward(params, batch, Mode::train);
  const auto& bn = params.groups[1].bn;
  for (std::size_t o = 0; o < 5; ++o) {
    CHECK(bn.running_mean[o] ==
          doctest::Approx(0.9 * rm0[o] + 0.1 * mean[o]).epsilon(1e-12));
    CHECK(bn.running_var[o] ==
          doctest::Approx(0.9 * rv0[o] + 0.1 * var[o]).epsilon(1e-12));
  }
}

TEST_CASE("adam updates") {
  ModelSpec spec = small_spec(NormKind::none);
  ModelParams params = init_params(spec, 90);
  AdamState state = make_adam_state(spec);
  AdamConfig cfg;
  cfg.learning_rate = 0.01;

  SUBCASE("zero gradients leave the parameters unchanged") {
    ModelParams zero = init_params(spec, 90);
    for (double* p : trainable_slots(zero)) *p = 0.0;
    ModelParams before = params;
    adam_step(params, zero, state, cfg);
    CHECK(state.step == 1);
    auto sa = trainable_slots(params);
    auto sb = trainable_slots(before);
    for (std::size_t i = 0; i < sa.size(); ++i) CHECK(*sa[i] == *sb[i]);
  }

  SUBCASE("the first step moves each parameter by about lr against the gradient") {
    ModelParams grads = init_params(spec, 91);
    auto gs = trainable_slots(grads);
    auto rng = make_rng(92);
    std::uniform_real_distribution<double> mag(0.1, 2.0);
    std::bernoulli_distribution sign(0.5);
    for (double* g : gs) *g = (sign(rng) ? 1.0 : -1.0) * mag(rng);

    ModelParams before = params;
    adam_step(params, grads, state, cfg);
    auto pa = trainable_slots(params);
    auto pb = trainable_slots(before);
    // With bias correction the first update is lr * g / (|g| + eps'), i.e.
    // lr * sign(g) up to a relative eps.
    for (std::size_t i = 0; i < pa.size(); ++i) {
      const double delta = *pa[i] - *pb[i];
      const double expect = -cfg.learning_rate * (*gs[i] > 0 ? 1.0 : -1.0);
      CHECK(delta == doctest::Approx(expect).epsilon(1e-6));
    }
  }

  SUBCASE("steps are deterministic and counted") {
    ModelParams grads = init_params(spec, 93);
    ModelParams p2 = init_params(spec, 90);
    AdamState s2 = make_adam_state(spec);
    for (int it = 0; it < 5; ++it) {
      adam_step(params, grads, state, cfg);
      adam_step(p2, grads, s2, cfg);
    }
    CHECK(state.step == 5);
    auto sa = trainable_slots(params);
    auto sb = trainable_slots(p2);
    for (std::size_t i = 0; i < sa.size(); ++i) CHECK(*sa[i] == *sb[i]);
  }

  SUBCASE("a state sized for another model is rejected") {
    ModelParams grads = init_params(spec, 94);
    AdamState wrong = make_adam_state(small_spec(NormKind::batch_norm));
    CHECK_THROWS_WITH_AS(adam_step(params, grads, wrong, cfg),
                         "adam_step: optimizer state size does not match model", Error);
  }
}

TEST_CASE("training drives a separable toy problem to full accuracy") {
  // Two Gaussian blobs far apart, 25 samples each.
  auto ds = testutil::make_dataset({25, 25}, 2, 500);
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (std::size_t j = 0; j < 2; ++j)
      ds.features.at(i, j) += ds.labels[i] == 0 ? -4.0 : 4.0;

  ModelSpec spec;
  spec.input_dim = 2;
  spec.hidden = {8};
  spec.num_classes = 2;
  ModelParams params = init_params(spec, 501);
  AdamState state = make_adam_state(spec);
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  for (int it = 0; it < 200; ++it) {
    LossGrads lg = loss_and_grads(params, ds.features, ds.labels);
    adam_step(params, lg.grads, state, cfg);
  }
  std::vector<int> pred = predict(params, ds.features);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == ds.labels[i]) ++hits;
  CHECK(hits == pred.size());
}

TEST_CASE("model records round trip bit for bit") {
  for (NormKind norm : {NormKind::none, NormKind::layer_norm, NormKind::batch_norm}) {
    CAPTURE(norm_kind_name(norm));
    ModelSpec spec = small_spec(norm);
    ModelParams params = init_params(spec, 600);
    // Move the running stats off their defaults so they are exercised too.
    if (norm == NormKind::batch_norm)
      forward(params, random_batch(6, 4, 601), Mode::train);

    std::string rec = to_record(params);
    ModelParams back = model_from_record(rec, "mem");
    REQUIRE(back.groups.size() == params.groups.size());
    auto sa = trainable_slots(params);
    auto sb = trainable_slots(back);
    REQUIRE(sa.size() == sb.size());
    for (std::size_t i = 0; i < sa.size(); ++i) CHECK(*sa[i] == *sb[i]);
    if (norm == NormKind::batch_norm) {
      CHECK(back.groups[1].bn.running_mean == params.groups[1].bn.running_mean);
      CHECK(back.groups[1].bn.running_var == params.groups[1].bn.running_var);
    }
    CHECK(to_record(back) == rec);
  }
}

TEST_CASE("model record parse errors") {
  CHECK_THROWS_WITH_AS(model_from_record("{}", "m.json"),
                       "m.json: unsupported or missing model record version", Error);
  ModelParams params = init_params(small_spec(NormKind::none), 1);
  std::string rec = to_record(params);
  std::string tampered = rec;
  auto pos = tampered.find("\"dense\"");
  REQUIRE(pos != std::string::npos);
  tampered.replace(pos, 7, "\"blurp\"");
  CHECK_THROWS_WITH_AS(model_from_record(tampered, "m.json"),
                       doctest::Contains("unknown parameter group kind"), Error);
}

TEST_CASE("structure comparison and label validation errors") {
  ModelParams a = init_params(small_spec(NormKind::none), 1);
  ModelParams b = init_params(small_spec(NormKind::batch_norm), 1);
  CHECK_NOTHROW(check_same_model_structure(a, a, "test"));
  CHECK_THROWS_WITH_AS(check_same_model_structure(a, b, "test"),
                       "test: model structures differ", Error);

  Matrix batch = random_batch(3, 4, 700);
  CHECK_THROWS_WITH_AS(loss_only(a, batch, {0, 1}, Mode::eval),
                       "loss: label count does not match batch rows", Error);
  CHECK_THROWS_WITH_AS(loss_only(a, batch, {0, 1, 3}, Mode::eval),
                       "loss: label out of range", Error);
  Matrix wide = random_batch(3, 5, 701);
  CHECK_THROWS_WITH_AS(forward(a, wide),
                       "forward: batch width does not match model input dimension",
                       Error);
  Matrix empty(0, 4);
  CHECK_THROWS_WITH_AS(forward(a, empty), "forward: empty batch", Error);
}
