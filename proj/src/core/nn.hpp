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

// Per-layer normalization variant of the classifier. The hidden block is
//   none:       dense -> relu
//   layer_norm: dense -> relu -> layer norm
//   batch_norm: dense -> batch norm -> relu
// followed by a dense output layer with softmax.
enum class NormKind { none, layer_norm, batch_norm };

std::string norm_kind_name(NormKind k);
NormKind norm_kind_from_name(const std::string& name);

struct ModelSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;  // may be empty (linear softmax model)
  NormKind norm = NormKind::none;
  std::size_t num_classes = 2;

  void validate() const;
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

struct DenseParams {
  Matrix weight;             // out x in, row-major
  std::vector<double> bias;  // out
};

struct LayerNormParams {
  std::vector<double> gain;
  std::vector<double> bias;
};

struct BatchNormParams {
  std::vector<double> gain;
  std::vector<double> bias;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = kBatchNormMomentum;
};

// Tagged parameter group. Groups appear in network order: for each hidden
// layer a dense group followed by its norm group (when the spec has one),
// then the output dense group.
struct ParamGroup {
  enum class Kind { dense, layer_norm, batch_norm };
  Kind kind = Kind::dense;
  DenseParams dense;
  LayerNormParams ln;
  BatchNormParams bn;
};

struct ModelParams {
  ModelSpec spec;
  std::vector<ParamGroup> groups;
};

// Number of trainable scalars (dense weights and biases, norm gains and
// biases; batch-norm running statistics are state, not parameters).
std::size_t param_count(const ModelSpec& spec);

// Glorot-uniform dense weights (limit sqrt(6 / (fan_in + fan_out))), zero
// biases, unit gains, zero/unit running statistics. Same seed, same params.
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);

enum class Mode { train, eval };

struct HiddenLayerCache {
  Matrix input;
  Matrix z;         // dense output
  Matrix relu_out;  // layer_norm: input of the norm op
  Matrix norm_out;  // batch_norm: output of the norm op (relu input)
  Matrix xhat;
  std::vector<double> inv_std;  // layer_norm: per row; batch_norm: per feature
};

struct ForwardCache {
  std::vector<HiddenLayerCache> hidden;
  Matrix output_input;
  Matrix probs;
};

// Softmax class probabilities for a batch (rows sum to 1; softmax is
// computed with the max-shift trick). Train mode uses batch statistics in
// batch-norm layers and folds them into the running statistics; eval mode
// reads the running statistics and leaves params untouched.
Matrix forward(ModelParams& params, const Matrix& batch, Mode mode,
               ForwardCache* cache = nullptr);
Matrix forward(const ModelParams& params, const Matrix& batch);  // eval only

// Mean cross-entropy of a labeled batch without any side effects, in either
// mode. Used by gradient checks.
double loss_only(const ModelParams& params, const Matrix& batch,
                 const std::vector<int>& labels, Mode mode);

struct LossGrads {
  double loss = 0.0;
  ModelParams grads;  // same shape; running statistics slots stay zero
};

// Train-mode forward plus exact backward pass, including the paths through
// batch statistics of norm layers. Updates batch-norm running statistics as
// a side effect, like any training step does.
LossGrads loss_and_grads(ModelParams& params, const Matrix& batch,
                         const std::vector<int>& labels);

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::int64_t step = 0;
  std::vector<double> m;  // first-moment accumulator over trainable scalars
  std::vector<double> v;  // second-moment accumulator
};

AdamState make_adam_state(const ModelSpec& spec);

// One bias-corrected Adam update over all trainable scalars.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const AdamConfig& cfg);

// Argmax class per row; ties resolve to the lowest class index.
std::vector<int> predict(const ModelParams& params, const Matrix& batch);

// Throws a data error when two models differ in group kinds or shapes.
void check_same_model_structure(const ModelParams& a, const ModelParams& b,
                                const char* what);

std::string to_record(const ModelParams& params);
ModelParams model_from_record(const std::string& text, const std::string& source);
ModelParams read_model(const std::string& path);
void write_model(const ModelParams& params, const std::string& path);

}  // namespace fedstat
