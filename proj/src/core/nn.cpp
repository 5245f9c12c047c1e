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

#include "core/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "core/record.hpp"

namespace fedstat {

namespace {

// z = x * W^T + b. W rows are output units, so both dot-product operands
// are contiguous.
Matrix dense_forward(const Matrix& x, const DenseParams& p) {
  const std::size_t out = p.weight.rows, in = p.weight.cols;
  Matrix z(x.rows, out);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* xi = x.row(i);
    double* zi = z.row(i);
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = p.weight.row(o);
      double acc = p.bias[o];
      for (std::size_t j = 0; j < in; ++j) acc += xi[j] * wo[j];
      zi[o] = acc;
    }
  }
  return z;
}

// Accumulates dW, db and returns dx for z = x * W^T + b given dz.
Matrix dense_backward(const Matrix& x, const DenseParams& p, const Matrix& dz,
                      DenseParams* grad) {
  const std::size_t out = p.weight.rows, in = p.weight.cols;
  grad->weight = Matrix(out, in);
  grad->bias.assign(out, 0.0);
  Matrix dx(x.rows, in);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* xi = x.row(i);
    const double* dzi = dz.row(i);
    double* dxi = dx.row(i);
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dzi[o];
      if (g == 0.0) continue;
      grad->bias[o] += g;
      double* dwo = grad->weight.row(o);
      const double* wo = p.weight.row(o);
      for (std::size_t j = 0; j < in; ++j) {
        dwo[j] += g * xi[j];
        dxi[j] += g * wo[j];
      }
    }
  }
  return dx;
}

Matrix relu(const Matrix& z) {
  Matrix a = z;
  for (double& x : a.v) x = x > 0.0 ? x : 0.0;
  return a;
}

// Builds the group skeleton (shapes only) for a spec; shared by init,
// deserialization checks and the Adam cursor.
std::vector<ParamGroup> make_skeleton(const ModelSpec& spec) {
  std::vector<ParamGroup> groups;
  std::size_t in = spec.input_dim;
  for (std::size_t h : spec.hidden) {
    ParamGroup dense;
    dense.kind = ParamGroup::Kind::dense;
    dense.dense.weight = Matrix(h, in);
    dense.dense.bias.assign(h, 0.0);
    groups.push_back(std::move(dense));
    if (spec.norm == NormKind::layer_norm) {
      ParamGroup ln;
      ln.kind = ParamGroup::Kind::layer_norm;
      ln.ln.gain.assign(h, 1.0);
      ln.ln.bias.assign(h, 0.0);
      groups.push_back(std::move(ln));
    } else if (spec.norm == NormKind::batch_norm) {
      ParamGroup bn;
      bn.kind = ParamGroup::Kind::batch_norm;
      bn.bn.gain.assign(h, 1.0);
      bn.bn.bias.assign(h, 0.0);
      bn.bn.running_mean.assign(h, 0.0);
      bn.bn.running_var.assign(h, 1.0);
      groups.push_back(std::move(bn));
    }
    in = h;
  }
  ParamGroup out;
  out.kind = ParamGroup::Kind::dense;
  out.dense.weight = Matrix(spec.num_classes, in);
  out.dense.bias.assign(spec.num_classes, 0.0);
  groups.push_back(std::move(out));
  return groups;
}

// Softmax rows in place with the max-shift trick. When labels are given the
// mean cross entropy is computed in log-sum-exp form, log(sum) - (z_y - max),
// which stays finite even when the true-class probability underflows.
double softmax_rows(Matrix* logits, const std::vector<int>* labels) {
  double loss = 0.0;
  for (std::size_t i = 0; i < logits->rows; ++i) {
    double* row = logits->row(i);
    double mx = row[0];
    for (std::size_t c = 1; c < logits->cols; ++c) mx = std::max(mx, row[c]);
    double shifted_y = 0.0;
    if (labels) shifted_y = row[static_cast<std::size_t>((*labels)[i])] - mx;
    double sum = 0.0;
    for (std::size_t c = 0; c < logits->cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    if (labels) loss += std::log(sum) - shifted_y;
    for (std::size_t c = 0; c < logits->cols; ++c) row[c] /= sum;
  }
  return labels && logits->rows > 0 ? loss / static_cast<double>(logits->rows) : 0.0;
}

struct BnBatchStats {
  std::vector<double> mean;
  std::vector<double> var;
};

// Full forward pass. When `updates` is non-null (train mode callers that own
// the params) the freshly computed batch statistics of every batch-norm
// group are returned so the caller can fold them into the running values.
// With labels, the mean cross entropy lands in *loss.
Matrix forward_impl(const ModelParams& params, const Matrix& x, Mode mode,
                    ForwardCache* cache, std::vector<BnBatchStats>* updates,
                    const std::vector<int>* labels = nullptr,
                    double* loss = nullptr) {
  params.spec.validate();
  if (x.cols != params.spec.input_dim)
    throw_data("forward: batch width does not match model input dimension");
  if (x.rows == 0) throw_data("forward: empty batch");

  const ModelSpec& spec = params.spec;
  if (cache) {
    cache->hidden.clear();
    cache->hidden.resize(spec.hidden.size());
  }

  Matrix a = x;
  std::size_t g = 0;
  for (std::size_t layer = 0; layer < spec.hidden.size(); ++layer) {
    const ParamGroup& dense = params.groups[g++];
    Matrix z = dense_forward(a, dense.dense);
    HiddenLayerCache* hc = cache ? &cache->hidden[layer] : nullptr;
    if (hc) {
      hc->input = std::move(a);
      hc->z = z;
    }

    const std::size_t h = z.cols;
    const std::size_t b = z.rows;
    switch (spec.norm) {
      case NormKind::none: {
        a = relu(z);
        break;
      }
      case NormKind::layer_norm: {
        const ParamGroup& ln = params.groups[g++];
        Matrix r = relu(z);
        Matrix out(b, h);
        Matrix xhat(b, h);
        std::vector<double> inv_std(b);
        for (std::size_t i = 0; i < b; ++i) {
          const double* ri = r.row(i);
          double mean = 0.0;
          for (std::size_t j = 0; j < h; ++j) mean += ri[j];
          mean /= static_cast<double>(h);
          double var = 0.0;
          for (std::size_t j = 0; j < h; ++j) {
            const double d = ri[j] - mean;
            var += d * d;
          }
          var /= static_cast<double>(h);
          const double is = 1.0 / std::sqrt(var + kLayerNormEps);
          inv_std[i] = is;
          double* xh = xhat.row(i);
          double* oi = out.row(i);
          for (std::size_t j = 0; j < h; ++j) {
            xh[j] = (ri[j] - mean) * is;
            oi[j] = ln.ln.gain[j] * xh[j] + ln.ln.bias[j];
          }
        }
        if (hc) {
          hc->relu_out = std::move(r);
          hc->xhat = std::move(xhat);
          hc->inv_std = std::move(inv_std);
        }
        a = std::move(out);
        break;
      }
      case NormKind::batch_norm: {
        const ParamGroup& bn = params.groups[g++];
        std::vector<double> mean(h), var(h), inv_std(h);
        if (mode == Mode::train) {
          if (b < 2)
            throw_config("batch_norm needs batches of at least 2 rows in train mode");
          for (std::size_t j = 0; j < h; ++j) {
            double m = 0.0;
            for (std::size_t i = 0; i < b; ++i) m += z.at(i, j);
            m /= static_cast<double>(b);
            double v = 0.0;
            for (std::size_t i = 0; i < b; ++i) {
              const double d = z.at(i, j) - m;
              v += d * d;
            }
            v /= static_cast<double>(b);
            mean[j] = m;
            var[j] = v;
          }
          if (updates) {
            BnBatchStats st;
            st.mean = mean;
            st.var = var;
            updates->push_back(std::move(st));
          }
        } else {
          mean = bn.bn.running_mean;
          var = bn.bn.running_var;
        }
        for (std::size_t j = 0; j < h; ++j)
          inv_std[j] = 1.0 / std::sqrt(var[j] + kBatchNormEps);

        Matrix xhat(b, h);
        Matrix y(b, h);
        for (std::size_t i = 0; i < b; ++i) {
          const double* zi = z.row(i);
          double* xh = xhat.row(i);
          double* yi = y.row(i);
          for (std::size_t j = 0; j < h; ++j) {
            xh[j] = (zi[j] - mean[j]) * inv_std[j];
            yi[j] = bn.bn.gain[j] * xh[j] + bn.bn.bias[j];
          }
        }
        if (hc) {
          hc->xhat = std::move(xhat);
          hc->inv_std = inv_std;
          hc->norm_out = y;
        }
        a = relu(y);
        break;
      }
    }
  }

  const ParamGroup& out_dense = params.groups[g];
  if (cache) cache->output_input = a;
  Matrix logits = dense_forward(a, out_dense.dense);
  const double mean_ce = softmax_rows(&logits, labels);
  if (loss) *loss = mean_ce;
  if (cache) cache->probs = logits;
  return logits;
}

void apply_bn_updates(ModelParams* params, const std::vector<BnBatchStats>& updates) {
  std::size_t u = 0;
  for (auto& group : params->groups) {
    if (group.kind != ParamGroup::Kind::batch_norm) continue;
    const BnBatchStats& st = updates[u++];
    const double mom = group.bn.momentum;
    for (std::size_t j = 0; j < group.bn.running_mean.size(); ++j) {
      group.bn.running_mean[j] = (1.0 - mom) * group.bn.running_mean[j] + mom * st.mean[j];
      group.bn.running_var[j] = (1.0 - mom) * group.bn.running_var[j] + mom * st.var[j];
    }
  }
}

template <typename Fn>
void for_each_trainable(ModelParams& params, Fn&& fn) {
  for (auto& group : params.groups) {
    switch (group.kind) {
      case ParamGroup::Kind::dense:
        for (double& x : group.dense.weight.v) fn(x);
        for (double& x : group.dense.bias) fn(x);
        break;
      case ParamGroup::Kind::layer_norm:
        for (double& x : group.ln.gain) fn(x);
        for (double& x : group.ln.bias) fn(x);
        break;
      case ParamGroup::Kind::batch_norm:
        for (double& x : group.bn.gain) fn(x);
        for (double& x : group.bn.bias) fn(x);
        break;
    }
  }
}

}  // namespace

std::string norm_kind_name(NormKind k) {
  switch (k) {
    case NormKind::none: return "none";
    case NormKind::layer_norm: return "layer_norm";
    case NormKind::batch_norm: return "batch_norm";
  }
  return "none";
}

NormKind norm_kind_from_name(const std::string& name) {
  if (name == "none") return NormKind::none;
  if (name == "layer_norm") return NormKind::layer_norm;
  if (name == "batch_norm") return NormKind::batch_norm;
  throw_config("unknown norm kind '" + name + "'");
}

void ModelSpec::validate() const {
  if (input_dim == 0) throw_config("model: input_dim must be positive");
  if (num_classes < 2) throw_config("model: need at least 2 classes");
  for (std::size_t h : hidden) {
    if (h == 0) throw_config("model: hidden widths must be positive");
  }
}

std::size_t param_count(const ModelSpec& spec) {
  spec.validate();
  std::size_t count = 0;
  std::size_t in = spec.input_dim;
  for (std::size_t h : spec.hidden) {
    count += h * in + h;
    if (spec.norm != NormKind::none) count += 2 * h;
    in = h;
  }
  count += spec.num_classes * in + spec.num_classes;
  return count;
}

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  ModelParams params;
  params.spec = spec;
  params.groups = make_skeleton(spec);

  auto rng = make_rng(seed);
  for (auto& group : params.groups) {
    if (group.kind != ParamGroup::Kind::dense) continue;
    Matrix& w = group.dense.weight;
    const double limit =
        std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
    std::uniform_real_distribution<double> draw(-limit, limit);
    for (double& x : w.v) x = draw(rng);
  }
  return params;
}

Matrix forward(ModelParams& params, const Matrix& batch, Mode mode,
               ForwardCache* cache) {
  if (mode == Mode::eval) return forward_impl(params, batch, mode, cache, nullptr);
  std::vector<BnBatchStats> updates;
  Matrix probs = forward_impl(params, batch, mode, cache, &updates);
  apply_bn_updates(&params, updates);
  return probs;
}

Matrix forward(const ModelParams& params, const Matrix& batch) {
  return forward_impl(params, batch, Mode::eval, nullptr, nullptr);
}

double loss_only(const ModelParams& params, const Matrix& batch,
                 const std::vector<int>& labels, Mode mode) {
  if (labels.size() != batch.rows)
    throw_data("loss: label count does not match batch rows");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= params.spec.num_classes)
      throw_data("loss: label out of range");
  }
  double loss = 0.0;
  forward_impl(params, batch, mode, nullptr, nullptr, &labels, &loss);
  return loss;
}

LossGrads loss_and_grads(ModelParams& params, const Matrix& batch,
                         const std::vector<int>& labels) {
  if (labels.size() != batch.rows)
    throw_data("loss_and_grads: label count does not match batch rows");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= params.spec.num_classes)
      throw_data("loss_and_grads: label out of range");
  }

  ForwardCache cache;
  std::vector<BnBatchStats> updates;
  double loss = 0.0;
  forward_impl(params, batch, Mode::train, &cache, &updates, &labels, &loss);

  LossGrads result;
  result.grads.spec = params.spec;
  result.grads.groups = make_skeleton(params.spec);
  for (auto& group : result.grads.groups) {
    // Skeleton initializes gains to 1 and running stats to (0, 1); gradient
    // holders must start at zero everywhere.
    if (group.kind == ParamGroup::Kind::layer_norm) {
      std::fill(group.ln.gain.begin(), group.ln.gain.end(), 0.0);
    } else if (group.kind == ParamGroup::Kind::batch_norm) {
      std::fill(group.bn.gain.begin(), group.bn.gain.end(), 0.0);
      std::fill(group.bn.running_var.begin(), group.bn.running_var.end(), 0.0);
    }
  }

  const std::size_t b = batch.rows;
  Matrix dlogits = cache.probs;
  for (std::size_t i = 0; i < b; ++i) {
    dlogits.at(i, static_cast<std::size_t>(labels[i])) -= 1.0;
  }
  for (double& x : dlogits.v) x /= static_cast<double>(b);
  result.loss = loss;

  const ModelSpec& spec = params.spec;
  const std::size_t out_group = params.groups.size() - 1;
  Matrix da = dense_backward(cache.output_input, params.groups[out_group].dense,
                             dlogits, &result.grads.groups[out_group].dense);

  std::size_t g = out_group;
  for (std::size_t layer = spec.hidden.size(); layer-- > 0;) {
    const HiddenLayerCache& hc = cache.hidden[layer];
    const std::size_t h = hc.z.cols;
    Matrix dz;
    switch (spec.norm) {
      case NormKind::none: {
        g -= 1;
        dz = da;
        for (std::size_t i = 0; i < dz.rows; ++i) {
          double* dzi = dz.row(i);
          const double* zi = hc.z.row(i);
          for (std::size_t j = 0; j < h; ++j) {
            if (zi[j] <= 0.0) dzi[j] = 0.0;
          }
        }
        break;
      }
      case NormKind::layer_norm: {
        g -= 1;
        const ParamGroup& ln = params.groups[g];
        ParamGroup& lng = result.grads.groups[g];
        // Backward through y = gain * xhat + bias with per-row statistics
        // over the feature axis.
        Matrix dr(b, h);
        for (std::size_t i = 0; i < b; ++i) {
          const double* dyi = da.row(i);
          const double* xh = hc.xhat.row(i);
          const double is = hc.inv_std[i];
          double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
          for (std::size_t j = 0; j < h; ++j) {
            lng.ln.gain[j] += dyi[j] * xh[j];
            lng.ln.bias[j] += dyi[j];
            const double dxh = dyi[j] * ln.ln.gain[j];
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xh[j];
          }
          const double inv_h = 1.0 / static_cast<double>(h);
          double* dri = dr.row(i);
          for (std::size_t j = 0; j < h; ++j) {
            const double dxh = dyi[j] * ln.ln.gain[j];
            dri[j] = is * (dxh - inv_h * sum_dxhat - xh[j] * inv_h * sum_dxhat_xhat);
          }
        }
        g -= 1;
        dz = dr;
        for (std::size_t i = 0; i < dz.rows; ++i) {
          double* dzi = dz.row(i);
          const double* zi = hc.z.row(i);
          for (std::size_t j = 0; j < h; ++j) {
            if (zi[j] <= 0.0) dzi[j] = 0.0;
          }
        }
        break;
      }
      case NormKind::batch_norm: {
        g -= 1;
        const ParamGroup& bn = params.groups[g];
        ParamGroup& bng = result.grads.groups[g];
        // Through the relu that follows the norm.
        Matrix dy = da;
        for (std::size_t i = 0; i < b; ++i) {
          double* dyi = dy.row(i);
          const double* yi = hc.norm_out.row(i);
          for (std::size_t j = 0; j < h; ++j) {
            if (yi[j] <= 0.0) dyi[j] = 0.0;
          }
        }
        // Backward through y = gain * xhat + bias with per-feature batch
        // statistics.
        dz = Matrix(b, h);
        const double inv_b = 1.0 / static_cast<double>(b);
        for (std::size_t j = 0; j < h; ++j) {
          double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
          for (std::size_t i = 0; i < b; ++i) {
            const double dyv = dy.at(i, j);
            const double xh = hc.xhat.at(i, j);
            bng.bn.gain[j] += dyv * xh;
            bng.bn.bias[j] += dyv;
            const double dxh = dyv * bn.bn.gain[j];
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xh;
          }
          const double is = hc.inv_std[j];
          for (std::size_t i = 0; i < b; ++i) {
            const double dxh = dy.at(i, j) * bn.bn.gain[j];
            dz.at(i, j) =
                is * (dxh - inv_b * sum_dxhat - hc.xhat.at(i, j) * inv_b * sum_dxhat_xhat);
          }
        }
        g -= 1;  // step past the norm group to the dense group below it
        break;
      }
    }
    da = dense_backward(hc.input, params.groups[g].dense, dz,
                        &result.grads.groups[g].dense);
  }

  apply_bn_updates(&params, updates);
  return result;
}

AdamState make_adam_state(const ModelSpec& spec) {
  AdamState state;
  state.m.assign(param_count(spec), 0.0);
  state.v.assign(param_count(spec), 0.0);
  return state;
}

void check_same_model_structure(const ModelParams& a, const ModelParams& b,
                                const char* what) {
  bool ok = a.groups.size() == b.groups.size();
  for (std::size_t g = 0; ok && g < a.groups.size(); ++g) {
    const ParamGroup& ga = a.groups[g];
    const ParamGroup& gb = b.groups[g];
    ok = ga.kind == gb.kind && ga.dense.weight.same_shape(gb.dense.weight) &&
         ga.dense.bias.size() == gb.dense.bias.size() &&
         ga.ln.gain.size() == gb.ln.gain.size() &&
         ga.bn.gain.size() == gb.bn.gain.size();
  }
  if (!ok) throw_data(std::string(what) + ": model structures differ");
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const AdamConfig& cfg) {
  check_same_model_structure(params, grads, "adam_step");
  if (state.m.size() != param_count(params.spec))
    throw_data("adam_step: optimizer state size does not match model");

  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  std::size_t cursor = 0;
  // Walk params and grads in lockstep; the flat cursor order is the group
  // order, which is stable for a given spec.
  std::vector<const double*> grad_ptrs;
  grad_ptrs.reserve(state.m.size());
  for_each_trainable(const_cast<ModelParams&>(grads),
                     [&](double& x) { grad_ptrs.push_back(&x); });
  for_each_trainable(params, [&](double& p) {
    const double g = *grad_ptrs[cursor];
    double& m = state.m[cursor];
    double& v = state.v[cursor];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
    const double mhat = m / bc1;
    const double vhat = v / bc2;
    p -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
    ++cursor;
  });
}

std::vector<int> predict(const ModelParams& params, const Matrix& batch) {
  Matrix probs = forward(params, batch);
  std::vector<int> labels(probs.rows);
  for (std::size_t i = 0; i < probs.rows; ++i) {
    const double* row = probs.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.cols; ++c) {
      if (row[c] > row[best]) best = c;
    }
    labels[i] = static_cast<int>(best);
  }
  return labels;
}

std::string to_record(const ModelParams& params) {
  using record::fmt_double;
  using record::fmt_double_array;
  std::string out = "{\"version\":1";
  out += ",\"input_dim\":" + std::to_string(params.spec.input_dim);
  out += ",\"hidden\":[";
  for (std::size_t i = 0; i < params.spec.hidden.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(params.spec.hidden[i]);
  }
  out += "],\"norm\":\"" + norm_kind_name(params.spec.norm) + "\"";
  out += ",\"num_classes\":" + std::to_string(params.spec.num_classes);
  out += ",\"groups\":[";
  for (std::size_t g = 0; g < params.groups.size(); ++g) {
    const ParamGroup& group = params.groups[g];
    if (g > 0) out += ",";
    switch (group.kind) {
      case ParamGroup::Kind::dense:
        out += "{\"kind\":\"dense\"";
        out += ",\"rows\":" + std::to_string(group.dense.weight.rows);
        out += ",\"cols\":" + std::to_string(group.dense.weight.cols);
        out += ",\"weight\":" + fmt_double_array(group.dense.weight.v);
        out += ",\"bias\":" + fmt_double_array(group.dense.bias);
        break;
      case ParamGroup::Kind::layer_norm:
        out += "{\"kind\":\"layer_norm\"";
        out += ",\"gain\":" + fmt_double_array(group.ln.gain);
        out += ",\"bias\":" + fmt_double_array(group.ln.bias);
        break;
      case ParamGroup::Kind::batch_norm:
        out += "{\"kind\":\"batch_norm\"";
        out += ",\"gain\":" + fmt_double_array(group.bn.gain);
        out += ",\"bias\":" + fmt_double_array(group.bn.bias);
        out += ",\"running_mean\":" + fmt_double_array(group.bn.running_mean);
        out += ",\"running_var\":" + fmt_double_array(group.bn.running_var);
        out += ",\"momentum\":" + fmt_double(group.bn.momentum);
        break;
    }
    out += "}";
  }
  out += "]}";
  return out;
}

ModelParams model_from_record(const std::string& text, const std::string& source) {
  nlohmann::json j = record::parse(text, source);
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw_data(source + ": unsupported or missing model record version");

  ModelParams params;
  params.spec.input_dim = j.at("input_dim").get<std::size_t>();
  params.spec.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  params.spec.norm = norm_kind_from_name(j.at("norm").get<std::string>());
  params.spec.num_classes = j.at("num_classes").get<std::size_t>();
  params.spec.validate();

  ModelParams expected;
  expected.spec = params.spec;
  expected.groups = make_skeleton(params.spec);

  const auto& groups = j.at("groups");
  for (const auto& gj : groups) {
    ParamGroup group;
    const std::string kind = gj.at("kind").get<std::string>();
    if (kind == "dense") {
      group.kind = ParamGroup::Kind::dense;
      group.dense.weight.rows = gj.at("rows").get<std::size_t>();
      group.dense.weight.cols = gj.at("cols").get<std::size_t>();
      group.dense.weight.v = gj.at("weight").get<std::vector<double>>();
      group.dense.bias = gj.at("bias").get<std::vector<double>>();
      if (group.dense.weight.v.size() != group.dense.weight.rows * group.dense.weight.cols)
        throw_data(source + ": dense group value count does not match its shape");
    } else if (kind == "layer_norm") {
      group.kind = ParamGroup::Kind::layer_norm;
      group.ln.gain = gj.at("gain").get<std::vector<double>>();
      group.ln.bias = gj.at("bias").get<std::vector<double>>();
    } else if (kind == "batch_norm") {
      group.kind = ParamGroup::Kind::batch_norm;
      group.bn.gain = gj.at("gain").get<std::vector<double>>();
      group.bn.bias = gj.at("bias").get<std::vector<double>>();
      group.bn.running_mean = gj.at("running_mean").get<std::vector<double>>();
      group.bn.running_var = gj.at("running_var").get<std::vector<double>>();
      group.bn.momentum = gj.at("momentum").get<double>();
    } else {
      throw_data(source + ": unknown parameter group kind '" + kind + "'");
    }
    params.groups.push_back(std::move(group));
  }
  check_same_model_structure(params, expected, source.c_str());
  return params;
}

ModelParams read_model(const std::string& path) {
  return model_from_record(record::read_text_file(path), path);
}

void write_model(const ModelParams& params, const std::string& path) {
  record::write_text_file(path, to_record(params) + "\n");
}

}  // namespace fedstat
