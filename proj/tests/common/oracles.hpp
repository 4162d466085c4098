// SPDX-License-Identifier: Apache-2.0
// Reference computations written with plain loops, independent of the
// Eigen code paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "rex/eval.hpp"
#include "rex/model.hpp"

namespace rex::oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat to_mat(const Eigen::MatrixXd& m) {
  Mat out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

inline std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline Mat matmul(const Mat& a, const Mat& b) {
  const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  Mat out(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < k; ++t)
      for (std::size_t j = 0; j < m; ++j) out[i][j] += a[i][t] * b[t][j];
  return out;
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> e(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += e[i] = std::exp(logits[i] - top);
  for (auto& v : e) v /= sum;
  return e;
}

inline double relu(double v) { return v > 0.0 ? v : 0.0; }

/// Hidden states of the encoder, one row per subtoken.
inline Mat encode(const std::vector<TokenId>& ids, const ClassifierParams& p, EncoderVariant variant) {
  const std::size_t n = ids.size(), d = p.shape.dim;
  Mat x(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) x[i][k] = p.tok_emb(ids[i], k) + p.pos_emb(i, k);
  if (variant == EncoderVariant::lookup) return x;

  const Mat q = matmul(x, to_mat(p.w_query)), kk = matmul(x, to_mat(p.w_key)),
            v = matmul(x, to_mat(p.w_value));
  Mat att(n, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> s(n);
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t t = 0; t < d; ++t) dot += q[i][t] * kk[j][t];
      s[j] = dot / std::sqrt(static_cast<double>(d));
    }
    const auto a = softmax(s);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t t = 0; t < d; ++t) att[i][t] += a[j] * v[j][t];
  }
  const Mat mixed = matmul(att, to_mat(p.w_out));
  Mat h1(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < d; ++t) h1[i][t] = x[i][t] + mixed[i][t];

  const Mat ff_in = to_mat(p.ff_in), ff_out = to_mat(p.ff_out);
  const auto b1 = to_vec(p.ff_in_bias), b2 = to_vec(p.ff_out_bias);
  Mat h(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> act(b1.size());
    for (std::size_t f = 0; f < act.size(); ++f) {
      double s = b1[f];
      for (std::size_t t = 0; t < d; ++t) s += h1[i][t] * ff_in[t][f];
      act[f] = relu(s);
    }
    for (std::size_t t = 0; t < d; ++t) {
      double s = b2[t];
      for (std::size_t f = 0; f < act.size(); ++f) s += act[f] * ff_out[f][t];
      h[i][t] = h1[i][t] + s;
    }
  }
  return h;
}

/// softmax(W ReLU(proj^T [h_s; h_o]) + b), element by element.
inline std::vector<double> head_probs(const std::vector<double>& hs, const std::vector<double>& ho,
                                      const ClassifierParams& p) {
  std::vector<double> cat(hs);
  cat.insert(cat.end(), ho.begin(), ho.end());
  const std::size_t d = p.shape.dim;
  std::vector<double> z(d);
  for (std::size_t k = 0; k < d; ++k) {
    double s = 0.0;
    for (std::size_t m = 0; m < cat.size(); ++m) s += p.proj(m, k) * cat[m];
    z[k] = relu(s);
  }
  std::vector<double> logits(p.shape.num_classes);
  for (std::size_t r = 0; r < logits.size(); ++r) {
    double s = p.rel_bias(r);
    for (std::size_t k = 0; k < d; ++k) s += p.rel_weight(r, k) * z[k];
    logits[r] = s;
  }
  return softmax(logits);
}

inline std::vector<double> probs(const SubtokenizedInstance& inst, const ClassifierParams& p,
                                 EncoderVariant variant) {
  const auto h = encode(inst.ids, p, variant);
  return head_probs(h[inst.subj_head_sub], h[inst.obj_head_sub], p);
}

inline double mean_loss(const std::vector<SubtokenizedInstance>& inputs,
                        const std::vector<std::size_t>& labels, const ClassifierParams& p,
                        EncoderVariant variant) {
  double total = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    total -= std::log(std::max(probs(inputs[i], p, variant)[labels[i]], 1e-12));
  }
  return total / static_cast<double>(inputs.size());
}

/// Largest relative error between analytic gradients and central finite
/// differences of mean_loss, over every parameter entry.
struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t entries = 0;
  std::string worst;
};

inline GradCheck gradient_check(const std::vector<SubtokenizedInstance>& inputs,
                                const std::vector<std::size_t>& labels, const ClassifierParams& params,
                                EncoderVariant variant, double step = 1e-5) {
  std::vector<Example> batch;
  for (std::size_t i = 0; i < inputs.size(); ++i) batch.push_back({&inputs[i], labels[i]});
  const auto analytic = backward(batch, params, variant).grads;

  GradCheck out;
  ClassifierParams probe = params;
  auto probe_tensors = probe.flat_tensors();
  const auto grad_tensors = analytic.flat_tensors();
  std::vector<std::string> names;
  params.for_each_tensor([&](std::string_view name, const auto&) { names.emplace_back(name); });
  for (std::size_t t = 0; t < probe_tensors.size(); ++t) {
    for (std::size_t i = 0; i < probe_tensors[t].size(); ++i) {
      double& w = probe_tensors[t][i];
      const double saved = w;
      w = saved + step;
      const double up = mean_loss(inputs, labels, probe, variant);
      w = saved - step;
      const double down = mean_loss(inputs, labels, probe, variant);
      w = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = grad_tensors[t][i];
      const double rel = std::abs(a - numeric) / std::max(1e-7, std::abs(a) + std::abs(numeric));
      ++out.entries;
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.worst = names[t] + "[" + std::to_string(i) + "]";
      }
    }
  }
  return out;
}

/// Small model and inputs for the gradient check: d = 4, 3 classes.
struct TinySetup {
  ClassifierParams params;
  std::vector<SubtokenizedInstance> inputs;
  std::vector<std::size_t> labels;
};

inline TinySetup tiny_setup(EncoderVariant variant, std::uint64_t seed = 11) {
  ModelShape shape;
  shape.vocab_size = 9;
  shape.max_len = 8;
  shape.dim = 4;
  shape.ff_dim = 6;
  shape.num_classes = 3;
  shape.variant = variant;
  std::mt19937_64 rng(seed);
  TinySetup s{ClassifierParams::random(shape, rng, 0.5), {}, {}};
  SubtokenizedInstance a;
  a.ids = {1, 4, 2, 7, 3};
  a.subj_head_sub = 1;
  a.obj_head_sub = 3;
  SubtokenizedInstance b;
  b.ids = {5, 0, 8, 6, 2, 1};
  b.subj_head_sub = 4;
  b.obj_head_sub = 0;
  s.inputs = {a, b};
  s.labels = {2, 0};
  return s;
}

/// Micro-averaged P/R/F1 by direct counting: a prediction is a true
/// positive when it equals gold and is not NA.
struct Tally {
  double precision, recall, f1;
};

inline Tally brute_force_micro(const std::vector<std::string>& gold, const std::vector<std::string>& pred,
                               const std::string& na) {
  std::size_t tp = 0, pred_pos = 0, gold_pos = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (pred[i] != na) ++pred_pos;
    if (gold[i] != na) ++gold_pos;
    if (pred[i] != na && pred[i] == gold[i]) ++tp;
  }
  const double p = pred_pos == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(pred_pos);
  const double r = gold_pos == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(gold_pos);
  const double f = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  return {p, r, f};
}

}  // namespace rex::oracle
