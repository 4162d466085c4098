// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "rex/tokenize.hpp"

namespace rex {

/// Desk-scale stand-ins for a pretrained encoder.
///
/// lookup: h_i = tok_emb[id_i] + pos_emb[i].
/// attn1:  lookup, then one single-head scaled dot-product self-attention
///         layer and a ReLU feed-forward layer, each wrapped in a residual.
enum class EncoderVariant { lookup, attn1 };

std::string_view to_string(EncoderVariant variant);
EncoderVariant parse_encoder_variant(std::string_view name);

struct ModelShape {
  std::size_t vocab_size = 0;
  std::size_t max_len = 128;
  std::size_t dim = 16;
  std::size_t ff_dim = 32;
  std::size_t num_classes = 0;
  EncoderVariant variant = EncoderVariant::attn1;

  bool operator==(const ModelShape&) const = default;
};

/// All trainable tensors. Gradients and Adam moments reuse this type.
struct ClassifierParams {
  ModelShape shape;

  Eigen::MatrixXd tok_emb;  // vocab_size x dim
  Eigen::MatrixXd pos_emb;  // max_len x dim

  // attn1 only; empty for the lookup variant.
  Eigen::MatrixXd w_query;   // dim x dim
  Eigen::MatrixXd w_key;     // dim x dim
  Eigen::MatrixXd w_value;   // dim x dim
  Eigen::MatrixXd w_out;     // dim x dim
  Eigen::MatrixXd ff_in;     // dim x ff_dim
  Eigen::VectorXd ff_in_bias;
  Eigen::MatrixXd ff_out;    // ff_dim x dim
  Eigen::VectorXd ff_out_bias;

  Eigen::MatrixXd proj;      // 2*dim x dim, applied as proj^T [h_subj; h_obj]
  Eigen::MatrixXd rel_weight;  // num_classes x dim
  Eigen::VectorXd rel_bias;    // num_classes

  /// Zero tensors with the right sizes.
  static ClassifierParams zeros(const ModelShape& shape);
  /// Every entry ~ uniform(-scale, scale) drawn from `rng` in tensor order.
  static ClassifierParams random(const ModelShape& shape, std::mt19937_64& rng,
                                 double scale = 0.1);

  /// Calls fn(name, tensor) on every tensor in a fixed order.
  template <class Fn>
  void for_each_tensor(Fn&& fn) {
    fn("tok_emb", tok_emb);
    fn("pos_emb", pos_emb);
    fn("w_query", w_query);
    fn("w_key", w_key);
    fn("w_value", w_value);
    fn("w_out", w_out);
    fn("ff_in", ff_in);
    fn("ff_in_bias", ff_in_bias);
    fn("ff_out", ff_out);
    fn("ff_out_bias", ff_out_bias);
    fn("proj", proj);
    fn("rel_weight", rel_weight);
    fn("rel_bias", rel_bias);
  }
  template <class Fn>
  void for_each_tensor(Fn&& fn) const {
    const_cast<ClassifierParams*>(this)->for_each_tensor(
        [&](std::string_view name, const auto& t) { fn(name, t); });
  }

  std::vector<std::span<double>> flat_tensors();
  std::vector<std::span<const double>> flat_tensors() const;

  std::size_t parameter_count() const;
  bool all_finite() const;
  void set_zero();
  /// this += scale * other, tensor by tensor.
  void add_scaled(const ClassifierParams& other, double scale);
  double squared_norm() const;

  nlohmann::json to_json(const nlohmann::json& meta = nlohmann::json::object()) const;
  static ClassifierParams from_json(const nlohmann::json& doc);
  void save(const std::filesystem::path& path,
            const nlohmann::json& meta = nlohmann::json::object()) const;
  static ClassifierParams load(const std::filesystem::path& path, nlohmann::json* meta = nullptr);
};

/// Flat view of a tensor's storage.
inline std::span<double> flat(Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<double> flat(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<const double> flat(const Eigen::MatrixXd& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
inline std::span<const double> flat(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Contextual embeddings {h_i}, one row per subtoken.
struct EncoderOutput {
  Eigen::MatrixXd hiddens;  // L x dim
};

EncoderOutput encode(const SubtokenizedInstance& inst, const ClassifierParams& params,
                     EncoderVariant variant);

/// Relation logits W z + b with z = ReLU(proj^T [h_subj; h_obj]).
Eigen::VectorXd head_logits(const EncoderOutput& out, std::size_t subj_head_sub,
                            std::size_t obj_head_sub, const ClassifierParams& params);

/// P(r | x) over the schema's classes.
Eigen::VectorXd forward(const EncoderOutput& out, std::size_t subj_head_sub,
                        std::size_t obj_head_sub, const ClassifierParams& params);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

inline constexpr double kLogFloor = 1e-12;

/// Cross-entropy -log max(probs[gold], 1e-12).
double loss(const Eigen::VectorXd& probs, std::size_t gold);

/// Argmax; ties resolve to the lowest index.
std::size_t predict(const Eigen::VectorXd& probs);

/// Probabilities computed from the two head rows only; same values as
/// encode() followed by forward(), without the full L x L attention.
Eigen::VectorXd predict_probs(const SubtokenizedInstance& inst, const ClassifierParams& params,
                              EncoderVariant variant);

struct Example {
  const SubtokenizedInstance* input = nullptr;
  std::size_t label = 0;
};

struct BackwardResult {
  ClassifierParams grads;
  double mean_loss = 0.0;
};

/// Gradients of the mean cross-entropy over `batch` w.r.t. every tensor.
BackwardResult backward(std::span<const Example> batch, const ClassifierParams& params,
                        EncoderVariant variant);

/// Mean cross-entropy through the full encode() + forward() path.
double batch_loss(std::span<const Example> batch, const ClassifierParams& params,
                  EncoderVariant variant);

}  // namespace rex
