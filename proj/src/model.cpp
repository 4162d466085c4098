// SPDX-License-Identifier: Apache-2.0
#include "rex/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include "rex/error.hpp"

namespace rex {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr std::string_view kParamsFormat = "rex-params-v1";

double relu(double x) { return x > 0.0 ? x : 0.0; }

void check_input(const SubtokenizedInstance& inst, const ClassifierParams& params,
                 EncoderVariant variant) {
  const auto& shape = params.shape;
  if (inst.ids.empty()) throw ValidationError("empty subtoken sequence");
  if (inst.ids.size() > shape.max_len) {
    throw ValidationError("sequence of " + std::to_string(inst.ids.size()) +
                          " subtokens exceeds max_len " + std::to_string(shape.max_len));
  }
  for (auto id : inst.ids) {
    if (id >= static_cast<std::size_t>(params.tok_emb.rows())) {
      throw ValidationError("subtoken id " + std::to_string(id) + " outside vocabulary of " +
                            std::to_string(params.tok_emb.rows()));
    }
  }
  if (variant == EncoderVariant::attn1 && params.w_query.size() == 0) {
    throw UsageError("attn1 encoder requested but the parameters carry no attention weights");
  }
}

void check_heads(std::size_t length, std::size_t subj, std::size_t obj) {
  if (subj >= length || obj >= length) {
    throw ValidationError("head index out of range for sequence of " + std::to_string(length));
  }
}

MatrixXd embed(const SubtokenizedInstance& inst, const ClassifierParams& params) {
  const auto len = static_cast<Eigen::Index>(inst.ids.size());
  MatrixXd x(len, static_cast<Eigen::Index>(params.shape.dim));
  for (Eigen::Index i = 0; i < len; ++i) {
    x.row(i) = params.tok_emb.row(inst.ids[static_cast<std::size_t>(i)]) + params.pos_emb.row(i);
  }
  return x;
}

void softmax_rows(MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double top = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - top).exp();
    m.row(r) /= m.row(r).sum();
  }
}

// Intermediate values of the head-rows-only pass, kept for backward.
struct Trace {
  MatrixXd x;       // L x d
  MatrixXd keys;    // L x d
  MatrixXd values;  // L x d
  MatrixXd x_rows;  // 2 x d (subject row, object row)
  MatrixXd q_rows;  // 2 x d
  MatrixXd attn;    // 2 x L
  MatrixXd ctx;     // 2 x d
  MatrixXd h1;      // 2 x d
  MatrixXd ff_pre;  // 2 x f
  MatrixXd h;       // 2 x d
  VectorXd hcat;    // 2d
  VectorXd proj_pre;  // d
  VectorXd z;         // d
  VectorXd logits;
};

Trace trace_forward(const SubtokenizedInstance& inst, const ClassifierParams& p,
                    EncoderVariant variant) {
  check_input(inst, p, variant);
  check_heads(inst.ids.size(), inst.subj_head_sub, inst.obj_head_sub);
  const auto d = static_cast<Eigen::Index>(p.shape.dim);
  Trace t;
  t.x = embed(inst, p);
  t.x_rows.resize(2, d);
  t.x_rows.row(0) = t.x.row(static_cast<Eigen::Index>(inst.subj_head_sub));
  t.x_rows.row(1) = t.x.row(static_cast<Eigen::Index>(inst.obj_head_sub));
  if (variant == EncoderVariant::lookup) {
    t.h = t.x_rows;
  } else {
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    t.keys = t.x * p.w_key;
    t.values = t.x * p.w_value;
    t.q_rows = t.x_rows * p.w_query;
    t.attn = (t.q_rows * t.keys.transpose()) * scale;
    softmax_rows(t.attn);
    t.ctx = t.attn * t.values;
    t.h1 = t.x_rows + t.ctx * p.w_out;
    t.ff_pre = (t.h1 * p.ff_in).rowwise() + p.ff_in_bias.transpose();
    const MatrixXd act = t.ff_pre.unaryExpr(&relu);
    t.h = t.h1 + ((act * p.ff_out).rowwise() + p.ff_out_bias.transpose());
  }
  t.hcat.resize(2 * d);
  t.hcat << t.h.row(0).transpose(), t.h.row(1).transpose();
  t.proj_pre = p.proj.transpose() * t.hcat;
  t.z = t.proj_pre.unaryExpr(&relu);
  t.logits = p.rel_weight * t.z + p.rel_bias;
  return t;
}

// Accumulates scale * d(loss)/d(params) for one example into `g`.
double trace_backward(const SubtokenizedInstance& inst, std::size_t label,
                      const ClassifierParams& p, EncoderVariant variant, double scale,
                      ClassifierParams& g) {
  const Trace t = trace_forward(inst, p, variant);
  const auto d = static_cast<Eigen::Index>(p.shape.dim);
  const VectorXd probs = softmax(t.logits);
  if (label >= static_cast<std::size_t>(probs.size())) throw ValidationError("gold label out of range");
  const double example_loss = loss(probs, label);

  VectorXd dlogits = probs;
  dlogits(static_cast<Eigen::Index>(label)) -= 1.0;
  dlogits *= scale;

  g.rel_weight.noalias() += dlogits * t.z.transpose();
  g.rel_bias += dlogits;
  VectorXd dz = p.rel_weight.transpose() * dlogits;
  for (Eigen::Index i = 0; i < dz.size(); ++i) {
    if (t.proj_pre(i) <= 0.0) dz(i) = 0.0;
  }
  g.proj.noalias() += t.hcat * dz.transpose();
  const VectorXd dhcat = p.proj * dz;
  MatrixXd dh(2, d);
  dh.row(0) = dhcat.head(d).transpose();
  dh.row(1) = dhcat.tail(d).transpose();

  const auto len = static_cast<Eigen::Index>(inst.ids.size());
  MatrixXd dx = MatrixXd::Zero(len, d);
  MatrixXd dx_rows;

  if (variant == EncoderVariant::lookup) {
    dx_rows = dh;
  } else {
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    const MatrixXd act = t.ff_pre.unaryExpr(&relu);
    g.ff_out.noalias() += act.transpose() * dh;
    g.ff_out_bias += dh.colwise().sum().transpose();
    MatrixXd dpre = dh * p.ff_out.transpose();
    dpre = dpre.cwiseProduct((t.ff_pre.array() > 0.0).cast<double>().matrix());
    g.ff_in.noalias() += t.h1.transpose() * dpre;
    g.ff_in_bias += dpre.colwise().sum().transpose();
    const MatrixXd dh1 = dh + dpre * p.ff_in.transpose();

    g.w_out.noalias() += t.ctx.transpose() * dh1;
    const MatrixXd dctx = dh1 * p.w_out.transpose();
    const MatrixXd dattn = dctx * t.values.transpose();  // 2 x L
    const MatrixXd dvalues = t.attn.transpose() * dctx;  // L x d
    MatrixXd dscores = t.attn.cwiseProduct(dattn);
    const VectorXd row_dot = dscores.rowwise().sum();
    dscores -= t.attn.cwiseProduct(row_dot.replicate(1, len));
    dscores *= inv_sqrt_d;
    const MatrixXd dq = dscores * t.keys;                 // 2 x d
    const MatrixXd dkeys = dscores.transpose() * t.q_rows;  // L x d

    g.w_query.noalias() += t.x_rows.transpose() * dq;
    g.w_key.noalias() += t.x.transpose() * dkeys;
    g.w_value.noalias() += t.x.transpose() * dvalues;
    dx.noalias() += dkeys * p.w_key.transpose() + dvalues * p.w_value.transpose();
    dx_rows = dh1 + dq * p.w_query.transpose();
  }
  dx.row(static_cast<Eigen::Index>(inst.subj_head_sub)) += dx_rows.row(0);
  dx.row(static_cast<Eigen::Index>(inst.obj_head_sub)) += dx_rows.row(1);

  for (Eigen::Index i = 0; i < len; ++i) {
    g.tok_emb.row(inst.ids[static_cast<std::size_t>(i)]) += dx.row(i);
    g.pos_emb.row(i) += dx.row(i);
  }
  return example_loss;
}

std::string encode_base64(std::span<const double> values) {
  using namespace boost::archive::iterators;
  using It = base64_from_binary<transform_width<const char*, 6, 8>>;
  std::string bytes(values.size() * sizeof(double), '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (std::size_t b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  std::string out(It(bytes.data()), It(bytes.data() + bytes.size()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

std::vector<double> decode_base64(const std::string& text, std::size_t count) {
  using namespace boost::archive::iterators;
  using It = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
  std::string trimmed = text;
  const auto pad = trimmed.size() - std::min(trimmed.size(), trimmed.find_last_not_of('=') + 1);
  trimmed.erase(trimmed.size() - pad);
  std::string bytes;
  try {
    bytes.assign(It(trimmed.begin()), It(trimmed.end()));
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid base64 tensor data: ") + e.what());
  }
  if (bytes.size() < count * sizeof(double)) throw ParseError("tensor data shorter than its shape");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
    }
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

}  // namespace

std::string_view to_string(EncoderVariant variant) {
  return variant == EncoderVariant::lookup ? "lookup" : "attn1";
}

EncoderVariant parse_encoder_variant(std::string_view name) {
  if (name == "lookup") return EncoderVariant::lookup;
  if (name == "attn1") return EncoderVariant::attn1;
  throw UsageError("unknown encoder variant '" + std::string(name) + "'");
}

ClassifierParams ClassifierParams::zeros(const ModelShape& shape) {
  if (shape.dim == 0 || shape.num_classes == 0 || shape.vocab_size == 0 || shape.max_len == 0) {
    throw UsageError("model dimensions must be positive");
  }
  const auto v = static_cast<Eigen::Index>(shape.vocab_size);
  const auto d = static_cast<Eigen::Index>(shape.dim);
  const auto f = static_cast<Eigen::Index>(shape.ff_dim);
  const auto c = static_cast<Eigen::Index>(shape.num_classes);
  ClassifierParams p;
  p.shape = shape;
  p.tok_emb = MatrixXd::Zero(v, d);
  p.pos_emb = MatrixXd::Zero(static_cast<Eigen::Index>(shape.max_len), d);
  if (shape.variant == EncoderVariant::attn1) {
    if (shape.ff_dim == 0) throw UsageError("attn1 needs a positive feed-forward size");
    p.w_query = MatrixXd::Zero(d, d);
    p.w_key = MatrixXd::Zero(d, d);
    p.w_value = MatrixXd::Zero(d, d);
    p.w_out = MatrixXd::Zero(d, d);
    p.ff_in = MatrixXd::Zero(d, f);
    p.ff_in_bias = VectorXd::Zero(f);
    p.ff_out = MatrixXd::Zero(f, d);
    p.ff_out_bias = VectorXd::Zero(d);
  }
  p.proj = MatrixXd::Zero(2 * d, d);
  p.rel_weight = MatrixXd::Zero(c, d);
  p.rel_bias = VectorXd::Zero(c);
  return p;
}

ClassifierParams ClassifierParams::random(const ModelShape& shape, std::mt19937_64& rng,
                                          double scale) {
  ClassifierParams p = zeros(shape);
  std::uniform_real_distribution<double> dist(-scale, scale);
  p.for_each_tensor([&](std::string_view, auto& t) {
    for (double& x : flat(t)) x = dist(rng);
  });
  return p;
}

std::size_t ClassifierParams::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor([&](std::string_view, const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

bool ClassifierParams::all_finite() const {
  bool ok = true;
  for_each_tensor([&](std::string_view, const auto& t) { ok = ok && t.allFinite(); });
  return ok;
}

void ClassifierParams::set_zero() {
  for_each_tensor([](std::string_view, auto& t) { t.setZero(); });
}

std::vector<std::span<double>> ClassifierParams::flat_tensors() {
  std::vector<std::span<double>> out;
  for_each_tensor([&](std::string_view, auto& t) { out.push_back(flat(t)); });
  return out;
}

std::vector<std::span<const double>> ClassifierParams::flat_tensors() const {
  std::vector<std::span<const double>> out;
  for_each_tensor([&](std::string_view, const auto& t) { out.push_back(flat(t)); });
  return out;
}

void ClassifierParams::add_scaled(const ClassifierParams& other, double scale) {
  auto dst = flat_tensors();
  auto src = other.flat_tensors();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i].size() != src[i].size()) throw UsageError("parameter shape mismatch");
    for (std::size_t k = 0; k < dst[i].size(); ++k) dst[i][k] += scale * src[i][k];
  }
}

double ClassifierParams::squared_norm() const {
  double s = 0.0;
  for_each_tensor([&](std::string_view, const auto& t) { s += t.squaredNorm(); });
  return s;
}

nlohmann::json ClassifierParams::to_json(const nlohmann::json& meta) const {
  nlohmann::json doc;
  doc["format"] = kParamsFormat;
  doc["meta"] = meta;
  doc["shape"] = {{"vocab_size", shape.vocab_size}, {"max_len", shape.max_len},
                  {"dim", shape.dim},               {"ff_dim", shape.ff_dim},
                  {"num_classes", shape.num_classes}, {"variant", to_string(shape.variant)}};
  nlohmann::json tensors = nlohmann::json::array();
  for_each_tensor([&](std::string_view name, const auto& t) {
    // Row-major little-endian doubles.
    const auto rows = t.rows();
    const auto cols = t.cols();
    std::vector<double> row_major(static_cast<std::size_t>(t.size()));
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) row_major[static_cast<std::size_t>(r * cols + c)] = t(r, c);
    }
    tensors.push_back({{"name", name}, {"rows", rows}, {"cols", cols},
                       {"data", encode_base64(row_major)}});
  });
  doc["tensors"] = std::move(tensors);
  return doc;
}

ClassifierParams ClassifierParams::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != kParamsFormat) throw ParseError("unsupported parameter format");
    const auto& s = doc.at("shape");
    ModelShape shape;
    shape.vocab_size = s.at("vocab_size").get<std::size_t>();
    shape.max_len = s.at("max_len").get<std::size_t>();
    shape.dim = s.at("dim").get<std::size_t>();
    shape.ff_dim = s.at("ff_dim").get<std::size_t>();
    shape.num_classes = s.at("num_classes").get<std::size_t>();
    shape.variant = parse_encoder_variant(s.at("variant").get<std::string>());
    ClassifierParams p = zeros(shape);
    const auto& tensors = doc.at("tensors");
    std::size_t index = 0;
    p.for_each_tensor([&](std::string_view name, auto& t) {
      if (index >= tensors.size()) throw ParseError("missing tensor " + std::string(name));
      const auto& entry = tensors[index++];
      const auto rows = entry.at("rows").get<Eigen::Index>();
      const auto cols = entry.at("cols").get<Eigen::Index>();
      if (entry.at("name") != name || rows != t.rows() || cols != t.cols()) {
        throw ParseError("tensor " + std::string(name) + " does not match the declared shape");
      }
      auto data = decode_base64(entry.at("data").get<std::string>(), static_cast<std::size_t>(rows * cols));
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) t(r, c) = data[static_cast<std::size_t>(r * cols + c)];
      }
    });
    if (!p.all_finite()) throw ValidationError("parameters contain non-finite values");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("parameter file: ") + e.what());
  }
}

void ClassifierParams::save(const std::filesystem::path& path, const nlohmann::json& meta) const {
  write_file(path, to_json(meta).dump() + "\n");
}

ClassifierParams ClassifierParams::load(const std::filesystem::path& path, nlohmann::json* meta) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (meta) *meta = doc.value("meta", nlohmann::json::object());
  return from_json(doc);
}

EncoderOutput encode(const SubtokenizedInstance& inst, const ClassifierParams& p,
                     EncoderVariant variant) {
  check_input(inst, p, variant);
  MatrixXd x = embed(inst, p);
  if (variant == EncoderVariant::lookup) return {std::move(x)};

  const double scale = 1.0 / std::sqrt(static_cast<double>(p.shape.dim));
  MatrixXd scores = (x * p.w_query) * (x * p.w_key).transpose() * scale;
  softmax_rows(scores);
  const MatrixXd h1 = x + (scores * (x * p.w_value)) * p.w_out;
  const MatrixXd act = ((h1 * p.ff_in).rowwise() + p.ff_in_bias.transpose()).unaryExpr(&relu);
  MatrixXd h = h1 + ((act * p.ff_out).rowwise() + p.ff_out_bias.transpose());
  return {std::move(h)};
}

Eigen::VectorXd head_logits(const EncoderOutput& out, std::size_t subj, std::size_t obj,
                            const ClassifierParams& p) {
  check_heads(static_cast<std::size_t>(out.hiddens.rows()), subj, obj);
  const auto d = out.hiddens.cols();
  VectorXd hcat(2 * d);
  hcat << out.hiddens.row(static_cast<Eigen::Index>(subj)).transpose(),
      out.hiddens.row(static_cast<Eigen::Index>(obj)).transpose();
  const VectorXd z = (p.proj.transpose() * hcat).unaryExpr(&relu);
  return p.rel_weight * z + p.rel_bias;
}

Eigen::VectorXd forward(const EncoderOutput& out, std::size_t subj, std::size_t obj,
                        const ClassifierParams& p) {
  return softmax(head_logits(out, subj, obj, p));
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double top = logits.maxCoeff();
  VectorXd e = (logits.array() - top).exp();
  return e / e.sum();
}

double loss(const Eigen::VectorXd& probs, std::size_t gold) {
  if (gold >= static_cast<std::size_t>(probs.size())) {
    throw ValidationError("gold label " + std::to_string(gold) + " out of range for " +
                          std::to_string(probs.size()) + " classes");
  }
  return -std::log(std::max(probs(static_cast<Eigen::Index>(gold)), kLogFloor));
}

std::size_t predict(const Eigen::VectorXd& probs) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < probs.size(); ++i) {
    if (probs(i) > probs(best)) best = i;
  }
  return static_cast<std::size_t>(best);
}

Eigen::VectorXd predict_probs(const SubtokenizedInstance& inst, const ClassifierParams& params,
                              EncoderVariant variant) {
  return softmax(trace_forward(inst, params, variant).logits);
}

BackwardResult backward(std::span<const Example> batch, const ClassifierParams& params,
                        EncoderVariant variant) {
  if (batch.empty()) throw UsageError("backward on an empty batch");
  BackwardResult result{ClassifierParams::zeros(params.shape), 0.0};
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    result.mean_loss += scale * trace_backward(*ex.input, ex.label, params, variant, scale, result.grads);
  }
  return result;
}

double batch_loss(std::span<const Example> batch, const ClassifierParams& params,
                  EncoderVariant variant) {
  if (batch.empty()) throw UsageError("loss on an empty batch");
  double total = 0.0;
  for (const auto& ex : batch) {
    const auto out = encode(*ex.input, params, variant);
    total += loss(forward(out, ex.input->subj_head_sub, ex.input->obj_head_sub, params), ex.label);
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace rex
