// SPDX-License-Identifier: Apache-2.0
#include "rex/train.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <random>

#include "rex/error.hpp"

namespace rex {

void TrainConfig::validate() const {
  if (!(base_lr > 0.0)) throw UsageError("base_lr must be positive");
  if (batch_size == 0) throw UsageError("batch_size must be positive");
  if (warmup_fraction < 0.0 || warmup_fraction > 1.0) throw UsageError("warmup_fraction must lie in [0, 1]");
  if (seeds.empty()) throw UsageError("at least one seed is required");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0) {
    throw UsageError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw UsageError("adam_eps must be positive");
  if (grad_clip < 0.0) throw UsageError("grad_clip must be non-negative");
  if (dim == 0 || ff_dim == 0 || max_len == 0) throw UsageError("model sizes must be positive");
  if (!(init_scale > 0.0)) throw UsageError("init_scale must be positive");
  if (vocab_min_count == 0) throw UsageError("vocab_min_count must be at least 1");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"base_lr", base_lr},     {"batch_size", batch_size},
          {"epochs", epochs},       {"warmup_fraction", warmup_fraction},
          {"seeds", seeds},         {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2}, {"adam_eps", adam_eps},
          {"grad_clip", grad_clip}, {"allow_zero_epochs", allow_zero_epochs},
          {"dim", dim},             {"ff_dim", ff_dim},
          {"max_len", max_len},     {"vocab_size", vocab_size},
          {"vocab_min_count", vocab_min_count},
          {"init_scale", init_scale}, {"lowercase", lowercase}};
}

double lr_at(std::size_t step, std::size_t total, const TrainConfig& cfg) {
  if (total == 0) throw UsageError("total_steps must be positive");
  if (step > total) throw UsageError("step beyond total_steps");
  if (step == total) return 0.0;
  // At least one decay step, so the schedule reaches 0 continuously.
  const auto warmup = std::min(total - 1, static_cast<std::size_t>(std::lround(
                                              cfg.warmup_fraction * static_cast<double>(total))));
  if (step <= warmup && warmup > 0) {
    return cfg.base_lr * (static_cast<double>(step) / static_cast<double>(warmup));
  }
  return cfg.base_lr * (static_cast<double>(total - step) / static_cast<double>(total - warmup));
}

std::size_t total_steps(std::size_t train_size, const TrainConfig& cfg) {
  return cfg.epochs * ((train_size + cfg.batch_size - 1) / cfg.batch_size);
}

double median_f1(std::vector<double> scores) {
  if (scores.empty()) throw UsageError("median of an empty score list");
  std::sort(scores.begin(), scores.end());
  const auto n = scores.size();
  return n % 2 == 1 ? scores[n / 2] : 0.5 * (scores[n / 2 - 1] + scores[n / 2]);
}

PreparedSplit prepare(const Dataset& dataset, const MarkingScheme& scheme, const Vocabulary& vocab,
                      std::size_t max_len) {
  PreparedSplit out;
  out.ids.reserve(dataset.size());
  out.inputs.reserve(dataset.size());
  out.labels.reserve(dataset.size());
  for (const auto& inst : dataset.instances) {
    auto sub = subtokenize(mark(inst, scheme), vocab);
    if (sub.ids.size() > max_len) {
      throw ValidationError("instance " + inst.id + " has " + std::to_string(sub.ids.size()) +
                            " subtokens, more than max_len " + std::to_string(max_len));
    }
    out.ids.push_back(inst.id);
    out.inputs.push_back(std::move(sub));
    out.labels.push_back(dataset.schema.index_of(inst.relation));
  }
  return out;
}

Evaluation evaluate(const PreparedSplit& split, const ClassifierParams& params,
                    EncoderVariant variant, const LabelSchema& schema) {
  Evaluation ev;
  ev.predictions.reserve(split.size());
  for (const auto& input : split.inputs) {
    ev.predictions.push_back(predict(predict_probs(input, params, variant)));
  }
  ev.report = score(split.labels, ev.predictions, schema);
  return ev;
}

AdamOptimizer::AdamOptimizer(const ClassifierParams& like, double beta1, double beta2, double eps)
    : m_(ClassifierParams::zeros(like.shape)),
      v_(ClassifierParams::zeros(like.shape)),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {}

void AdamOptimizer::step(ClassifierParams& params, const ClassifierParams& grads, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto p = params.flat_tensors();
  auto g = grads.flat_tensors();
  auto m = m_.flat_tensors();
  auto v = v_.flat_tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t k = 0; k < p[i].size(); ++k) {
      const double gk = g[i][k];
      m[i][k] = beta1_ * m[i][k] + (1.0 - beta1_) * gk;
      v[i][k] = beta2_ * v[i][k] + (1.0 - beta2_) * gk * gk;
      p[i][k] -= lr * (m[i][k] / c1) / (std::sqrt(v[i][k] / c2) + eps_);
    }
  }
}

nlohmann::json LogRecord::to_json() const {
  nlohmann::json j{{"step", step}, {"epoch", epoch}, {"lr", lr}, {"loss", loss}};
  if (dev_f1) j["dev_f1"] = *dev_f1;
  return j;
}

RunResult train_run(const PreparedSplit& train, const PreparedSplit& dev, const LabelSchema& schema,
                    std::size_t vocab_size, EncoderVariant variant, const TrainConfig& cfg,
                    std::uint64_t seed) {
  cfg.validate();
  if (train.size() == 0) throw ValidationError("training split is empty");
  if (cfg.epochs == 0 && !cfg.allow_zero_epochs) throw UsageError("epochs must be positive");

  ModelShape shape;
  shape.vocab_size = vocab_size;
  shape.max_len = cfg.max_len;
  shape.dim = cfg.dim;
  shape.ff_dim = cfg.ff_dim;
  shape.num_classes = schema.size();
  shape.variant = variant;

  std::mt19937_64 init_rng(seed);
  std::seed_seq shuffle_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                            0x5eedu};
  std::mt19937_64 shuffle_rng(shuffle_seq);

  RunResult result;
  result.seed = seed;
  ClassifierParams params = ClassifierParams::random(shape, init_rng, cfg.init_scale);
  result.best_params = params;
  if (cfg.epochs == 0) return result;

  AdamOptimizer adam(params, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  const std::size_t total = total_steps(train.size(), cfg);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Example> batch;
  batch.reserve(cfg.batch_size);

  double best_f1 = -1.0;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      batch.clear();
      for (std::size_t k = begin; k < end; ++k) batch.push_back({&train.inputs[order[k]], train.labels[order[k]]});

      auto [grads, mean_loss] = backward(batch, params, variant);
      if (cfg.grad_clip > 0.0) {
        const double norm = std::sqrt(grads.squared_norm());
        if (norm > cfg.grad_clip) grads.add_scaled(grads, cfg.grad_clip / norm - 1.0);
      }
      const double lr = lr_at(step, total, cfg);
      adam.step(params, grads, lr);
      ++step;
      result.log.push_back({step, epoch, lr, mean_loss, std::nullopt});
    }

    const double f1 = evaluate(dev, params, variant, schema).report.f1;
    result.dev_f1.push_back(f1);
    result.log.back().dev_f1 = f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      result.best_epoch = epoch;
      result.best_params = params;
    }
  }
  return result;
}

TrainedModel train_model(const Dataset& train, const Dataset& dev, const MarkingScheme& scheme,
                         EncoderVariant variant, const TrainConfig& cfg, std::uint64_t seed) {
  if (!(train.schema == dev.schema)) throw ValidationError("train and dev schemas differ");
  if (train.empty()) throw ValidationError("training split is empty");
  TrainedModel model;
  model.scheme = scheme;
  model.variant = variant;
  model.schema = train.schema;
  model.vocab = build_vocab(train, {scheme}, cfg.vocab_size, cfg.lowercase, cfg.vocab_min_count);
  const auto train_split = prepare(train, scheme, model.vocab, cfg.max_len);
  const auto dev_split = prepare(dev, scheme, model.vocab, cfg.max_len);
  model.run = train_run(train_split, dev_split, train.schema, model.vocab.size(), variant, cfg, seed);
  return model;
}

MultiSeedResult train_seeds(const Dataset& train, const Dataset& dev, const MarkingScheme& scheme,
                            EncoderVariant variant, const TrainConfig& cfg, bool parallel) {
  cfg.validate();
  if (!(train.schema == dev.schema)) throw ValidationError("train and dev schemas differ");
  if (train.empty()) throw ValidationError("training split is empty");
  MultiSeedResult out;
  out.vocab = build_vocab(train, {scheme}, cfg.vocab_size, cfg.lowercase, cfg.vocab_min_count);
  const auto train_split = prepare(train, scheme, out.vocab, cfg.max_len);
  const auto dev_split = prepare(dev, scheme, out.vocab, cfg.max_len);
  auto run_one = [&](std::uint64_t seed) {
    return train_run(train_split, dev_split, train.schema, out.vocab.size(), variant, cfg, seed);
  };
  if (parallel) {
    std::vector<std::future<RunResult>> futures;
    for (auto seed : cfg.seeds) futures.push_back(std::async(std::launch::async, run_one, seed));
    for (auto& f : futures) out.runs.push_back(f.get());
  } else {
    for (auto seed : cfg.seeds) out.runs.push_back(run_one(seed));
  }
  std::vector<double> best;
  for (const auto& run : out.runs) {
    best.push_back(run.dev_f1.empty() ? 0.0 : run.dev_f1[run.best_epoch - 1]);
  }
  out.median_dev_f1 = median_f1(best);
  return out;
}

std::vector<std::string> predict_labels(const TrainedModel& model, const Dataset& data) {
  const auto split = prepare(data, model.scheme, model.vocab, model.run.best_params.shape.max_len);
  std::vector<std::string> labels;
  labels.reserve(split.size());
  for (const auto& input : split.inputs) {
    labels.push_back(model.schema.label(predict(predict_probs(input, model.run.best_params, model.variant))));
  }
  return labels;
}

nlohmann::json model_meta(const MarkingScheme& scheme, EncoderVariant variant,
                          const LabelSchema& schema) {
  return {{"scheme", to_string(scheme.kind)},
          {"head_anchor", to_string(scheme.head_anchor)},
          {"mask_mode", to_string(scheme.mask_mode)},
          {"variant", to_string(variant)},
          {"schema", schema_to_json(schema)}};
}

}  // namespace rex
