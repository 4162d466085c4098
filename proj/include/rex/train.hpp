// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rex/corpus.hpp"
#include "rex/eval.hpp"
#include "rex/marking.hpp"
#include "rex/model.hpp"
#include "rex/tokenize.hpp"

namespace rex {

struct TrainConfig {
  double base_lr = 5e-5;
  std::size_t batch_size = 64;
  std::size_t epochs = 5;
  double warmup_fraction = 0.10;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Global gradient-norm clip; 0 disables it.
  double grad_clip = 0.0;
  /// With zero epochs, return the initial parameters instead of failing.
  bool allow_zero_epochs = false;

  // Model and vocabulary sizes.
  std::size_t dim = 16;
  std::size_t ff_dim = 32;
  std::size_t max_len = 128;
  std::size_t vocab_size = 8000;
  /// Words rarer than this are left to character pieces.
  std::size_t vocab_min_count = 1;
  double init_scale = 0.1;
  bool lowercase = false;

  /// Throws UsageError on out-of-range values.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Linear warmup to base_lr over round(warmup_fraction * total_steps) steps,
/// then linear decay to 0 at total_steps.
double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg);

/// epochs * ceil(train_size / batch_size); the last partial batch is kept.
std::size_t total_steps(std::size_t train_size, const TrainConfig& cfg);

/// Median; even counts average the two central values.
double median_f1(std::vector<double> scores);

/// A split after marking and subtokenization.
struct PreparedSplit {
  std::vector<std::string> ids;
  std::vector<SubtokenizedInstance> inputs;
  std::vector<std::size_t> labels;

  std::size_t size() const { return inputs.size(); }
};

/// Throws ValidationError for instances longer than max_len subtokens.
PreparedSplit prepare(const Dataset& dataset, const MarkingScheme& scheme, const Vocabulary& vocab,
                      std::size_t max_len);

struct Evaluation {
  EvalReport report;
  std::vector<std::size_t> predictions;
};

Evaluation evaluate(const PreparedSplit& split, const ClassifierParams& params,
                    EncoderVariant variant, const LabelSchema& schema);

/// Adam moments for every tensor.
class AdamOptimizer {
 public:
  AdamOptimizer(const ClassifierParams& like, double beta1, double beta2, double eps);
  void step(ClassifierParams& params, const ClassifierParams& grads, double lr);
  std::size_t steps_taken() const { return t_; }

 private:
  ClassifierParams m_;
  ClassifierParams v_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

struct LogRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  /// Present only on the record that closes an epoch.
  std::optional<double> dev_f1;

  nlohmann::json to_json() const;
};

struct RunResult {
  std::uint64_t seed = 0;
  ClassifierParams best_params;
  std::vector<double> dev_f1;  // one entry per epoch
  std::size_t best_epoch = 0;  // 1-based; 0 when no epoch ran
  std::vector<LogRecord> log;
};

/// One seeded run over prepared splits. Initialization, shuffling and
/// batching all derive from `seed`. The returned parameters are those of
/// the epoch with the highest dev micro-F1 (ties keep the earlier epoch).
RunResult train_run(const PreparedSplit& train, const PreparedSplit& dev, const LabelSchema& schema,
                    std::size_t vocab_size, EncoderVariant variant, const TrainConfig& cfg,
                    std::uint64_t seed);

/// Everything a trained model needs at inference time.
struct TrainedModel {
  MarkingScheme scheme;
  EncoderVariant variant = EncoderVariant::attn1;
  LabelSchema schema;
  Vocabulary vocab;
  RunResult run;
};

/// Builds the vocabulary from `train` under `scheme`, prepares both splits
/// and trains one run.
TrainedModel train_model(const Dataset& train, const Dataset& dev, const MarkingScheme& scheme,
                         EncoderVariant variant, const TrainConfig& cfg, std::uint64_t seed);

struct MultiSeedResult {
  Vocabulary vocab;
  std::vector<RunResult> runs;
  double median_dev_f1 = 0.0;
};

/// Trains one run per seed in cfg.seeds; with `parallel` the seeds run on
/// separate threads sharing only read-only inputs.
MultiSeedResult train_seeds(const Dataset& train, const Dataset& dev, const MarkingScheme& scheme,
                            EncoderVariant variant, const TrainConfig& cfg, bool parallel = false);

/// Labels predicted for `data` by a trained model, in instance order.
std::vector<std::string> predict_labels(const TrainedModel& model, const Dataset& data);

nlohmann::json model_meta(const MarkingScheme& scheme, EncoderVariant variant,
                          const LabelSchema& schema);

}  // namespace rex
