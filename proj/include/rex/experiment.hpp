// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rex/marking.hpp"
#include "rex/model.hpp"
#include "rex/synth.hpp"
#include "rex/train.hpp"

namespace rex {

/// Test-set outcome of one marking scheme across seeds.
struct SchemeOutcome {
  MarkingScheme scheme;
  std::vector<std::uint64_t> seeds;
  std::vector<double> dev_f1;
  std::vector<double> test_accuracy;
  std::vector<double> test_f1;
  double median_accuracy = 0.0;
  double median_f1 = 0.0;

  nlohmann::json to_json() const;
};

/// Trains cfg.seeds runs on corpus.train (selected on corpus.dev) and
/// scores each selected checkpoint on `test`.
SchemeOutcome run_scheme(const Dataset& train, const Dataset& dev, const Dataset& test,
                         const MarkingScheme& scheme, EncoderVariant variant,
                         const TrainConfig& cfg);

struct ExperimentSetup {
  SynthConfig synth;
  TrainConfig train;
  EncoderVariant variant = EncoderVariant::attn1;
};

/// Names carry half of the label signal; the test split only has names
/// never seen in training.
ExperimentSetup unseen_names_setup();
/// Template-only labels with type-ambiguous names; noise is injected on top.
ExperimentSetup label_noise_setup();

struct UnseenNamesResult {
  SchemeOutcome typed;  // typed_entity_marker_punct
  SchemeOutcome mask;   // entity_mask
  double type_marginal_ceiling = 0.0;
  /// Median accuracy difference in points (typed - mask).
  double gap_points() const;
  nlohmann::json to_json() const;
};

UnseenNamesResult run_unseen_names(const ExperimentSetup& setup);

struct NoiseLevelResult {
  double noise_rate = 0.0;
  SchemeOutcome typed;    // typed_entity_marker_punct
  SchemeOutcome untyped;  // entity_marker_punct
  /// Median accuracy difference in points (typed - untyped).
  double gain_points() const;
  nlohmann::json to_json() const;
};

struct LabelNoiseResult {
  std::vector<NoiseLevelResult> levels;
  nlohmann::json to_json() const;
};

/// One level per entry of `noise_rates`, each on a fresh corpus with the
/// same seed so only the training labels differ.
LabelNoiseResult run_label_noise(const ExperimentSetup& setup,
                                 const std::vector<double>& noise_rates = {0.0, 0.3});

std::string format_summary(const UnseenNamesResult& result);
std::string format_summary(const LabelNoiseResult& result);

}  // namespace rex
