// SPDX-License-Identifier: Apache-2.0
#include "rex/experiment.hpp"

#include <cstdio>
#include <sstream>

namespace rex {

namespace {

std::string points(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

std::string signed_points(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f", v);
  return buf;
}

}  // namespace

nlohmann::json SchemeOutcome::to_json() const {
  return {{"scheme", to_string(scheme.kind)},
          {"head_anchor", to_string(scheme.head_anchor)},
          {"seeds", seeds},
          {"dev_f1", dev_f1},
          {"test_accuracy", test_accuracy},
          {"test_f1", test_f1},
          {"median_accuracy", median_accuracy},
          {"median_f1", median_f1}};
}

SchemeOutcome run_scheme(const Dataset& train, const Dataset& dev, const Dataset& test,
                         const MarkingScheme& scheme, EncoderVariant variant,
                         const TrainConfig& cfg) {
  const auto trained = train_seeds(train, dev, scheme, variant, cfg);
  const auto test_split = prepare(test, scheme, trained.vocab, cfg.max_len);
  SchemeOutcome out;
  out.scheme = scheme;
  for (const auto& run : trained.runs) {
    const auto ev = evaluate(test_split, run.best_params, variant, test.schema);
    out.seeds.push_back(run.seed);
    out.dev_f1.push_back(run.dev_f1.empty() ? 0.0 : run.dev_f1[run.best_epoch - 1]);
    out.test_accuracy.push_back(ev.report.accuracy);
    out.test_f1.push_back(ev.report.f1);
  }
  out.median_accuracy = median_f1(out.test_accuracy);
  out.median_f1 = median_f1(out.test_f1);
  return out;
}

namespace {

TrainConfig experiment_train_config() {
  TrainConfig cfg;
  cfg.base_lr = 1e-2;
  cfg.batch_size = 32;
  cfg.epochs = 5;
  cfg.warmup_fraction = 0.1;
  cfg.seeds = {1, 2, 3, 4, 5};
  cfg.dim = 24;
  cfg.ff_dim = 48;
  cfg.max_len = 64;
  cfg.vocab_size = 2000;
  cfg.vocab_min_count = 10;
  return cfg;
}

}  // namespace

ExperimentSetup unseen_names_setup() {
  ExperimentSetup setup;
  setup.synth = SynthConfig::defaults();
  setup.synth.name_signal = 0.5;
  setup.train = experiment_train_config();
  return setup;
}

ExperimentSetup label_noise_setup() {
  ExperimentSetup setup;
  setup.synth = SynthConfig::defaults();
  setup.synth.name_signal = 0.0;
  setup.synth.type_ambiguity = 0.5;
  setup.synth.noise_mode = NoiseMode::type_consistent;
  setup.synth.train_size = 4000;
  setup.train = experiment_train_config();
  setup.train.batch_size = 64;
  return setup;
}

double UnseenNamesResult::gap_points() const {
  return 100.0 * (typed.median_accuracy - mask.median_accuracy);
}

nlohmann::json UnseenNamesResult::to_json() const {
  return {{"typed", typed.to_json()},
          {"mask", mask.to_json()},
          {"type_marginal_ceiling", type_marginal_ceiling},
          {"gap_points", gap_points()}};
}

UnseenNamesResult run_unseen_names(const ExperimentSetup& setup) {
  const auto corpus = generate(setup.synth);
  UnseenNamesResult out;
  out.type_marginal_ceiling = type_marginal_ceiling(corpus.test_unseen);
  out.typed = run_scheme(corpus.train, corpus.dev, corpus.test_unseen,
                         {SchemeKind::typed_entity_marker_punct}, setup.variant, setup.train);
  out.mask = run_scheme(corpus.train, corpus.dev, corpus.test_unseen, {SchemeKind::entity_mask},
                        setup.variant, setup.train);
  return out;
}

double NoiseLevelResult::gain_points() const {
  return 100.0 * (typed.median_accuracy - untyped.median_accuracy);
}

nlohmann::json NoiseLevelResult::to_json() const {
  return {{"noise_rate", noise_rate},
          {"typed", typed.to_json()},
          {"untyped", untyped.to_json()},
          {"gain_points", gain_points()}};
}

nlohmann::json LabelNoiseResult::to_json() const {
  nlohmann::json levels_json = nlohmann::json::array();
  for (const auto& l : levels) levels_json.push_back(l.to_json());
  return {{"levels", levels_json}};
}

LabelNoiseResult run_label_noise(const ExperimentSetup& setup, const std::vector<double>& noise_rates) {
  LabelNoiseResult out;
  for (double rate : noise_rates) {
    auto synth = setup.synth;
    synth.noise_rate = rate;
    const auto corpus = generate(synth);
    NoiseLevelResult level;
    level.noise_rate = rate;
    level.typed = run_scheme(corpus.train, corpus.dev, corpus.test_unseen,
                             {SchemeKind::typed_entity_marker_punct}, setup.variant, setup.train);
    level.untyped = run_scheme(corpus.train, corpus.dev, corpus.test_unseen,
                               {SchemeKind::entity_marker_punct}, setup.variant, setup.train);
    out.levels.push_back(std::move(level));
  }
  return out;
}

std::string format_summary(const UnseenNamesResult& r) {
  std::ostringstream out;
  out << "unseen-names: median test_unseen accuracy over " << r.typed.seeds.size() << " seeds\n"
      << "  typed_entity_marker_punct  " << points(r.typed.median_accuracy) << "\n"
      << "  entity_mask                " << points(r.mask.median_accuracy) << "\n"
      << "  gap (points)               " << signed_points(r.gap_points()) << "\n"
      << "  type-marginal ceiling      " << points(r.type_marginal_ceiling) << "\n";
  return out.str();
}

std::string format_summary(const LabelNoiseResult& r) {
  std::ostringstream out;
  out << "label-noise: median clean-test accuracy, typed vs untyped markers\n"
      << "  noise   typed   untyped   gain\n";
  for (const auto& l : r.levels) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "  %4.0f%%  %6s  %8s  %6s\n", 100.0 * l.noise_rate,
                  points(l.typed.median_accuracy).c_str(), points(l.untyped.median_accuracy).c_str(),
                  signed_points(l.gain_points()).c_str());
    out << buf;
  }
  return out.str();
}

}  // namespace rex
