// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rex/corpus.hpp"
#include "rex/marking.hpp"

namespace rex {

struct RelationSpec {
  std::string name;
  std::string subj_type;
  std::string obj_type;
};

/// Token pattern with SUBJ/OBJ slots. A template may serve several
/// relations as long as their signatures differ; the entity types then
/// decide the label. Label "*neutral*" marks templates used for instances
/// whose label comes from the entity names.
struct TemplateSpec {
  std::vector<std::string> labels;
  std::vector<std::string> tokens;
};

inline constexpr std::string_view kNeutralLabel = "*neutral*";
inline constexpr std::string_view kSubjSlot = "SUBJ";
inline constexpr std::string_view kObjSlot = "OBJ";

/// How name-determined labels are keyed.
enum class NameRule {
  morpheme,  ///< by the leading cue word, shared between visible and test-only names
  identity,  ///< by the full mention string
};

enum class NoiseMode { uniform, type_consistent };

std::string_view to_string(NameRule rule);
std::string_view to_string(NoiseMode mode);
NameRule parse_name_rule(std::string_view name);
NoiseMode parse_noise_mode(std::string_view name);

using Signature = std::pair<std::string, std::string>;

struct SynthConfig {
  std::vector<RelationSpec> relations;
  std::string na_label = "no_relation";
  std::vector<TemplateSpec> templates;
  /// Cue words per NER type; every name is "<cue> <stem>".
  std::map<std::string, std::vector<std::string>> type_cues;
  /// Cue words usable by any type; drawn with probability type_ambiguity.
  std::vector<std::string> shared_cues;
  double type_ambiguity = 0.3;

  /// Large pools keep individual names rare, as in real corpora.
  std::size_t visible_names_per_type = 600;
  std::size_t test_names_per_type = 300;

  /// Probability an instance's label is set by the name rule.
  double name_signal = 0.0;
  NameRule name_rule = NameRule::morpheme;
  /// Probability a template-determined instance is NA.
  double na_fraction = 0.25;

  double noise_rate = 0.0;
  NoiseMode noise_mode = NoiseMode::type_consistent;

  std::size_t train_size = 2000;
  std::size_t dev_size = 500;
  std::size_t test_size = 500;
  std::uint64_t seed = 13;

  /// 6 relations + NA over 4 NER types.
  static SynthConfig defaults();
  /// Throws UsageError on empty pools/templates, overlapping signatures in
  /// a shared template, or knobs outside [0, 1].
  void validate() const;
  LabelSchema schema() const;
  std::vector<Signature> signatures() const;
};

struct SynthCorpus {
  Dataset train;
  Dataset dev;
  Dataset test_unseen;
};

/// Train and dev draw names from the visible partition, test_unseen only
/// from the test-only partition. Noise (noise_rate/noise_mode) is applied
/// to train only. Deterministic given cfg.seed.
SynthCorpus generate(const SynthConfig& cfg);

/// Flips exactly round(rate * n) labels chosen without replacement.
/// uniform: any other label. type_consistent: another relation seen with the
/// same (subj_type, obj_type) in `train`, falling back to NA when none
/// exists (an NA instance with no such relation keeps its label).
Dataset inject_noise(const Dataset& train, double rate, NoiseMode mode, std::uint64_t seed);

/// Relations observed with each (subj_type, obj_type) signature, NA excluded.
std::map<Signature, std::vector<std::string>> observed_signatures(const Dataset& data);

/// Accuracy of the best classifier that sees only the entity types:
/// sum over signatures of the majority-label count, over the dataset size.
double type_marginal_ceiling(const Dataset& data);

/// Accuracy of the best classifier that sees only the marked token sequence
/// under `scheme`. For entity_mask this bounds any mask model exactly.
double marked_input_ceiling(const Dataset& data, const MarkingScheme& scheme);

/// Number of positions whose relation differs between two aligned datasets.
std::size_t count_label_changes(const Dataset& a, const Dataset& b);

}  // namespace rex
