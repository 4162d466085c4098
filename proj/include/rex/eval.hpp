// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rex/corpus.hpp"

namespace rex {

struct RelationTally {
  std::string label;
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;
};

/// Micro precision/recall/F1 over non-NA decisions.
struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::size_t total = 0;
  std::size_t predicted_positive = 0;
  std::size_t gold_positive = 0;
  std::size_t correct_positive = 0;
  /// Set when the corresponding denominator was zero and the value was
  /// fixed to 1 by convention.
  bool precision_by_convention = false;
  bool recall_by_convention = false;
  std::vector<RelationTally> per_relation;

  nlohmann::json to_json() const;
};

/// Fills P, R and F1 from the counts. P = 1 when nothing positive was
/// predicted, R = 1 when there is no positive gold label.
void apply_micro_conventions(EvalReport& report);

EvalReport score(const std::vector<std::size_t>& gold, const std::vector<std::size_t>& pred,
                 const LabelSchema& schema);
EvalReport score(const std::vector<std::string>& gold, const std::vector<std::string>& pred,
                 const LabelSchema& schema);

/// Predictions file: JSON Lines {"id": ..., "pred": label}.
std::map<std::string, std::string> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, std::string>>& preds);

/// Scores predictions keyed by id against a gold dataset. Every gold
/// instance needs a prediction.
EvalReport score_predictions(const Dataset& gold, const std::map<std::string, std::string>& preds);

struct MatchRule {
  enum class Roles {
    any,        ///< a mention in either role matches a training mention in either role
    same_role,  ///< subjects match training subjects, objects training objects
  };
  bool case_fold = false;
  Roles roles = Roles::any;

  std::string describe() const;
};

struct SplitReport {
  std::vector<std::string> kept_ids;
  std::vector<std::string> pruned_ids;
  std::string rule;

  std::size_t kept_count() const { return kept_ids.size(); }
  std::size_t pruned_count() const { return pruned_ids.size(); }
  nlohmann::json to_json() const;
};

/// Prunes test instances whose subject or object mention string occurs
/// among the training mentions. Order is preserved.
SplitReport build_filtered(const Dataset& test, const Dataset& train, const MatchRule& rule = {});

/// Keeps a TACRED test instance iff its id exists in the Re-TACRED test set
/// and its label, after `label_map`, equals the Re-TACRED label. A label
/// mapped to nullopt has no counterpart and is always pruned; unmapped labels
/// are compared verbatim.
SplitReport build_clean(const Dataset& tacred_test, const Dataset& retacred_test,
                        const std::map<std::string, std::optional<std::string>>& label_map);

/// Label map file: JSON object {"tacred_label": "retacred_label" | null}.
std::map<std::string, std::optional<std::string>> load_label_map(const std::filesystem::path& path);

/// Instances of `source` whose ids are in report.kept_ids, in source order.
Dataset apply_split(const Dataset& source, const SplitReport& report);

}  // namespace rex
