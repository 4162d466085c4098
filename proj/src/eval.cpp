// SPDX-License-Identifier: Apache-2.0
#include "rex/eval.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "rex/error.hpp"

namespace rex {

namespace {

std::string fold(std::string s, bool case_fold) {
  if (case_fold) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  }
  return s;
}

void check_unique_ids(const Dataset& ds, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& inst : ds.instances) {
    if (!seen.insert(inst.id).second) {
      throw ValidationError(std::string("duplicate id '") + inst.id + "' in " + what);
    }
  }
}

}  // namespace

void apply_micro_conventions(EvalReport& r) {
  r.precision_by_convention = r.predicted_positive == 0;
  r.recall_by_convention = r.gold_positive == 0;
  r.precision = r.precision_by_convention
                    ? 1.0
                    : static_cast<double>(r.correct_positive) / static_cast<double>(r.predicted_positive);
  r.recall = r.recall_by_convention
                 ? 1.0
                 : static_cast<double>(r.correct_positive) / static_cast<double>(r.gold_positive);
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
}

EvalReport score(const std::vector<std::size_t>& gold, const std::vector<std::size_t>& pred,
                 const LabelSchema& schema) {
  if (gold.size() != pred.size()) {
    throw ValidationError("gold has " + std::to_string(gold.size()) + " labels but predictions have " +
                          std::to_string(pred.size()));
  }
  const std::size_t na = schema.na_index();
  EvalReport r;
  r.total = gold.size();
  std::vector<RelationTally> tallies(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) tallies[i].label = schema.label(i);
  std::size_t exact = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto g = gold[i];
    const auto p = pred[i];
    if (g >= schema.size() || p >= schema.size()) throw ValidationError("label index out of range");
    ++tallies[g].gold;
    ++tallies[p].predicted;
    if (g == p) {
      ++tallies[g].correct;
      ++exact;
    }
    if (g != na) ++r.gold_positive;
    if (p != na) ++r.predicted_positive;
    if (g == p && g != na) ++r.correct_positive;
  }
  r.accuracy = gold.empty() ? 0.0 : static_cast<double>(exact) / static_cast<double>(gold.size());
  r.per_relation = std::move(tallies);
  apply_micro_conventions(r);
  return r;
}

EvalReport score(const std::vector<std::string>& gold, const std::vector<std::string>& pred,
                 const LabelSchema& schema) {
  if (gold.size() != pred.size()) {
    throw ValidationError("gold has " + std::to_string(gold.size()) + " labels but predictions have " +
                          std::to_string(pred.size()));
  }
  std::vector<std::size_t> g, p;
  g.reserve(gold.size());
  p.reserve(pred.size());
  for (const auto& l : gold) g.push_back(schema.index_of(l));
  for (const auto& l : pred) p.push_back(schema.index_of(l));
  return score(g, p, schema);
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& t : per_relation) {
    per[t.label] = {{"gold", t.gold}, {"predicted", t.predicted}, {"correct", t.correct}};
  }
  return {{"precision", precision},
          {"recall", recall},
          {"f1", f1},
          {"accuracy", accuracy},
          {"total", total},
          {"predicted_positive", predicted_positive},
          {"gold_positive", gold_positive},
          {"correct_positive", correct_positive},
          {"precision_by_convention", precision_by_convention},
          {"recall_by_convention", recall_by_convention},
          {"per_relation", per}};
}

std::map<std::string, std::string> read_predictions(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::map<std::string, std::string> preds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      const auto& id = rec.at("id");
      auto key = id.is_string() ? id.get<std::string>() : id.dump();
      if (!preds.emplace(key, rec.at("pred").get<std::string>()).second) {
        throw ValidationError(path.string() + ": duplicate prediction for id '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return preds;
}

void write_predictions(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, std::string>>& preds) {
  std::string out;
  for (const auto& [id, label] : preds) {
    out += nlohmann::json{{"id", id}, {"pred", label}}.dump();
    out += '\n';
  }
  write_file(path, out);
}

EvalReport score_predictions(const Dataset& gold, const std::map<std::string, std::string>& preds) {
  std::vector<std::string> g, p;
  for (const auto& inst : gold.instances) {
    auto it = preds.find(inst.id);
    if (it == preds.end()) throw ValidationError("no prediction for instance " + inst.id);
    g.push_back(inst.relation);
    p.push_back(it->second);
  }
  return score(g, p, gold.schema);
}

std::string MatchRule::describe() const {
  return std::string("mention-overlap roles=") + (roles == Roles::any ? "any" : "same_role") +
         " case=" + (case_fold ? "folded" : "exact");
}

nlohmann::json SplitReport::to_json() const {
  return {{"rule", rule},
          {"kept_count", kept_count()},
          {"pruned_count", pruned_count()},
          {"kept_ids", kept_ids},
          {"pruned_ids", pruned_ids}};
}

SplitReport build_filtered(const Dataset& test, const Dataset& train, const MatchRule& rule) {
  std::unordered_set<std::string> subjects, objects;
  for (const auto& inst : train.instances) {
    subjects.insert(fold(inst.subj_mention(), rule.case_fold));
    objects.insert(fold(inst.obj_mention(), rule.case_fold));
  }
  auto seen_any = [&](const std::string& m) { return subjects.count(m) || objects.count(m); };

  SplitReport report;
  report.rule = rule.describe();
  for (const auto& inst : test.instances) {
    const auto s = fold(inst.subj_mention(), rule.case_fold);
    const auto o = fold(inst.obj_mention(), rule.case_fold);
    const bool seen = rule.roles == MatchRule::Roles::any
                          ? (seen_any(s) || seen_any(o))
                          : (subjects.count(s) > 0 || objects.count(o) > 0);
    (seen ? report.pruned_ids : report.kept_ids).push_back(inst.id);
  }
  return report;
}

SplitReport build_clean(const Dataset& tacred_test, const Dataset& retacred_test,
                        const std::map<std::string, std::optional<std::string>>& label_map) {
  check_unique_ids(tacred_test, "TACRED test set");
  check_unique_ids(retacred_test, "Re-TACRED test set");
  std::unordered_map<std::string, const RelationInstance*> relabeled;
  for (const auto& inst : retacred_test.instances) relabeled.emplace(inst.id, &inst);

  SplitReport report;
  report.rule = "id-join, label agreement after label map";
  for (const auto& inst : tacred_test.instances) {
    auto other = relabeled.find(inst.id);
    bool keep = false;
    if (other != relabeled.end()) {
      auto mapped = label_map.find(inst.relation);
      if (mapped == label_map.end()) {
        keep = inst.relation == other->second->relation;
      } else if (mapped->second) {
        keep = *mapped->second == other->second->relation;
      }
    }
    (keep ? report.kept_ids : report.pruned_ids).push_back(inst.id);
  }
  return report;
}

std::map<std::string, std::optional<std::string>> load_label_map(const std::filesystem::path& path) {
  std::map<std::string, std::optional<std::string>> out;
  try {
    const auto doc = nlohmann::json::parse(read_file(path));
    if (!doc.is_object()) throw ParseError(path.string() + ": label map must be a JSON object");
    for (const auto& [from, to] : doc.items()) {
      if (to.is_null()) {
        out.emplace(from, std::nullopt);
      } else {
        out.emplace(from, to.get<std::string>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return out;
}

Dataset apply_split(const Dataset& source, const SplitReport& report) {
  std::unordered_set<std::string> keep(report.kept_ids.begin(), report.kept_ids.end());
  Dataset out;
  out.split = source.split;
  out.schema = source.schema;
  for (const auto& inst : source.instances) {
    if (keep.count(inst.id)) out.instances.push_back(inst);
  }
  return out;
}

}  // namespace rex
