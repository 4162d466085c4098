// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace rex {

/// Token span with inclusive end, as in the public TACRED layout.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start + 1; }
  bool contains(std::size_t i) const { return start <= i && i <= end; }
  bool overlaps(const Span& other) const {
    return start <= other.end && other.start <= end;
  }
  bool operator==(const Span&) const = default;
};

/// One sentence with a subject/object entity pair and its gold relation.
struct RelationInstance {
  std::string id;
  std::vector<std::string> tokens;
  Span subj;
  Span obj;
  std::string subj_type;
  std::string obj_type;
  std::string relation;

  /// Space-joined surface string of the subject (or object) span.
  std::string subj_mention() const;
  std::string obj_mention() const;

  bool operator==(const RelationInstance&) const = default;
};

/// Ordered relation inventory including the no-relation sentinel.
class LabelSchema {
 public:
  LabelSchema() = default;
  /// Throws ValidationError on duplicates or when `na_label` is missing.
  LabelSchema(std::vector<std::string> labels, std::string na_label);

  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& na_label() const { return na_label_; }
  std::size_t size() const { return labels_.size(); }
  std::size_t na_index() const { return na_index_; }

  std::optional<std::size_t> find(std::string_view label) const;
  /// Like find() but throws ValidationError for unknown labels.
  std::size_t index_of(std::string_view label) const;
  const std::string& label(std::size_t index) const { return labels_.at(index); }
  bool contains(std::string_view label) const { return find(label).has_value(); }

  bool operator==(const LabelSchema& other) const {
    return labels_ == other.labels_ && na_label_ == other.na_label_;
  }

 private:
  std::vector<std::string> labels_;
  std::string na_label_;
  std::size_t na_index_ = 0;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct Dataset {
  std::string split;
  std::vector<RelationInstance> instances;
  LabelSchema schema;

  std::size_t size() const { return instances.size(); }
  bool empty() const { return instances.empty(); }
};

struct LoadOptions {
  /// Drop invalid instances instead of failing; dropped ids are reported.
  bool lenient = false;
  bool lowercase = false;
};

inline constexpr std::string_view kDefaultNaLabel = "no_relation";

/// Throws ValidationError naming the instance id when a span is out of
/// bounds or empty, spans overlap, or the relation is not in `schema`.
void validate(const RelationInstance& instance, const LabelSchema& schema);

/// Record <-> instance conversion using the TACRED field names. Extra fields
/// in the record are ignored.
RelationInstance instance_from_json(const nlohmann::json& record);
nlohmann::json instance_to_json(const RelationInstance& instance);

/// Parses a JSON array of records, or JSON Lines when the file ends in
/// .jsonl, without validating labels.
std::vector<RelationInstance> read_instances(const std::filesystem::path& path);

/// Loads and validates a TACRED-layout JSON array file. In lenient mode the
/// ids of dropped instances are appended to `dropped` when it is non-null.
Dataset load_dataset(const std::filesystem::path& path,
                     const LabelSchema& schema,
                     const LoadOptions& options = {},
                     std::vector<std::string>* dropped = nullptr);

/// Schema file: {"labels": [...], "na_label": "..."}.
LabelSchema load_schema(const std::filesystem::path& path);
LabelSchema schema_from_json(const nlohmann::json& doc);
nlohmann::json schema_to_json(const LabelSchema& schema);

/// Sorted set of relations seen across `sets`, plus `na_label`.
LabelSchema infer_schema(const std::vector<std::vector<RelationInstance>>& sets,
                         std::string_view na_label = kDefaultNaLabel);

void write_dataset(const std::filesystem::path& path, const Dataset& dataset);
/// Canonical interchange: one instance record per line.
void write_jsonl(const std::filesystem::path& path, const Dataset& dataset);
Dataset read_jsonl(const std::filesystem::path& path, const LabelSchema& schema);

struct StatsReport {
  std::map<std::string, std::size_t> split_counts;
  std::size_t num_classes = 0;
  /// Label -> count over all given splits, in schema order.
  std::vector<std::pair<std::string, std::size_t>> histogram;
  std::size_t total = 0;

  nlohmann::json to_json() const;
};

StatsReport compute_statistics(const std::vector<const Dataset*>& splits,
                               const LabelSchema& schema);
inline StatsReport compute_statistics(const Dataset& dataset) {
  return compute_statistics({&dataset}, dataset.schema);
}

/// Reads a whole file; throws IoError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace rex
