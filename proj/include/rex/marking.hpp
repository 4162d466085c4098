// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rex/corpus.hpp"

namespace rex {

enum class SchemeKind {
  entity_mask,
  entity_marker,
  entity_marker_punct,
  typed_entity_marker,
  typed_entity_marker_punct,
};

/// Which position represents an entity in the classifier head.
enum class HeadAnchor {
  entity_first,  ///< first entity token (or the mask token)
  marker_start,  ///< opening marker ("@"/"#" for the punct variants)
};

/// entity_mask only: one mask token per span, or one per original token.
enum class MaskMode { collapse, repeat };

struct MarkingScheme {
  SchemeKind kind = SchemeKind::typed_entity_marker_punct;
  HeadAnchor head_anchor = HeadAnchor::entity_first;
  MaskMode mask_mode = MaskMode::collapse;

  /// Throws UsageError for marker_start combined with entity_mask.
  void validate() const;
  bool operator==(const MarkingScheme&) const = default;
};

std::string_view to_string(SchemeKind kind);
std::string_view to_string(HeadAnchor anchor);
std::string_view to_string(MaskMode mode);
SchemeKind parse_scheme_kind(std::string_view name);
HeadAnchor parse_head_anchor(std::string_view name);
MaskMode parse_mask_mode(std::string_view name);
const std::vector<SchemeKind>& all_scheme_kinds();

/// Where a marked token came from.
struct Provenance {
  enum class Kind { original, inserted, mask };
  Kind kind = Kind::original;
  /// Original token index for `original` and `mask` tokens; for a collapsed
  /// mask this is the span start. Unused for inserted tokens.
  std::size_t source = 0;

  bool operator==(const Provenance&) const = default;
};

struct MarkedInstance {
  std::vector<std::string> tokens;
  std::size_t subj_head = 0;
  std::size_t obj_head = 0;
  std::set<std::string> special_tokens;
  std::vector<Provenance> provenance;

  bool operator==(const MarkedInstance&) const = default;
};

/// NER type rendered as plain label text tokens: lowercased, underscores
/// become token boundaries ("STATE_OR_PROVINCE" -> {"state", "or", "province"}).
std::vector<std::string> type_label_text(std::string_view ner_type);

/// Special tokens the scheme introduces for the given subject/object types.
std::set<std::string> scheme_special_tokens(SchemeKind kind, std::string_view subj_type,
                                            std::string_view obj_type);

/// Applies an entity representation technique at the token level.
MarkedInstance mark(const RelationInstance& instance, const MarkingScheme& scheme);

/// Head positions of a marked instance under the scheme's anchor.
std::pair<std::size_t, std::size_t> head_indices(const MarkedInstance& marked,
                                                 const MarkingScheme& scheme);

/// Inverse of mark(): drops inserted tokens and restores masked spans from
/// the original instance.
std::vector<std::string> unmark(const MarkedInstance& marked,
                                const RelationInstance& original);

/// Bridge record {id, marked_tokens, subj_head, obj_head, relation, special_tokens}.
nlohmann::json marked_record(const RelationInstance& instance, const MarkedInstance& marked);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace rex
