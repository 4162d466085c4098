// SPDX-License-Identifier: Apache-2.0
#include "rex/marking.hpp"

#include <array>
#include <cctype>

#include "rex/error.hpp"

namespace rex {

namespace {

constexpr std::array<std::pair<SchemeKind, std::string_view>, 5> kSchemeNames{{
    {SchemeKind::entity_mask, "entity_mask"},
    {SchemeKind::entity_marker, "entity_marker"},
    {SchemeKind::entity_marker_punct, "entity_marker_punct"},
    {SchemeKind::typed_entity_marker, "typed_entity_marker"},
    {SchemeKind::typed_entity_marker_punct, "typed_entity_marker_punct"},
}};

// Tokens wrapped around one entity. The head offset is relative to the
// opening tokens: 0 is the first opening token.
struct Wrapping {
  std::vector<std::string> open;
  std::vector<std::string> close;
};

Wrapping wrapping_for(SchemeKind kind, bool subject, std::string_view type) {
  const std::string t(type);
  switch (kind) {
    case SchemeKind::entity_marker:
      return subject ? Wrapping{{"[E1]"}, {"[/E1]"}} : Wrapping{{"[E2]"}, {"[/E2]"}};
    case SchemeKind::entity_marker_punct:
      return subject ? Wrapping{{"@"}, {"@"}} : Wrapping{{"#"}, {"#"}};
    case SchemeKind::typed_entity_marker:
      return subject ? Wrapping{{"<S:" + t + ">"}, {"</S:" + t + ">"}}
                     : Wrapping{{"<O:" + t + ">"}, {"</O:" + t + ">"}};
    case SchemeKind::typed_entity_marker_punct: {
      const std::string outer = subject ? "@" : "#";
      const std::string inner = subject ? "*" : "^";
      Wrapping w;
      w.open = {outer, inner};
      for (auto& word : type_label_text(type)) w.open.push_back(std::move(word));
      w.open.push_back(inner);
      w.close = {outer};
      return w;
    }
    case SchemeKind::entity_mask:
      break;
  }
  return {};
}

std::string mask_token(bool subject, std::string_view type) {
  return std::string(subject ? "[SUBJ-" : "[OBJ-") + std::string(type) + "]";
}

}  // namespace

void MarkingScheme::validate() const {
  if (kind == SchemeKind::entity_mask && head_anchor == HeadAnchor::marker_start) {
    throw UsageError("head anchor marker_start is undefined for entity_mask");
  }
}

std::string_view to_string(SchemeKind kind) {
  for (const auto& [k, name] : kSchemeNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::string_view to_string(HeadAnchor anchor) {
  return anchor == HeadAnchor::entity_first ? "entity_first" : "marker_start";
}

std::string_view to_string(MaskMode mode) {
  return mode == MaskMode::collapse ? "collapse" : "repeat";
}

SchemeKind parse_scheme_kind(std::string_view name) {
  for (const auto& [k, n] : kSchemeNames) {
    if (n == name) return k;
  }
  throw UsageError("unknown marking scheme '" + std::string(name) + "'");
}

HeadAnchor parse_head_anchor(std::string_view name) {
  if (name == "entity_first") return HeadAnchor::entity_first;
  if (name == "marker_start") return HeadAnchor::marker_start;
  throw UsageError("unknown head anchor '" + std::string(name) + "'");
}

MaskMode parse_mask_mode(std::string_view name) {
  if (name == "collapse") return MaskMode::collapse;
  if (name == "repeat") return MaskMode::repeat;
  throw UsageError("unknown mask mode '" + std::string(name) + "'");
}

const std::vector<SchemeKind>& all_scheme_kinds() {
  static const std::vector<SchemeKind> kinds = [] {
    std::vector<SchemeKind> v;
    for (const auto& entry : kSchemeNames) v.push_back(entry.first);
    return v;
  }();
  return kinds;
}

std::vector<std::string> type_label_text(std::string_view ner_type) {
  std::vector<std::string> words;
  std::string current;
  for (char c : ner_type) {
    if (c == '_' || c == ' ') {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::set<std::string> scheme_special_tokens(SchemeKind kind, std::string_view subj_type,
                                            std::string_view obj_type) {
  switch (kind) {
    case SchemeKind::entity_mask:
      return {mask_token(true, subj_type), mask_token(false, obj_type)};
    case SchemeKind::entity_marker:
    case SchemeKind::typed_entity_marker: {
      std::set<std::string> out;
      for (bool subject : {true, false}) {
        auto w = wrapping_for(kind, subject, subject ? subj_type : obj_type);
        out.insert(w.open.begin(), w.open.end());
        out.insert(w.close.begin(), w.close.end());
      }
      return out;
    }
    case SchemeKind::entity_marker_punct:
    case SchemeKind::typed_entity_marker_punct:
      return {};
  }
  return {};
}

MarkedInstance mark(const RelationInstance& inst, const MarkingScheme& scheme) {
  scheme.validate();
  if (inst.subj.start > inst.subj.end || inst.obj.start > inst.obj.end ||
      inst.subj.end >= inst.tokens.size() || inst.obj.end >= inst.tokens.size()) {
    throw ValidationError("instance " + inst.id + ": span out of bounds");
  }
  if (inst.subj.overlaps(inst.obj)) {
    throw ValidationError("instance " + inst.id + ": overlapping spans cannot be marked");
  }

  MarkedInstance out;
  out.special_tokens = scheme_special_tokens(scheme.kind, inst.subj_type, inst.obj_type);
  const bool masking = scheme.kind == SchemeKind::entity_mask;
  const auto subj_wrap = wrapping_for(scheme.kind, true, inst.subj_type);
  const auto obj_wrap = wrapping_for(scheme.kind, false, inst.obj_type);

  auto push = [&](std::string tok, Provenance::Kind kind, std::size_t source) {
    out.tokens.push_back(std::move(tok));
    out.provenance.push_back({kind, source});
  };

  for (std::size_t i = 0; i < inst.tokens.size(); ++i) {
    const bool in_subj = inst.subj.contains(i);
    const bool in_obj = inst.obj.contains(i);
    const Span* span = in_subj ? &inst.subj : (in_obj ? &inst.obj : nullptr);
    if (span == nullptr) {
      push(inst.tokens[i], Provenance::Kind::original, i);
      continue;
    }
    const bool subject = in_subj;
    std::size_t& head = subject ? out.subj_head : out.obj_head;

    if (masking) {
      const auto token = mask_token(subject, subject ? inst.subj_type : inst.obj_type);
      if (i == span->start) head = out.tokens.size();
      if (scheme.mask_mode == MaskMode::repeat || i == span->start) {
        push(token, Provenance::Kind::mask, i);
      }
      continue;
    }

    const auto& wrap = subject ? subj_wrap : obj_wrap;
    if (i == span->start) {
      const std::size_t marker_pos = out.tokens.size();
      for (const auto& t : wrap.open) push(t, Provenance::Kind::inserted, 0);
      head = scheme.head_anchor == HeadAnchor::marker_start ? marker_pos : out.tokens.size();
    }
    push(inst.tokens[i], Provenance::Kind::original, i);
    if (i == span->end) {
      for (const auto& t : wrap.close) push(t, Provenance::Kind::inserted, 0);
    }
  }
  return out;
}

std::pair<std::size_t, std::size_t> head_indices(const MarkedInstance& marked,
                                                 const MarkingScheme& scheme) {
  scheme.validate();
  return {marked.subj_head, marked.obj_head};
}

std::vector<std::string> unmark(const MarkedInstance& marked, const RelationInstance& original) {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < marked.tokens.size(); ++i) {
    const auto& p = marked.provenance[i];
    switch (p.kind) {
      case Provenance::Kind::original:
        tokens.push_back(marked.tokens[i]);
        break;
      case Provenance::Kind::inserted:
        break;
      case Provenance::Kind::mask: {
        const Span& span = original.subj.contains(p.source) ? original.subj : original.obj;
        const bool collapsed = p.source == span.start &&
                               (i + 1 >= marked.tokens.size() ||
                                marked.provenance[i + 1].kind != Provenance::Kind::mask ||
                                marked.provenance[i + 1].source != p.source + 1 ||
                                !span.contains(marked.provenance[i + 1].source));
        if (collapsed) {
          for (std::size_t j = span.start; j <= span.end; ++j) tokens.push_back(original.tokens[j]);
        } else {
          tokens.push_back(original.tokens[p.source]);
        }
        break;
      }
    }
  }
  return tokens;
}

nlohmann::json marked_record(const RelationInstance& instance, const MarkedInstance& marked) {
  return {{"id", instance.id},
          {"marked_tokens", marked.tokens},
          {"subj_head", marked.subj_head},
          {"obj_head", marked.obj_head},
          {"relation", instance.relation},
          {"special_tokens", marked.special_tokens}};
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace rex
