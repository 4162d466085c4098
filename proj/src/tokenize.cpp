// SPDX-License-Identifier: Apache-2.0
#include "rex/tokenize.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_map>

#include "rex/error.hpp"

namespace rex {

namespace {

constexpr std::string_view kHeader = "# rex vocabulary v1";

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> ranked(const std::unordered_map<std::string, std::size_t>& counts) {
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> out;
  out.reserve(items.size());
  for (auto& [piece, count] : items) out.push_back(std::move(piece));
  return out;
}

}  // namespace

std::vector<std::string_view> utf8_chars(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (c >= 0xF0) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    len = std::min(len, text.size() - i);
    out.push_back(text.substr(i, len));
    i += len;
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> specials, std::vector<std::string> pieces,
                       bool lowercase)
    : lowercase_(lowercase) {
  auto unk = std::find(specials.begin(), specials.end(), kUnkToken);
  if (unk != specials.end()) specials.erase(unk);
  specials.insert(specials.begin(), std::string(kUnkToken));
  special_count_ = specials.size();
  entries_ = std::move(specials);
  entries_.insert(entries_.end(), std::make_move_iterator(pieces.begin()),
                  std::make_move_iterator(pieces.end()));
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].empty()) throw ValidationError("vocabulary entry " + std::to_string(i) + " is empty");
    if (!index_.emplace(entries_[i], static_cast<TokenId>(i)).second) {
      throw ValidationError("duplicate vocabulary entry '" + entries_[i] + "'");
    }
  }
}

std::optional<TokenId> Vocabulary::find(std::string_view piece) const {
  auto it = index_.find(piece);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::is_special(std::string_view token) const {
  auto id = find(token);
  return id && *id < special_count_;
}

std::vector<std::string> Vocabulary::specials() const {
  return {entries_.begin(), entries_.begin() + static_cast<std::ptrdiff_t>(special_count_)};
}

std::string Vocabulary::serialize() const {
  std::string out(kHeader);
  out += "\nlowercase=";
  out += lowercase_ ? "1" : "0";
  out += "\n[specials]\n";
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i == special_count_) out += "[pieces]\n";
    out += entries_[i];
    out += '\n';
  }
  if (special_count_ == entries_.size()) out += "[pieces]\n";
  return out;
}

Vocabulary Vocabulary::deserialize(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw ParseError("vocabulary: missing header line");
  bool lowercase = false;
  if (!std::getline(in, line) || line.rfind("lowercase=", 0) != 0) {
    throw ParseError("vocabulary: missing lowercase option");
  }
  lowercase = line == "lowercase=1";
  if (!std::getline(in, line) || line != "[specials]") throw ParseError("vocabulary: missing [specials]");
  std::vector<std::string> specials, pieces;
  bool in_pieces = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!in_pieces && line == "[pieces]") {
      in_pieces = true;
      continue;
    }
    if (line.empty()) continue;
    (in_pieces ? pieces : specials).push_back(line);
  }
  if (!in_pieces) throw ParseError("vocabulary: missing [pieces]");
  if (specials.empty() || specials.front() != kUnkToken) {
    throw ParseError("vocabulary: first special must be " + std::string(kUnkToken));
  }
  return Vocabulary(std::move(specials), std::move(pieces), lowercase);
}

void Vocabulary::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

Vocabulary Vocabulary::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sequences,
                       const std::set<std::string>& specials, std::size_t max_size,
                       bool lowercase, std::size_t min_count) {
  std::set<std::string> special_set = specials;
  special_set.erase(std::string(kUnkToken));
  const std::size_t required = special_set.size() + 1;
  if (max_size < required) {
    throw UsageError("vocabulary size " + std::to_string(max_size) + " cannot hold the " +
                     std::to_string(required) + " required special tokens");
  }

  std::unordered_map<std::string, std::size_t> chars, words;
  for (const auto& seq : sequences) {
    for (const auto& raw : seq) {
      if (special_set.count(raw) || raw == kUnkToken || raw.empty()) continue;
      const std::string tok = lowercase ? lower(raw) : raw;
      const auto cps = utf8_chars(tok);
      for (std::size_t i = 0; i < cps.size(); ++i) {
        ++chars[i == 0 ? std::string(cps[i]) : std::string(kContinuationPrefix) + std::string(cps[i])];
      }
      if (cps.size() > 1) ++words[tok];
    }
  }
  std::erase_if(words, [&](const auto& entry) { return entry.second < min_count; });

  std::vector<std::string> pieces;
  std::size_t budget = max_size - required;
  for (auto* group : {&chars, &words}) {
    for (auto& piece : ranked(*group)) {
      if (budget == 0) break;
      pieces.push_back(std::move(piece));
      --budget;
    }
  }
  std::vector<std::string> special_list(special_set.begin(), special_set.end());
  return Vocabulary(std::move(special_list), std::move(pieces), lowercase);
}

Vocabulary build_vocab(const Dataset& corpus, const std::vector<MarkingScheme>& schemes,
                       std::size_t max_size, bool lowercase, std::size_t min_count) {
  if (corpus.empty()) throw ValidationError("cannot build a vocabulary from an empty corpus");
  std::set<std::string> specials;
  std::vector<std::vector<std::string>> sequences;
  if (schemes.empty()) {
    for (const auto& inst : corpus.instances) sequences.push_back(inst.tokens);
  }
  for (const auto& scheme : schemes) {
    for (const auto& inst : corpus.instances) {
      auto marked = mark(inst, scheme);
      specials.insert(marked.special_tokens.begin(), marked.special_tokens.end());
      sequences.push_back(std::move(marked.tokens));
    }
  }
  return build_vocab(sequences, specials, max_size, lowercase, min_count);
}

std::vector<TokenId> wordpiece(std::string_view raw, const Vocabulary& vocab) {
  const std::string token = vocab.lowercase() ? lower(raw) : std::string(raw);
  const auto cps = utf8_chars(token);
  std::vector<TokenId> out;
  if (cps.empty()) {
    out.push_back(vocab.unk_id());
    return out;
  }
  std::size_t start = 0;
  std::string candidate;
  while (start < cps.size()) {
    std::optional<TokenId> match;
    std::size_t match_end = start;
    for (std::size_t end = cps.size(); end > start; --end) {
      candidate.assign(start == 0 ? "" : kContinuationPrefix);
      for (std::size_t k = start; k < end; ++k) candidate += cps[k];
      auto id = vocab.find(candidate);
      // Specials occupy their own id range and are never a subword match.
      if (id && !vocab.is_special(candidate)) {
        match = id;
        match_end = end;
        break;
      }
    }
    if (match) {
      out.push_back(*match);
      start = match_end;
    } else {
      out.push_back(vocab.unk_id());
      ++start;
    }
  }
  return out;
}

SubtokenizedInstance subtokenize(const MarkedInstance& marked, const Vocabulary& vocab) {
  for (const auto& special : marked.special_tokens) {
    if (!vocab.is_special(special)) {
      throw ValidationError("special token '" + special + "' is not registered in the vocabulary");
    }
  }
  SubtokenizedInstance out;
  out.token_to_subtoken.reserve(marked.tokens.size());
  for (const auto& token : marked.tokens) {
    out.token_to_subtoken.push_back(out.ids.size());
    if (vocab.is_special(token)) {
      out.ids.push_back(*vocab.find(token));
      continue;
    }
    auto pieces = wordpiece(token, vocab);
    out.ids.insert(out.ids.end(), pieces.begin(), pieces.end());
  }
  if (marked.subj_head >= marked.tokens.size() || marked.obj_head >= marked.tokens.size()) {
    throw ValidationError("head index outside the marked token sequence");
  }
  out.subj_head_sub = out.token_to_subtoken[marked.subj_head];
  out.obj_head_sub = out.token_to_subtoken[marked.obj_head];
  return out;
}

}  // namespace rex
