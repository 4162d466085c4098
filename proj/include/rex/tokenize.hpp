// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rex/corpus.hpp"
#include "rex/marking.hpp"

namespace rex {

using TokenId = std::uint32_t;

inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kContinuationPrefix = "##";

/// Subword inventory plus a registry of atomic special tokens.
///
/// Ids are dense: specials come first (the unknown token is id 0), then
/// ordinary pieces. Continuation pieces carry the "##" prefix.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> specials, std::vector<std::string> pieces,
             bool lowercase = false);

  std::size_t size() const { return entries_.size(); }
  TokenId unk_id() const { return 0; }
  bool lowercase() const { return lowercase_; }

  std::optional<TokenId> find(std::string_view piece) const;
  bool is_special(std::string_view token) const;
  const std::string& piece(TokenId id) const { return entries_.at(id); }
  std::size_t special_count() const { return special_count_; }
  std::vector<std::string> specials() const;

  /// Plain text: header line, options, "[specials]" section, "[pieces]"
  /// section, one entry per line in id order.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);
  std::string serialize() const;
  static Vocabulary deserialize(std::string_view text);

  bool operator==(const Vocabulary& other) const {
    return entries_ == other.entries_ && special_count_ == other.special_count_ &&
           lowercase_ == other.lowercase_;
  }

 private:
  std::vector<std::string> entries_;
  std::map<std::string, TokenId, std::less<>> index_;
  std::size_t special_count_ = 0;
  bool lowercase_ = false;
};

struct SubtokenizedInstance {
  std::vector<TokenId> ids;
  std::size_t subj_head_sub = 0;
  std::size_t obj_head_sub = 0;
  /// Marked-token index -> index of its first subtoken.
  std::vector<std::size_t> token_to_subtoken;
};

/// Frequency-ranked inventory over plain token sequences. Budget order:
/// specials (with [UNK] first), single characters, then whole words seen at
/// least `min_count` times. Throws UsageError when `max_size` cannot hold
/// the specials.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sequences,
                       const std::set<std::string>& specials, std::size_t max_size,
                       bool lowercase = false, std::size_t min_count = 1);

/// Marks every instance under every scheme, registers the specials those
/// schemes need and counts the remaining tokens.
Vocabulary build_vocab(const Dataset& corpus, const std::vector<MarkingScheme>& schemes,
                       std::size_t max_size, bool lowercase = false, std::size_t min_count = 1);

/// Greedy longest-prefix split of one ordinary token. Characters with no
/// matching piece become the unknown id.
std::vector<TokenId> wordpiece(std::string_view token, const Vocabulary& vocab);

SubtokenizedInstance subtokenize(const MarkedInstance& marked, const Vocabulary& vocab);

/// UTF-8 aware split into code points.
std::vector<std::string_view> utf8_chars(std::string_view text);

}  // namespace rex
