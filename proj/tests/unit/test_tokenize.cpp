// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "rex/error.hpp"
#include "rex/tokenize.hpp"

using namespace rex;
using Pieces = std::vector<std::string>;

namespace {

Pieces pieces_of(const std::vector<TokenId>& ids, const Vocabulary& v) {
  Pieces out;
  for (auto id : ids) out.push_back(v.piece(id));
  return out;
}

Dataset bill_corpus() {
  Dataset ds;
  ds.schema = LabelSchema({"no_relation", "per:city_of_birth"}, "no_relation");
  ds.instances = {rex::testing::bill()};
  return ds;
}

}  // namespace

TEST_CASE("toy corpus inventory") {
  const std::vector<std::vector<std::string>> toy{{"aa", "ab"}, {"aa"}};
  const auto full = build_vocab(toy, {}, 10);
  CHECK(full.piece(0) == "[UNK]");
  CHECK(full.find("aa").has_value());
  CHECK(full.find("ab").has_value());
  CHECK(full.size() == 6);  // [UNK] a ##a ##b aa ab

  const auto small = build_vocab(toy, {}, 5);
  CHECK(small.find("aa").has_value());
  CHECK_FALSE(small.find("ab").has_value());
  CHECK(pieces_of(wordpiece("ab", small), small) == Pieces{"a", "##b"});
  CHECK(pieces_of(wordpiece("aa", small), small) == Pieces{"aa"});

  SUBCASE("min_count leaves rare words to pieces") {
    const auto v = build_vocab(toy, {}, 10, false, 2);
    CHECK(v.find("aa").has_value());
    CHECK_FALSE(v.find("ab").has_value());
  }
}

TEST_CASE("budget smaller than the specials") {
  const std::vector<std::vector<std::string>> toy{{"x"}};
  CHECK_THROWS_AS(build_vocab(toy, {"[E1]", "[E2]"}, 2), UsageError);
  CHECK_NOTHROW(build_vocab(toy, {"[E1]", "[E2]"}, 3));
}

TEST_CASE("specials registered per scheme") {
  const auto corpus = bill_corpus();
  MarkingScheme typed;
  typed.kind = SchemeKind::typed_entity_marker;
  auto v = build_vocab(corpus, {typed}, 100);
  for (const char* s : {"<S:PERSON>", "</S:PERSON>", "<O:CITY>", "</O:CITY>"}) {
    CHECK(v.is_special(s));
  }
  MarkingScheme punct;
  punct.kind = SchemeKind::entity_marker_punct;
  v = build_vocab(corpus, {punct}, 100);
  CHECK(v.special_count() == 1);  // only [UNK]
  CHECK_FALSE(v.is_special("@"));
  CHECK(v.find("@").has_value());
}

TEST_CASE("subtokenize") {
  SUBCASE("single-piece tokens") {
    const Vocabulary v({"[E1]", "[/E1]"}, {"Bill"});
    MarkedInstance m;
    m.tokens = {"[E1]", "Bill", "[/E1]"};
    m.subj_head = 1;
    m.obj_head = 0;
    m.special_tokens = {"[E1]", "[/E1]"};
    const auto s = subtokenize(m, v);
    CHECK(s.ids.size() == 3);
    CHECK(s.subj_head_sub == 1);
    CHECK(s.token_to_subtoken == std::vector<std::size_t>{0, 1, 2});
  }
  SUBCASE("Seattle splits into Sea ##ttle") {
    const Vocabulary v({}, {"was", "born", "in", "Sea", "##ttle", "##t", "S", "B", "##ill", "."});
    MarkedInstance m;
    m.tokens = {"Bill", "was", "born", "in", "Seattle", "."};
    m.subj_head = 0;
    m.obj_head = 4;
    const auto s = subtokenize(m, v);
    CHECK(pieces_of(s.ids, v) == Pieces{"B", "##ill", "was", "born", "in", "Sea", "##ttle", "."});
    CHECK(s.obj_head_sub == 5);
    CHECK(v.piece(s.ids[s.obj_head_sub]) == "Sea");
    CHECK(s.subj_head_sub == 0);
  }
  SUBCASE("unmatched characters become [UNK] and the rest continues") {
    const Vocabulary v({}, {"a", "##b"});
    CHECK(pieces_of(wordpiece("axb", v), v) == Pieces{"a", "[UNK]", "##b"});
    CHECK(pieces_of(wordpiece("ü", v), v) == Pieces{"[UNK]"});
  }
  SUBCASE("unregistered special token") {
    const Vocabulary v({}, {"B", "##ill"});
    MarkedInstance m;
    m.tokens = {"[E1]", "Bill"};
    m.special_tokens = {"[E1]"};
    m.subj_head = 1;
    try {
      (void)subtokenize(m, v);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("[E1]") != std::string::npos);
    }
  }
}

TEST_CASE("lowercase vocabulary") {
  const std::vector<std::vector<std::string>> seqs{{"Bill", "bill"}};
  const auto v = build_vocab(seqs, {}, 50, true);
  CHECK(v.lowercase());
  CHECK(v.find("bill").has_value());
  CHECK(pieces_of(wordpiece("BILL", v), v) == Pieces{"bill"});
}

TEST_CASE("serialization round trip") {
  const auto v = build_vocab(bill_corpus(), {MarkingScheme{}}, 40, false);
  CHECK(Vocabulary::deserialize(v.serialize()) == v);
  CHECK_THROWS_AS(Vocabulary::deserialize("not a vocabulary"), ParseError);
}

TEST_CASE("properties over random marked instances") {
  std::mt19937_64 rng(7);
  const std::vector<std::string> labels{"no_relation", "r"};
  Dataset ds;
  ds.schema = LabelSchema(labels, "no_relation");
  for (int i = 0; i < 100; ++i) {
    ds.instances.push_back(rex::testing::random_instance(rng, "t" + std::to_string(i), labels));
  }
  std::vector<MarkingScheme> schemes;
  for (auto k : all_scheme_kinds()) {
    MarkingScheme s;
    s.kind = k;
    schemes.push_back(s);
  }
  // A tight budget forces splitting and some [UNK].
  const auto vocab = build_vocab(ds, schemes, 60);
  for (const auto& inst : ds.instances) {
    for (const auto& scheme : schemes) {
      const auto m = mark(inst, scheme);
      const auto s = subtokenize(m, vocab);
      REQUIRE(s.token_to_subtoken.size() == m.tokens.size());
      for (std::size_t k = 1; k < s.token_to_subtoken.size(); ++k) {
        CHECK(s.token_to_subtoken[k - 1] < s.token_to_subtoken[k]);
      }
      for (std::size_t k = 0; k < m.tokens.size(); ++k) {
        if (!m.special_tokens.contains(m.tokens[k])) continue;
        const std::size_t a = s.token_to_subtoken[k];
        const std::size_t b = k + 1 < m.tokens.size() ? s.token_to_subtoken[k + 1] : s.ids.size();
        CHECK(b - a == 1);
        CHECK(vocab.piece(s.ids[a]) == m.tokens[k]);
      }
      CHECK(s.subj_head_sub == s.token_to_subtoken[m.subj_head]);
      CHECK(s.obj_head_sub == s.token_to_subtoken[m.obj_head]);
      if (scheme.kind != SchemeKind::entity_mask) {
        // The head piece starts the subject's first surface token.
        const auto& piece = vocab.piece(s.ids[s.subj_head_sub]);
        const auto& word = inst.tokens[inst.subj.start];
        CHECK((piece == "[UNK]" || word.starts_with(piece) || vocab.is_special(word)));
      }
      CHECK(subtokenize(m, vocab).ids == s.ids);
    }
  }
}

TEST_CASE("utf8 characters") {
  CHECK(utf8_chars("Zürich").size() == 6);
  CHECK(utf8_chars("").empty());
}
