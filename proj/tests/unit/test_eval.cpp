// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <random>
#include <set>

#include "../common/oracles.hpp"
#include "fixtures.hpp"
#include "rex/error.hpp"
#include "rex/eval.hpp"

using namespace rex;
using rex::testing::make_instance;
using Labels = std::vector<std::string>;

namespace {

const LabelSchema kSchema({"NA", "r1", "r2", "r3", "r4"}, "NA");

Dataset dataset(std::vector<RelationInstance> instances, const LabelSchema& schema) {
  Dataset ds;
  ds.schema = schema;
  ds.instances = std::move(instances);
  return ds;
}

// Mentions drawn from a small pool so overlaps are common.
Dataset random_dataset(std::mt19937_64& rng, std::size_t n, const std::string& prefix) {
  static const Labels names{"Ann", "ann", "Bob", "Acme", "Oslo", "Rome", "Lima", "Kiev"};
  const LabelSchema schema({"no_relation", "r"}, "no_relation");
  auto pick = [&](std::size_t k) { return std::uniform_int_distribution<std::size_t>(0, k - 1)(rng); };
  Dataset ds;
  ds.schema = schema;
  for (std::size_t i = 0; i < n; ++i) {
    ds.instances.push_back(make_instance(prefix + std::to_string(i),
                                         {names[pick(names.size())], "and", names[pick(names.size())]},
                                         {0, 0}, {2, 2}, pick(2) ? "r" : "no_relation"));
  }
  return ds;
}

}  // namespace

TEST_CASE("worked example") {
  const auto r = score(Labels{"r1", "r1", "NA", "r2"}, Labels{"r1", "NA", "r2", "r2"}, kSchema);
  CHECK(r.correct_positive == 2);
  CHECK(r.predicted_positive == 3);
  CHECK(r.gold_positive == 3);
  CHECK(r.precision == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(r.recall == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(r.f1 == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(r.accuracy == 0.5);
  CHECK_FALSE(r.precision_by_convention);
}

TEST_CASE("perfect predictions and the all-NA convention") {
  auto r = score(Labels{"r1", "NA", "r3"}, Labels{"r1", "NA", "r3"}, kSchema);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.f1 == 1.0);

  r = score(Labels{"NA", "NA"}, Labels{"NA", "NA"}, kSchema);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.f1 == 1.0);
  CHECK(r.precision_by_convention);
  CHECK(r.recall_by_convention);
  const auto j = r.to_json();
  CHECK(j.at("precision_by_convention") == true);
}

TEST_CASE("scorer errors") {
  CHECK_THROWS_AS(score(Labels{"r1"}, Labels{"r1", "r2"}, kSchema), ValidationError);
  CHECK_THROWS_AS(score(Labels{"r1"}, Labels{"r9"}, kSchema), ValidationError);
}

TEST_CASE("scorer matches a brute-force tally on random predictions") {
  std::mt19937_64 rng(31337);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
    Labels gold(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      gold[i] = kSchema.label(rng() % 5);
      pred[i] = kSchema.label(rng() % 5);
    }
    const auto r = score(gold, pred, kSchema);
    const auto o = oracle::brute_force_micro(gold, pred, "NA");
    CHECK(r.precision == o.precision);
    CHECK(r.recall == o.recall);
    CHECK(r.f1 == o.f1);
  }
}

TEST_CASE("renaming labels consistently leaves the report unchanged") {
  const LabelSchema renamed({"none", "a", "b", "c", "d"}, "none");
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    Labels gold, pred, gold2, pred2;
    for (int i = 0; i < 20; ++i) {
      const auto g = rng() % 5, p = rng() % 5;
      gold.push_back(kSchema.label(g));
      pred.push_back(kSchema.label(p));
      gold2.push_back(renamed.label(g));
      pred2.push_back(renamed.label(p));
    }
    const auto a = score(gold, pred, kSchema);
    const auto b = score(gold2, pred2, renamed);
    CHECK(a.precision == b.precision);
    CHECK(a.recall == b.recall);
    CHECK(a.f1 == b.f1);
  }
}

TEST_CASE("per-relation tallies") {
  const auto r = score(Labels{"r1", "r1", "NA", "r2"}, Labels{"r1", "NA", "r2", "r2"}, kSchema);
  REQUIRE(r.per_relation.size() == 5);
  CHECK(r.per_relation[1].label == "r1");
  CHECK(r.per_relation[1].gold == 2);
  CHECK(r.per_relation[1].predicted == 1);
  CHECK(r.per_relation[1].correct == 1);
  CHECK(r.per_relation[2].predicted == 2);
}

TEST_CASE("prediction files") {
  const auto path = std::filesystem::temp_directory_path() / "rex_preds.jsonl";
  write_predictions(path, {{"a", "r1"}, {"b", "NA"}});
  const auto preds = read_predictions(path);
  CHECK(preds.at("a") == "r1");
  CHECK(preds.at("b") == "NA");

  const auto gold = dataset({make_instance("a", {"x", "y"}, {0, 0}, {1, 1}, "r1"),
                             make_instance("b", {"x", "y"}, {0, 0}, {1, 1}, "r2")},
                            kSchema);
  const auto r = score_predictions(gold, preds);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 0.5);

  const auto missing = dataset({make_instance("c", {"x", "y"}, {0, 0}, {1, 1}, "r1")}, kSchema);
  CHECK_THROWS_AS(score_predictions(missing, preds), ValidationError);
  std::filesystem::remove(path);
}

TEST_CASE("filtered split") {
  const auto test = dataset({make_instance("t1", {"Bill", "Gates", "founded", "Microsoft"}, {0, 1}, {3, 3}, "r1"),
                             make_instance("t2", {"Ann", "visited", "Oslo"}, {0, 0}, {2, 2}, "NA"),
                             make_instance("t3", {"Paris", "hired", "bob"}, {2, 2}, {0, 0}, "r2")},
                            kSchema);
  SUBCASE("empty train keeps everything") {
    const auto r = build_filtered(test, dataset({}, kSchema));
    CHECK(r.kept_ids == Labels{"t1", "t2", "t3"});
    CHECK(r.pruned_count() == 0);
    CHECK(apply_split(test, r).instances == test.instances);
  }
  SUBCASE("train equal to test keeps nothing") {
    CHECK(build_filtered(test, test).kept_count() == 0);
  }
  SUBCASE("either mention matching either role prunes") {
    const auto train = dataset({make_instance("x", {"Oslo", "near", "Lima"}, {0, 0}, {2, 2}, "NA")}, kSchema);
    const auto r = build_filtered(test, train);
    CHECK(r.kept_ids == Labels{"t1", "t3"});
    CHECK(r.pruned_ids == Labels{"t2"});

    MatchRule same_role;
    same_role.roles = MatchRule::Roles::same_role;
    CHECK(build_filtered(test, train, same_role).kept_count() == 3);
  }
  SUBCASE("multi-token mentions match as whole strings") {
    const auto train = dataset({make_instance("x", {"Gates", "met", "Bill"}, {0, 0}, {2, 2}, "NA")}, kSchema);
    CHECK(build_filtered(test, train).kept_count() == 3);
  }
  SUBCASE("case folding") {
    const auto train = dataset({make_instance("x", {"Bob", "met", "Zed"}, {0, 0}, {2, 2}, "NA")}, kSchema);
    CHECK(build_filtered(test, train).kept_count() == 3);
    MatchRule folded;
    folded.case_fold = true;
    const auto r = build_filtered(test, train, folded);
    CHECK(r.pruned_ids == Labels{"t3"});
    CHECK(r.to_json().at("rule").get<std::string>().find("folded") != std::string::npos);
  }
}

TEST_CASE("filtered split properties") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    const auto test = random_dataset(rng, 30, "t");
    const auto train = random_dataset(rng, 6, "x");
    const auto bigger = [&] {
      auto b = train;
      const auto extra = random_dataset(rng, 4, "y");
      b.instances.insert(b.instances.end(), extra.instances.begin(), extra.instances.end());
      return b;
    }();
    const auto once = build_filtered(test, train);
    const auto kept = apply_split(test, once);
    // Subset, order preserved, partition complete.
    CHECK(once.kept_count() + once.pruned_count() == test.size());
    std::size_t cursor = 0;
    for (const auto& inst : kept.instances) {
      while (cursor < test.size() && test.instances[cursor].id != inst.id) ++cursor;
      CHECK(cursor < test.size());
    }
    // Idempotent.
    CHECK(build_filtered(kept, train).kept_ids == once.kept_ids);
    // More training data never grows the filtered set.
    const auto more = build_filtered(test, bigger);
    const std::set<std::string> base(once.kept_ids.begin(), once.kept_ids.end());
    for (const auto& id : more.kept_ids) CHECK(base.contains(id));
  }
}

TEST_CASE("clean split") {
  const LabelSchema old_schema({"no_relation", "per:city_of_birth", "org:founded_by", "per:employee_of",
                                "per:title", "org:member_of"},
                               "no_relation");
  const LabelSchema new_schema({"no_relation", "per:city_of_birth", "org:founded_by", "per:employee_of",
                                "per:identity"},
                               "no_relation");
  auto inst = [](std::string id, std::string rel) {
    return make_instance(std::move(id), {"A", "x", "B"}, {0, 0}, {2, 2}, std::move(rel));
  };
  const auto original = dataset({inst("a", "per:city_of_birth"), inst("b", "org:founded_by"),
                                 inst("c", "no_relation"), inst("d", "per:employee_of"),
                                 inst("e", "per:title"), inst("f", "per:employee_of")},
                                old_schema);
  const auto relabeled = dataset({inst("a", "per:city_of_birth"), inst("b", "org:founded_by"),
                                  inst("c", "no_relation"), inst("d", "no_relation"),
                                  inst("e", "per:employee_of")},
                                 new_schema);
  std::map<std::string, std::optional<std::string>> identity;
  for (const auto& l : old_schema.labels()) identity[l] = l;

  SUBCASE("two relabeled and one missing id leave three") {
    const auto r = build_clean(original, relabeled, identity);
    CHECK(r.kept_ids == Labels{"a", "b", "c"});
    CHECK(r.pruned_ids == Labels{"d", "e", "f"});
  }
  SUBCASE("identical datasets keep everything") {
    CHECK(build_clean(original, original, identity).kept_count() == 6);
  }
  SUBCASE("mapped labels and labels with no counterpart") {
    auto map = identity;
    map["per:title"] = "per:employee_of";
    map["per:city_of_birth"] = std::nullopt;
    const auto r = build_clean(original, relabeled, map);
    CHECK(r.kept_ids == Labels{"b", "c", "e"});
  }
  SUBCASE("duplicate ids") {
    auto dup = original;
    dup.instances.push_back(inst("a", "no_relation"));
    CHECK_THROWS_AS(build_clean(dup, relabeled, identity), ValidationError);
    auto dup2 = relabeled;
    dup2.instances.push_back(inst("b", "no_relation"));
    CHECK_THROWS_AS(build_clean(original, dup2, identity), ValidationError);
  }
  SUBCASE("label map file") {
    const auto path = std::filesystem::temp_directory_path() / "rex_label_map.json";
    write_file(path, R"({"per:title": "per:employee_of", "org:member_of": null})");
    const auto map = load_label_map(path);
    CHECK(map.at("per:title") == std::optional<std::string>("per:employee_of"));
    CHECK_FALSE(map.at("org:member_of").has_value());
    std::filesystem::remove(path);
  }
}
