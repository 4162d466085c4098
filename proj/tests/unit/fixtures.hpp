// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "rex/corpus.hpp"

namespace rex::testing {

inline RelationInstance bill() {
  RelationInstance r;
  r.id = "bill";
  r.tokens = {"Bill", "was", "born", "in", "Seattle", "."};
  r.subj = {0, 0};
  r.obj = {4, 4};
  r.subj_type = "PERSON";
  r.obj_type = "CITY";
  r.relation = "per:city_of_birth";
  return r;
}

inline RelationInstance make_instance(std::string id, std::vector<std::string> tokens, Span subj,
                                      Span obj, std::string relation,
                                      std::string subj_type = "PERSON",
                                      std::string obj_type = "ORGANIZATION") {
  RelationInstance r;
  r.id = std::move(id);
  r.tokens = std::move(tokens);
  r.subj = subj;
  r.obj = obj;
  r.subj_type = std::move(subj_type);
  r.obj_type = std::move(obj_type);
  r.relation = std::move(relation);
  return r;
}

// Random valid instance: 2..24 tokens, disjoint spans in either order,
// entities possibly adjacent, multi-word types included.
inline RelationInstance random_instance(std::mt19937_64& rng, const std::string& id,
                                        const std::vector<std::string>& labels) {
  static const std::vector<std::string> words{"the", "Bill",  "@",   "#",  "Sea", "ttle", "was",
                                              "in",  "Zürich", "*", "^",  ",",   "of",   "[E1]"};
  static const std::vector<std::string> types{"PERSON", "CITY", "ORGANIZATION",
                                              "STATE_OR_PROVINCE", "DATE"};
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  RelationInstance r;
  r.id = id;
  const std::size_t n = 2 + pick(23);
  for (std::size_t i = 0; i < n; ++i) r.tokens.push_back(words[pick(words.size())]);
  // Split [0, n) at a cut point; one entity on each side.
  const std::size_t cut = 1 + pick(n - 1);
  auto span_in = [&](std::size_t lo, std::size_t hi) {  // within [lo, hi)
    std::size_t a = lo + pick(hi - lo), b = lo + pick(hi - lo);
    if (a > b) std::swap(a, b);
    return Span{a, b};
  };
  Span left = span_in(0, cut), right = span_in(cut, n);
  if (pick(2)) std::swap(left, right);
  r.subj = left;
  r.obj = right;
  r.subj_type = types[pick(types.size())];
  r.obj_type = types[pick(types.size())];
  r.relation = labels[pick(labels.size())];
  return r;
}

}  // namespace rex::testing
