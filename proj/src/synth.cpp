// SPDX-License-Identifier: Apache-2.0
#include "rex/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "rex/error.hpp"

namespace rex {

namespace {

struct Name {
  std::string cue;
  std::string stem;

  std::string mention() const { return cue + " " + stem; }
};

using NamePools = std::map<std::string, std::vector<Name>>;

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

class Generator {
 public:
  explicit Generator(const SynthConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

  SynthCorpus run() {
    const auto schema = cfg_.schema();
    signatures_ = cfg_.signatures();
    for (const auto& r : cfg_.relations) by_signature_[{r.subj_type, r.obj_type}].push_back(r.name);
    build_pools();
    build_name_table();

    SynthCorpus out;
    out.train = make_split("train", cfg_.train_size, visible_, schema);
    out.dev = make_split("dev", cfg_.dev_size, visible_, schema);
    out.test_unseen = make_split("test_unseen", cfg_.test_size, test_only_, schema);
    return out;
  }

 private:
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  template <class T>
  const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }

  std::string fresh_stem() {
    static constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n",
                                                   "p", "r", "s", "t", "v", "z", "br", "tr"};
    static constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u"};
    static constexpr std::string_view kCodas[] = {"", "n", "r", "s", "l"};
    for (;;) {
      std::string stem;
      const std::size_t syllables = 2 + below(2);
      for (std::size_t s = 0; s < syllables; ++s) {
        stem += kOnsets[below(std::size(kOnsets))];
        stem += kVowels[below(std::size(kVowels))];
      }
      stem += kCodas[below(std::size(kCodas))];
      stem[0] = static_cast<char>(stem[0] - 'a' + 'A');
      if (used_stems_.insert(stem).second) return stem;
    }
  }

  void build_pools() {
    std::set<std::string> types;
    for (const auto& r : cfg_.relations) {
      types.insert(r.subj_type);
      types.insert(r.obj_type);
    }
    for (const auto& type : types) {
      for (auto* pool : {&visible_, &test_only_}) {
        const std::size_t n = pool == &visible_ ? cfg_.visible_names_per_type : cfg_.test_names_per_type;
        auto& names = (*pool)[type];
        const auto& own = cfg_.type_cues.at(type);
        for (std::size_t k = 0; k < n; ++k) {
          const bool shared = !cfg_.shared_cues.empty() && uniform() < cfg_.type_ambiguity;
          std::string cue = shared ? pick(cfg_.shared_cues) : pick(own);
          names.push_back({std::move(cue), fresh_stem()});
        }
      }
    }
  }

  std::string name_key(const Name& n) const {
    return cfg_.name_rule == NameRule::morpheme ? n.cue : n.mention();
  }

  void build_name_table() {
    std::set<std::string> keys;
    for (const auto* pools : {&visible_, &test_only_}) {
      for (const auto& [type, names] : *pools) {
        for (const auto& n : names) keys.insert(name_key(n));
      }
    }
    for (const auto& key : keys) {
      for (const auto& sig : signatures_) {
        auto candidates = by_signature_.at(sig);
        candidates.push_back(cfg_.na_label);
        name_table_[{key, sig}] = pick(candidates);
      }
    }
  }

  const TemplateSpec& template_for(std::string_view label) {
    std::vector<const TemplateSpec*> matches;
    for (const auto& t : cfg_.templates) {
      if (std::find(t.labels.begin(), t.labels.end(), label) != t.labels.end()) matches.push_back(&t);
    }
    return *matches[below(matches.size())];
  }

  Dataset make_split(const std::string& split, std::size_t n, const NamePools& pools,
                     const LabelSchema& schema) {
    Dataset ds;
    ds.split = split;
    ds.schema = schema;
    ds.instances.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Signature sig;
      std::string label;
      const TemplateSpec* tmpl = nullptr;
      const bool by_name = uniform() < cfg_.name_signal;
      if (!by_name) {
        if (uniform() < cfg_.na_fraction) {
          label = cfg_.na_label;
          sig = pick(signatures_);
        } else {
          const auto& rel = pick(cfg_.relations);
          label = rel.name;
          sig = {rel.subj_type, rel.obj_type};
        }
        tmpl = &template_for(label);
      } else {
        sig = pick(signatures_);
        tmpl = &template_for(kNeutralLabel);
      }
      const Name& subj = pick(pools.at(sig.first));
      const Name* obj = &pick(pools.at(sig.second));
      while (obj->mention() == subj.mention()) obj = &pick(pools.at(sig.second));
      if (by_name) label = name_table_.at({name_key(subj), sig});

      RelationInstance inst;
      inst.id = split + "-" + std::to_string(i);
      inst.subj_type = sig.first;
      inst.obj_type = sig.second;
      inst.relation = label;
      for (const auto& tok : tmpl->tokens) {
        const bool is_subj = tok == kSubjSlot;
        if (is_subj || tok == kObjSlot) {
          const Name& name = is_subj ? subj : *obj;
          Span& span = is_subj ? inst.subj : inst.obj;
          span.start = inst.tokens.size();
          inst.tokens.push_back(name.cue);
          inst.tokens.push_back(name.stem);
          span.end = inst.tokens.size() - 1;
        } else {
          inst.tokens.push_back(tok);
        }
      }
      validate(inst, schema);
      ds.instances.push_back(std::move(inst));
    }
    return ds;
  }

  const SynthConfig& cfg_;
  std::mt19937_64 rng_;
  std::vector<Signature> signatures_;
  std::map<Signature, std::vector<std::string>> by_signature_;
  std::set<std::string> used_stems_;
  NamePools visible_;
  NamePools test_only_;
  std::map<std::pair<std::string, Signature>, std::string> name_table_;
};

}  // namespace

std::string_view to_string(NameRule rule) { return rule == NameRule::morpheme ? "morpheme" : "identity"; }
std::string_view to_string(NoiseMode mode) { return mode == NoiseMode::uniform ? "uniform" : "type_consistent"; }

NameRule parse_name_rule(std::string_view name) {
  if (name == "morpheme") return NameRule::morpheme;
  if (name == "identity") return NameRule::identity;
  throw UsageError("unknown name rule '" + std::string(name) + "'");
}

NoiseMode parse_noise_mode(std::string_view name) {
  if (name == "uniform") return NoiseMode::uniform;
  if (name == "type_consistent") return NoiseMode::type_consistent;
  throw UsageError("unknown noise mode '" + std::string(name) + "'");
}

SynthConfig SynthConfig::defaults() {
  SynthConfig cfg;
  cfg.relations = {
      {"per:city_of_birth", "PERSON", "CITY"},
      {"per:cities_of_residence", "PERSON", "CITY"},
      {"per:employee_of", "PERSON", "ORGANIZATION"},
      {"per:stateorprovince_of_birth", "PERSON", "STATE_OR_PROVINCE"},
      {"org:city_of_headquarters", "ORGANIZATION", "CITY"},
      {"org:founded_by", "ORGANIZATION", "PERSON"},
  };
  auto t = [](std::vector<std::string> labels, std::string_view text) {
    return TemplateSpec{std::move(labels), words(text)};
  };
  cfg.templates = {
      t({"per:city_of_birth", "per:stateorprovince_of_birth"}, "SUBJ was born in OBJ ."),
      t({"per:city_of_birth"}, "OBJ is the birthplace of SUBJ ."),
      t({"per:cities_of_residence", "org:city_of_headquarters"}, "SUBJ is based in OBJ ."),
      t({"per:cities_of_residence"}, "SUBJ has lived in OBJ for years ."),
      t({"per:employee_of"}, "OBJ hired SUBJ last year ."),
      t({"per:stateorprovince_of_birth"}, "SUBJ grew up as a child of OBJ ."),
      t({"org:city_of_headquarters"}, "OBJ hosts the head office of SUBJ ."),
      t({"org:founded_by"}, "SUBJ was started by OBJ ."),
      t({"per:employee_of", "per:stateorprovince_of_birth", "org:city_of_headquarters",
         "org:founded_by"},
        "SUBJ has close ties to OBJ ."),
      t({"no_relation"}, "SUBJ visited OBJ once ."),
      t({"no_relation"}, "SUBJ and OBJ appeared in the same report ."),
      t({"no_relation"}, "SUBJ criticized OBJ on Monday ."),
      t({std::string(kNeutralLabel)}, "sources mention SUBJ alongside OBJ ."),
  };
  cfg.type_cues = {
      {"PERSON", {"Anna", "Boris", "Clara", "Dmitri", "Elena", "Felix"}},
      {"ORGANIZATION", {"Apex", "Nordic", "Vertex", "Summit", "Pioneer", "Harbor"}},
      {"CITY", {"Port", "Lake", "Fort", "Bay", "Mount", "Glen"}},
      {"STATE_OR_PROVINCE", {"North", "South", "East", "West", "Upper", "Lower"}},
  };
  cfg.shared_cues = {"Grand", "Saint", "Royal", "Golden", "Silver", "Jordan"};
  return cfg;
}

void SynthConfig::validate() const {
  auto unit = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw UsageError(std::string(what) + " must lie in [0, 1]");
  };
  unit(type_ambiguity, "type_ambiguity");
  unit(name_signal, "name_signal");
  unit(na_fraction, "na_fraction");
  unit(noise_rate, "noise_rate");
  if (relations.empty()) throw UsageError("synthetic config has no relations");
  if (visible_names_per_type == 0 || test_names_per_type == 0) throw UsageError("name pools are empty");
  if (train_size == 0) throw UsageError("train_size must be positive");

  std::set<std::string> rel_names;
  std::map<std::string, Signature> sig_of;
  for (const auto& r : relations) {
    if (r.name == na_label || !rel_names.insert(r.name).second) {
      throw UsageError("duplicate or reserved relation name '" + r.name + "'");
    }
    sig_of[r.name] = {r.subj_type, r.obj_type};
    for (const auto* type : {&r.subj_type, &r.obj_type}) {
      auto it = type_cues.find(*type);
      if (it == type_cues.end() || it->second.empty()) {
        throw UsageError("no cue words for NER type " + *type);
      }
    }
  }

  std::set<std::string> covered;
  for (const auto& t : templates) {
    const auto slots_s = std::count(t.tokens.begin(), t.tokens.end(), kSubjSlot);
    const auto slots_o = std::count(t.tokens.begin(), t.tokens.end(), kObjSlot);
    if (slots_s != 1 || slots_o != 1) throw UsageError("template needs exactly one SUBJ and one OBJ slot");
    if (t.labels.empty()) throw UsageError("template without labels");
    std::set<Signature> sigs;
    for (const auto& label : t.labels) {
      covered.insert(label);
      if (label == na_label || label == kNeutralLabel) {
        if (t.labels.size() != 1) throw UsageError("NA and neutral templates cannot be shared");
        continue;
      }
      auto it = sig_of.find(label);
      if (it == sig_of.end()) throw UsageError("template refers to unknown relation '" + label + "'");
      if (!sigs.insert(it->second).second) {
        throw UsageError("shared template lists two relations with the same signature");
      }
    }
  }
  for (const auto& r : relations) {
    if (!covered.count(r.name)) throw UsageError("relation " + r.name + " has no template");
  }
  if (na_fraction > 0.0 && !covered.count(na_label)) throw UsageError("no template for " + na_label);
  if (name_signal > 0.0 && !covered.count(std::string(kNeutralLabel))) {
    throw UsageError("name_signal > 0 needs a *neutral* template");
  }
}

LabelSchema SynthConfig::schema() const {
  std::vector<std::string> labels{na_label};
  for (const auto& r : relations) labels.push_back(r.name);
  return LabelSchema(std::move(labels), na_label);
}

std::vector<Signature> SynthConfig::signatures() const {
  std::vector<Signature> out;
  for (const auto& r : relations) {
    Signature s{r.subj_type, r.obj_type};
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
  }
  return out;
}

SynthCorpus generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthCorpus corpus = Generator(cfg).run();
  if (cfg.noise_rate > 0.0) {
    corpus.train = inject_noise(corpus.train, cfg.noise_rate, cfg.noise_mode, cfg.seed + 1);
  }
  return corpus;
}

std::map<Signature, std::vector<std::string>> observed_signatures(const Dataset& data) {
  std::map<Signature, std::set<std::string>> seen;
  for (const auto& inst : data.instances) {
    if (inst.relation == data.schema.na_label()) continue;
    seen[{inst.subj_type, inst.obj_type}].insert(inst.relation);
  }
  std::map<Signature, std::vector<std::string>> out;
  for (auto& [sig, rels] : seen) out[sig] = {rels.begin(), rels.end()};
  return out;
}

Dataset inject_noise(const Dataset& train, double rate, NoiseMode mode, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw UsageError("noise rate must lie in [0, 1]");
  Dataset out = train;
  const std::size_t n = train.size();
  const auto flips = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  if (flips == 0) return out;

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> chosen;
  std::sample(order.begin(), order.end(), std::back_inserter(chosen), flips, rng);

  const auto compatible = observed_signatures(train);
  const auto& na = train.schema.na_label();
  for (auto idx : chosen) {
    auto& inst = out.instances[idx];
    std::vector<std::string> candidates;
    if (mode == NoiseMode::uniform) {
      for (const auto& l : train.schema.labels()) {
        if (l != inst.relation) candidates.push_back(l);
      }
    } else {
      auto it = compatible.find({inst.subj_type, inst.obj_type});
      if (it != compatible.end()) {
        for (const auto& l : it->second) {
          if (l != inst.relation) candidates.push_back(l);
        }
      }
      if (candidates.empty()) candidates.push_back(na);
    }
    inst.relation = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
  }
  return out;
}

double type_marginal_ceiling(const Dataset& data) {
  if (data.empty()) return 0.0;
  std::map<Signature, std::map<std::string, std::size_t>> counts;
  for (const auto& inst : data.instances) ++counts[{inst.subj_type, inst.obj_type}][inst.relation];
  std::size_t best = 0;
  for (const auto& [sig, labels] : counts) {
    std::size_t top = 0;
    for (const auto& [label, c] : labels) top = std::max(top, c);
    best += top;
  }
  return static_cast<double>(best) / static_cast<double>(data.size());
}

double marked_input_ceiling(const Dataset& data, const MarkingScheme& scheme) {
  if (data.empty()) return 0.0;
  std::map<std::vector<std::string>, std::map<std::string, std::size_t>> counts;
  for (const auto& inst : data.instances) ++counts[mark(inst, scheme).tokens][inst.relation];
  std::size_t best = 0;
  for (const auto& [input, labels] : counts) {
    std::size_t top = 0;
    for (const auto& [label, c] : labels) top = std::max(top, c);
    best += top;
  }
  return static_cast<double>(best) / static_cast<double>(data.size());
}

std::size_t count_label_changes(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size()) throw ValidationError("datasets are not aligned");
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a.instances[i].relation != b.instances[i].relation;
  return n;
}

}  // namespace rex
