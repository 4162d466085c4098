// SPDX-License-Identifier: Apache-2.0
#include "rex/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include "rex/config.hpp"
#include "rex/corpus.hpp"
#include "rex/error.hpp"
#include "rex/eval.hpp"
#include "rex/experiment.hpp"
#include "rex/marking.hpp"
#include "rex/model.hpp"
#include "rex/synth.hpp"
#include "rex/tokenize.hpp"
#include "rex/train.hpp"

namespace rex::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void emit(const json& report, const std::string& out_path, std::ostream& out) {
  const std::string text = report.dump(2) + "\n";
  if (out_path.empty()) {
    out << text;
  } else {
    write_file(out_path, text);
  }
}

void emit_text(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
  } else {
    write_file(out_path, text);
  }
}

// Flags shared by commands that read corpus files.
struct DataFlags {
  std::string schema;
  std::string na_label{kDefaultNaLabel};
  bool lenient = false;
  bool lowercase = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--schema", schema, "Label schema JSON; inferred from the inputs when absent");
    cmd->add_option("--na-label", na_label, "NA label used when inferring the schema")
        ->capture_default_str();
    cmd->add_flag("--lenient", lenient, "Drop invalid instances instead of failing");
    cmd->add_flag("--lowercase", lowercase, "Lowercase tokens on load");
  }

  LabelSchema resolve(const std::vector<std::string>& paths) const {
    if (!schema.empty()) return load_schema(schema);
    std::vector<std::vector<RelationInstance>> sets;
    for (const auto& p : paths) {
      if (!p.empty()) sets.push_back(read_instances(p));
    }
    return infer_schema(sets, na_label);
  }

  Dataset load(const std::string& path, const LabelSchema& labels, json* dropped) const {
    std::vector<std::string> ids;
    Dataset ds = load_dataset(path, labels, {lenient, lowercase}, &ids);
    if (dropped && !ids.empty()) (*dropped)[ds.split] = ids;
    return ds;
  }
};

struct SchemeFlags {
  std::string kind{"typed_entity_marker_punct"};
  std::string head_anchor{"entity_first"};
  std::string mask_mode{"collapse"};

  void add_to(CLI::App* cmd) {
    cmd->add_option("--scheme", kind,
                    "entity_mask | entity_marker | entity_marker_punct | typed_entity_marker | "
                    "typed_entity_marker_punct")
        ->capture_default_str();
    cmd->add_option("--head-anchor", head_anchor, "entity_first | marker_start")
        ->capture_default_str();
    cmd->add_option("--mask-mode", mask_mode, "collapse | repeat (entity_mask only)")
        ->capture_default_str();
  }

  MarkingScheme build() const {
    MarkingScheme s;
    s.kind = parse_scheme_kind(kind);
    s.head_anchor = parse_head_anchor(head_anchor);
    s.mask_mode = parse_mask_mode(mask_mode);
    s.validate();
    return s;
  }
};

MarkingScheme scheme_from_meta(const json& meta) {
  MarkingScheme s;
  s.kind = parse_scheme_kind(meta.at("scheme").get<std::string>());
  s.head_anchor = parse_head_anchor(meta.at("head_anchor").get<std::string>());
  s.mask_mode = parse_mask_mode(meta.at("mask_mode").get<std::string>());
  return s;
}

std::string same_format_name(const std::string& input) {
  return fs::path(input).extension() == ".jsonl" ? "jsonl" : "json";
}

void write_subset(const std::string& path, const Dataset& subset, const std::string& like) {
  if (path.empty()) return;
  if (same_format_name(path) == "jsonl" ||
      (fs::path(path).extension() != ".json" && same_format_name(like) == "jsonl")) {
    write_jsonl(path, subset);
  } else {
    write_dataset(path, subset);
  }
}

// ---- commands -------------------------------------------------------------

struct StatsCmd {
  DataFlags data;
  std::string train, dev, test, out;

  void setup(CLI::App* cmd) {
    cmd->add_option("--train", train, "Training split file");
    cmd->add_option("--dev", dev, "Development split file");
    cmd->add_option("--test", test, "Test split file");
    cmd->add_option("--out", out, "Write the report here instead of stdout");
    data.add_to(cmd);
  }

  void operator()(std::ostream& os) const {
    if (train.empty() && dev.empty() && test.empty()) {
      throw UsageError("stats needs at least one of --train, --dev, --test");
    }
    const auto labels = data.resolve({train, dev, test});
    json dropped = json::object();
    std::vector<Dataset> sets;
    for (const auto& [name, path] : {std::pair{"train", train}, {"dev", dev}, {"test", test}}) {
      if (path.empty()) continue;
      sets.push_back(data.load(path, labels, &dropped));
      sets.back().split = name;
    }
    std::vector<const Dataset*> ptrs;
    for (const auto& s : sets) ptrs.push_back(&s);
    json report = compute_statistics(ptrs, labels).to_json();
    if (data.lenient) report["dropped"] = dropped;
    emit(report, out, os);
  }
};

struct PreprocessCmd {
  DataFlags data;
  SchemeFlags scheme;
  std::string input, out, format{"marked"};

  void setup(CLI::App* cmd) {
    cmd->add_option("--input", input, "Corpus file (JSON array or .jsonl)")->required();
    cmd->add_option("--out", out, "Output JSON Lines file; stdout when absent");
    cmd->add_option("--format", format,
                    "marked: {id, marked_tokens, subj_head, obj_head, relation, special_tokens}; "
                    "canonical: instance records")
        ->check(CLI::IsMember({"marked", "canonical"}))
        ->capture_default_str();
    data.add_to(cmd);
    scheme.add_to(cmd);
  }

  void operator()(std::ostream& os) const {
    const auto labels = data.resolve({input});
    const Dataset ds = data.load(input, labels, nullptr);
    std::string text;
    if (format == "canonical") {
      for (const auto& inst : ds.instances) text += instance_to_json(inst).dump() + "\n";
    } else {
      const MarkingScheme s = scheme.build();
      for (const auto& inst : ds.instances) text += marked_record(inst, mark(inst, s)).dump() + "\n";
    }
    emit_text(text, out, os);
  }
};

struct VocabCmd {
  DataFlags data;
  std::vector<std::string> schemes{"typed_entity_marker_punct"};
  std::string input, out;
  std::size_t max_size = 8000;
  std::size_t min_count = 1;
  bool lowercase_vocab = false;

  void setup(CLI::App* cmd) {
    cmd->add_option("--input", input, "Training corpus file")->required();
    cmd->add_option("--scheme", schemes, "Marking scheme(s) whose special tokens are reserved")
        ->capture_default_str();
    cmd->add_option("--max-size", max_size, "Vocabulary budget")->capture_default_str();
    cmd->add_option("--min-count", min_count, "Minimum count for whole-word pieces")
        ->capture_default_str();
    cmd->add_flag("--lowercase-vocab", lowercase_vocab, "Lowercase pieces and lookups");
    cmd->add_option("--out", out, "Vocabulary file; stdout when absent");
    data.add_to(cmd);
  }

  void operator()(std::ostream& os) const {
    const auto labels = data.resolve({input});
    const Dataset ds = data.load(input, labels, nullptr);
    std::vector<MarkingScheme> marks;
    for (const auto& k : schemes) {
      MarkingScheme s;
      s.kind = parse_scheme_kind(k);
      marks.push_back(s);
    }
    emit_text(build_vocab(ds, marks, max_size, lowercase_vocab, min_count).serialize(), out, os);
  }
};

struct TrainCmd {
  DataFlags data;
  SchemeFlags scheme;
  std::string train, dev, config, out_dir, out, encoder{"attn1"};
  std::vector<std::uint64_t> seeds;
  std::optional<double> lr;
  std::optional<std::size_t> epochs, batch_size;
  bool parallel = false;

  void setup(CLI::App* cmd) {
    cmd->add_option("--train", train, "Training split file")->required();
    cmd->add_option("--dev", dev, "Development split file")->required();
    cmd->add_option("--config", config, "Training config file (key = value)");
    cmd->add_option("--out-dir", out_dir, "Directory for params, vocab, schema and log")->required();
    cmd->add_option("--out", out, "Write the summary here instead of stdout");
    cmd->add_option("--encoder", encoder, "lookup | attn1")->capture_default_str();
    cmd->add_option("--seed", seeds, "Seed(s); overrides the config's seeds");
    cmd->add_option("--lr", lr, "Base learning rate override");
    cmd->add_option("--epochs", epochs, "Epoch count override");
    cmd->add_option("--batch-size", batch_size, "Batch size override");
    cmd->add_flag("--parallel-seeds", parallel, "Train seeds concurrently");
    data.add_to(cmd);
    scheme.add_to(cmd);
  }

  void operator()(std::ostream& os) const {
    TrainConfig cfg = config.empty() ? TrainConfig{} : load_train_config(config);
    if (!seeds.empty()) cfg.seeds = seeds;
    if (lr) cfg.base_lr = *lr;
    if (epochs) cfg.epochs = *epochs;
    if (batch_size) cfg.batch_size = *batch_size;
    cfg.validate();
    const MarkingScheme s = scheme.build();
    const EncoderVariant variant = parse_encoder_variant(encoder);

    const auto labels = data.resolve({train, dev});
    const Dataset tr = data.load(train, labels, nullptr);
    const Dataset dv = data.load(dev, labels, nullptr);
    const MultiSeedResult result = train_seeds(tr, dv, s, variant, cfg, parallel);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError(out_dir + ": " + ec.message());
    const fs::path dir(out_dir);
    result.vocab.save(dir / "vocab.txt");
    write_file(dir / "schema.json", schema_to_json(labels).dump(2) + "\n");

    std::string log;
    json runs = json::array();
    for (const auto& run : result.runs) {
      json meta = model_meta(s, variant, labels);
      meta["seed"] = run.seed;
      meta["best_epoch"] = run.best_epoch;
      const std::string params_name = "params_seed" + std::to_string(run.seed) + ".json";
      run.best_params.save(dir / params_name, meta);
      for (const auto& rec : run.log) {
        json j = rec.to_json();
        j["seed"] = run.seed;
        log += j.dump() + "\n";
      }
      runs.push_back({{"seed", run.seed},
                      {"params", params_name},
                      {"best_epoch", run.best_epoch},
                      {"dev_f1_per_epoch", run.dev_f1},
                      {"dev_f1", run.dev_f1.empty() ? 0.0 : run.dev_f1[run.best_epoch - 1]}});
    }
    write_file(dir / "log.jsonl", log);

    json summary = {{"config", cfg.to_json()},
                    {"model", model_meta(s, variant, labels)},
                    {"vocab_size", result.vocab.size()},
                    {"runs", runs},
                    {"median_dev_f1", result.median_dev_f1}};
    write_file(dir / "summary.json", summary.dump(2) + "\n");
    emit(summary, out, os);
  }
};

struct EvalCmd {
  DataFlags data;
  std::string gold, pred, params, vocab, pred_out, out;

  void setup(CLI::App* cmd) {
    cmd->add_option("--gold", gold, "Gold corpus file")->required();
    auto* p = cmd->add_option("--pred", pred, "Predictions JSON Lines {id, pred}");
    auto* m = cmd->add_option("--params", params, "Trained params file (from train)");
    cmd->add_option("--vocab", vocab, "Vocabulary file matching --params");
    p->excludes(m);
    cmd->add_option("--pred-out", pred_out, "Write model predictions as JSON Lines");
    cmd->add_option("--out", out, "Write the report here instead of stdout");
    data.add_to(cmd);
  }

  void operator()(std::ostream& os) const {
    if (pred.empty() == params.empty()) throw UsageError("eval needs exactly one of --pred or --params");
    if (!pred.empty()) {
      const auto labels = data.resolve({gold});
      const Dataset g = data.load(gold, labels, nullptr);
      emit(score_predictions(g, read_predictions(pred)).to_json(), out, os);
      return;
    }
    if (vocab.empty()) throw UsageError("--params needs --vocab");
    json meta;
    TrainedModel model;
    model.run.best_params = ClassifierParams::load(params, &meta);
    try {
      model.scheme = scheme_from_meta(meta);
      model.variant = parse_encoder_variant(meta.at("variant").get<std::string>());
      model.schema = schema_from_json(meta.at("schema"));
    } catch (const json::exception& e) {
      throw ParseError(params + ": incomplete model metadata: " + e.what());
    }
    model.vocab = Vocabulary::load(vocab);
    if (!data.schema.empty() && !(load_schema(data.schema) == model.schema)) {
      throw ValidationError("--schema differs from the schema the model was trained on");
    }
    const Dataset g = data.load(gold, model.schema, nullptr);
    const auto labels = predict_labels(model, g);
    std::vector<std::pair<std::string, std::string>> preds;
    std::map<std::string, std::string> by_id;
    for (std::size_t i = 0; i < g.size(); ++i) {
      preds.emplace_back(g.instances[i].id, labels[i]);
      by_id[g.instances[i].id] = labels[i];
    }
    if (!pred_out.empty()) write_predictions(pred_out, preds);
    emit(score_predictions(g, by_id).to_json(), out, os);
  }
};

struct FilterCmd {
  DataFlags data;
  std::string test, train, subset, out, roles{"any"};
  bool case_fold = false;

  void setup(CLI::App* cmd) {
    cmd->add_option("--test", test, "Test split to filter")->required();
    cmd->add_option("--train", train, "Training split whose mentions are removed")->required();
    cmd->add_flag("--case-fold", case_fold, "Compare mentions case-insensitively");
    cmd->add_option("--roles", roles, "any | same_role")
        ->check(CLI::IsMember({"any", "same_role"}))
        ->capture_default_str();
    cmd->add_option("--subset-out", subset, "Write the kept instances here (same layout as --test)");
    cmd->add_option("--out", out, "Write the report here instead of stdout");
    data.add_to(cmd);
  }

  void operator()(std::ostream& os) const {
    const auto labels = data.resolve({test, train});
    const Dataset te = data.load(test, labels, nullptr);
    const Dataset tr = data.load(train, labels, nullptr);
    MatchRule rule;
    rule.case_fold = case_fold;
    rule.roles = roles == "same_role" ? MatchRule::Roles::same_role : MatchRule::Roles::any;
    const SplitReport report = build_filtered(te, tr, rule);
    write_subset(subset, apply_split(te, report), test);
    emit(report.to_json(), out, os);
  }
};

struct CleanCmd {
  DataFlags data;
  std::string tacred, retacred, label_map, relabeled_schema, subset, out;

  void setup(CLI::App* cmd) {
    cmd->add_option("--original", tacred, "Original (noisy) test split")->required();
    cmd->add_option("--relabeled", retacred, "Relabeled test split with the same ids")->required();
    cmd->add_option("--label-map", label_map, "JSON object mapping original labels to relabeled "
                                              "ones; null marks labels with no counterpart")
        ->required();
    cmd->add_option("--relabeled-schema", relabeled_schema, "Schema of the relabeled split");
    cmd->add_option("--subset-out", subset, "Write the kept original instances here");
    cmd->add_option("--out", out, "Write the report here instead of stdout");
    data.add_to(cmd);
  }

  void operator()(std::ostream& os) const {
    const auto labels = data.resolve({tacred});
    const Dataset orig = data.load(tacred, labels, nullptr);
    const LabelSchema re_labels = relabeled_schema.empty()
                                      ? infer_schema({read_instances(retacred)}, data.na_label)
                                      : load_schema(relabeled_schema);
    const Dataset re = data.load(retacred, re_labels, nullptr);
    const SplitReport report = build_clean(orig, re, load_label_map(label_map));
    write_subset(subset, apply_split(orig, report), tacred);
    emit(report.to_json(), out, os);
  }
};

struct SynthCmd {
  std::string config, out_dir, out, noise_mode;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise_rate, name_signal;

  void setup(CLI::App* cmd) {
    cmd->add_option("--config", config, "Generator config file (key = value)");
    cmd->add_option("--out-dir", out_dir, "Directory for train.json, dev.json, test_unseen.json")
        ->required();
    cmd->add_option("--seed", seed, "Generator seed override");
    cmd->add_option("--noise-rate", noise_rate, "Training label noise rate override");
    cmd->add_option("--noise-mode", noise_mode, "uniform | type_consistent");
    cmd->add_option("--name-signal", name_signal, "Name-signal probability override");
    cmd->add_option("--out", out, "Write the report here instead of stdout");
  }

  void operator()(std::ostream& os) const {
    SynthConfig cfg = config.empty() ? SynthConfig::defaults() : load_synth_config(config);
    if (seed) cfg.seed = *seed;
    if (noise_rate) cfg.noise_rate = *noise_rate;
    if (!noise_mode.empty()) cfg.noise_mode = parse_noise_mode(noise_mode);
    if (name_signal) cfg.name_signal = *name_signal;
    const SynthCorpus corpus = generate(cfg);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError(out_dir + ": " + ec.message());
    const fs::path dir(out_dir);
    write_dataset(dir / "train.json", corpus.train);
    write_dataset(dir / "dev.json", corpus.dev);
    write_dataset(dir / "test_unseen.json", corpus.test_unseen);
    write_file(dir / "schema.json", schema_to_json(cfg.schema()).dump(2) + "\n");
    write_file(dir / "synth.cfg", format_synth_config(cfg));

    MarkingScheme typed;
    MarkingScheme masked;
    masked.kind = SchemeKind::entity_mask;
    json report = {
        {"seed", cfg.seed},
        {"sizes",
         {{"train", corpus.train.size()}, {"dev", corpus.dev.size()}, {"test_unseen", corpus.test_unseen.size()}}},
        {"test_unseen_ceilings",
         {{"type_marginal", type_marginal_ceiling(corpus.test_unseen)},
          {"typed_entity_marker_punct", marked_input_ceiling(corpus.test_unseen, typed)},
          {"entity_mask", marked_input_ceiling(corpus.test_unseen, masked)}}}};
    emit(report, out, os);
  }
};

struct ExperimentCmd {
  std::string preset{"all"}, out, synth_config, train_config;
  std::optional<std::uint64_t> seed;
  bool table = false;

  void setup(CLI::App* cmd) {
    cmd->add_option("--preset", preset, "unseen-names | label-noise | all")
        ->check(CLI::IsMember({"unseen-names", "label-noise", "all"}))
        ->capture_default_str();
    cmd->add_option("--seed", seed, "Generator seed override");
    cmd->add_option("--synth-config", synth_config, "Generator settings applied on top of the preset");
    cmd->add_option("--train-config", train_config, "Training settings applied on top of the preset");
    cmd->add_flag("--table", table, "Print a summary table instead of JSON");
    cmd->add_option("--out", out, "Write the report here instead of stdout");
  }

  ExperimentSetup customize(ExperimentSetup setup) const {
    if (!synth_config.empty()) setup.synth = load_synth_config(synth_config, setup.synth);
    if (!train_config.empty()) setup.train = load_train_config(train_config, setup.train);
    if (seed) setup.synth.seed = *seed;
    return setup;
  }

  void operator()(std::ostream& os) const {
    json report = json::object();
    std::string text;
    if (preset == "unseen-names" || preset == "all") {
      const auto r = run_unseen_names(customize(unseen_names_setup()));
      report["unseen_names"] = r.to_json();
      text += format_summary(r);
    }
    if (preset == "label-noise" || preset == "all") {
      const auto r = run_label_noise(customize(label_noise_setup()));
      report["label_noise"] = r.to_json();
      text += format_summary(r);
    }
    if (table) {
      emit_text(text, out, os);
    } else {
      emit(report, out, os);
    }
  }
};

void report_error(std::ostream& err, const char* kind, int code, const std::string& message) {
  err << json{{"error", kind}, {"code", code}, {"message", message}}.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relation extraction toolkit: corpus tools, entity marking, training and scoring", "rex"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every command");

  StatsCmd stats;
  PreprocessCmd preprocess;
  VocabCmd vocab;
  TrainCmd train;
  EvalCmd eval;
  FilterCmd filter;
  CleanCmd clean;
  SynthCmd synth;
  ExperimentCmd experiment;

  std::function<void(std::ostream&)> action;
  auto bind = [&](const char* name, const char* about, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, about);
    cmd.setup(sub);
    sub->callback([&action, &cmd] { action = [&cmd](std::ostream& os) { cmd(os); }; });
  };
  bind("stats", "Split sizes, class count and label histogram", stats);
  bind("preprocess", "Mark entities and export JSON Lines", preprocess);
  bind("vocab", "Build a subword vocabulary from a corpus", vocab);
  bind("train", "Train one model per seed with dev-F1 checkpoint selection", train);
  bind("eval", "Micro-F1 report for predictions or a trained model", eval);
  bind("filter", "Keep test instances whose mentions never occur in training", filter);
  bind("clean", "Keep test instances whose label survives relabeling", clean);
  bind("synth", "Generate a synthetic corpus", synth);
  bind("experiment", "Run the unseen-names and label-noise experiments", experiment);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      std::ostringstream ignored;
      app.exit(e, out, ignored);
      return kSuccess;
    }
    report_error(err, "usage", kUsage, e.what());
    return kUsage;
  }

  try {
    action(out);
    return kSuccess;
  } catch (const UsageError& e) {
    report_error(err, "usage", kUsage, e.what());
    return kUsage;
  } catch (const IoError& e) {
    report_error(err, "io", kIo, e.what());
    return kIo;
  } catch (const ParseError& e) {
    report_error(err, "validation", kValidation, e.what());
    return kValidation;
  } catch (const ValidationError& e) {
    report_error(err, "validation", kValidation, e.what());
    return kValidation;
  } catch (const std::exception& e) {
    report_error(err, "internal", kInternal, e.what());
    return kInternal;
  }
}

}  // namespace rex::cli
