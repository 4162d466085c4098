// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>

#include "rex/config.hpp"
#include "rex/error.hpp"
#include "rex/experiment.hpp"

using namespace rex;
namespace fs = std::filesystem;

TEST_CASE("train config parsing") {
  const auto cfg = parse_train_config(
      "# comment\n"
      "base_lr = 3e-5\n"
      "batch_size = 16\n"
      "seeds = 7, 8,9\n"
      "lowercase = true\n"
      "vocab_min_count = 3\n");
  CHECK(cfg.base_lr == 3e-5);
  CHECK(cfg.batch_size == 16);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{7, 8, 9});
  CHECK(cfg.lowercase);
  CHECK(cfg.vocab_min_count == 3);
  CHECK(cfg.epochs == TrainConfig{}.epochs);

  // Values not named keep the base.
  TrainConfig base;
  base.dim = 40;
  CHECK(parse_train_config("epochs = 2\n", base).dim == 40);
}

TEST_CASE("train config errors") {
  CHECK_THROWS_AS(parse_train_config("learning_rate = 1\n"), UsageError);
  CHECK_THROWS_AS(parse_train_config("batch_size = many\n"), UsageError);
  CHECK_THROWS_AS(parse_train_config("batch_size = 0\n"), UsageError);
  CHECK_THROWS_AS(parse_train_config("seeds = 1,x\n"), UsageError);
  CHECK_THROWS_AS(parse_train_config("lowercase = maybe\n"), UsageError);
  CHECK_THROWS_AS(parse_train_config("warmup_fraction = 1.5\n"), UsageError);
  CHECK_THROWS_AS(load_train_config("/nonexistent/train.cfg"), IoError);
}

TEST_CASE("synth config parsing replaces lists") {
  const auto cfg = parse_synth_config(
      "name_signal = 0.5\n"
      "name_rule = identity\n"
      "relation = r:a PERSON CITY\n"
      "template = r:a | SUBJ near OBJ .\n"
      "template = *neutral* | SUBJ and OBJ\n"
      "template = no_relation | SUBJ met OBJ\n"
      "cues = PERSON | mr ms\n"
      "cues = CITY | port\n"
      "shared_cues = the\n");
  CHECK(cfg.name_signal == 0.5);
  CHECK(cfg.name_rule == NameRule::identity);
  REQUIRE(cfg.relations.size() == 1);
  CHECK(cfg.relations[0].obj_type == "CITY");
  REQUIRE(cfg.templates.size() == 3);
  CHECK(cfg.templates[0].tokens == std::vector<std::string>{"SUBJ", "near", "OBJ", "."});
  CHECK(cfg.type_cues.at("PERSON") == std::vector<std::string>{"mr", "ms"});
  CHECK(cfg.shared_cues == std::vector<std::string>{"the"});
  CHECK(cfg.schema().size() == 2);
}

TEST_CASE("synth config errors") {
  CHECK_THROWS_AS(parse_synth_config("colour = red\n"), UsageError);
  CHECK_THROWS_AS(parse_synth_config("relation = r:a PERSON\n"), UsageError);
  CHECK_THROWS_AS(parse_synth_config("template = SUBJ and OBJ\n"), UsageError);
  CHECK_THROWS_AS(parse_synth_config("noise_mode = loud\n"), UsageError);
  CHECK_THROWS_AS(parse_synth_config("name_signal = 2\n"), UsageError);
  CHECK_THROWS_AS(parse_synth_config("cues = PERSON |\n"), UsageError);
}

TEST_CASE("formatted synth config parses back to the same text") {
  auto cfg = SynthConfig::defaults();
  cfg.noise_rate = 0.3;
  cfg.name_rule = NameRule::identity;
  cfg.seed = 99;
  const auto text = format_synth_config(cfg);
  auto back = parse_synth_config(text);
  CHECK(format_synth_config(back) == text);
  CHECK(back.seed == 99);
  CHECK(back.schema() == cfg.schema());
  // Same generator input, same data.
  cfg.train_size = back.train_size = 50;
  cfg.dev_size = back.dev_size = 10;
  cfg.test_size = back.test_size = 10;
  CHECK(generate(cfg).train.instances == generate(back).train.instances);
}

TEST_CASE("shipped configs load") {
  const fs::path dir = fs::path(REX_SOURCE_DIR) / "configs";
  for (const char* name : {"train_base.cfg", "train_large.cfg", "train_synth.cfg"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_train_config(dir / name));
  }
  CHECK(load_train_config(dir / "train_base.cfg").base_lr == 5e-5);
  CHECK(load_train_config(dir / "train_large.cfg").base_lr == 3e-5);
  for (const char* name : {"synth_default.cfg", "synth_unseen_names.cfg", "synth_label_noise.cfg"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_synth_config(dir / name));
  }
  CHECK(format_synth_config(load_synth_config(dir / "synth_default.cfg")) ==
        format_synth_config(SynthConfig::defaults()));

  // The experiment presets match the shipped files.
  CHECK(format_synth_config(load_synth_config(dir / "synth_unseen_names.cfg")) ==
        format_synth_config(unseen_names_setup().synth));
  CHECK(format_synth_config(load_synth_config(dir / "synth_label_noise.cfg")) ==
        format_synth_config(label_noise_setup().synth));
  CHECK(load_train_config(dir / "train_synth.cfg").to_json() == unseen_names_setup().train.to_json());
}
