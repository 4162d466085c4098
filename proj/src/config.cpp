// SPDX-License-Identifier: Apache-2.0
#include "rex/config.hpp"

#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/program_options.hpp>

#include "rex/corpus.hpp"
#include "rex/error.hpp"

namespace po = boost::program_options;

namespace rex {

namespace {

po::variables_map parse(std::string_view text, const po::options_description& desc) {
  std::istringstream in{std::string(text)};
  po::variables_map vm;
  try {
    po::store(po::parse_config_file(in, desc, false), vm);
    po::notify(vm);
  } catch (const po::error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return vm;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  boost::split(out, text, boost::is_any_of(" \t"), boost::token_compress_on);
  out.erase(std::remove(out.begin(), out.end(), std::string()), out.end());
  return out;
}

std::pair<std::string, std::string> split_bar(const std::string& line, const char* key) {
  const auto bar = line.find('|');
  if (bar == std::string::npos) throw UsageError(std::string("config: '") + key + "' needs '|': " + line);
  return {boost::trim_copy(line.substr(0, bar)), boost::trim_copy(line.substr(bar + 1))};
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw UsageError("config: expected a boolean, got '" + v + "'");
}

}  // namespace

TrainConfig parse_train_config(std::string_view text, TrainConfig cfg) {
  po::options_description desc;
  desc.add_options()
      ("base_lr", po::value<double>())
      ("batch_size", po::value<std::size_t>())
      ("epochs", po::value<std::size_t>())
      ("warmup_fraction", po::value<double>())
      ("seeds", po::value<std::string>())
      ("adam_beta1", po::value<double>())
      ("adam_beta2", po::value<double>())
      ("adam_eps", po::value<double>())
      ("grad_clip", po::value<double>())
      ("allow_zero_epochs", po::value<std::string>())
      ("dim", po::value<std::size_t>())
      ("ff_dim", po::value<std::size_t>())
      ("max_len", po::value<std::size_t>())
      ("vocab_size", po::value<std::size_t>())
      ("vocab_min_count", po::value<std::size_t>())
      ("init_scale", po::value<double>())
      ("lowercase", po::value<std::string>());
  const auto vm = parse(text, desc);
  auto get = [&](const char* key, auto& field) {
    if (vm.count(key)) field = vm[key].as<std::decay_t<decltype(field)>>();
  };
  get("base_lr", cfg.base_lr);
  get("batch_size", cfg.batch_size);
  get("epochs", cfg.epochs);
  get("warmup_fraction", cfg.warmup_fraction);
  get("adam_beta1", cfg.adam_beta1);
  get("adam_beta2", cfg.adam_beta2);
  get("adam_eps", cfg.adam_eps);
  get("grad_clip", cfg.grad_clip);
  get("dim", cfg.dim);
  get("ff_dim", cfg.ff_dim);
  get("max_len", cfg.max_len);
  get("vocab_size", cfg.vocab_size);
  get("vocab_min_count", cfg.vocab_min_count);
  get("init_scale", cfg.init_scale);
  if (vm.count("allow_zero_epochs")) cfg.allow_zero_epochs = parse_bool(vm["allow_zero_epochs"].as<std::string>());
  if (vm.count("lowercase")) cfg.lowercase = parse_bool(vm["lowercase"].as<std::string>());
  if (vm.count("seeds")) {
    std::vector<std::string> parts;
    boost::split(parts, vm["seeds"].as<std::string>(), boost::is_any_of(", "), boost::token_compress_on);
    cfg.seeds.clear();
    for (const auto& p : parts) {
      if (p.empty()) continue;
      try {
        cfg.seeds.push_back(std::stoull(p));
      } catch (const std::exception&) {
        throw UsageError("config: bad seed '" + p + "'");
      }
    }
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base) {
  return parse_train_config(read_file(path), std::move(base));
}

SynthConfig parse_synth_config(std::string_view text, SynthConfig cfg) {
  po::options_description desc;
  desc.add_options()
      ("na_label", po::value<std::string>())
      ("type_ambiguity", po::value<double>())
      ("visible_names_per_type", po::value<std::size_t>())
      ("test_names_per_type", po::value<std::size_t>())
      ("name_signal", po::value<double>())
      ("name_rule", po::value<std::string>())
      ("na_fraction", po::value<double>())
      ("noise_rate", po::value<double>())
      ("noise_mode", po::value<std::string>())
      ("train_size", po::value<std::size_t>())
      ("dev_size", po::value<std::size_t>())
      ("test_size", po::value<std::size_t>())
      ("seed", po::value<std::uint64_t>())
      ("relation", po::value<std::vector<std::string>>()->composing())
      ("template", po::value<std::vector<std::string>>()->composing())
      ("cues", po::value<std::vector<std::string>>()->composing())
      ("shared_cues", po::value<std::string>());
  const auto vm = parse(text, desc);
  auto get = [&](const char* key, auto& field) {
    if (vm.count(key)) field = vm[key].as<std::decay_t<decltype(field)>>();
  };
  get("na_label", cfg.na_label);
  get("type_ambiguity", cfg.type_ambiguity);
  get("visible_names_per_type", cfg.visible_names_per_type);
  get("test_names_per_type", cfg.test_names_per_type);
  get("name_signal", cfg.name_signal);
  get("na_fraction", cfg.na_fraction);
  get("noise_rate", cfg.noise_rate);
  get("train_size", cfg.train_size);
  get("dev_size", cfg.dev_size);
  get("test_size", cfg.test_size);
  get("seed", cfg.seed);
  if (vm.count("name_rule")) cfg.name_rule = parse_name_rule(vm["name_rule"].as<std::string>());
  if (vm.count("noise_mode")) cfg.noise_mode = parse_noise_mode(vm["noise_mode"].as<std::string>());
  if (vm.count("relation")) {
    cfg.relations.clear();
    for (const auto& line : vm["relation"].as<std::vector<std::string>>()) {
      auto w = split_words(line);
      if (w.size() != 3) throw UsageError("config: relation needs <name> <SUBJ_TYPE> <OBJ_TYPE>: " + line);
      cfg.relations.push_back({w[0], w[1], w[2]});
    }
  }
  if (vm.count("template")) {
    cfg.templates.clear();
    for (const auto& line : vm["template"].as<std::vector<std::string>>()) {
      auto [labels, tokens] = split_bar(line, "template");
      std::vector<std::string> label_list;
      boost::split(label_list, labels, boost::is_any_of(","));
      for (auto& l : label_list) boost::trim(l);
      cfg.templates.push_back({std::move(label_list), split_words(tokens)});
    }
  }
  if (vm.count("cues")) {
    cfg.type_cues.clear();
    for (const auto& line : vm["cues"].as<std::vector<std::string>>()) {
      auto [type, words] = split_bar(line, "cues");
      cfg.type_cues[type] = split_words(words);
    }
  }
  if (vm.count("shared_cues")) cfg.shared_cues = split_words(vm["shared_cues"].as<std::string>());
  cfg.validate();
  return cfg;
}

SynthConfig load_synth_config(const std::filesystem::path& path, SynthConfig base) {
  return parse_synth_config(read_file(path), std::move(base));
}

std::string format_synth_config(const SynthConfig& cfg) {
  std::ostringstream out;
  out << "na_label = " << cfg.na_label << "\n"
      << "type_ambiguity = " << cfg.type_ambiguity << "\n"
      << "visible_names_per_type = " << cfg.visible_names_per_type << "\n"
      << "test_names_per_type = " << cfg.test_names_per_type << "\n"
      << "name_signal = " << cfg.name_signal << "\n"
      << "name_rule = " << to_string(cfg.name_rule) << "\n"
      << "na_fraction = " << cfg.na_fraction << "\n"
      << "noise_rate = " << cfg.noise_rate << "\n"
      << "noise_mode = " << to_string(cfg.noise_mode) << "\n"
      << "train_size = " << cfg.train_size << "\n"
      << "dev_size = " << cfg.dev_size << "\n"
      << "test_size = " << cfg.test_size << "\n"
      << "seed = " << cfg.seed << "\n";
  for (const auto& r : cfg.relations) {
    out << "relation = " << r.name << " " << r.subj_type << " " << r.obj_type << "\n";
  }
  for (const auto& t : cfg.templates) {
    out << "template = " << boost::join(t.labels, ",") << " | " << boost::join(t.tokens, " ") << "\n";
  }
  for (const auto& [type, cues] : cfg.type_cues) {
    out << "cues = " << type << " | " << boost::join(cues, " ") << "\n";
  }
  out << "shared_cues = " << boost::join(cfg.shared_cues, " ") << "\n";
  return out.str();
}

}  // namespace rex
