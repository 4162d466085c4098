// SPDX-License-Identifier: Apache-2.0
// JSON-text bridge; rex/__init__.py decodes on the Python side.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "rex/cli.hpp"
#include "rex/config.hpp"
#include "rex/corpus.hpp"
#include "rex/error.hpp"
#include "rex/eval.hpp"
#include "rex/marking.hpp"
#include "rex/synth.hpp"
#include "rex/train.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

std::vector<rex::RelationInstance> instances(const std::string& text) {
  std::vector<rex::RelationInstance> out;
  for (const auto& rec : json::parse(text)) out.push_back(rex::instance_from_json(rec));
  return out;
}

json dataset_json(const rex::Dataset& ds) {
  json arr = json::array();
  for (const auto& inst : ds.instances) arr.push_back(rex::instance_to_json(inst));
  return arr;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "rex core bindings";

  py::register_exception<rex::UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<rex::ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<rex::ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<rex::IoError>(m, "IoError", PyExc_OSError);

  m.def(
      "mark",
      [](const std::string& record, const std::string& scheme, const std::string& head_anchor,
         const std::string& mask_mode) {
        const auto inst = rex::instance_from_json(json::parse(record));
        rex::MarkingScheme s;
        s.kind = rex::parse_scheme_kind(scheme);
        s.head_anchor = rex::parse_head_anchor(head_anchor);
        s.mask_mode = rex::parse_mask_mode(mask_mode);
        s.validate();
        return rex::marked_record(inst, rex::mark(inst, s)).dump();
      },
      py::arg("record"), py::arg("scheme"), py::arg("head_anchor"), py::arg("mask_mode"));

  m.def(
      "score",
      [](const std::vector<std::string>& gold, const std::vector<std::string>& pred,
         const std::vector<std::string>& labels, const std::string& na_label) {
        return rex::score(gold, pred, rex::LabelSchema(labels, na_label)).to_json().dump();
      },
      py::arg("gold"), py::arg("pred"), py::arg("labels"), py::arg("na_label"));

  m.def(
      "lr_at",
      [](std::size_t step, std::size_t total, double base_lr, double warmup_fraction) {
        rex::TrainConfig cfg;
        cfg.base_lr = base_lr;
        cfg.warmup_fraction = warmup_fraction;
        return rex::lr_at(step, total, cfg);
      },
      py::arg("step"), py::arg("total"), py::arg("base_lr"), py::arg("warmup_fraction"));

  m.def(
      "build_filtered",
      [](const std::string& test, const std::string& train, bool case_fold, bool same_role,
         const std::string& na_label) {
        auto t = instances(test);
        auto r = instances(train);
        const auto schema = rex::infer_schema({t, r}, na_label);
        rex::MatchRule rule;
        rule.case_fold = case_fold;
        rule.roles = same_role ? rex::MatchRule::Roles::same_role : rex::MatchRule::Roles::any;
        return rex::build_filtered({"test", std::move(t), schema}, {"train", std::move(r), schema}, rule)
            .to_json()
            .dump();
      },
      py::arg("test"), py::arg("train"), py::arg("case_fold"), py::arg("same_role"), py::arg("na_label"));

  m.def(
      "generate",
      [](const std::string& config_text) {
        const auto corpus = rex::generate(rex::parse_synth_config(config_text));
        return json{{"train", dataset_json(corpus.train)},
                    {"dev", dataset_json(corpus.dev)},
                    {"test_unseen", dataset_json(corpus.test_unseen)},
                    {"schema", rex::schema_to_json(corpus.train.schema)}}
            .dump();
      },
      py::arg("config_text"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = rex::cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
