// SPDX-License-Identifier: Apache-2.0
#include "rex/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "rex/error.hpp"

namespace rex {

namespace {

std::string join_span(const std::vector<std::string>& tokens, const Span& span) {
  std::string out;
  for (std::size_t i = span.start; i <= span.end && i < tokens.size(); ++i) {
    if (i != span.start) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::size_t span_index(const nlohmann::json& record, const char* key) {
  const auto& v = record.at(key);
  if (!v.is_number_integer()) {
    throw ParseError(std::string("field '") + key + "' is not an integer");
  }
  auto value = v.get<long long>();
  if (value < 0) {
    throw ValidationError(std::string("field '") + key + "' is negative");
  }
  return static_cast<std::size_t>(value);
}

std::string record_id(const nlohmann::json& record, std::size_t index) {
  if (record.is_object() && record.contains("id") && record["id"].is_string()) {
    return record["id"].get<std::string>();
  }
  return "#" + std::to_string(index);
}

}  // namespace

std::string RelationInstance::subj_mention() const { return join_span(tokens, subj); }
std::string RelationInstance::obj_mention() const { return join_span(tokens, obj); }

LabelSchema::LabelSchema(std::vector<std::string> labels, std::string na_label)
    : labels_(std::move(labels)), na_label_(std::move(na_label)) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], i).second) {
      throw ValidationError("duplicate label in schema: " + labels_[i]);
    }
  }
  auto na = index_.find(na_label_);
  if (na == index_.end()) {
    throw ValidationError("schema does not contain the no-relation label '" + na_label_ + "'");
  }
  na_index_ = na->second;
}

std::optional<std::size_t> LabelSchema::find(std::string_view label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t LabelSchema::index_of(std::string_view label) const {
  auto found = find(label);
  if (!found) throw ValidationError("unknown relation label '" + std::string(label) + "'");
  return *found;
}

void validate(const RelationInstance& instance, const LabelSchema& schema) {
  auto fail = [&](const std::string& what) {
    throw ValidationError("instance " + instance.id + ": " + what);
  };
  const auto n = instance.tokens.size();
  auto check_span = [&](const Span& span, const char* role) {
    if (span.start > span.end) fail(std::string(role) + " span start after end");
    if (span.end >= n) {
      fail(std::string(role) + " span [" + std::to_string(span.start) + ", " +
           std::to_string(span.end) + "] out of bounds for " + std::to_string(n) + " tokens");
    }
  };
  check_span(instance.subj, "subject");
  check_span(instance.obj, "object");
  if (instance.subj.overlaps(instance.obj)) fail("subject and object spans overlap");
  if (!schema.contains(instance.relation)) fail("unknown relation label '" + instance.relation + "'");
}

RelationInstance instance_from_json(const nlohmann::json& record) {
  if (!record.is_object()) throw ParseError("record is not a JSON object");
  RelationInstance inst;
  const auto& id = record.at("id");
  inst.id = id.is_string() ? id.get<std::string>() : id.dump();
  inst.tokens = record.at("token").get<std::vector<std::string>>();
  inst.subj = {span_index(record, "subj_start"), span_index(record, "subj_end")};
  inst.obj = {span_index(record, "obj_start"), span_index(record, "obj_end")};
  inst.subj_type = record.at("subj_type").get<std::string>();
  inst.obj_type = record.at("obj_type").get<std::string>();
  inst.relation = record.at("relation").get<std::string>();
  return inst;
}

nlohmann::json instance_to_json(const RelationInstance& inst) {
  nlohmann::json rec;
  rec["id"] = inst.id;
  rec["token"] = inst.tokens;
  rec["subj_start"] = inst.subj.start;
  rec["subj_end"] = inst.subj.end;
  rec["obj_start"] = inst.obj.start;
  rec["obj_end"] = inst.obj.end;
  rec["subj_type"] = inst.subj_type;
  rec["obj_type"] = inst.obj_type;
  rec["relation"] = inst.relation;
  return rec;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

std::vector<RelationInstance> read_instance_lines(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<RelationInstance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(instance_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<RelationInstance> read_instances(const std::filesystem::path& path) {
  if (path.extension() == ".jsonl") return read_instance_lines(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw ParseError(path.string() + ": top-level value is not an array");
  std::vector<RelationInstance> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    try {
      out.push_back(instance_from_json(doc[i]));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": record " + std::to_string(i) + " (" +
                       record_id(doc[i], i) + "): " + e.what());
    } catch (const Error& e) {
      throw ParseError(path.string() + ": record " + std::to_string(i) + " (" +
                       record_id(doc[i], i) + "): " + e.what());
    }
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& path, const LabelSchema& schema,
                     const LoadOptions& options, std::vector<std::string>* dropped) {
  Dataset ds;
  ds.split = path.stem().string();
  ds.schema = schema;
  for (auto& inst : read_instances(path)) {
    if (options.lowercase) {
      for (auto& t : inst.tokens) t = lowercase(t);
    }
    try {
      validate(inst, schema);
    } catch (const ValidationError&) {
      if (!options.lenient) throw;
      if (dropped) dropped->push_back(inst.id);
      continue;
    }
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

LabelSchema schema_from_json(const nlohmann::json& doc) {
  return LabelSchema(doc.at("labels").get<std::vector<std::string>>(),
                     doc.value("na_label", std::string(kDefaultNaLabel)));
}

LabelSchema load_schema(const std::filesystem::path& path) {
  try {
    return schema_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

nlohmann::json schema_to_json(const LabelSchema& schema) {
  return {{"labels", schema.labels()}, {"na_label", schema.na_label()}};
}

LabelSchema infer_schema(const std::vector<std::vector<RelationInstance>>& sets,
                         std::string_view na_label) {
  std::set<std::string> seen;
  for (const auto& set : sets) {
    for (const auto& inst : set) seen.insert(inst.relation);
  }
  seen.insert(std::string(na_label));
  return LabelSchema({seen.begin(), seen.end()}, std::string(na_label));
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& inst : dataset.instances) arr.push_back(instance_to_json(inst));
  write_file(path, arr.dump() + "\n");
}

void write_jsonl(const std::filesystem::path& path, const Dataset& dataset) {
  std::string out;
  for (const auto& inst : dataset.instances) {
    out += instance_to_json(inst).dump();
    out += '\n';
  }
  write_file(path, out);
}

Dataset read_jsonl(const std::filesystem::path& path, const LabelSchema& schema) {
  Dataset ds;
  ds.split = path.stem().string();
  ds.schema = schema;
  ds.instances = read_instances(path);
  for (const auto& inst : ds.instances) validate(inst, schema);
  return ds;
}

nlohmann::json StatsReport::to_json() const {
  nlohmann::json j;
  j["splits"] = split_counts;
  j["total"] = total;
  j["num_classes"] = num_classes;
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [label, count] : histogram) hist[label] = count;
  j["histogram"] = hist;
  return j;
}

StatsReport compute_statistics(const std::vector<const Dataset*>& splits,
                               const LabelSchema& schema) {
  StatsReport report;
  report.num_classes = schema.size();
  std::vector<std::size_t> counts(schema.size(), 0);
  for (const Dataset* ds : splits) {
    report.split_counts[ds->split] += ds->size();
    report.total += ds->size();
    for (const auto& inst : ds->instances) ++counts[schema.index_of(inst.relation)];
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    report.histogram.emplace_back(schema.label(i), counts[i]);
  }
  return report;
}

}  // namespace rex
