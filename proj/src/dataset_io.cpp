#include "relalign/dataset_io.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>

namespace relalign {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<RelationInstance> load_jsonl_dataset(const std::string& path,
                                                 const RelationTaxonomy& taxonomy) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open dataset file: " + path);
  std::vector<RelationInstance> out;
  std::string line;
  int lineno = 0;
  std::vector<std::string> unknown_labels;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": malformed record: " + e.what());
    }
    RelationInstance inst;
    try {
      inst.arg1 = j.at("arg1").get<std::string>();
      inst.arg2 = j.at("arg2").get<std::string>();
      const std::string label_name = j.at("label").get<std::string>();
      inst.label = taxonomy.find(label_name);
      if (inst.label < 0) {
        unknown_labels.push_back(label_name + " (line " + std::to_string(lineno) + ")");
        continue;
      }
      inst.framework = framework_from_string(j.value("framework", "other"));
      inst.relation_kind = relation_kind_from_string(j.value("relation_kind", "na"));
      if (j.contains("connective") && !j["connective"].is_null()) {
        inst.connective = j["connective"].get<std::string>();
      }
      inst.doc_id = j.value("doc_id", "");
      inst.source = instance_source_from_string(j.value("source", "original"));
    } catch (const json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": bad field: " + e.what());
    }
    try {
      inst.validate(taxonomy);
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(std::move(inst));
  }
  if (!unknown_labels.empty()) {
    std::string msg = path + ": labels not in taxonomy '" + taxonomy.framework_name + "':";
    for (const auto& u : unknown_labels) msg += " " + u;
    throw ValidationError(msg);
  }
  return out;
}

void save_jsonl_dataset(const std::vector<RelationInstance>& instances,
                        const RelationTaxonomy& taxonomy, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write dataset file: " + path);
  for (const auto& inst : instances) {
    inst.validate(taxonomy);
    json j;
    j["arg1"] = inst.arg1;
    j["arg2"] = inst.arg2;
    j["label"] = taxonomy.labels[inst.label].name;
    j["framework"] = to_string(inst.framework);
    j["relation_kind"] = to_string(inst.relation_kind);
    if (inst.connective) j["connective"] = *inst.connective;
    j["doc_id"] = inst.doc_id;
    j["source"] = to_string(inst.source);
    out << j.dump() << "\n";
  }
  if (!out) throw RuntimeFailure("write failed: " + path);
}

DatasetSplits load_splits(const std::string& dir, const RelationTaxonomy& taxonomy) {
  DatasetSplits s;
  s.train = load_jsonl_dataset((fs::path(dir) / "train.jsonl").string(), taxonomy);
  s.dev = load_jsonl_dataset((fs::path(dir) / "dev.jsonl").string(), taxonomy);
  s.test = load_jsonl_dataset((fs::path(dir) / "test.jsonl").string(), taxonomy);
  return s;
}

void save_splits(const DatasetSplits& splits, const RelationTaxonomy& taxonomy,
                 const std::string& dir) {
  fs::create_directories(dir);
  save_jsonl_dataset(splits.train, taxonomy, (fs::path(dir) / "train.jsonl").string());
  save_jsonl_dataset(splits.dev, taxonomy, (fs::path(dir) / "dev.jsonl").string());
  save_jsonl_dataset(splits.test, taxonomy, (fs::path(dir) / "test.jsonl").string());
  save_taxonomy(taxonomy, (fs::path(dir) / "taxonomy.json").string());
}

}  // namespace relalign
