#include "relalign/taxonomy.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace relalign {

using nlohmann::json;

int RelationTaxonomy::find(const std::string& name) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void RelationTaxonomy::validate() const {
  if (labels.empty()) {
    throw ValidationError("taxonomy '" + framework_name + "' has no labels");
  }
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (!seen.insert(l.name).second) {
      throw ValidationError("taxonomy '" + framework_name + "': duplicate label name '" +
                            l.name + "'");
    }
  }
  const bool any_path = std::any_of(labels.begin(), labels.end(),
                                    [](const LabelRecord& l) { return l.hierarchy_path.has_value(); });
  if (any_path) {
    std::size_t depth = 0;
    for (const auto& l : labels) {
      if (!l.hierarchy_path) {
        throw ValidationError("taxonomy '" + framework_name + "': label '" + l.name +
                              "' lacks a hierarchy path while others have one");
      }
      if (depth == 0) depth = l.hierarchy_path->size();
      if (l.hierarchy_path->size() != depth || depth == 0) {
        throw ValidationError("taxonomy '" + framework_name +
                              "': hierarchy paths must all have equal, nonzero depth");
      }
    }
  }
}

std::pair<std::vector<int>, std::vector<std::string>> RelationTaxonomy::level1_groups() const {
  std::vector<int> parent(labels.size(), -1);
  std::vector<std::string> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].hierarchy_path || labels[i].hierarchy_path->empty()) {
      throw ValidationError("label '" + labels[i].name + "' has no hierarchy path");
    }
    const std::string& top = labels[i].hierarchy_path->front();
    auto it = std::find(groups.begin(), groups.end(), top);
    if (it == groups.end()) {
      groups.push_back(top);
      parent[i] = static_cast<int>(groups.size()) - 1;
    } else {
      parent[i] = static_cast<int>(it - groups.begin());
    }
  }
  return {parent, groups};
}

RelationTaxonomy load_taxonomy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open taxonomy file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("taxonomy file " + path + ": " + e.what());
  }
  RelationTaxonomy tax;
  tax.framework_name = j.value("framework", "OTHER");
  for (const auto& jl : j.at("labels")) {
    LabelRecord rec;
    rec.name = jl.at("name").get<std::string>();
    if (jl.contains("description") && !jl["description"].is_null()) {
      rec.description = jl["description"].get<std::string>();
    }
    if (jl.contains("hierarchy_path") && !jl["hierarchy_path"].is_null()) {
      rec.hierarchy_path = jl["hierarchy_path"].get<std::vector<std::string>>();
    }
    tax.labels.push_back(std::move(rec));
  }
  tax.validate();
  return tax;
}

void attach_descriptions(RelationTaxonomy& tax, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open descriptions file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    const int id = tax.find(line.substr(0, tab));
    if (id >= 0) tax.labels[id].description = line.substr(tab + 1);
  }
}

void save_taxonomy(const RelationTaxonomy& tax, const std::string& path) {
  json j;
  j["framework"] = tax.framework_name;
  j["labels"] = json::array();
  for (const auto& l : tax.labels) {
    json jl;
    jl["name"] = l.name;
    if (l.description) jl["description"] = *l.description;
    if (l.hierarchy_path) jl["hierarchy_path"] = *l.hierarchy_path;
    j["labels"].push_back(jl);
  }
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write taxonomy file: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace relalign
