#include "relalign/pdtb.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace relalign::ingest {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_on(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(trim(field));
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::vector<PdtbRecord> load_pdtb_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open relation records: " + path);

  std::string line;
  int lineno = 0;
  std::vector<std::string> header;
  char delim = '|';
  std::map<std::string, int> col;
  std::vector<PdtbRecord> out;

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      delim = line.find('\t') != std::string::npos ? '\t' : '|';
      header = split_on(line, delim);
      for (std::size_t i = 0; i < header.size(); ++i) col[lower(header[i])] = static_cast<int>(i);
      for (const char* required : {"doc_id", "type", "sense1", "arg1", "arg2"}) {
        if (!col.count(required)) {
          throw ValidationError(path + ": header misses required column '" +
                                std::string(required) + "'");
        }
      }
      continue;
    }
    std::vector<std::string> fields = split_on(line, delim);
    if (fields.size() < header.size()) fields.resize(header.size());
    auto get = [&](const char* name) -> std::string {
      const auto it = col.find(name);
      return it == col.end() ? "" : fields[it->second];
    };
    PdtbRecord rec;
    rec.doc_id = get("doc_id");
    rec.relation_type = get("type");
    rec.connective = get("conn");
    rec.arg1 = get("arg1");
    rec.arg2 = get("arg2");
    for (const char* s : {"sense1", "sense2"}) {
      const std::string v = get(s);
      if (!v.empty()) rec.senses.push_back(v);
    }
    if (rec.doc_id.empty() || rec.relation_type.empty()) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": incomplete record");
    }
    out.push_back(std::move(rec));
  }
  if (header.empty()) throw ValidationError(path + ": missing header line");
  return out;
}

std::vector<PdtbRawInstance> pdtb_instances(const std::vector<PdtbRecord>& records,
                                            bool include_other, bool prepend_connective) {
  std::vector<PdtbRawInstance> out;
  for (const auto& rec : records) {
    const std::string type = lower(rec.relation_type);
    RelationKind kind;
    if (type == "explicit") {
      kind = RelationKind::EXPLICIT;
    } else if (type == "implicit") {
      kind = RelationKind::IMPLICIT;
    } else if (type == "entrel" || type == "norel") {
      continue;  // no sense hierarchy to classify against
    } else {
      if (!include_other) continue;
      kind = RelationKind::OTHER;
    }
    for (const auto& sense : rec.senses) {
      PdtbRawInstance raw;
      raw.sense = sense;
      raw.instance.arg1 = rec.arg1;
      raw.instance.arg2 = rec.arg2;
      if (prepend_connective && kind == RelationKind::EXPLICIT && !rec.connective.empty()) {
        raw.instance.arg2 = rec.connective + " " + rec.arg2;
      }
      raw.instance.framework = Framework::PDTB;
      raw.instance.relation_kind = kind;
      if (!rec.connective.empty()) raw.instance.connective = rec.connective;
      raw.instance.doc_id = rec.doc_id;
      raw.instance.source = InstanceSource::ORIGINAL;
      out.push_back(std::move(raw));
    }
  }
  return out;
}

SenseFilterResult filter_pdtb_senses(const std::vector<PdtbRawInstance>& raw, int level,
                                     int min_count) {
  if (level < 1) throw ValidationError("sense filter: level must be >= 1");

  auto truncate = [&](const std::string& sense) -> std::string {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream ss(sense);
    while (std::getline(ss, part, '.')) {
      if (!part.empty()) parts.push_back(part);
    }
    if (static_cast<int>(parts.size()) < level) {
      throw ValidationError("sense '" + sense + "' is shallower than level " +
                            std::to_string(level));
    }
    std::string out = parts[0];
    for (int i = 1; i < level; ++i) out += "." + parts[i];
    return out;
  };

  // Counts are over the full dataset, before any splitting.
  std::map<std::string, int> counts;
  std::vector<std::string> truncated(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    truncated[i] = truncate(raw[i].sense);
    ++counts[truncated[i]];
  }

  SenseFilterResult res;
  res.taxonomy.framework_name = "pdtb";
  for (const auto& [sense, count] : counts) {  // std::map iterates alphabetically
    if (count > min_count) {
      LabelRecord rec;
      rec.name = sense;
      std::vector<std::string> path;
      std::string part;
      std::istringstream ss(sense);
      while (std::getline(ss, part, '.')) path.push_back(part);
      rec.hierarchy_path = path;
      res.taxonomy.labels.push_back(std::move(rec));
    } else {
      res.dropped.emplace_back(sense, count);
    }
  }
  if (res.taxonomy.labels.empty()) {
    throw ValidationError("sense filter: no sense exceeds " + std::to_string(min_count) +
                          " instances");
  }
  res.taxonomy.validate();

  for (std::size_t i = 0; i < raw.size(); ++i) {
    const int label = res.taxonomy.find(truncated[i]);
    if (label < 0) continue;
    RelationInstance inst = raw[i].instance;
    inst.label = label;
    res.instances.push_back(std::move(inst));
  }
  return res;
}

int wsj_section(const std::string& doc_id) {
  // WSJ convention: "wsj_SSNN" with a two-digit section prefix.
  const auto underscore = doc_id.find('_');
  const std::string digits = underscore == std::string::npos ? doc_id : doc_id.substr(underscore + 1);
  if (digits.size() < 2 || !std::isdigit(static_cast<unsigned char>(digits[0])) ||
      !std::isdigit(static_cast<unsigned char>(digits[1]))) {
    throw ValidationError("doc id '" + doc_id + "' does not start with a 2-digit section");
  }
  return (digits[0] - '0') * 10 + (digits[1] - '0');
}

DatasetSplits split_pdtb_by_section(const std::vector<RelationInstance>& instances) {
  DatasetSplits out;
  for (const auto& inst : instances) {
    const int section = wsj_section(inst.doc_id);
    if (section <= 1) {
      out.dev.push_back(inst);
    } else if (section <= 20) {
      out.train.push_back(inst);
    } else if (section <= 22) {
      out.test.push_back(inst);
    }
    // sections 23+ are excluded
  }
  return out;
}

}  // namespace relalign::ingest
