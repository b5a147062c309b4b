#include "relalign/alignment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "relalign/math.hpp"

namespace relalign::align {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Mat cross_similarity_tables(const Mat& source_table, const Mat& target_table) {
  if (source_table.cols() != target_table.cols()) {
    throw ValidationError("cross similarity: embedding dimensions differ (" +
                          std::to_string(source_table.cols()) + " vs " +
                          std::to_string(target_table.cols()) + ")");
  }
  return cosine_rows(source_table, target_table);
}

CrossFrameworkMatrix cross_similarity(const TrainedArtifact& source,
                                      const TrainedArtifact& target) {
  for (const auto* a : {&source, &target}) {
    if (!a->has_label_table()) {
      throw ValidationError("cross similarity refused: artifact for '" +
                            a->taxonomy.framework_name + "' carries no label table");
    }
    if (a->label_encoder_kind == LabelEncoderKind::RANDOM) {
      throw ValidationError(
          "cross similarity refused: artifact for '" + a->taxonomy.framework_name +
          "' used a randomly initialized label encoder, so its embedding space is unrelated "
          "to any other run; retrain with a pretrained label-encoder family");
    }
  }
  if (source.label_encoder_family != target.label_encoder_family) {
    throw ValidationError("cross similarity refused: label encoder families differ ('" +
                          source.label_encoder_family + "' vs '" + target.label_encoder_family +
                          "')");
  }
  if (source.config.input_encoder_family != target.config.input_encoder_family) {
    throw ValidationError("cross similarity refused: input encoder families differ ('" +
                          source.config.input_encoder_family + "' vs '" +
                          target.config.input_encoder_family + "')");
  }

  CrossFrameworkMatrix out;
  out.raw = cross_similarity_tables(source.label_table, target.label_table);
  out.source_taxonomy = source.taxonomy;
  out.target_taxonomy = target.taxonomy;
  out.source_provenance =
      source.taxonomy.framework_name + "/seed-" + std::to_string(source.seed);
  out.target_provenance =
      target.taxonomy.framework_name + "/seed-" + std::to_string(target.seed);
  return out;
}

MappingReport mapping_report(const CrossFrameworkMatrix& matrix, double threshold, int top_n,
                             const std::set<int>& exclude_sources) {
  if (threshold < -1.0 || threshold > 1.0) {
    throw ValidationError("mapping report: threshold must be in [-1, 1]");
  }
  if (top_n < 1) throw ValidationError("mapping report: top_n must be >= 1");

  MappingReport report;
  report.threshold = threshold;
  report.top_n = top_n;
  report.rows.resize(matrix.raw.rows());
  for (Index i = 0; i < matrix.raw.rows(); ++i) {
    if (exclude_sources.count(static_cast<int>(i))) {
      report.excluded_sources.push_back(static_cast<int>(i));
      continue;
    }
    std::vector<MappingEntry> entries;
    for (Index j = 0; j < matrix.raw.cols(); ++j) {
      if (matrix.raw(i, j) > threshold) {
        entries.push_back({static_cast<int>(j), matrix.raw(i, j)});
      }
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const MappingEntry& a, const MappingEntry& b) {
                       return a.similarity > b.similarity;
                     });
    if (static_cast<int>(entries.size()) > top_n) entries.resize(top_n);
    report.rows[i] = std::move(entries);
  }
  return report;
}

const RelabelingMap::Entry* RelabelingMap::find(const std::string& source_label) const {
  for (const auto& e : entries) {
    if (e.source == source_label) return &e;
  }
  return nullptr;
}

void RelabelingMap::validate() const {
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.source).second) {
      throw ValidationError("relabeling map: duplicate source label '" + e.source + "'");
    }
    if (!e.target && e.note.empty()) {
      throw ValidationError("relabeling map: excluded source '" + e.source +
                            "' requires a reason note");
    }
  }
}

RelabelingMap load_relabeling_map(const std::string& path, RelabelingMap::Provenance provenance) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open relabeling map: " + path);
  RelabelingMap map;
  map.provenance = provenance;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, '\t')) fields.push_back(trim(field));
    if (fields.size() < 2) {
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": expected source<TAB>target[<TAB>strength[<TAB>note]]");
    }
    RelabelingMap::Entry entry;
    entry.source = fields[0];
    const std::string target = fields[1];
    if (target != "-" && target != "—" && target != "EXCLUDE") entry.target = target;
    if (fields.size() > 2 && !fields[2].empty()) {
      try {
        entry.strength = std::stod(fields[2]);
      } catch (const std::exception&) {
        throw ValidationError(path + ":" + std::to_string(lineno) + ": bad strength '" +
                              fields[2] + "'");
      }
    }
    if (fields.size() > 3) entry.note = fields[3];
    if (!entry.target && entry.note.empty()) entry.note = "no qualifying target";
    map.entries.push_back(std::move(entry));
  }
  map.validate();
  return map;
}

void save_relabeling_map(const RelabelingMap& map, const std::string& path,
                         const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write relabeling map: " + path);
  out << "# provenance: "
      << (map.provenance == RelabelingMap::Provenance::THIS_METHOD ? "this-method"
                                                                   : "external-table")
      << "\n";
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  char buf[32];
  for (const auto& e : map.entries) {
    std::snprintf(buf, sizeof(buf), "%.4f", e.strength);
    out << e.source << "\t" << (e.target ? *e.target : std::string("EXCLUDE")) << "\t" << buf;
    if (!e.note.empty()) out << "\t" << e.note;
    out << "\n";
  }
}

RelabelingMap map_from_report(const MappingReport& report, const RelationTaxonomy& source_tax,
                              const RelationTaxonomy& target_tax) {
  if (static_cast<int>(report.rows.size()) != source_tax.size()) {
    throw ValidationError("map_from_report: report/taxonomy size mismatch");
  }
  RelabelingMap map;
  map.provenance = RelabelingMap::Provenance::THIS_METHOD;
  for (int i = 0; i < source_tax.size(); ++i) {
    RelabelingMap::Entry entry;
    entry.source = source_tax.labels[i].name;
    const bool excluded_source =
        std::find(report.excluded_sources.begin(), report.excluded_sources.end(), i) !=
        report.excluded_sources.end();
    if (!excluded_source && !report.rows[i].empty()) {
      entry.target = target_tax.labels[report.rows[i].front().target_label].name;
      entry.strength = report.rows[i].front().similarity;
    } else {
      entry.note = excluded_source ? "excluded from mapping" : "no target above threshold";
    }
    map.entries.push_back(std::move(entry));
  }
  map.validate();
  return map;
}

RelabelResult relabel_dataset(const std::vector<RelationInstance>& instances,
                              const RelabelingMap& map, const RelationTaxonomy& source_taxonomy,
                              const RelationTaxonomy& target_taxonomy) {
  map.validate();
  RelabelResult res;
  for (const auto& inst : instances) {
    if (inst.label < 0 || inst.label >= source_taxonomy.size()) {
      throw ValidationError("relabel: instance label out of source taxonomy range");
    }
    const std::string& source_name = source_taxonomy.labels[inst.label].name;
    const RelabelingMap::Entry* entry = map.find(source_name);
    if (!entry) {
      throw ValidationError("relabel: source label '" + source_name + "' missing from the map");
    }
    if (!entry->target) {
      ++res.excluded;
      continue;
    }
    const int target_id = target_taxonomy.find(*entry->target);
    if (target_id < 0) {
      throw ValidationError("relabel: target label '" + *entry->target +
                            "' not in target taxonomy");
    }
    RelationInstance copy = inst;
    copy.label = target_id;
    copy.source = InstanceSource::RELABELED;
    res.instances.push_back(std::move(copy));
    ++res.relabeled;
  }
  return res;
}

DatasetSplits merge_for_extrinsic(const DatasetSplits& target_splits,
                                  const std::vector<RelationInstance>& relabeled) {
  std::set<std::string> held_out_docs;
  for (const auto& inst : target_splits.dev) held_out_docs.insert(inst.doc_id);
  for (const auto& inst : target_splits.test) held_out_docs.insert(inst.doc_id);
  for (const auto& inst : relabeled) {
    if (held_out_docs.count(inst.doc_id)) {
      throw ValidationError("contamination: relabeled doc '" + inst.doc_id +
                            "' appears in the dev/test document set");
    }
  }
  DatasetSplits out = target_splits;
  out.train.insert(out.train.end(), relabeled.begin(), relabeled.end());
  return out;
}

Mat average_distributions(const std::vector<Mat>& distributions) {
  if (distributions.empty()) throw ValidationError("ensemble: no member distributions");
  Mat sum = distributions.front();
  for (std::size_t i = 1; i < distributions.size(); ++i) {
    if (distributions[i].rows() != sum.rows() || distributions[i].cols() != sum.cols()) {
      throw ValidationError("ensemble: member distribution shapes differ");
    }
    sum += distributions[i];
  }
  return sum / static_cast<double>(distributions.size());
}

Mat ensemble_distribution(const std::vector<const TrainedArtifact*>& members,
                          const std::vector<RelationInstance>& data) {
  if (members.empty()) throw ValidationError("ensemble: no members");
  const RelationTaxonomy& tax = members.front()->taxonomy;
  for (const auto* m : members) {
    if (m->taxonomy.size() != tax.size()) {
      throw ValidationError("ensemble: member taxonomies differ in size");
    }
    for (int i = 0; i < tax.size(); ++i) {
      if (m->taxonomy.labels[i].name != tax.labels[i].name) {
        throw ValidationError("ensemble: member taxonomies disagree at label " +
                              std::to_string(i));
      }
    }
  }
  std::vector<Mat> dists;
  dists.reserve(members.size());
  for (const auto* m : members) {
    dists.push_back(model_distribution(*m, encode_dataset(*m, data)));
  }
  return average_distributions(dists);
}

std::vector<int> ensemble_predict(const std::vector<const TrainedArtifact*>& members,
                                  const std::vector<RelationInstance>& data) {
  const Mat dist = ensemble_distribution(members, data);
  std::vector<int> out(dist.rows());
  for (Index i = 0; i < dist.rows(); ++i) {
    int best = 0;
    for (Index l = 1; l < dist.cols(); ++l) {
      if (dist(i, l) > dist(i, best)) best = static_cast<int>(l);
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

}  // namespace relalign::align
