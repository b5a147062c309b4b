#include "relalign/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "relalign/alignment.hpp"
#include "relalign/augment.hpp"
#include "relalign/dataset_io.hpp"
#include "relalign/eval.hpp"
#include "relalign/manifest.hpp"
#include "relalign/pdtb.hpp"
#include "relalign/rst.hpp"
#include "relalign/synthetic.hpp"

namespace relalign::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(csv);
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string kv_hash(const KV& cfg) {
  std::string canon;
  for (const auto& [k, v] : cfg) canon += k + "=" + v + "\n";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(canon)));
  return buf;
}

/// Shared manifest-guard: returns true when the stage can be skipped.
bool stage_guard(RunManifest& pending, const std::string& out_dir, std::ostream& log) {
  pending.inputs_fingerprint = fingerprint_paths(pending.inputs);
  if (manifest_exists(out_dir)) {
    const RunManifest existing = load_manifest(out_dir);
    if (existing.matches(pending)) {
      log << "[" << pending.command << "] up to date, skipping (" << out_dir << ")\n";
      return true;
    }
  }
  pending.started = timestamp_now();
  return false;
}

void finish_manifest(RunManifest& manifest, const std::string& out_dir) {
  manifest.finished = timestamp_now();
  save_manifest(manifest, out_dir);
}

std::unique_ptr<ingest::TranslationClient> make_translator(const std::string& spec) {
  if (spec.empty() || spec == "identity") {
    return std::make_unique<ingest::IdentityTranslator>();
  }
  if (spec.rfind("replay:", 0) == 0) {
    return std::make_unique<ingest::ReplayTranslator>(spec.substr(7));
  }
  if (spec.rfind("http:", 0) == 0) {
    const std::string rest = spec.substr(5);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) {
      throw ValidationError("translator spec must be http:<host>:<port>");
    }
    return std::make_unique<ingest::HttpTranslator>(rest.substr(0, colon),
                                                    std::stoi(rest.substr(colon + 1)));
  }
  throw ValidationError("unknown translator spec '" + spec + "'");
}

ExperimentConfig experiment_config(const KV& cfg) { return config_from_ini(cfg); }

ModelKind model_kind(const KV& cfg) {
  const std::string kind = kv_get(cfg, "train.model", "label-embedding");
  return model_kind_from_string(kind);
}

struct SeedMetrics {
  std::string dir;
  double leq = -1;
  double accuracy = -1;
};

std::vector<SeedMetrics> seed_dirs_of(const std::string& run_dir) {
  std::vector<SeedMetrics> out;
  if (!fs::is_directory(run_dir)) return out;
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    if (entry.is_directory() && entry.path().filename().string().rfind("seed-", 0) == 0) {
      names.push_back(entry.path().string());
    }
  }
  std::sort(names.begin(), names.end());
  for (const auto& dir : names) {
    SeedMetrics sm;
    sm.dir = dir;
    std::ifstream in(fs::path(dir) / "metrics.json");
    if (in) {
      json j;
      in >> j;
      if (j.contains("leq") && !j["leq"].is_null()) sm.leq = j["leq"].get<double>();
      sm.accuracy = j.value("accuracy", -1.0);
    }
    out.push_back(std::move(sm));
  }
  return out;
}

}  // namespace

std::string kv_get(const KV& cfg, const std::string& key, const std::string& fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

bool kv_flag(const KV& cfg, const std::string& key, bool fallback) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  throw ValidationError("config key '" + key + "': not a boolean: '" + v + "'");
}

int kv_int(const KV& cfg, const std::string& key, int fallback) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': not an integer: '" + it->second + "'");
  }
}

double kv_double(const KV& cfg, const std::string& key, double fallback) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': not a number: '" + it->second + "'");
  }
}

std::string best_seed_dir(const std::string& run_dir) {
  const auto seeds = seed_dirs_of(run_dir);
  if (seeds.empty()) {
    // Plain artifact directory.
    if (!fs::exists(fs::path(run_dir) / "metrics.json")) {
      throw ValidationError("'" + run_dir + "' is neither a run directory nor an artifact");
    }
    return run_dir;
  }
  const auto best = std::max_element(seeds.begin(), seeds.end(),
                                     [](const SeedMetrics& a, const SeedMetrics& b) {
                                       if (a.leq != b.leq) return a.leq < b.leq;
                                       return a.accuracy < b.accuracy;
                                     });
  return best->dir;
}

void save_aggregate(const train::AggregateReport& aggregate, const std::string& name,
                    const std::string& path) {
  json j;
  j["name"] = name;
  j["mean_accuracy"] = aggregate.mean_accuracy;
  j["std_accuracy"] = aggregate.std_accuracy;
  j["mean_macro_f1"] = aggregate.mean_macro_f1;
  j["std_macro_f1"] = aggregate.std_macro_f1;
  if (aggregate.leq_available) {
    j["mean_leq"] = aggregate.mean_leq;
    j["std_leq"] = aggregate.std_leq;
  }
  j["single_run"] = aggregate.single_run;
  j["failures"] = aggregate.failures;
  j["per_seed"] = json::array();
  for (const auto& s : aggregate.per_seed) {
    json js;
    js["seed"] = s.seed;
    js["accuracy"] = s.metrics.accuracy;
    js["macro_f1"] = s.metrics.macro_f1;
    if (s.metrics.leq) js["leq"] = *s.metrics.leq;
    js["notices"] = s.metrics.notices;
    j["per_seed"].push_back(js);
  }
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write aggregate: " + path);
  out << j.dump(2) << "\n";
}

report::RunSummary load_aggregate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open aggregate: " + path);
  json j;
  in >> j;
  report::RunSummary summary;
  summary.name = j.value("name", path);
  auto& agg = summary.aggregate;
  agg.mean_accuracy = j.value("mean_accuracy", 0.0);
  agg.std_accuracy = j.value("std_accuracy", 0.0);
  agg.mean_macro_f1 = j.value("mean_macro_f1", 0.0);
  agg.std_macro_f1 = j.value("std_macro_f1", 0.0);
  if (j.contains("mean_leq")) {
    agg.mean_leq = j["mean_leq"].get<double>();
    agg.std_leq = j.value("std_leq", 0.0);
    agg.leq_available = true;
  }
  agg.single_run = j.value("single_run", false);
  agg.failures = j.value("failures", std::vector<std::string>{});
  for (const auto& js : j.value("per_seed", json::array())) {
    train::SeedResult r;
    r.seed = js.value("seed", std::uint64_t{0});
    r.metrics.accuracy = js.value("accuracy", 0.0);
    r.metrics.macro_f1 = js.value("macro_f1", 0.0);
    if (js.contains("leq") && !js["leq"].is_null()) r.metrics.leq = js["leq"].get<double>();
    r.metrics.notices = js.value("notices", std::vector<std::string>{});
    agg.per_seed.push_back(std::move(r));
  }
  return summary;
}

StageResult stage_ingest(const KV& cfg, const std::string& out_dir, std::ostream& log) {
  const std::string source = kv_get(cfg, "data.source");
  if (source.empty()) throw ValidationError("ingest: data.source is required");

  RunManifest manifest;
  manifest.command = "ingest";
  manifest.config_hash = kv_hash(cfg);
  for (const char* key : {"data.rst_train_dir", "data.rst_test_dir", "data.name_map",
                          "data.pdtb_files", "data.translator"}) {
    const std::string v = kv_get(cfg, key);
    if (!v.empty() && v.rfind("replay:", 0) != 0) manifest.inputs.push_back(v);
    if (v.rfind("replay:", 0) == 0) manifest.inputs.push_back(v.substr(7));
  }
  manifest.outputs = {out_dir};
  if (stage_guard(manifest, out_dir, log)) return {out_dir, true};

  DatasetSplits splits;
  RelationTaxonomy taxonomy;

  if (source == "synthetic") {
    const int classes = kv_int(cfg, "data.classes", 4);
    const int train_pc = kv_int(cfg, "data.per_class", 50);
    const int dev_pc = kv_int(cfg, "data.dev_per_class", 10);
    const int test_pc = kv_int(cfg, "data.test_per_class", 10);
    const std::uint64_t seed = kv_int(cfg, "data.seed", 7);
    auto corpus = ingest::generate_synthetic_corpus(classes, train_pc + dev_pc + test_pc, seed);
    taxonomy = corpus.taxonomy;
    // The generator interleaves classes, so contiguous blocks stay balanced.
    const auto& all = corpus.instances;
    const int n_train = classes * train_pc, n_dev = classes * dev_pc;
    splits.train.assign(all.begin(), all.begin() + n_train);
    splits.dev.assign(all.begin() + n_train, all.begin() + n_train + n_dev);
    splits.test.assign(all.begin() + n_train + n_dev, all.end());
    log << "[ingest] synthetic corpus: " << splits.train.size() << "/" << splits.dev.size() << "/"
        << splits.test.size() << " over " << classes << " classes\n";
  } else if (source == "rst") {
    const std::string train_dir = kv_get(cfg, "data.rst_train_dir");
    const std::string test_dir = kv_get(cfg, "data.rst_test_dir");
    const std::string map_path = kv_get(cfg, "data.name_map");
    if (train_dir.empty() || map_path.empty()) {
      throw ValidationError("ingest rst: data.rst_train_dir and data.name_map are required");
    }
    const auto name_map = ingest::load_relation_name_map(map_path);

    auto extract_dir = [&](const std::string& dir, const RelationTaxonomy& tax) {
      std::vector<RelationInstance> out;
      std::vector<std::string> files;
      for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().string().ends_with(".dis")) {
          files.push_back(entry.path().string());
        }
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        const auto tree = ingest::binarize_rst_tree(ingest::load_dis_file(f));
        auto insts = ingest::extract_rst_instances(tree, name_map, tax);
        out.insert(out.end(), std::make_move_iterator(insts.begin()),
                   std::make_move_iterator(insts.end()));
      }
      return out;
    };

    // First pass over both directories to fix the taxonomy from the data.
    std::vector<std::string> coarse_seen;
    auto scan_dir = [&](const std::string& dir) {
      if (dir.empty()) return;
      for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || !entry.path().string().ends_with(".dis")) continue;
        const auto tree = ingest::binarize_rst_tree(ingest::load_dis_file(entry.path().string()));
        std::vector<const ingest::RstNode*> stack{tree.root.get()};
        while (!stack.empty()) {
          const auto* node = stack.back();
          stack.pop_back();
          if (!node->relation.empty()) coarse_seen.push_back(name_map.coarse(node->relation));
          for (const auto& c : node->children) stack.push_back(c.get());
        }
      }
    };
    scan_dir(train_dir);
    scan_dir(test_dir);
    taxonomy = ingest::rst_taxonomy_from_data(coarse_seen);

    auto train_all = extract_dir(train_dir, taxonomy);
    const double fraction = kv_double(cfg, "data.val_fraction", 0.20);
    const std::uint64_t split_seed = kv_int(cfg, "data.split_seed", 13);
    splits = ingest::split_rst_validation(train_all, fraction, split_seed);
    if (!test_dir.empty()) splits.test = extract_dir(test_dir, taxonomy);
    log << "[ingest] rst: " << splits.train.size() << "/" << splits.dev.size() << "/"
        << splits.test.size() << " instances, " << taxonomy.size() << " classes\n";
  } else if (source == "pdtb") {
    const std::string files_csv = kv_get(cfg, "data.pdtb_files");
    if (files_csv.empty()) throw ValidationError("ingest pdtb: data.pdtb_files is required");
    std::vector<ingest::PdtbRecord> records;
    for (const auto& path : split_list(files_csv)) {
      std::vector<std::string> expanded;
      if (fs::is_directory(path)) {
        for (const auto& entry : fs::recursive_directory_iterator(path)) {
          if (entry.is_regular_file()) expanded.push_back(entry.path().string());
        }
        std::sort(expanded.begin(), expanded.end());
      } else {
        expanded.push_back(path);
      }
      for (const auto& f : expanded) {
        auto recs = ingest::load_pdtb_records(f);
        records.insert(records.end(), std::make_move_iterator(recs.begin()),
                       std::make_move_iterator(recs.end()));
      }
    }
    auto raw = ingest::pdtb_instances(records, kv_flag(cfg, "data.include_other", false),
                                      kv_flag(cfg, "data.prepend_connective", false));
    const std::string kind = kv_get(cfg, "data.kind", "all");
    if (kind == "explicit" || kind == "implicit") {
      const RelationKind want =
          kind == "explicit" ? RelationKind::EXPLICIT : RelationKind::IMPLICIT;
      std::erase_if(raw, [&](const ingest::PdtbRawInstance& r) {
        return r.instance.relation_kind != want;
      });
    } else if (kind != "all") {
      throw ValidationError("ingest pdtb: data.kind must be all|explicit|implicit");
    }
    auto filtered = ingest::filter_pdtb_senses(raw, kv_int(cfg, "data.level", 2),
                                               kv_int(cfg, "data.min_count", 100));
    taxonomy = filtered.taxonomy;
    splits = ingest::split_pdtb_by_section(filtered.instances);
    log << "[ingest] pdtb (" << kind << "): " << splits.train.size() << "/" << splits.dev.size()
        << "/" << splits.test.size() << " instances, " << taxonomy.size() << " senses retained, "
        << filtered.dropped.size() << " dropped\n";
  } else {
    throw ValidationError("ingest: unknown data.source '" + source + "'");
  }

  if (const std::string desc = kv_get(cfg, "data.descriptions"); !desc.empty()) {
    attach_descriptions(taxonomy, desc);
  }

  if (kv_flag(cfg, "data.augment", false)) {
    auto translator = make_translator(kv_get(cfg, "data.translator", "identity"));
    std::set<int> skip;
    for (const auto& name : split_list(kv_get(cfg, "data.skip_labels"))) {
      const int id = taxonomy.find(name);
      if (id < 0) throw ValidationError("augment: skip label '" + name + "' not in taxonomy");
      skip.insert(id);
    }
    const auto res = ingest::backtranslate_augment(splits.train, skip, *translator,
                                                   kv_get(cfg, "data.source_lang", "en"),
                                                   kv_get(cfg, "data.pivot", "fr"));
    splits.train = res.instances;
    log << "[ingest] augmentation: +" << res.augmented << " copies, " << res.skipped_by_label
        << " skipped by label, " << res.failures << " failures\n";
  }

  save_splits(splits, taxonomy, out_dir);
  finish_manifest(manifest, out_dir);
  return {out_dir, false};
}

StageResult stage_train(const KV& cfg, const std::string& data_dir, const std::string& out_dir,
                        std::ostream& log) {
  if (!fs::exists(fs::path(data_dir) / "taxonomy.json")) {
    throw ValidationError("train: no dataset at '" + data_dir +
                          "' (run the ingest stage or pass --data)");
  }
  const ExperimentConfig exp = experiment_config(cfg);
  const ModelKind kind = model_kind(cfg);

  RunManifest manifest;
  manifest.command = "train";
  manifest.config_hash = kv_hash(cfg);
  manifest.inputs = {data_dir};
  manifest.outputs = {out_dir};
  manifest.seeds = exp.seeds;
  if (stage_guard(manifest, out_dir, log)) return {out_dir, true};

  const RelationTaxonomy taxonomy =
      load_taxonomy((fs::path(data_dir) / "taxonomy.json").string());
  const DatasetSplits splits = load_splits(data_dir, taxonomy);

  const std::string checkpoint_dir = kv_get(cfg, "train.checkpoint_dir");
  const auto multi = train::run_multi_seed(exp, splits, taxonomy, kind, checkpoint_dir);
  fs::create_directories(out_dir);
  for (const auto& run : multi.runs) {
    const std::string seed_dir =
        (fs::path(out_dir) / ("seed-" + std::to_string(run.artifact.seed))).string();
    save_artifact(run.artifact, seed_dir, run.log);
    log << "[train] seed " << run.artifact.seed << ": acc=" << run.artifact.metrics.accuracy
        << " f1=" << run.artifact.metrics.macro_f1;
    if (run.artifact.metrics.leq) log << " leq=" << *run.artifact.metrics.leq;
    log << " (best epoch " << run.artifact.metrics.best_epoch << "/"
        << run.artifact.metrics.epochs_run << ")\n";
  }
  const std::string name =
      kv_get(cfg, "train.name", to_string(exp.label_encoder_kind) + "/" + to_string(kind));
  save_aggregate(multi.report, name, (fs::path(out_dir) / "aggregate.json").string());
  for (const auto& failure : multi.report.failures) log << "[train] FAILED " << failure << "\n";
  finish_manifest(manifest, out_dir);
  return {out_dir, false};
}

StageResult stage_evaluate(const KV& cfg, const std::string& artifact_dir,
                           const std::string& data_dir, const std::string& out_dir,
                           std::ostream& log) {
  RunManifest manifest;
  manifest.command = "evaluate";
  manifest.config_hash = kv_hash(cfg);
  manifest.inputs = {artifact_dir, data_dir};
  manifest.outputs = {out_dir};
  if (stage_guard(manifest, out_dir, log)) return {out_dir, true};

  auto seed_dirs = seed_dirs_of(artifact_dir);
  if (seed_dirs.empty()) seed_dirs.push_back({artifact_dir, -1, -1});

  fs::create_directories(out_dir);
  std::vector<train::SeedResult> results;
  for (const auto& sd : seed_dirs) {
    TrainedArtifact artifact = load_artifact(sd.dir);
    if (const std::string split = kv_get(cfg, "eval.proxy_split"); !split.empty()) {
      artifact.config.proxy_split = split_id_from_string(split);
    }
    const RelationTaxonomy& taxonomy = artifact.taxonomy;
    const DatasetSplits splits = load_splits(data_dir, taxonomy);
    const MetricsReport metrics = train::evaluate_artifact(artifact, splits);
    results.push_back(train::SeedResult{artifact.seed, metrics});

    // Correlation outputs for this seed.
    const SplitId split = artifact.config.proxy_split;
    const auto& proxy_data = split == SplitId::TRAIN ? splits.train
                             : split == SplitId::DEV ? splits.dev
                                                     : splits.test;
    const Mat reprs = encode_dataset(artifact, proxy_data);
    std::vector<int> golds(proxy_data.size());
    for (std::size_t i = 0; i < proxy_data.size(); ++i) golds[i] = proxy_data[i].label;
    const auto proxies = eval::class_proxies(reprs, golds, taxonomy.size(), split);
    const auto corr = eval::correlation_matrix(proxies, effective_label_vectors(artifact));
    std::vector<std::string> names;
    for (const auto& l : taxonomy.labels) names.push_back(l.name);
    const std::string tag = "seed-" + std::to_string(artifact.seed);
    report::write_matrix_tsv(corr.raw, names, names,
                             (fs::path(out_dir) / (tag + "_corr_raw.tsv")).string());
    report::write_matrix_tsv(corr.normalized, names, names,
                             (fs::path(out_dir) / (tag + "_corr_norm.tsv")).string());
    report::write_heatmap_svg(corr, names, (fs::path(out_dir) / (tag + "_heatmap.svg")).string());
    report::write_projection_svg(effective_label_vectors(artifact), proxies.matrix, names,
                                 (fs::path(out_dir) / (tag + "_projection.svg")).string());
    log << "[evaluate] " << tag << ": acc=" << metrics.accuracy << " f1=" << metrics.macro_f1;
    if (metrics.leq) log << " leq=" << *metrics.leq;
    log << "\n";
    for (const auto& notice : metrics.notices) log << "[evaluate] notice: " << notice << "\n";
  }
  save_aggregate(train::aggregate(results), "evaluate",
                 (fs::path(out_dir) / "aggregate.json").string());
  finish_manifest(manifest, out_dir);
  return {out_dir, false};
}

StageResult stage_map(const KV& cfg, const std::string& source_run, const std::string& target_run,
                      const std::string& out_dir, std::ostream& log) {
  RunManifest manifest;
  manifest.command = "map";
  manifest.config_hash = kv_hash(cfg);
  manifest.inputs = {source_run, target_run};
  manifest.outputs = {out_dir};
  if (stage_guard(manifest, out_dir, log)) return {out_dir, true};

  const std::string source_dir = best_seed_dir(source_run);
  const std::string target_dir = best_seed_dir(target_run);
  const TrainedArtifact source = load_artifact(source_dir);
  const TrainedArtifact target = load_artifact(target_dir);
  const auto matrix = align::cross_similarity(source, target);

  const double threshold = kv_double(cfg, "mapping.threshold", 0.10);
  const int top_n = kv_int(cfg, "mapping.top_n", 2);
  std::set<int> exclude_source, exclude_target;
  for (const auto& name : split_list(kv_get(cfg, "mapping.exclude_source"))) {
    const int id = matrix.source_taxonomy.find(name);
    if (id < 0) throw ValidationError("map: exclude label '" + name + "' not in source taxonomy");
    exclude_source.insert(id);
  }
  for (const auto& name : split_list(kv_get(cfg, "mapping.exclude_target"))) {
    const int id = matrix.target_taxonomy.find(name);
    if (id < 0) throw ValidationError("map: exclude label '" + name + "' not in target taxonomy");
    exclude_target.insert(id);
  }

  const auto forward = align::mapping_report(matrix, threshold, top_n, exclude_source);
  align::CrossFrameworkMatrix reversed;
  reversed.raw = matrix.raw.transpose();
  reversed.source_taxonomy = matrix.target_taxonomy;
  reversed.target_taxonomy = matrix.source_taxonomy;
  const auto backward = align::mapping_report(reversed, threshold, top_n, exclude_target);

  fs::create_directories(out_dir);
  std::vector<std::string> source_names, target_names;
  for (const auto& l : matrix.source_taxonomy.labels) source_names.push_back(l.name);
  for (const auto& l : matrix.target_taxonomy.labels) target_names.push_back(l.name);
  report::write_matrix_tsv(matrix.raw, source_names, target_names,
                           (fs::path(out_dir) / "cross_similarity.tsv").string());

  auto rows_of = [](const align::MappingReport& rep) {
    std::vector<std::vector<std::pair<int, double>>> rows;
    for (const auto& row : rep.rows) {
      std::vector<std::pair<int, double>> r;
      for (const auto& e : row) r.emplace_back(e.target_label, e.similarity);
      rows.push_back(std::move(r));
    }
    return rows;
  };
  {
    std::ofstream out(fs::path(out_dir) / "mapping.md");
    out << "# Cross-framework label mapping\n\n";
    out << "Source: " << matrix.source_provenance << " -> target: " << matrix.target_provenance
        << " (threshold " << threshold << ", top " << top_n << ")\n\n";
    out << "## " << matrix.source_taxonomy.framework_name << " perspective\n\n"
        << report::render_mapping_table(source_names, target_names, rows_of(forward)) << "\n";
    out << "## " << matrix.target_taxonomy.framework_name << " perspective\n\n"
        << report::render_mapping_table(target_names, source_names, rows_of(backward)) << "\n";
  }
  const auto auto_map =
      align::map_from_report(forward, matrix.source_taxonomy, matrix.target_taxonomy);
  align::save_relabeling_map(auto_map, (fs::path(out_dir) / "auto_map.tsv").string(),
                             "top-1 mapping derived from " + matrix.source_provenance + " vs " +
                                 matrix.target_provenance + "; edit before relabeling");
  {
    json j;
    j["source_artifact"] = source_dir;
    j["target_artifact"] = target_dir;
    j["source_provenance"] = matrix.source_provenance;
    j["target_provenance"] = matrix.target_provenance;
    j["threshold"] = threshold;
    j["top_n"] = top_n;
    std::ofstream out(fs::path(out_dir) / "summary.json");
    out << j.dump(2) << "\n";
  }
  log << "[map] wrote mapping for " << source_names.size() << " x " << target_names.size()
      << " labels to " << out_dir << "\n";
  finish_manifest(manifest, out_dir);
  return {out_dir, false};
}

StageResult stage_relabel(const KV& cfg, const std::string& map_file, const std::string& data_dir,
                          const std::string& out_dir, std::ostream& log) {
  RunManifest manifest;
  manifest.command = "relabel";
  manifest.config_hash = kv_hash(cfg);
  manifest.inputs = {map_file, data_dir};
  manifest.outputs = {out_dir};
  if (stage_guard(manifest, out_dir, log)) return {out_dir, true};

  const std::string provenance = kv_get(cfg, "relabel.provenance", "this-method");
  const auto map = align::load_relabeling_map(
      map_file, provenance == "external-table" ? align::RelabelingMap::Provenance::EXTERNAL_TABLE
                                               : align::RelabelingMap::Provenance::THIS_METHOD);
  const RelationTaxonomy source_tax =
      load_taxonomy((fs::path(data_dir) / "taxonomy.json").string());
  const DatasetSplits splits = load_splits(data_dir, source_tax);
  const std::string target_tax_path = kv_get(cfg, "relabel.target_taxonomy");
  if (target_tax_path.empty()) {
    throw ValidationError("relabel: relabel.target_taxonomy is required");
  }
  const RelationTaxonomy target_tax = load_taxonomy(target_tax_path);

  std::vector<RelationInstance> pool;
  for (const auto* split : {&splits.train, &splits.dev, &splits.test}) {
    pool.insert(pool.end(), split->begin(), split->end());
  }
  const std::string kind = kv_get(cfg, "relabel.kind", "explicit");
  if (kind == "explicit" || kind == "implicit") {
    const RelationKind want = kind == "explicit" ? RelationKind::EXPLICIT : RelationKind::IMPLICIT;
    std::erase_if(pool, [&](const RelationInstance& r) { return r.relation_kind != want; });
  } else if (kind != "all") {
    throw ValidationError("relabel: relabel.kind must be all|explicit|implicit");
  }

  const auto res = align::relabel_dataset(pool, map, source_tax, target_tax);
  fs::create_directories(out_dir);
  save_jsonl_dataset(res.instances, target_tax, (fs::path(out_dir) / "relabeled.jsonl").string());
  save_taxonomy(target_tax, (fs::path(out_dir) / "taxonomy.json").string());

  // Record the distance between the automatic map and the one actually used.
  const std::string auto_map_path = kv_get(cfg, "relabel.auto_map");
  json j;
  j["relabeled"] = res.relabeled;
  j["excluded"] = res.excluded;
  j["kind"] = kind;
  if (!auto_map_path.empty()) {
    const auto auto_map =
        align::load_relabeling_map(auto_map_path, align::RelabelingMap::Provenance::THIS_METHOD);
    json diffs = json::array();
    for (const auto& e : map.entries) {
      const auto* other = auto_map.find(e.source);
      const std::string used = e.target ? *e.target : "EXCLUDE";
      const std::string suggested = other && other->target ? *other->target : "EXCLUDE";
      if (!other || used != suggested) {
        diffs.push_back({{"source", e.source}, {"used", used}, {"suggested", suggested}});
      }
    }
    j["diff_vs_auto_map"] = diffs;
  }
  std::ofstream out(fs::path(out_dir) / "summary.json");
  out << j.dump(2) << "\n";
  log << "[relabel] " << res.relabeled << " instances relabeled, " << res.excluded
      << " excluded\n";
  finish_manifest(manifest, out_dir);
  return {out_dir, false};
}

StageResult stage_extrinsic(const KV& cfg, const std::string& target_data_dir,
                            const std::string& relabeled_file, const std::string& out_dir,
                            std::ostream& log) {
  RunManifest manifest;
  manifest.command = "extrinsic";
  manifest.config_hash = kv_hash(cfg);
  manifest.inputs = {target_data_dir, relabeled_file};
  manifest.outputs = {out_dir};
  const ExperimentConfig exp = experiment_config(cfg);
  manifest.seeds = exp.seeds;
  if (stage_guard(manifest, out_dir, log)) return {out_dir, true};

  const RelationTaxonomy taxonomy =
      load_taxonomy((fs::path(target_data_dir) / "taxonomy.json").string());
  const DatasetSplits base = load_splits(target_data_dir, taxonomy);
  const auto relabeled = load_jsonl_dataset(relabeled_file, taxonomy);
  const DatasetSplits merged = align::merge_for_extrinsic(base, relabeled);
  log << "[extrinsic] merged train " << base.train.size() << " + " << relabeled.size() << " -> "
      << merged.train.size() << "\n";

  const std::string checkpoint_dir = kv_get(cfg, "train.checkpoint_dir");
  std::vector<train::SeedResult> results;
  std::vector<int> golds;
  for (const auto& inst : merged.test) golds.push_back(inst.label);

  fs::create_directories(out_dir);
  for (const std::uint64_t seed : exp.seeds) {
    auto contrastive = train::train(exp, merged, taxonomy, seed, ModelKind::LABEL_EMBEDDING,
                                    checkpoint_dir);
    ExperimentConfig lbcfg = exp;
    lbcfg.label_encoder_kind = LabelEncoderKind::RANDOM;
    auto labelemb = train::train_baseline_labelemb(lbcfg, merged, taxonomy, seed, checkpoint_dir);
    auto classifier = train::train_baseline_classifier(exp, merged, taxonomy, seed,
                                                       checkpoint_dir);
    const std::vector<const TrainedArtifact*> members = {
        &contrastive.artifact, &labelemb.artifact, &classifier.artifact};
    const auto preds = align::ensemble_predict(members, merged.test);
    const auto metrics = eval::classification_metrics(preds, golds, taxonomy.size());
    MetricsReport report;
    report.accuracy = metrics.accuracy;
    report.macro_f1 = metrics.macro_f1;
    results.push_back(train::SeedResult{seed, report});
    log << "[extrinsic] seed " << seed << ": ensemble acc=" << metrics.accuracy
        << " f1=" << metrics.macro_f1 << "\n";
  }
  save_aggregate(train::aggregate(results), "extrinsic-ensemble",
                 (fs::path(out_dir) / "aggregate.json").string());
  finish_manifest(manifest, out_dir);
  return {out_dir, false};
}

StageResult stage_report(const KV& cfg, const std::vector<std::string>& run_dirs,
                         const std::string& out_dir, std::ostream& log) {
  RunManifest manifest;
  manifest.command = "report";
  manifest.config_hash = kv_hash(cfg);
  manifest.inputs = run_dirs;
  manifest.outputs = {out_dir};
  if (stage_guard(manifest, out_dir, log)) return {out_dir, true};

  std::vector<report::RunSummary> summaries;
  for (const auto& dir : run_dirs) {
    const fs::path agg = fs::path(dir) / "aggregate.json";
    if (!fs::exists(agg)) {
      throw ValidationError("report: no aggregate.json in '" + dir +
                            "' (run the train stage first)");
    }
    summaries.push_back(load_aggregate(agg.string()));
  }
  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "report.md");
    out << "# Experiment report\n\n";
    out << report::render_metrics_table(summaries) << "\n";
    out << "Values are x100 (percent scale); label-embedding quality is the mean of the\n"
           "row-normalized diagonal of the proxy/embedding cosine matrix.\n";
  }
  {
    json j = json::array();
    for (const auto& s : summaries) {
      json js;
      js["name"] = s.name;
      js["mean_accuracy"] = s.aggregate.mean_accuracy;
      js["std_accuracy"] = s.aggregate.std_accuracy;
      js["mean_macro_f1"] = s.aggregate.mean_macro_f1;
      js["std_macro_f1"] = s.aggregate.std_macro_f1;
      if (s.aggregate.leq_available) {
        js["mean_leq"] = s.aggregate.mean_leq;
        js["std_leq"] = s.aggregate.std_leq;
      }
      j.push_back(js);
    }
    std::ofstream out(fs::path(out_dir) / "metrics.json");
    out << j.dump(2) << "\n";
  }
  log << "[report] " << summaries.size() << " run(s) summarized in " << out_dir << "\n";
  finish_manifest(manifest, out_dir);
  return {out_dir, false};
}

int run_pipeline(const KV& cfg, const std::vector<std::string>& stages,
                 const std::string& out_root, std::ostream& log) {
  static const std::vector<std::string> kOrder = {"ingest",  "train",     "evaluate", "map",
                                                  "relabel", "extrinsic", "report"};
  std::set<std::string> requested(stages.begin(), stages.end());
  for (const auto& s : requested) {
    if (std::find(kOrder.begin(), kOrder.end(), s) == kOrder.end()) {
      throw ValidationError("unknown stage '" + s + "'");
    }
  }
  if (requested.empty()) throw ValidationError("no stages requested");
  fs::create_directories(out_root);

  auto stage_dir = [&](const char* name) { return (fs::path(out_root) / name).string(); };
  std::string data_dir = kv_get(cfg, "train.data", stage_dir("ingest"));
  std::string run_dir = kv_get(cfg, "evaluate.run", stage_dir("train"));

  for (const auto& name : kOrder) {
    if (!requested.count(name)) continue;
    if (name == "ingest") {
      data_dir = stage_ingest(cfg, stage_dir("ingest"), log).out_dir;
    } else if (name == "train") {
      if (!fs::exists(fs::path(data_dir) / "taxonomy.json")) {
        throw ValidationError("stage 'train' needs a dataset; missing upstream stage 'ingest' "
                              "(or set train.data)");
      }
      run_dir = stage_train(cfg, data_dir, stage_dir("train"), log).out_dir;
    } else if (name == "evaluate") {
      if (!fs::exists(run_dir)) {
        throw ValidationError("stage 'evaluate' needs a run; missing upstream stage 'train'");
      }
      stage_evaluate(cfg, run_dir, data_dir, stage_dir("evaluate"), log);
    } else if (name == "map") {
      const std::string source_run = kv_get(cfg, "mapping.source_run");
      const std::string target_run = kv_get(cfg, "mapping.target_run");
      if (source_run.empty() || target_run.empty() || !fs::exists(source_run) ||
          !fs::exists(target_run)) {
        throw ValidationError(
            "stage 'map' needs two trained runs; missing upstream stage 'train' "
            "(set mapping.source_run and mapping.target_run)");
      }
      stage_map(cfg, source_run, target_run, stage_dir("map"), log);
    } else if (name == "relabel") {
      const std::string map_file =
          kv_get(cfg, "relabel.map", (fs::path(stage_dir("map")) / "auto_map.tsv").string());
      const std::string source_data = kv_get(cfg, "relabel.data");
      if (!fs::exists(map_file)) {
        throw ValidationError("stage 'relabel' needs a mapping file; missing upstream stage "
                              "'map' (or set relabel.map)");
      }
      if (source_data.empty()) {
        throw ValidationError("stage 'relabel' needs relabel.data (source dataset directory)");
      }
      stage_relabel(cfg, map_file, source_data, stage_dir("relabel"), log);
    } else if (name == "extrinsic") {
      const std::string relabeled = kv_get(
          cfg, "extrinsic.relabeled", (fs::path(stage_dir("relabel")) / "relabeled.jsonl").string());
      const std::string target_data = kv_get(cfg, "extrinsic.data", data_dir);
      if (!fs::exists(relabeled)) {
        throw ValidationError("stage 'extrinsic' needs relabeled data; missing upstream stage "
                              "'relabel' (or set extrinsic.relabeled)");
      }
      stage_extrinsic(cfg, target_data, relabeled, stage_dir("extrinsic"), log);
    } else if (name == "report") {
      std::vector<std::string> runs = split_list(kv_get(cfg, "report.runs"));
      if (runs.empty() && fs::exists(fs::path(run_dir) / "aggregate.json")) {
        runs.push_back(run_dir);
      }
      if (runs.empty()) {
        throw ValidationError("stage 'report' needs runs; missing upstream stage 'train' "
                              "(or set report.runs)");
      }
      stage_report(cfg, runs, stage_dir("report"), log);
    }
  }
  return 0;
}

}  // namespace relalign::cli
