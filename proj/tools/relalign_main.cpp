// relalign: learn label embeddings for discourse-relation inventories, score
// them, and align two frameworks' relation sets by embedding similarity.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "relalign/config.hpp"
#include "relalign/manifest.hpp"
#include "relalign/pipeline.hpp"
#include "relalign/types.hpp"

namespace {

using relalign::cli::KV;

KV load_kv(const std::string& config_path) {
  return config_path.empty() ? KV{} : relalign::parse_ini(config_path);
}

void set_if(KV& kv, const std::string& key, const std::string& value) {
  if (!value.empty()) kv[key] = value;
}

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(csv);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"label-embedding training and relation-inventory alignment"};
  app.set_version_flag("--version", relalign::cli::kToolVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir, data_dir;

  // ingest rst|pdtb|synthetic
  auto* ingest = app.add_subcommand("ingest", "parse and preprocess a corpus into datasets");
  std::string ingest_source, name_map, rst_train, rst_test, pdtb_files, skip_labels, translator,
      pivot, ingest_kind;
  int min_count = -1, classes = 0, per_class = 0;
  long long ingest_seed = -1;
  bool augment = false, include_other = false;
  ingest->add_option("source", ingest_source, "rst | pdtb | synthetic")->required();
  ingest->add_option("--config", config_path, "experiment config file");
  ingest->add_option("--out", out_dir, "output dataset directory")->required();
  ingest->add_option("--name-map", name_map, "fine-to-coarse relation name map (rst)");
  std::string descriptions;
  ingest->add_option("--descriptions", descriptions, "label description table to attach");
  ingest->add_option("--rst-train-dir", rst_train, "directory of training tree files");
  ingest->add_option("--rst-test-dir", rst_test, "directory of test tree files");
  ingest->add_option("--pdtb-files", pdtb_files, "relation record files or directories");
  ingest->add_option("--kind", ingest_kind, "pdtb relation kinds: all | explicit | implicit");
  ingest->add_option("--min-count", min_count, "sense filter threshold (keep count > N)");
  ingest->add_flag("--include-other", include_other, "keep sense-bearing non-explicit/implicit types");
  ingest->add_option("--classes", classes, "synthetic class count");
  ingest->add_option("--per-class", per_class, "synthetic training instances per class");
  ingest->add_option("--seed", ingest_seed, "synthetic generator seed");
  ingest->add_flag("--augment", augment, "append back-translated copies to train");
  ingest->add_option("--pivot", pivot, "augmentation pivot language");
  ingest->add_option("--skip-labels", skip_labels, "labels excluded from augmentation (csv)");
  ingest->add_option("--translator", translator, "identity | replay:<file> | http:<host>:<port>");

  // train
  auto* train_cmd = app.add_subcommand("train", "multi-seed training with early stopping");
  std::string toggles, label_encoder, seeds_csv, model, train_name;
  double lr = -1;
  train_cmd->add_option("--config", config_path, "experiment config file");
  train_cmd->add_option("--data", data_dir, "dataset directory")->required();
  train_cmd->add_option("--out", out_dir, "run output directory")->required();
  train_cmd->add_option("--toggles", toggles, "enabled losses, e.g. icl,lcl,lec,ice");
  train_cmd->add_option("--label-encoder", label_encoder,
                        "pretrained-a | pretrained-b | random | description | hierarchy");
  train_cmd->add_option("--seeds", seeds_csv, "run seeds, e.g. 1,2,3");
  train_cmd->add_option("--model", model, "label-embedding | classifier | labelemb-baseline");
  train_cmd->add_option("--lr", lr, "learning rate override");
  train_cmd->add_option("--name", train_name, "experiment tag used in reports");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "inference, metrics and correlation outputs");
  std::string artifact_dir, proxy_split, report_dir;
  eval_cmd->add_option("--config", config_path, "experiment config file");
  eval_cmd->add_option("--artifact", artifact_dir, "artifact or multi-seed run directory")
      ->required();
  eval_cmd->add_option("--data", data_dir, "dataset directory")->required();
  eval_cmd->add_option("--proxy-split", proxy_split, "train | dev | test");
  eval_cmd->add_option("--report", report_dir, "report output directory")->required();

  // map
  auto* map_cmd = app.add_subcommand("map", "cross-framework label similarity and mapping report");
  std::string source_run, target_run, exclude_src, exclude_tgt;
  double threshold = -2;
  int top_n = -1;
  map_cmd->add_option("--config", config_path, "experiment config file");
  map_cmd->add_option("--source", source_run, "source artifact or run directory")->required();
  map_cmd->add_option("--target", target_run, "target artifact or run directory")->required();
  map_cmd->add_option("--threshold", threshold, "similarity threshold (default 0.10)");
  map_cmd->add_option("--top", top_n, "targets kept per source label (default 2)");
  map_cmd->add_option("--exclude", exclude_src, "source labels left out of the mapping (csv)");
  map_cmd->add_option("--exclude-target", exclude_tgt, "target labels left out (csv)");
  map_cmd->add_option("--out", out_dir, "mapping output directory")->required();

  // relabel
  auto* relabel_cmd = app.add_subcommand("relabel", "re-tag one framework's data into another's");
  std::string map_file, relabel_kind, target_taxonomy, auto_map, provenance;
  relabel_cmd->add_option("--config", config_path, "experiment config file");
  relabel_cmd->add_option("--map", map_file, "relabeling map file")->required();
  relabel_cmd->add_option("--data", data_dir, "source dataset directory")->required();
  relabel_cmd->add_option("--target-taxonomy", target_taxonomy, "target taxonomy json")
      ->required();
  relabel_cmd->add_option("--kind", relabel_kind, "all | explicit | implicit (default explicit)");
  relabel_cmd->add_option("--auto-map", auto_map, "automatic map to diff against");
  relabel_cmd->add_option("--provenance", provenance, "this-method | external-table");
  relabel_cmd->add_option("--out", out_dir, "relabeled output directory")->required();

  // extrinsic
  auto* ext_cmd = app.add_subcommand("extrinsic", "merge relabeled data and evaluate the ensemble");
  std::string rst_data, relabeled_file;
  bool ensemble = false;
  ext_cmd->add_option("--config", config_path, "experiment config file");
  ext_cmd->add_option("--rst", rst_data, "target framework dataset directory")->required();
  ext_cmd->add_option("--relabeled", relabeled_file, "relabeled dataset file")->required();
  ext_cmd->add_flag("--ensemble", ensemble, "train the three-member ensemble (default behaviour)");
  ext_cmd->add_option("--seeds", seeds_csv, "run seeds");
  ext_cmd->add_option("--out", out_dir, "output directory")->required();

  // report
  auto* report_cmd = app.add_subcommand("report", "aggregate metrics tables across runs");
  std::string runs_csv;
  report_cmd->add_option("--config", config_path, "experiment config file");
  report_cmd->add_option("--runs", runs_csv, "run directories (csv)")->required();
  report_cmd->add_option("--out", out_dir, "report output directory")->required();

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "run configured stages in dependency order");
  std::string stages_csv;
  pipe_cmd->add_option("--config", config_path, "experiment config file")->required();
  pipe_cmd->add_option("--stages", stages_csv, "subset of ingest,train,evaluate,map,relabel,extrinsic,report");
  pipe_cmd->add_option("--out", out_dir, "pipeline root directory")->required();
  pipe_cmd->add_option("--seeds", seeds_csv, "seed override, e.g. 1,2,3");

  CLI11_PARSE(app, argc, argv);

  try {
    KV kv = load_kv(config_path);

    if (*ingest) {
      set_if(kv, "data.source", ingest_source);
      set_if(kv, "data.name_map", name_map);
      set_if(kv, "data.descriptions", descriptions);
      set_if(kv, "data.rst_train_dir", rst_train);
      set_if(kv, "data.rst_test_dir", rst_test);
      set_if(kv, "data.pdtb_files", pdtb_files);
      set_if(kv, "data.kind", ingest_kind);
      if (min_count >= 0) kv["data.min_count"] = std::to_string(min_count);
      if (include_other) kv["data.include_other"] = "true";
      if (classes > 0) kv["data.classes"] = std::to_string(classes);
      if (per_class > 0) kv["data.per_class"] = std::to_string(per_class);
      if (ingest_seed >= 0) kv["data.seed"] = std::to_string(ingest_seed);
      if (augment) kv["data.augment"] = "true";
      set_if(kv, "data.pivot", pivot);
      set_if(kv, "data.skip_labels", skip_labels);
      set_if(kv, "data.translator", translator);
      relalign::cli::stage_ingest(kv, out_dir, std::cout);
    } else if (*train_cmd) {
      set_if(kv, "losses.toggles", toggles);
      set_if(kv, "train.label_encoder", label_encoder);
      set_if(kv, "train.seeds", seeds_csv);
      set_if(kv, "train.model", model);
      set_if(kv, "train.name", train_name);
      if (lr > 0) kv["train.learning_rate"] = std::to_string(lr);
      relalign::cli::stage_train(kv, data_dir, out_dir, std::cout);
    } else if (*eval_cmd) {
      set_if(kv, "eval.proxy_split", proxy_split);
      relalign::cli::stage_evaluate(kv, artifact_dir, data_dir, report_dir, std::cout);
    } else if (*map_cmd) {
      if (threshold >= -1.0) kv["mapping.threshold"] = std::to_string(threshold);
      if (top_n > 0) kv["mapping.top_n"] = std::to_string(top_n);
      set_if(kv, "mapping.exclude_source", exclude_src);
      set_if(kv, "mapping.exclude_target", exclude_tgt);
      relalign::cli::stage_map(kv, source_run, target_run, out_dir, std::cout);
    } else if (*relabel_cmd) {
      set_if(kv, "relabel.kind", relabel_kind);
      set_if(kv, "relabel.target_taxonomy", target_taxonomy);
      set_if(kv, "relabel.auto_map", auto_map);
      set_if(kv, "relabel.provenance", provenance);
      relalign::cli::stage_relabel(kv, map_file, data_dir, out_dir, std::cout);
    } else if (*ext_cmd) {
      set_if(kv, "train.seeds", seeds_csv);
      relalign::cli::stage_extrinsic(kv, rst_data, relabeled_file, out_dir, std::cout);
    } else if (*report_cmd) {
      relalign::cli::stage_report(kv, split_csv(runs_csv), out_dir, std::cout);
    } else if (*pipe_cmd) {
      set_if(kv, "train.seeds", seeds_csv);
      std::vector<std::string> stages = split_csv(stages_csv);
      if (stages.empty()) stages = split_csv(relalign::cli::kv_get(kv, "pipeline.stages"));
      if (stages.empty()) stages = {"ingest", "train", "evaluate"};
      return relalign::cli::run_pipeline(kv, stages, out_dir, std::cout);
    }
    return 0;
  } catch (const relalign::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
}
