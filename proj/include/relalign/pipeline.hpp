#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "relalign/report.hpp"
#include "relalign/trainer.hpp"
#include "relalign/types.hpp"

namespace relalign::cli {

/// Flat "section.key" -> value view of an experiment config file; stages read
/// their own keys and ignore the rest.
using KV = std::map<std::string, std::string>;

std::string kv_get(const KV& cfg, const std::string& key, const std::string& fallback = "");
bool kv_flag(const KV& cfg, const std::string& key, bool fallback);
int kv_int(const KV& cfg, const std::string& key, int fallback);
double kv_double(const KV& cfg, const std::string& key, double fallback);

struct StageResult {
  std::string out_dir;
  bool skipped = false;  // manifest matched, stage not rerun
};

StageResult stage_ingest(const KV& cfg, const std::string& out_dir, std::ostream& log);
StageResult stage_train(const KV& cfg, const std::string& data_dir, const std::string& out_dir,
                        std::ostream& log);
StageResult stage_evaluate(const KV& cfg, const std::string& artifact_dir,
                           const std::string& data_dir, const std::string& out_dir,
                           std::ostream& log);
StageResult stage_map(const KV& cfg, const std::string& source_run, const std::string& target_run,
                      const std::string& out_dir, std::ostream& log);
StageResult stage_relabel(const KV& cfg, const std::string& map_file, const std::string& data_dir,
                          const std::string& out_dir, std::ostream& log);
StageResult stage_extrinsic(const KV& cfg, const std::string& target_data_dir,
                            const std::string& relabeled_file, const std::string& out_dir,
                            std::ostream& log);
StageResult stage_report(const KV& cfg, const std::vector<std::string>& run_dirs,
                         const std::string& out_dir, std::ostream& log);

/// Executes the requested stages in dependency order under out_root, wiring
/// stage outputs to downstream inputs; stages whose manifests match are
/// skipped. Missing upstream artifacts name the stage that would produce
/// them.
int run_pipeline(const KV& cfg, const std::vector<std::string>& stages,
                 const std::string& out_root, std::ostream& log);

/// Best-quality seed directory of a multi-seed run (falls back to accuracy
/// when no quality score is available); a plain artifact directory is
/// returned unchanged.
std::string best_seed_dir(const std::string& run_dir);

void save_aggregate(const train::AggregateReport& aggregate, const std::string& name,
                    const std::string& path);
report::RunSummary load_aggregate(const std::string& path);

}  // namespace relalign::cli
