#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relalign/artifact.hpp"
#include "relalign/config.hpp"
#include "relalign/instance.hpp"
#include "relalign/taxonomy.hpp"

namespace relalign::train {

struct TrainRun {
  TrainedArtifact artifact;
  std::vector<StepRecord> log;
};

/// One optimization run: mini-batch updates on the summed loss, per-epoch dev
/// evaluation, gradient clipping, early stopping on dev loss with best-epoch
/// restore. Deterministic given the seed.
TrainRun train(const ExperimentConfig& cfg, const DatasetSplits& splits,
               const RelationTaxonomy& taxonomy, std::uint64_t seed,
               ModelKind kind = ModelKind::LABEL_EMBEDDING, const std::string& checkpoint_dir = "");

/// Cross-entropy-only baseline: ice toggle alone, no label table, learning
/// rate 5e-5 unless the config carries an explicit one. The head's weight
/// rows stand in for label embeddings in the quality metric.
TrainRun train_baseline_classifier(const ExperimentConfig& cfg, const DatasetSplits& splits,
                                   const RelationTaxonomy& taxonomy, std::uint64_t seed,
                                   const std::string& checkpoint_dir = "");

/// Label-embedding baseline: cross-entropy over softmax of temperature-scaled
/// input/label cosines, no contrastive or separation terms.
TrainRun train_baseline_labelemb(const ExperimentConfig& cfg, const DatasetSplits& splits,
                                 const RelationTaxonomy& taxonomy, std::uint64_t seed,
                                 const std::string& checkpoint_dir = "");

struct SeedResult {
  std::uint64_t seed = 0;
  MetricsReport metrics;
};

struct AggregateReport {
  std::vector<SeedResult> per_seed;
  double mean_accuracy = 0, std_accuracy = 0;
  double mean_macro_f1 = 0, std_macro_f1 = 0;
  double mean_leq = 0, std_leq = 0;
  bool leq_available = false;
  bool single_run = false;
  std::vector<std::string> failures;  // seeds that aborted, with reasons
};

/// Mean and sample standard deviation over per-seed metrics.
AggregateReport aggregate(const std::vector<SeedResult>& results,
                          const std::vector<std::string>& failures = {});

/// Runs train() once per config seed; failed seeds are reported, not fatal
/// (unless every seed fails). Artifacts are returned in seed order.
struct MultiSeedRun {
  std::vector<TrainRun> runs;
  AggregateReport report;
};
MultiSeedRun run_multi_seed(const ExperimentConfig& cfg, const DatasetSplits& splits,
                            const RelationTaxonomy& taxonomy,
                            ModelKind kind = ModelKind::LABEL_EMBEDDING,
                            const std::string& checkpoint_dir = "");

/// Recompute test metrics for a stored model; used for artifact
/// self-consistency checks and by the evaluate command.
MetricsReport evaluate_artifact(const TrainedArtifact& artifact, const DatasetSplits& splits);

}  // namespace relalign::train
