#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relalign/config.hpp"
#include "relalign/encoder.hpp"
#include "relalign/instance.hpp"
#include "relalign/taxonomy.hpp"
#include "relalign/types.hpp"

namespace relalign {

enum class ModelKind { LABEL_EMBEDDING, CLASSIFIER, LABELEMB_BASELINE };
std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct StepRecord {
  int step = 0;
  int epoch = 0;
  double icl = 0, lcl = 0, lec = 0, ice = 0, total = 0;
  double grad_norm = 0;  // post-clip global gradient norm
};

struct MetricsReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::optional<double> leq;  // fraction in [0, 1]; reports show x100
  std::vector<double> dev_losses;
  int best_epoch = 0;
  int epochs_run = 0;
  std::vector<std::string> notices;
};

/// Everything one training run produces. The encoder (plus classifier head)
/// is the opaque checkpoint part of the bundle; the label table, taxonomy,
/// config and metrics round-trip exactly.
struct TrainedArtifact {
  ExperimentConfig config;
  RelationTaxonomy taxonomy;
  ModelKind kind = ModelKind::LABEL_EMBEDDING;
  TextEncoder encoder;
  Mat label_table;  // k x d; empty for the classifier baseline
  Mat head_w;       // k x d classification head; empty when ice was off
  Vec head_b;
  MetricsReport metrics;
  std::uint64_t seed = 0;
  LabelEncoderKind label_encoder_kind = LabelEncoderKind::RANDOM;
  std::string label_encoder_family;

  bool has_label_table() const { return label_table.size() > 0; }
  void validate() const;
};

/// Bundle layout: config.ini, taxonomy.json, label_table.txt (row-major,
/// round-trip-exact text), encoder.bin, metrics.json, train_log.jsonl.
void save_artifact(const TrainedArtifact& artifact, const std::string& dir,
                   const std::vector<StepRecord>& train_log = {});
TrainedArtifact load_artifact(const std::string& dir);

/// Per-class vectors the quality metric compares against: the label table
/// when the model owns one, otherwise the classifier head's weight rows.
const Mat& effective_label_vectors(const TrainedArtifact& artifact);

/// Encode a dataset with the artifact's tokenizer/encoder settings.
Mat encode_dataset(const TrainedArtifact& artifact, const std::vector<RelationInstance>& data);

/// Class scores for encoded inputs: temperature-scaled cosines against the
/// label table, or head logits for the classifier baseline.
Mat model_scores(const TrainedArtifact& artifact, const Mat& inputs);

/// Row-wise softmax of model_scores; each member of an ensemble exposes its
/// distribution this way.
Mat model_distribution(const TrainedArtifact& artifact, const Mat& inputs);

std::vector<int> model_predict(const TrainedArtifact& artifact, const Mat& inputs);

/// Round-trip-exact text matrix IO (one row per line).
void save_matrix_text(const Mat& m, const std::string& path);
Mat load_matrix_text(const std::string& path);

}  // namespace relalign
