#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "relalign/types.hpp"

namespace relalign {

enum class LabelEncoderKind { PRETRAINED_A, PRETRAINED_B, RANDOM, DESCRIPTION, HIERARCHY };
enum class SplitId { TRAIN, DEV, TEST };

std::string to_string(LabelEncoderKind k);
std::string to_string(SplitId s);
LabelEncoderKind label_encoder_kind_from_string(const std::string& s);
SplitId split_id_from_string(const std::string& s);

struct LossToggles {
  bool icl = true;
  bool lcl = true;
  bool lec = true;
  bool ice = true;

  bool any() const { return icl || lcl || lec || ice; }
  std::string describe() const;
};

LossToggles toggles_from_string(const std::string& csv);

struct ExperimentConfig {
  double temperature = 0.1;
  double learning_rate = 1e-5;  // 5e-5 for the classification baseline
  bool lr_explicit = false;     // set when a config/CLI supplied the rate
  double weight_decay = 0.01;
  double grad_clip_norm = 1.0;
  int max_epochs = 10;
  int early_stop_patience = 6;
  int batch_size = 32;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  LabelEncoderKind label_encoder_kind = LabelEncoderKind::PRETRAINED_B;
  std::vector<double> hier_penalties = {1.4142135623730951, 2.0};
  LossToggles loss_toggles;
  int max_len_arg1 = 100;
  int max_len_arg2 = 100;
  SplitId proxy_split = SplitId::TEST;

  // Encoder capacity; label-embedding dimension always equals embed_dim so
  // input/label cosine comparisons are well-typed.
  int embed_dim = 64;
  int vocab_size = 2048;
  std::string input_encoder_family = "tiny-a";
  bool lcl_include_positives = false;

  /// Family string for the label encoder implied by label_encoder_kind.
  std::string label_encoder_family() const;

  void validate() const;
};

/// Flat key-value config file with [sections]; '#' or ';' start a comment.
/// Keys are addressed as "section.key".
std::map<std::string, std::string> parse_ini(const std::string& path);

ExperimentConfig config_from_ini(const std::map<std::string, std::string>& kv);
ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);

/// Stable content hash of a config, used by run manifests to detect drift.
std::string config_hash(const ExperimentConfig& cfg);

/// Batch-size auto-probe: largest power of two that keeps the working set of
/// one batch under a coarse memory budget. A stand-in for "as large as the
/// device accommodates"; the chosen value is logged with results.
int suggest_batch_size(std::size_t n_train, int embed_dim, std::size_t budget_bytes = 1u << 28);

}  // namespace relalign
