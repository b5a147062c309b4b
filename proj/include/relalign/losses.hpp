#pragma once

#include <vector>

#include "relalign/config.hpp"
#include "relalign/taxonomy.hpp"
#include "relalign/types.hpp"

namespace relalign::losses {

/// View over one training batch: input representations (N x d), their label
/// ids, the label table (k x d) and the softmax temperature.
struct BatchTensors {
  const Mat& inputs;
  const std::vector<int>& labels;
  const Mat& table;
  double tau;

  void validate() const;
};

struct LossResult {
  double value = 0.0;
  Mat d_inputs;
  Mat d_table;
  bool single_class = false;  // set when a batch had no negatives at all
};

struct TableLossResult {
  double value = 0.0;
  Mat d_table;
};

struct LogitsLossResult {
  double value = 0.0;
  Mat d_logits;
};

/// Instance-centered contrastive loss: mean over the batch of the negative
/// log-probability of the gold label under a softmax of temperature-scaled
/// input/label cosines. The denominator ranges over all k labels.
LossResult icl_loss(const BatchTensors& batch);

/// Label-centered contrastive loss. For each in-batch class c, every
/// positive is scored against the set of other-class instances only; the
/// positive is absent from the denominator, so the value may be negative.
/// Classes without negatives contribute nothing and do not count toward the
/// class average; a batch with a single class returns 0 with the
/// single_class flag set. `include_positives` switches to the conventional
/// formulation that adds the positive term to the denominator.
LossResult lcl_loss(const BatchTensors& batch, bool include_positives = false);

/// Label-embedding separation loss: row-wise softmax over the temperature-
/// scaled label/label cosine matrix, cross-entropy against identity targets.
/// Decreasing off-diagonal similarity decreases the loss.
TableLossResult lec_loss(const Mat& table, double tau);

/// Canonical mean cross-entropy over classifier logits.
LogitsLossResult ice_loss(const Mat& logits, const std::vector<int>& labels);

struct LossBreakdown {
  double icl = 0.0, lcl = 0.0, lec = 0.0, ice = 0.0;
  double total = 0.0;
  bool lcl_single_class = false;
  Mat d_inputs;
  Mat d_table;
  Mat d_logits;
};

/// Unweighted sum of the enabled losses, with each component reported
/// individually. `logits` may be empty when ice is toggled off.
LossBreakdown total_loss(const BatchTensors& batch, const Mat& logits, const LossToggles& toggles,
                         bool lcl_include_positives = false);

/// Two-level contrastive loss: the level-1 label table is derived by
/// averaging level-2 rows sharing a parent, and the icl + lcl pair is
/// evaluated per level and combined as penalties[0] * L1 + penalties[1] * L2.
/// Replaces the flat icl + lcl terms for hierarchy-aware training.
LossResult hier_loss(const BatchTensors& batch, const RelationTaxonomy& taxonomy,
                     const std::vector<double>& penalties);

/// Same computation with an explicit parent assignment (k2 entries in
/// [0, k1)); exposed for tests.
LossResult hier_loss_grouped(const BatchTensors& batch, const std::vector<int>& parent_of,
                             int n_groups, const std::vector<double>& penalties);

}  // namespace relalign::losses
