#include "relalign/losses.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "relalign/math.hpp"

namespace relalign::losses {

namespace {

/// Shared backward step for losses built on pairwise row cosines.
/// Given g = dL/d cos(a_i, b_j) as an n x m matrix, accumulates dL/dA and
/// dL/dB. Handles A and B aliasing the same matrix (caller sums results).
void cosine_backward(const Mat& a, const Mat& b, const Mat& cos, const Mat& g, Mat& d_a,
                     Mat& d_b) {
  const Vec na = a.rowwise().norm();
  const Vec nb = b.rowwise().norm();
  Mat a_hat = a.array().colwise() / na.array();
  Mat b_hat = b.array().colwise() / nb.array();

  // d cos_ij / d a_i = (b_hat_j - cos_ij * a_hat_i) / |a_i|
  Vec row_mix = (g.array() * cos.array()).rowwise().sum();
  Mat da = g * b_hat;
  da -= row_mix.asDiagonal() * a_hat;
  da.array().colwise() /= na.array();
  d_a += da;

  Vec col_mix = (g.array() * cos.array()).colwise().sum();
  Mat db = g.transpose() * a_hat;
  db -= col_mix.asDiagonal() * b_hat;
  db.array().colwise() /= nb.array();
  d_b += db;
}

void check_labels(const std::vector<int>& labels, Index k) {
  if (labels.empty()) throw ValidationError("loss: empty batch");
  for (int l : labels) {
    if (l < 0 || l >= k) {
      throw ValidationError("loss: label id " + std::to_string(l) + " out of range [0, " +
                            std::to_string(k) + ")");
    }
  }
}

}  // namespace

void BatchTensors::validate() const {
  if (inputs.rows() < 1) throw ValidationError("batch: no input rows");
  if (inputs.rows() != static_cast<Index>(labels.size())) {
    throw ValidationError("batch: inputs/labels size mismatch");
  }
  if (inputs.cols() != table.cols()) {
    throw ValidationError("batch: input dim " + std::to_string(inputs.cols()) +
                          " != label table dim " + std::to_string(table.cols()));
  }
  if (tau <= 0.0) throw ValidationError("batch: temperature must be > 0");
  check_labels(labels, table.rows());
}

LossResult icl_loss(const BatchTensors& batch) {
  batch.validate();
  const Index n = batch.inputs.rows();
  const Mat cos = cosine_rows(batch.inputs, batch.table);
  const Mat probs = softmax_rows(cos / batch.tau);

  LossResult res;
  for (Index i = 0; i < n; ++i) {
    res.value -= std::log(probs(i, batch.labels[i]));
  }
  res.value /= static_cast<double>(n);

  // dL/d score_il = (p_il - [l == y_i]) / n, score = cos / tau.
  Mat g = probs;
  for (Index i = 0; i < n; ++i) g(i, batch.labels[i]) -= 1.0;
  g /= static_cast<double>(n) * batch.tau;

  res.d_inputs = Mat::Zero(batch.inputs.rows(), batch.inputs.cols());
  res.d_table = Mat::Zero(batch.table.rows(), batch.table.cols());
  cosine_backward(batch.inputs, batch.table, cos, g, res.d_inputs, res.d_table);
  return res;
}

LossResult lcl_loss(const BatchTensors& batch, bool include_positives) {
  batch.validate();
  const Index n = batch.inputs.rows();
  const Mat cos = cosine_rows(batch.inputs, batch.table);
  const Mat scores = cos / batch.tau;

  std::set<int> classes(batch.labels.begin(), batch.labels.end());

  LossResult res;
  res.d_inputs = Mat::Zero(batch.inputs.rows(), batch.inputs.cols());
  res.d_table = Mat::Zero(batch.table.rows(), batch.table.cols());
  if (classes.size() < 2) {
    res.single_class = true;
    return res;  // no negatives anywhere in the batch
  }

  Mat g = Mat::Zero(n, batch.table.rows());
  const double inv_c = 1.0 / static_cast<double>(classes.size());

  for (int c : classes) {
    std::vector<Index> pos, neg;
    for (Index j = 0; j < n; ++j) {
      (batch.labels[j] == c ? pos : neg).push_back(j);
    }
    if (include_positives) {
      // Denominator per positive: the positive itself plus all negatives.
      for (Index p : pos) {
        std::vector<Index> denom = neg;
        denom.push_back(p);
        Vec s(denom.size());
        for (std::size_t j = 0; j < denom.size(); ++j) s[j] = scores(denom[j], c);
        const double lse = log_sum_exp(s);
        res.value -= inv_c * (scores(p, c) - lse);
        g(p, c) -= inv_c;
        for (std::size_t j = 0; j < denom.size(); ++j) {
          g(denom[j], c) += inv_c * std::exp(s[j] - lse);
        }
      }
    } else {
      // As defined: positives are absent from the denominator.
      Vec s(neg.size());
      for (std::size_t j = 0; j < neg.size(); ++j) s[j] = scores(neg[j], c);
      const double lse = log_sum_exp(s);
      for (Index p : pos) {
        res.value -= inv_c * (scores(p, c) - lse);
        g(p, c) -= inv_c;
      }
      const double n_pos = static_cast<double>(pos.size());
      for (std::size_t j = 0; j < neg.size(); ++j) {
        g(neg[j], c) += inv_c * n_pos * std::exp(s[j] - lse);
      }
    }
  }

  g /= batch.tau;
  cosine_backward(batch.inputs, batch.table, cos, g, res.d_inputs, res.d_table);
  return res;
}

TableLossResult lec_loss(const Mat& table, double tau) {
  if (table.rows() < 2) throw ValidationError("lec_loss: need at least 2 labels");
  if (tau <= 0.0) throw ValidationError("lec_loss: temperature must be > 0");
  const Index k = table.rows();
  const Mat cos = cosine_rows(table, table);
  const Mat probs = softmax_rows(cos / tau);

  TableLossResult res;
  for (Index i = 0; i < k; ++i) res.value -= std::log(probs(i, i));
  res.value /= static_cast<double>(k);

  Mat g = probs - Mat::Identity(k, k);
  g /= static_cast<double>(k) * tau;

  res.d_table = Mat::Zero(k, table.cols());
  Mat d_rows = Mat::Zero(k, table.cols());
  Mat d_cols = Mat::Zero(k, table.cols());
  cosine_backward(table, table, cos, g, d_rows, d_cols);
  res.d_table = d_rows + d_cols;
  return res;
}

LogitsLossResult ice_loss(const Mat& logits, const std::vector<int>& labels) {
  if (logits.rows() < 1) throw ValidationError("ice_loss: empty batch");
  if (logits.rows() != static_cast<Index>(labels.size())) {
    throw ValidationError("ice_loss: logits/labels size mismatch");
  }
  check_labels(labels, logits.cols());
  const Index n = logits.rows();
  const Mat probs = softmax_rows(logits);

  LogitsLossResult res;
  for (Index i = 0; i < n; ++i) res.value -= std::log(probs(i, labels[i]));
  res.value /= static_cast<double>(n);

  res.d_logits = probs;
  for (Index i = 0; i < n; ++i) res.d_logits(i, labels[i]) -= 1.0;
  res.d_logits /= static_cast<double>(n);
  return res;
}

LossBreakdown total_loss(const BatchTensors& batch, const Mat& logits, const LossToggles& toggles,
                         bool lcl_include_positives) {
  if (!toggles.any()) throw ValidationError("total_loss: no losses enabled");
  LossBreakdown out;
  out.d_inputs = Mat::Zero(batch.inputs.rows(), batch.inputs.cols());
  out.d_table = Mat::Zero(batch.table.rows(), batch.table.cols());
  if (toggles.ice) out.d_logits = Mat::Zero(logits.rows(), logits.cols());

  if (toggles.icl) {
    LossResult r = icl_loss(batch);
    out.icl = r.value;
    out.d_inputs += r.d_inputs;
    out.d_table += r.d_table;
  }
  if (toggles.lcl) {
    LossResult r = lcl_loss(batch, lcl_include_positives);
    out.lcl = r.value;
    out.lcl_single_class = r.single_class;
    out.d_inputs += r.d_inputs;
    out.d_table += r.d_table;
  }
  if (toggles.lec) {
    TableLossResult r = lec_loss(batch.table, batch.tau);
    out.lec = r.value;
    out.d_table += r.d_table;
  }
  if (toggles.ice) {
    LogitsLossResult r = ice_loss(logits, batch.labels);
    out.ice = r.value;
    out.d_logits = r.d_logits;
  }
  out.total = out.icl + out.lcl + out.lec + out.ice;
  return out;
}

LossResult hier_loss_grouped(const BatchTensors& batch, const std::vector<int>& parent_of,
                             int n_groups, const std::vector<double>& penalties) {
  batch.validate();
  if (penalties.size() != 2) throw ValidationError("hier_loss: need exactly two penalties");
  const Index k2 = batch.table.rows();
  if (static_cast<Index>(parent_of.size()) != k2) {
    throw ValidationError("hier_loss: parent assignment size mismatch");
  }
  if (n_groups < 1) throw ValidationError("hier_loss: no level-1 groups");

  // Level-1 table: average of child rows per parent group.
  Mat table1 = Mat::Zero(n_groups, batch.table.cols());
  std::vector<double> counts(n_groups, 0.0);
  for (Index l = 0; l < k2; ++l) {
    const int p = parent_of[l];
    if (p < 0 || p >= n_groups) throw ValidationError("hier_loss: parent index out of range");
    table1.row(p) += batch.table.row(l);
    counts[p] += 1.0;
  }
  for (int p = 0; p < n_groups; ++p) {
    if (counts[p] == 0.0) throw ValidationError("hier_loss: empty level-1 group");
    table1.row(p) /= counts[p];
  }

  std::vector<int> labels1(batch.labels.size());
  for (std::size_t i = 0; i < batch.labels.size(); ++i) labels1[i] = parent_of[batch.labels[i]];

  const BatchTensors b1{batch.inputs, labels1, table1, batch.tau};
  LossResult icl1 = icl_loss(b1);
  LossResult lcl1 = lcl_loss(b1);
  LossResult icl2 = icl_loss(batch);
  LossResult lcl2 = lcl_loss(batch);

  LossResult res;
  res.single_class = lcl1.single_class || lcl2.single_class;
  res.value = penalties[0] * (icl1.value + lcl1.value) + penalties[1] * (icl2.value + lcl2.value);
  res.d_inputs = penalties[0] * (icl1.d_inputs + lcl1.d_inputs) +
                 penalties[1] * (icl2.d_inputs + lcl2.d_inputs);
  res.d_table = penalties[1] * (icl2.d_table + lcl2.d_table);
  const Mat d_table1 = icl1.d_table + lcl1.d_table;
  for (Index l = 0; l < k2; ++l) {
    res.d_table.row(l) += penalties[0] * d_table1.row(parent_of[l]) / counts[parent_of[l]];
  }
  return res;
}

LossResult hier_loss(const BatchTensors& batch, const RelationTaxonomy& taxonomy,
                     const std::vector<double>& penalties) {
  taxonomy.validate();
  for (const auto& l : taxonomy.labels) {
    if (!l.hierarchy_path || l.hierarchy_path->size() < 2) {
      throw ValidationError("hier_loss: label '" + l.name +
                            "' lacks a hierarchy with at least 2 levels");
    }
  }
  if (taxonomy.size() != static_cast<int>(batch.table.rows())) {
    throw ValidationError("hier_loss: taxonomy/table size mismatch");
  }
  auto [parent_of, groups] = taxonomy.level1_groups();
  return hier_loss_grouped(batch, parent_of, static_cast<int>(groups.size()), penalties);
}

}  // namespace relalign::losses
