#pragma once

#include <string>
#include <vector>

#include "relalign/config.hpp"
#include "relalign/types.hpp"

namespace relalign::eval {

/// Cosine argmax of one input representation against the label table; ties
/// break toward the lowest label id.
int predict(const Vec& input, const Mat& table);

/// Row-wise predictions for a batch of representations.
std::vector<int> predict_batch(const Mat& inputs, const Mat& table);

struct ClassificationMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

/// Accuracy and unweighted mean of per-class F1. Classes with neither gold
/// nor predicted instances are excluded from the macro average.
ClassificationMetrics classification_metrics(const std::vector<int>& preds,
                                             const std::vector<int>& golds, int k);

/// Per-class mean of input representations over one split (Eq-style class
/// proxies). Classes absent from the split are flagged and excluded
/// downstream.
struct ClassProxyTable {
  Mat matrix;                // k x d; zero rows where absent
  std::vector<int> counts;   // instances per class
  std::vector<bool> present;
  SplitId source_split = SplitId::TEST;
  bool leakage_notice = false;  // set when proxies come from the test split
};

ClassProxyTable class_proxies(const Mat& representations, const std::vector<int>& labels, int k,
                              SplitId split);

struct CorrelationMatrix {
  Mat raw;         // k x k, raw[i][j] = cos(proxy_i, label_emb_j)
  Mat normalized;  // per-row min-max scaled to [0, 1]
  std::vector<bool> excluded;  // absent or degenerate rows, left out of the quality score
};

/// Cosine matrix between class proxies and label embeddings plus its row-
/// normalized form. Degenerate rows (max == min) normalize to a constant 0.5
/// and are excluded; rows whose class was absent from the proxy split are
/// excluded as well.
CorrelationMatrix correlation_matrix(const ClassProxyTable& proxies, const Mat& table);

/// Label-embedding quality: mean of the normalized diagonal over non-excluded
/// rows, in [0, 1]. Reports multiply by 100.
double leq_score(const CorrelationMatrix& corr);

/// Pearson correlation coefficient over (a, b) pairs. Needs >= 3 points and
/// non-constant series.
double metric_correlation(const std::vector<std::pair<double, double>>& points);

}  // namespace relalign::eval
