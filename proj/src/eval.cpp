#include "relalign/eval.hpp"

#include <algorithm>
#include <cmath>

#include "relalign/math.hpp"

namespace relalign::eval {

int predict(const Vec& input, const Mat& table) {
  if (input.size() != table.cols()) {
    throw ValidationError("predict: input dim " + std::to_string(input.size()) +
                          " != table dim " + std::to_string(table.cols()));
  }
  int best = 0;
  double best_score = -2.0;
  for (Index l = 0; l < table.rows(); ++l) {
    const double s = cosine(input, table.row(l).transpose());
    if (s > best_score) {
      best_score = s;
      best = static_cast<int>(l);
    }
  }
  return best;
}

std::vector<int> predict_batch(const Mat& inputs, const Mat& table) {
  const Mat cos = cosine_rows(inputs, table);
  std::vector<int> out(inputs.rows());
  for (Index i = 0; i < cos.rows(); ++i) {
    int best = 0;
    for (Index l = 1; l < cos.cols(); ++l) {
      if (cos(i, l) > cos(i, best)) best = static_cast<int>(l);
    }
    out[i] = best;
  }
  return out;
}

ClassificationMetrics classification_metrics(const std::vector<int>& preds,
                                             const std::vector<int>& golds, int k) {
  if (preds.size() != golds.size()) {
    throw ValidationError("classification_metrics: preds/golds length mismatch");
  }
  if (preds.empty()) throw ValidationError("classification_metrics: empty inputs");

  std::vector<double> tp(k, 0), fp(k, 0), fn(k, 0);
  double correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i], g = golds[i];
    if (p < 0 || p >= k || g < 0 || g >= k) {
      throw ValidationError("classification_metrics: label out of range");
    }
    if (p == g) {
      ++correct;
      ++tp[g];
    } else {
      ++fp[p];
      ++fn[g];
    }
  }

  ClassificationMetrics m;
  m.accuracy = correct / static_cast<double>(preds.size());
  double f1_sum = 0;
  int f1_classes = 0;
  for (int c = 0; c < k; ++c) {
    if (tp[c] + fp[c] + fn[c] == 0) continue;  // neither gold nor predicted
    const double denom = 2 * tp[c] + fp[c] + fn[c];
    f1_sum += denom > 0 ? 2 * tp[c] / denom : 0.0;
    ++f1_classes;
  }
  m.macro_f1 = f1_classes > 0 ? f1_sum / f1_classes : 0.0;
  return m;
}

ClassProxyTable class_proxies(const Mat& representations, const std::vector<int>& labels, int k,
                              SplitId split) {
  if (representations.rows() != static_cast<Index>(labels.size())) {
    throw ValidationError("class_proxies: representations/labels size mismatch");
  }
  ClassProxyTable out;
  out.matrix = Mat::Zero(k, representations.cols());
  out.counts.assign(k, 0);
  out.present.assign(k, false);
  out.source_split = split;
  out.leakage_notice = (split == SplitId::TEST);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (l < 0 || l >= k) throw ValidationError("class_proxies: label out of range");
    out.matrix.row(l) += representations.row(i);
    ++out.counts[l];
  }
  for (int c = 0; c < k; ++c) {
    if (out.counts[c] > 0) {
      out.matrix.row(c) /= static_cast<double>(out.counts[c]);
      out.present[c] = true;
    }
  }
  return out;
}

CorrelationMatrix correlation_matrix(const ClassProxyTable& proxies, const Mat& table) {
  const Index k = table.rows();
  if (proxies.matrix.rows() != k) {
    throw ValidationError("correlation_matrix: proxy/table row count mismatch");
  }
  if (proxies.matrix.cols() != table.cols()) {
    throw ValidationError("correlation_matrix: proxy/table dim mismatch");
  }

  CorrelationMatrix out;
  out.raw = Mat::Zero(k, k);
  out.normalized = Mat::Zero(k, k);
  out.excluded.assign(k, false);
  for (Index i = 0; i < k; ++i) {
    if (!proxies.present[i]) {
      out.excluded[i] = true;
      out.normalized.row(i).setConstant(0.5);
      continue;
    }
    for (Index j = 0; j < k; ++j) {
      out.raw(i, j) = cosine(proxies.matrix.row(i).transpose(), table.row(j).transpose());
    }
    const double lo = out.raw.row(i).minCoeff();
    const double hi = out.raw.row(i).maxCoeff();
    if (hi == lo) {
      // A constant row carries no ranking information.
      out.excluded[i] = true;
      out.normalized.row(i).setConstant(0.5);
    } else {
      out.normalized.row(i) = (out.raw.row(i).array() - lo) / (hi - lo);
    }
  }
  return out;
}

double leq_score(const CorrelationMatrix& corr) {
  double sum = 0;
  int n = 0;
  for (Index i = 0; i < corr.normalized.rows(); ++i) {
    if (corr.excluded[i]) continue;
    sum += corr.normalized(i, i);
    ++n;
  }
  if (n == 0) throw ValidationError("leq_score: every row is excluded");
  return sum / static_cast<double>(n);
}

double metric_correlation(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw ValidationError("metric_correlation: need at least 3 points");
  double ma = 0, mb = 0;
  for (const auto& [a, b] : points) {
    ma += a;
    mb += b;
  }
  ma /= points.size();
  mb /= points.size();
  double cov = 0, va = 0, vb = 0;
  for (const auto& [a, b] : points) {
    cov += (a - ma) * (b - mb);
    va += (a - ma) * (a - ma);
    vb += (b - mb) * (b - mb);
  }
  if (va == 0 || vb == 0) throw ValidationError("metric_correlation: constant series");
  return cov / std::sqrt(va * vb);
}

}  // namespace relalign::eval
