#pragma once

#include <Eigen/Core>

#include <cmath>

#include "relalign/types.hpp"

namespace relalign {

/// Cosine similarity between two vectors. Zero-norm operands are an error:
/// silent zeros would mask initialization bugs upstream.
template <class DerivedA, class DerivedB>
double cosine(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) {
    throw ValidationError("cosine: zero-norm vector");
  }
  return u.dot(v) / (nu * nv);
}

/// Pairwise cosine similarities between rows of A (n x d) and rows of B (m x d),
/// returned as an n x m matrix.
template <class DerivedA, class DerivedB>
Mat cosine_rows(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.cols() != b.cols()) {
    throw ValidationError("cosine_rows: dimension mismatch");
  }
  Vec na = a.rowwise().norm();
  Vec nb = b.rowwise().norm();
  if ((na.array() == 0.0).any() || (nb.array() == 0.0).any()) {
    throw ValidationError("cosine_rows: zero-norm row");
  }
  Mat out = a * b.transpose();
  out.array().colwise() /= na.array();
  out.array().rowwise() /= nb.transpose().array();
  return out;
}

/// Numerically stable log(sum(exp(x))) over a vector expression.
template <class Derived>
double log_sum_exp(const Eigen::MatrixBase<Derived>& x) {
  const double m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}

/// Row-wise softmax of an n x m matrix.
inline Mat softmax_rows(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(i).array() - m).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

/// Gradient of cosine(u, v) with respect to u.
inline Vec d_cosine_du(const Vec& u, const Vec& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  const double c = u.dot(v) / (nu * nv);
  return v / (nu * nv) - c * u / (nu * nu);
}

}  // namespace relalign
