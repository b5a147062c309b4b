#include "relalign/optimizer.hpp"

#include <cmath>

namespace relalign::train {

double global_norm(const std::vector<Eigen::ArrayXd>& grads) {
  double sq = 0;
  for (const auto& g : grads) sq += (g * g).sum();
  return std::sqrt(sq);
}

double clip_global_norm(std::vector<Eigen::ArrayXd>& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm && norm > 0) {
    const double scale = max_norm / norm;
    for (auto& g : grads) g *= scale;
  }
  return norm;
}

AdamW::AdamW(const std::vector<Index>& sizes, Options opt) : opt_(opt) {
  m_.reserve(sizes.size());
  v_.reserve(sizes.size());
  for (Index s : sizes) {
    m_.emplace_back(Eigen::ArrayXd::Zero(s));
    v_.emplace_back(Eigen::ArrayXd::Zero(s));
  }
}

void AdamW::step(std::vector<ParamView>& params, const std::vector<Eigen::ArrayXd>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ValidationError("AdamW::step: parameter/gradient group count mismatch");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * grads[i];
    v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * grads[i].square();
    const Eigen::ArrayXd m_hat = m_[i] / bc1;
    const Eigen::ArrayXd v_hat = v_[i] / bc2;
    params[i] -= opt_.lr * (m_hat / (v_hat.sqrt() + opt_.eps) + opt_.weight_decay * params[i]);
  }
}

}  // namespace relalign::train
