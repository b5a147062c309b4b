#pragma once

#include <vector>

#include "relalign/types.hpp"

namespace relalign::train {

using ParamView = Eigen::Map<Eigen::ArrayXd>;
using GradView = Eigen::Map<const Eigen::ArrayXd>;

/// Global L2 norm across gradient views.
double global_norm(const std::vector<Eigen::ArrayXd>& grads);

/// Scales all gradients in place so their global norm is at most max_norm.
/// Returns the pre-clip norm.
double clip_global_norm(std::vector<Eigen::ArrayXd>& grads, double max_norm);

/// Adam with decoupled weight decay.
class AdamW {
 public:
  struct Options {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
  };

  AdamW(const std::vector<Index>& sizes, Options opt);

  void step(std::vector<ParamView>& params, const std::vector<Eigen::ArrayXd>& grads);

 private:
  std::vector<Eigen::ArrayXd> m_, v_;
  Options opt_;
  long t_ = 0;
};

}  // namespace relalign::train
