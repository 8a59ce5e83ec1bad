#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace defnet {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  explicit AdamState(Eigen::Index size, AdamConfig config = {})
      : config(config),
        m(Eigen::VectorXd::Zero(size)),
        v(Eigen::VectorXd::Zero(size)) {}

  AdamConfig config;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t t = 0;
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::Ref<const Eigen::VectorXd>& grads,
               AdamState& state);

}  // namespace defnet
