#include "defnet/adam.hpp"

#include <cmath>

#include "defnet/error.hpp"

namespace defnet {

void adam_step(Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::Ref<const Eigen::VectorXd>& grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ValidationError("Adam: parameter, gradient and state sizes differ");
  const AdamConfig& c = state.config;
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

}  // namespace defnet
