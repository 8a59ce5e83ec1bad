#pragma once

#include <string>

#include "defnet/fem.hpp"
#include "defnet/normalization.hpp"

namespace defnet {

enum class LossKind { Mse, ResidualAdd, ResidualMul };

std::string to_string(LossKind kind);
/// "mse", "lr_add", "lr_mul".
LossKind loss_kind_from_string(const std::string& name);

struct LossValue {
  double loss = 0.0;
  Vector grad;
};

/// sum((u - v)^2) / N and its gradient 2 (u - v) / N.
LossValue mse(const Vector& u, const Vector& v);

/// rho = ||R(u_phys)|| / c for a network output in scaled space (free
/// dofs). The displacement is de-standardized, multiplied by L and
/// expanded with zeros at clamped dofs before the residual is evaluated.
/// Propagates ElementInversionError.
double residual_factor(const Vector& u_scaled, const FemSystem& system,
                       const NormalizationSpec& norm, double c,
                       const ForceVector& f_ext);

/// MSE * rho; rho is treated as a constant, so grad = rho * grad(MSE).
LossValue residual_mul(const LossValue& mse_value, double rho);
/// MSE + rho; rho carries no gradient, so grad = grad(MSE).
LossValue residual_add(const LossValue& mse_value, double rho);

/// L_r*: evaluates rho for the sample and applies residual_mul.
LossValue loss_residual_mul(const Vector& u_scaled, const Vector& v_scaled,
                            const FemSystem& system,
                            const NormalizationSpec& norm, double c,
                            const ForceVector& f_ext, double* rho = nullptr);
/// L_r+: evaluates rho for the sample and applies residual_add.
LossValue loss_residual_add(const Vector& u_scaled, const Vector& v_scaled,
                            const FemSystem& system,
                            const NormalizationSpec& norm, double c,
                            const ForceVector& f_ext, double* rho = nullptr);

}  // namespace defnet
