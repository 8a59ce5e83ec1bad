#include "defnet/loss.hpp"

#include "defnet/error.hpp"

namespace defnet {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Mse:
      return "mse";
    case LossKind::ResidualAdd:
      return "lr_add";
    case LossKind::ResidualMul:
      return "lr_mul";
  }
  return "unknown";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "mse") return LossKind::Mse;
  if (name == "lr_add") return LossKind::ResidualAdd;
  if (name == "lr_mul") return LossKind::ResidualMul;
  throw ValidationError("unknown loss '" + name + "' (expected mse, lr_add or lr_mul)");
}

LossValue mse(const Vector& u, const Vector& v) {
  if (u.size() != v.size())
    throw ValidationError("MSE operands differ in length");
  if (u.size() == 0) throw ValidationError("MSE of empty vectors");
  const auto n = static_cast<double>(u.size());
  const Vector diff = u - v;
  return {diff.squaredNorm() / n, (2.0 / n) * diff};
}

double residual_factor(const Vector& u_scaled, const FemSystem& system,
                       const NormalizationSpec& norm, double c,
                       const ForceVector& f_ext) {
  if (!(c > 0.0)) throw ValidationError("residual scale c must be > 0");
  const DisplacementField u = expand(system, norm.scaled_to_displacement(u_scaled));
  return residual(system, u, f_ext).norm() / c;
}

LossValue residual_mul(const LossValue& mse_value, double rho) {
  return {mse_value.loss * rho, rho * mse_value.grad};
}

LossValue residual_add(const LossValue& mse_value, double rho) {
  return {mse_value.loss + rho, mse_value.grad};
}

LossValue loss_residual_mul(const Vector& u_scaled, const Vector& v_scaled,
                            const FemSystem& system,
                            const NormalizationSpec& norm, double c,
                            const ForceVector& f_ext, double* rho) {
  const double r = residual_factor(u_scaled, system, norm, c, f_ext);
  if (rho) *rho = r;
  return residual_mul(mse(u_scaled, v_scaled), r);
}

LossValue loss_residual_add(const Vector& u_scaled, const Vector& v_scaled,
                            const FemSystem& system,
                            const NormalizationSpec& norm, double c,
                            const ForceVector& f_ext, double* rho) {
  const double r = residual_factor(u_scaled, system, norm, c, f_ext);
  if (rho) *rho = r;
  return residual_add(mse(u_scaled, v_scaled), r);
}

}  // namespace defnet
