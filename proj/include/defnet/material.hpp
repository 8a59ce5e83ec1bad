#pragma once

#include <string>

#include <Eigen/Core>

namespace defnet {

enum class MaterialModel { StVenantKirchhoff, NeoHookean };

std::string to_string(MaterialModel model);
/// Accepts "stvk" / "neohookean" (and the full enum names).
MaterialModel material_model_from_string(const std::string& name);

/// Isotropic hyperelastic material. Lamé parameters are derived once at
/// construction.
class Material {
 public:
  /// E > 0, 0 <= nu < 0.5; throws ValidationError otherwise.
  Material(MaterialModel model, double young_modulus, double poisson_ratio);

  /// For tests and analytic checks: lambda >= 0, mu > 0.
  static Material from_lame(MaterialModel model, double lambda, double mu);

  MaterialModel model() const noexcept { return model_; }
  double young_modulus() const noexcept { return young_; }
  double poisson_ratio() const noexcept { return poisson_; }
  double lambda() const noexcept { return lambda_; }
  double mu() const noexcept { return mu_; }

 private:
  MaterialModel model_;
  double young_;
  double poisson_;
  double lambda_;
  double mu_;
};

/// Psi(F). StVK: (lambda/2) tr(E)^2 + mu tr(E^2), E = (F^T F - I)/2.
/// Neo-Hookean: (mu/2)(tr(F^T F) - 3) - mu ln J + (lambda/2)(ln J)^2.
/// Neo-Hookean with det F <= 0 throws NumericalError.
double strain_energy_density(const Material& material,
                             const Eigen::Matrix3d& F);

/// First Piola-Kirchhoff stress P = dPsi/dF.
Eigen::Matrix3d first_piola(const Material& material, const Eigen::Matrix3d& F);

/// Directional derivative dP = (dP/dF) : dF.
Eigen::Matrix3d first_piola_differential(const Material& material,
                                         const Eigen::Matrix3d& F,
                                         const Eigen::Matrix3d& dF);

}  // namespace defnet
