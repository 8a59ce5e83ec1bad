#include "defnet/material.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "defnet/error.hpp"

namespace defnet {

namespace {

using Eigen::Matrix3d;

double checked_log_det(const Matrix3d& F) {
  const double j = F.determinant();
  if (!(j > 0.0))
    throw NumericalError("Neo-Hookean law requires det F > 0 (got " +
                         std::to_string(j) + ")");
  return std::log(j);
}

}  // namespace

std::string to_string(MaterialModel model) {
  switch (model) {
    case MaterialModel::StVenantKirchhoff:
      return "stvk";
    case MaterialModel::NeoHookean:
      return "neohookean";
  }
  return "unknown";
}

MaterialModel material_model_from_string(const std::string& name) {
  if (name == "stvk" || name == "StVenantKirchhoff")
    return MaterialModel::StVenantKirchhoff;
  if (name == "neohookean" || name == "NeoHookean")
    return MaterialModel::NeoHookean;
  throw ValidationError("unknown material model '" + name +
                        "' (expected stvk or neohookean)");
}

Material::Material(MaterialModel model, double young_modulus,
                   double poisson_ratio)
    : model_(model), young_(young_modulus), poisson_(poisson_ratio) {
  if (!(young_modulus > 0.0) || !std::isfinite(young_modulus))
    throw ValidationError("Young's modulus must be > 0");
  if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5))
    throw ValidationError("Poisson ratio must be in [0, 0.5)");
  lambda_ = young_ * poisson_ / ((1.0 + poisson_) * (1.0 - 2.0 * poisson_));
  mu_ = young_ / (2.0 * (1.0 + poisson_));
}

Material Material::from_lame(MaterialModel model, double lambda, double mu) {
  if (!(lambda >= 0.0) || !(mu > 0.0))
    throw ValidationError("Lame parameters must satisfy lambda >= 0, mu > 0");
  const double e = mu * (3.0 * lambda + 2.0 * mu) / (lambda + mu);
  const double nu = lambda / (2.0 * (lambda + mu));
  Material m(model, e, nu);
  m.lambda_ = lambda;
  m.mu_ = mu;
  return m;
}

double strain_energy_density(const Material& material, const Matrix3d& F) {
  const double lambda = material.lambda();
  const double mu = material.mu();
  switch (material.model()) {
    case MaterialModel::StVenantKirchhoff: {
      const Matrix3d e = 0.5 * (F.transpose() * F - Matrix3d::Identity());
      const double tr = e.trace();
      return 0.5 * lambda * tr * tr + mu * (e * e).trace();
    }
    case MaterialModel::NeoHookean: {
      const double log_j = checked_log_det(F);
      return 0.5 * mu * ((F.transpose() * F).trace() - 3.0) - mu * log_j +
             0.5 * lambda * log_j * log_j;
    }
  }
  return 0.0;
}

Matrix3d first_piola(const Material& material, const Matrix3d& F) {
  const double lambda = material.lambda();
  const double mu = material.mu();
  switch (material.model()) {
    case MaterialModel::StVenantKirchhoff: {
      const Matrix3d e = 0.5 * (F.transpose() * F - Matrix3d::Identity());
      const Matrix3d s =
          lambda * e.trace() * Matrix3d::Identity() + 2.0 * mu * e;
      return F * s;
    }
    case MaterialModel::NeoHookean: {
      const double log_j = checked_log_det(F);
      const Matrix3d f_inv_t = F.inverse().transpose();
      return mu * (F - f_inv_t) + lambda * log_j * f_inv_t;
    }
  }
  return Matrix3d::Zero();
}

Matrix3d first_piola_differential(const Material& material, const Matrix3d& F,
                                  const Matrix3d& dF) {
  const double lambda = material.lambda();
  const double mu = material.mu();
  switch (material.model()) {
    case MaterialModel::StVenantKirchhoff: {
      // P = F S(E): dP = dF S + F dS, dE = sym(F^T dF).
      const Matrix3d e = 0.5 * (F.transpose() * F - Matrix3d::Identity());
      const Matrix3d s =
          lambda * e.trace() * Matrix3d::Identity() + 2.0 * mu * e;
      const Matrix3d ftdf = F.transpose() * dF;
      const Matrix3d de = 0.5 * (ftdf + ftdf.transpose());
      const Matrix3d ds =
          lambda * de.trace() * Matrix3d::Identity() + 2.0 * mu * de;
      return dF * s + F * ds;
    }
    case MaterialModel::NeoHookean: {
      // d(F^-T) = -F^-T dF^T F^-T, d(ln J) = tr(F^-1 dF).
      const double log_j = checked_log_det(F);
      const Matrix3d f_inv = F.inverse();
      const Matrix3d f_inv_t = f_inv.transpose();
      const Matrix3d d_inv_t = -f_inv_t * dF.transpose() * f_inv_t;
      const double d_log_j = (f_inv * dF).trace();
      return mu * (dF - d_inv_t) + lambda * (d_log_j * f_inv_t + log_j * d_inv_t);
    }
  }
  return Matrix3d::Zero();
}

}  // namespace defnet
