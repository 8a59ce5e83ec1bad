#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "defnet/material.hpp"
#include "defnet/mesh.hpp"

namespace defnet {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Full-length nodal vectors, 3 entries per node in node order.
using DisplacementField = Vector;
using ForceVector = Vector;

/// Mesh + material + Dirichlet reduction, with per-element shape-function
/// gradients and rest volumes precomputed (P1 tets, one quadrature point).
class FemSystem {
 public:
  FemSystem(Mesh mesh, Material material);

  const Mesh& mesh() const noexcept { return mesh_; }
  const Material& material() const noexcept { return material_; }

  std::size_t num_dofs() const noexcept { return mesh_.num_dofs(); }
  std::size_t num_free() const noexcept { return free_dofs_.size(); }

  /// Reduced index -> full dof index, ascending.
  const std::vector<std::size_t>& free_dofs() const noexcept {
    return free_dofs_;
  }
  /// Full dof index -> reduced index, or -1 for clamped dofs.
  const std::vector<std::ptrdiff_t>& reduced_index() const noexcept {
    return reduced_index_;
  }

  double characteristic_length() const noexcept { return length_; }

  /// Rows are the constant gradients of the four P1 shape functions.
  const Eigen::Matrix<double, 4, 3>& shape_gradients(std::size_t e) const {
    return gradients_[e];
  }
  double rest_volume(std::size_t e) const { return volumes_[e]; }

  /// F = I + sum_a u_a (grad N_a)^T for element e.
  Eigen::Matrix3d deformation_gradient(std::size_t e,
                                       const DisplacementField& u) const;

 private:
  Mesh mesh_;
  Material material_;
  std::vector<std::size_t> free_dofs_;
  std::vector<std::ptrdiff_t> reduced_index_;
  std::vector<Eigen::Matrix<double, 4, 3>> gradients_;
  std::vector<double> volumes_;
  double length_ = 0.0;
};

/// Sum over elements of Psi(F_e) * vol_e.
double total_strain_energy(const FemSystem& system, const DisplacementField& u);

/// f^i(u), the gradient of the total strain energy. f^i(0) = 0.
/// Throws ElementInversionError (with element id) when the law rejects F.
ForceVector internal_forces(const FemSystem& system, const DisplacementField& u);

/// K(u) = d f^i / d u, full N x N, symmetric.
SparseMatrix tangent_stiffness(const FemSystem& system,
                               const DisplacementField& u);

/// K(u) restricted to free dofs, assembled directly.
SparseMatrix reduced_tangent_stiffness(const FemSystem& system,
                                       const DisplacementField& u);

/// R(u) = f^i(u) - f^e with clamped entries zeroed.
ForceVector residual(const FemSystem& system, const DisplacementField& u,
                     const ForceVector& f_ext);

/// Euclidean norm of the free-dof part.
double free_norm(const FemSystem& system, const Vector& v);

Vector reduce(const FemSystem& system, const Vector& full);
SparseMatrix reduce(const FemSystem& system, const SparseMatrix& full);
/// Writes zeros at clamped dofs.
Vector expand(const FemSystem& system, const Vector& reduced);

}  // namespace defnet
