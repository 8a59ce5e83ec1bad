#pragma once

#include <cstddef>
#include <random>

#include <Eigen/Core>

#include "defnet/fem.hpp"

namespace defnet {

/// The k softest eigenpairs of the reduced rest-state stiffness K(0).
struct ModalBasis {
  /// N_free x k, orthonormal columns.
  Eigen::MatrixXd phi;
  /// Ascending, all > 0.
  Vector lambda;

  int k() const noexcept { return static_cast<int>(lambda.size()); }
};

/// Dense symmetric eigendecomposition of a reduced stiffness matrix.
/// Each eigenvector is signed so its largest-magnitude entry is positive
/// (first index wins ties). Throws ValidationError when k is outside
/// [1, rows] and NumericalError when the smallest eigenvalue is not
/// positive (unconstrained mesh).
ModalBasis eigendecompose(const SparseMatrix& k_reduced, int k);

/// Same, on reduced K(0) of `system`.
ModalBasis eigendecompose(const FemSystem& system, int k);

/// alpha_i ~ U[-lambda_i d_max, +lambda_i d_max], independent per mode,
/// so each mode's linearized displacement coefficient is bounded by d_max.
Vector sample_amplitudes(const ModalBasis& basis, double d_max,
                         std::mt19937_64& rng);

/// -Phi alpha on the free dofs.
Vector modal_force_reduced(const ModalBasis& basis, const Vector& alpha);

/// -Phi alpha expanded to a full force vector (zeros at clamped dofs).
ForceVector modal_force(const FemSystem& system, const ModalBasis& basis,
                        const Vector& alpha);

/// Keeps the force only on surface nodes within `radius` (rest distance)
/// of `center_node`, then rescales to the input norm. Returns zero when
/// nothing loaded survives. `center_node` must be a surface node.
ForceVector mask_patch(const ForceVector& f, const Mesh& mesh,
                       std::size_t center_node, double radius);

}  // namespace defnet
