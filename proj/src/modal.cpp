#include "defnet/modal.hpp"

#include <algorithm>
#include <string>

#include <Eigen/Eigenvalues>

#include "defnet/error.hpp"
#include "defnet/rng.hpp"

namespace defnet {

ModalBasis eigendecompose(const SparseMatrix& k_reduced, int k) {
  const Eigen::Index n = k_reduced.rows();
  if (k_reduced.cols() != n) throw ValidationError("matrix must be square");
  if (k < 1 || k > n)
    throw ValidationError("mode count " + std::to_string(k) +
                          " outside [1, " + std::to_string(n) + "]");

  const Eigen::MatrixXd dense = Eigen::MatrixXd(k_reduced);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
  if (solver.info() != Eigen::Success)
    throw NumericalError("symmetric eigensolver did not converge");
  if (!(solver.eigenvalues()[0] > 0.0))
    throw NumericalError(
        "rest stiffness is not positive definite (smallest eigenvalue " +
        std::to_string(solver.eigenvalues()[0]) +
        "); is every part of the mesh clamped?");

  ModalBasis basis;
  basis.lambda = solver.eigenvalues().head(k);
  basis.phi = solver.eigenvectors().leftCols(k);
  for (int j = 0; j < k; ++j) {
    Eigen::Index arg = 0;
    basis.phi.col(j).cwiseAbs().maxCoeff(&arg);
    if (basis.phi(arg, j) < 0.0) basis.phi.col(j) *= -1.0;
  }
  return basis;
}

ModalBasis eigendecompose(const FemSystem& system, int k) {
  const DisplacementField rest =
      DisplacementField::Zero(static_cast<Eigen::Index>(system.num_dofs()));
  return eigendecompose(reduced_tangent_stiffness(system, rest), k);
}

Vector sample_amplitudes(const ModalBasis& basis, double d_max,
                         std::mt19937_64& rng) {
  if (!(d_max >= 0.0)) throw ValidationError("d_max must be >= 0");
  Vector alpha(basis.lambda.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    const double bound = basis.lambda[i] * d_max;
    alpha[i] = uniform(rng, -bound, bound);
  }
  return alpha;
}

Vector modal_force_reduced(const ModalBasis& basis, const Vector& alpha) {
  if (alpha.size() != basis.lambda.size())
    throw ValidationError("amplitude vector has length " +
                          std::to_string(alpha.size()) + ", expected " +
                          std::to_string(basis.lambda.size()));
  return -(basis.phi * alpha);
}

ForceVector modal_force(const FemSystem& system, const ModalBasis& basis,
                        const Vector& alpha) {
  return expand(system, modal_force_reduced(basis, alpha));
}

ForceVector mask_patch(const ForceVector& f, const Mesh& mesh,
                       std::size_t center_node, double radius) {
  if (static_cast<std::size_t>(f.size()) != mesh.num_dofs())
    throw ValidationError("force length does not match the mesh");
  const auto& surface = mesh.surface_nodes();
  if (!std::binary_search(surface.begin(), surface.end(), center_node))
    throw ValidationError("patch center " + std::to_string(center_node) +
                          " is not a surface node");
  if (!(radius > 0.0)) throw ValidationError("patch radius must be > 0");

  const Vec3& c = mesh.nodes()[center_node];
  ForceVector out = ForceVector::Zero(f.size());
  for (std::size_t node : surface) {
    if ((mesh.nodes()[node] - c).norm() > radius) continue;
    out.segment<3>(3 * static_cast<Eigen::Index>(node)) =
        f.segment<3>(3 * static_cast<Eigen::Index>(node));
  }
  const double kept = out.norm();
  if (kept == 0.0) return out;
  return out * (f.norm() / kept);
}

}  // namespace defnet
