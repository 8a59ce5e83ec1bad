#pragma once

#include <functional>
#include <string>
#include <vector>

#include "defnet/fem.hpp"

namespace defnet {

enum class LinearSolverKind { DirectSymmetric, ConjugateGradient };

std::string to_string(LinearSolverKind kind);
LinearSolverKind linear_solver_from_string(const std::string& name);

/// Stopping rules shared by both Newton variants.
///
/// `eps` is relative: a residual is small when
/// ||R|| < eps * max(||f^e||, kForceFloor). `eta` is an absolute step-norm
/// tolerance in meters; a non-positive value means "1e-9 * L of the system".
struct SolverConfig {
  double eps = 1e-6;
  double eta = 0.0;
  int max_iters = 30;
  LinearSolverKind linear_solver = LinearSolverKind::DirectSymmetric;

  static constexpr double kForceFloor = 1e-12;

  void validate() const;
};

enum class PredictionUse { NotApplicable, EarlyExit, Fallback, Discarded };

std::string to_string(PredictionUse use);

struct SolveResult {
  DisplacementField u;
  /// Number of linear solves performed.
  int iterations = 0;
  /// ||R|| of every iterate, starting with the initial one.
  std::vector<double> residual_history;
  bool converged = false;
  PredictionUse prediction_used = PredictionUse::NotApplicable;
  /// The absolute threshold eps * max(||f^e||, floor) that was applied.
  double tolerance = 0.0;
};

/// Solves K x = rhs for a symmetric reduced matrix. Direct: sparse LDL^T,
/// relative residual <= 1e-10. CG: diagonal preconditioner, relative
/// residual <= 1e-8 within rows(K) iterations. Throws NumericalError on
/// factorization failure or CG non-convergence, ValidationError on an
/// empty or mis-sized system.
Vector solve_linear(const SparseMatrix& k_reduced, const Vector& rhs,
                    LinearSolverKind kind);

/// Classic Newton-Raphson from u = 0: solve K(u) du = -R(u), u += du,
/// until ||R|| < tolerance or ||du|| < eta.
SolveResult newton_raphson(const FemSystem& system, const ForceVector& f_ext,
                           const SolverConfig& config);

/// Maps the external force to a displacement guess. Must not throw; a bad
/// guess is handled by the solver.
using Predictor = std::function<DisplacementField(const ForceVector&)>;

/// Newton-Raphson seeded by a prediction. Returns the prediction directly
/// when its residual already meets the tolerance; otherwise runs Newton
/// from u = 0 and replaces the first iterate by the prediction when the
/// prediction has the strictly smaller residual. A prediction equal to the
/// starting point u = 0 is never used as a fallback.
SolveResult hybrid_newton_raphson(const FemSystem& system,
                                  const ForceVector& f_ext,
                                  const Predictor& predictor,
                                  const SolverConfig& config);

}  // namespace defnet
