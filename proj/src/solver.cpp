#include "defnet/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "defnet/error.hpp"

namespace defnet {

namespace {

constexpr double kDirectTolerance = 1e-10;
constexpr double kCgTolerance = 1e-8;

double step_tolerance(const FemSystem& system, const SolverConfig& config) {
  return config.eta > 0.0 ? config.eta
                          : 1e-9 * system.characteristic_length();
}

double residual_tolerance(const FemSystem& system, const ForceVector& f_ext,
                          const SolverConfig& config) {
  return config.eps *
         std::max(free_norm(system, f_ext), SolverConfig::kForceFloor);
}

/// One Newton update from `u`; returns the increment (full length).
Vector newton_step(const FemSystem& system, const DisplacementField& u,
                   const ForceVector& r, const SolverConfig& config) {
  const SparseMatrix k = reduced_tangent_stiffness(system, u);
  return expand(system, solve_linear(k, -reduce(system, r),
                                     config.linear_solver));
}

/// Newton loop shared by both variants. `on_first_step` may replace the
/// first iterate and its residual.
template <typename FirstStepHook>
void iterate(const FemSystem& system, const ForceVector& f_ext,
             const SolverConfig& config, SolveResult& result,
             FirstStepHook&& on_first_step) {
  const double eta = step_tolerance(system, config);
  ForceVector r = residual(system, result.u, f_ext);
  double r_norm = r.norm();
  result.residual_history.push_back(r_norm);
  if (r_norm < result.tolerance) {
    result.converged = true;
    return;
  }
  while (result.iterations < config.max_iters) {
    const Vector du = newton_step(system, result.u, r, config);
    DisplacementField next = result.u + du;
    ++result.iterations;
    r = residual(system, next, f_ext);
    r_norm = r.norm();
    if (result.iterations == 1) on_first_step(next, r, r_norm);
    const double step = du.norm();
    result.u = std::move(next);
    result.residual_history.push_back(r_norm);
    if (!std::isfinite(r_norm)) return;
    if (r_norm < result.tolerance || step < eta) {
      result.converged = true;
      return;
    }
  }
}

}  // namespace

std::string to_string(LinearSolverKind kind) {
  return kind == LinearSolverKind::DirectSymmetric ? "direct" : "cg";
}

LinearSolverKind linear_solver_from_string(const std::string& name) {
  if (name == "direct" || name == "DirectSymmetric")
    return LinearSolverKind::DirectSymmetric;
  if (name == "cg" || name == "ConjugateGradient")
    return LinearSolverKind::ConjugateGradient;
  throw ValidationError("unknown linear solver '" + name +
                        "' (expected direct or cg)");
}

std::string to_string(PredictionUse use) {
  switch (use) {
    case PredictionUse::NotApplicable:
      return "not_applicable";
    case PredictionUse::EarlyExit:
      return "early_exit";
    case PredictionUse::Fallback:
      return "fallback";
    case PredictionUse::Discarded:
      return "discarded";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (!(eps > 0.0)) throw ValidationError("solver eps must be > 0");
  if (std::isnan(eta)) throw ValidationError("solver eta must be a number");
  if (max_iters < 1) throw ValidationError("solver max_iters must be >= 1");
}

Vector solve_linear(const SparseMatrix& k_reduced, const Vector& rhs,
                    LinearSolverKind kind) {
  const Eigen::Index n = k_reduced.rows();
  if (n == 0) throw ValidationError("empty reduced system: every dof is fixed");
  if (k_reduced.cols() != n || rhs.size() != n)
    throw ValidationError("linear system size mismatch");
  if (!rhs.allFinite()) throw NumericalError("non-finite right-hand side");

  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) return Vector::Zero(n);

  if (kind == LinearSolverKind::ConjugateGradient) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setMaxIterations(n);
    cg.setTolerance(kCgTolerance);
    cg.compute(k_reduced);
    Vector x = cg.solve(rhs);
    const double rel = (k_reduced * x - rhs).norm() / rhs_norm;
    if (cg.info() != Eigen::Success || !(rel <= kCgTolerance))
      throw NumericalError("conjugate gradient did not converge in " +
                           std::to_string(n) + " iterations (relative residual " +
                           std::to_string(rel) + ")");
    return x;
  }

  Eigen::SimplicialLDLT<SparseMatrix> ldlt(k_reduced);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("LDL^T factorization failed (singular matrix)");
  Vector x = ldlt.solve(rhs);
  Vector res = rhs - k_reduced * x;
  // Iterative refinement against the same factorization.
  for (int pass = 0; pass < 3 && res.norm() > kDirectTolerance * rhs_norm;
       ++pass) {
    x += ldlt.solve(res);
    res = rhs - k_reduced * x;
  }
  if (!x.allFinite())
    throw NumericalError("LDL^T solve produced non-finite values (singular matrix)");
  if (!(res.norm() <= kDirectTolerance * rhs_norm))
    throw NumericalError("LDL^T solve relative residual " +
                         std::to_string(res.norm() / rhs_norm) +
                         " exceeds tolerance");
  return x;
}

SolveResult newton_raphson(const FemSystem& system, const ForceVector& f_ext,
                           const SolverConfig& config) {
  config.validate();
  SolveResult result;
  result.u = DisplacementField::Zero(static_cast<Eigen::Index>(system.num_dofs()));
  result.tolerance = residual_tolerance(system, f_ext, config);
  iterate(system, f_ext, config, result,
          [](DisplacementField&, ForceVector&, double&) {});
  return result;
}

SolveResult hybrid_newton_raphson(const FemSystem& system,
                                  const ForceVector& f_ext,
                                  const Predictor& predictor,
                                  const SolverConfig& config) {
  config.validate();
  SolveResult result;
  result.tolerance = residual_tolerance(system, f_ext, config);
  const auto n = static_cast<Eigen::Index>(system.num_dofs());

  // The predictor input is f^e; R(0) = -f^e carries the same information.
  DisplacementField u_p = predictor(f_ext);
  ForceVector r_p;
  double r_p_norm = std::numeric_limits<double>::infinity();
  if (u_p.size() == n && u_p.allFinite()) {
    u_p = expand(system, reduce(system, u_p));
    try {
      r_p = residual(system, u_p, f_ext);
      r_p_norm = r_p.norm();
    } catch (const NumericalError&) {
      // An inverted prediction is simply a useless one.
    }
  }
  if (!std::isfinite(r_p_norm)) r_p_norm = std::numeric_limits<double>::infinity();

  if (r_p_norm < result.tolerance) {
    result.u = std::move(u_p);
    result.residual_history.push_back(r_p_norm);
    result.converged = true;
    result.prediction_used = PredictionUse::EarlyExit;
    return result;
  }

  result.u = DisplacementField::Zero(n);
  result.prediction_used = PredictionUse::Discarded;
  // Falling back to u0 itself would only restart the same trajectory.
  const bool predicts_start = u_p.size() == n && (u_p.array() == 0.0).all();
  iterate(system, f_ext, config, result,
          [&](DisplacementField& u1, ForceVector& r1, double& r1_norm) {
            if (std::isfinite(r_p_norm) && !predicts_start &&
                (r1_norm > r_p_norm || !std::isfinite(r1_norm))) {
              u1 = u_p;
              r1 = r_p;
              r1_norm = r_p_norm;
              result.prediction_used = PredictionUse::Fallback;
            }
          });
  return result;
}

}  // namespace defnet
