#include "defnet/bench.hpp"

#include <sstream>

#include "defnet/error.hpp"
#include "defnet/parallel.hpp"

namespace defnet {

BenchAggregates aggregate(const std::vector<BenchRow>& rows) {
  BenchAggregates a;
  if (rows.empty()) return a;
  const auto count = static_cast<double>(rows.size());
  double classic_ok = 0, hybrid_ok = 0, early = 0, fallback = 0, discarded = 0, not_worse = 0;
  for (const auto& r : rows) {
    a.mean_classic_iters += r.classic_iters;
    a.mean_hybrid_iters += r.hybrid_iters;
    classic_ok += r.classic_converged;
    hybrid_ok += r.hybrid_converged;
    early += r.hybrid_outcome == PredictionUse::EarlyExit;
    fallback += r.hybrid_outcome == PredictionUse::Fallback;
    discarded += r.hybrid_outcome == PredictionUse::Discarded;
    not_worse += r.hybrid_iters <= r.classic_iters;
  }
  a.mean_classic_iters /= count;
  a.mean_hybrid_iters /= count;
  a.mean_iteration_reduction_pct =
      a.mean_classic_iters > 0.0
          ? 100.0 * (a.mean_classic_iters - a.mean_hybrid_iters) / a.mean_classic_iters
          : 0.0;
  a.classic_convergence_rate = classic_ok / count;
  a.hybrid_convergence_rate = hybrid_ok / count;
  a.convergence_rate_ratio =
      classic_ok > 0 ? a.hybrid_convergence_rate / a.classic_convergence_rate : 0.0;
  a.early_exit_pct = 100.0 * early / count;
  a.fallback_pct = 100.0 * fallback / count;
  a.discarded_pct = 100.0 * discarded / count;
  a.hybrid_not_worse_pct = 100.0 * not_worse / count;
  return a;
}

BenchReport run_bench(const FemSystem& system, const RowMatrix& forces,
                      const Predictor& predictor, const SolverConfig& config,
                      int threads, const std::vector<double>& scale_fractions) {
  if (static_cast<std::size_t>(forces.cols()) != system.num_dofs())
    throw ConsistencyError("force arrays do not match the mesh dof count");
  if (!scale_fractions.empty() &&
      scale_fractions.size() != static_cast<std::size_t>(forces.rows()))
    throw ValidationError("one scale fraction per force expected");
  const auto s = static_cast<std::size_t>(forces.rows());
  BenchReport report;
  report.rows.resize(s);
  parallel_for(s, threads, [&](std::size_t i) {
    const ForceVector f = forces.row(static_cast<Eigen::Index>(i)).transpose();
    const SolveResult classic = newton_raphson(system, f, config);
    const DisplacementField oracle = classic.u;
    const SolveResult hybrid = hybrid_newton_raphson(
        system, f,
        predictor ? predictor : Predictor([&oracle](const ForceVector&) { return oracle; }),
        config);
    BenchRow& row = report.rows[i];
    row.force_norm = f.norm();
    row.scale_fraction = scale_fractions.empty() ? 0.0 : scale_fractions[i];
    row.classic_iters = classic.iterations;
    row.hybrid_iters = hybrid.iterations;
    row.hybrid_outcome = hybrid.prediction_used;
    row.classic_converged = classic.converged;
    row.hybrid_converged = hybrid.converged;
    row.classic_residual = classic.residual_history.back();
    row.hybrid_residual = hybrid.residual_history.back();
    row.tolerance = classic.tolerance;
  });
  report.aggregates = aggregate(report.rows);
  return report;
}

RowMatrix scale_to_linear_displacement(const FemSystem& system,
                                       const RowMatrix& forces, double fraction) {
  if (!(fraction > 0.0)) throw ValidationError("displacement fraction must be > 0");
  const DisplacementField rest =
      DisplacementField::Zero(static_cast<Eigen::Index>(system.num_dofs()));
  const SparseMatrix k0 = reduced_tangent_stiffness(system, rest);
  const double target = fraction * system.characteristic_length();
  RowMatrix out = forces;
  for (Eigen::Index i = 0; i < forces.rows(); ++i) {
    const ForceVector f = forces.row(i).transpose();
    const DisplacementField u =
        expand(system, solve_linear(k0, reduce(system, f), LinearSolverKind::DirectSymmetric));
    double peak = 0.0;
    for (Eigen::Index d = 0; d + 2 < u.size(); d += 3) peak = std::max(peak, u.segment<3>(d).norm());
    if (peak > 0.0) out.row(i) *= target / peak;
  }
  return out;
}

nlohmann::json to_json(const BenchReport& report) {
  const auto& a = report.aggregates;
  nlohmann::json j;
  j["aggregates"] = {{"mean_classic_iters", a.mean_classic_iters},
                     {"mean_hybrid_iters", a.mean_hybrid_iters},
                     {"mean_iteration_reduction_pct", a.mean_iteration_reduction_pct},
                     {"classic_convergence_rate", a.classic_convergence_rate},
                     {"hybrid_convergence_rate", a.hybrid_convergence_rate},
                     {"convergence_rate_ratio", a.convergence_rate_ratio},
                     {"early_exit_pct", a.early_exit_pct},
                     {"fallback_pct", a.fallback_pct},
                     {"discarded_pct", a.discarded_pct},
                     {"hybrid_not_worse_pct", a.hybrid_not_worse_pct}};
  auto& rows = j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"force_norm", r.force_norm},
                    {"scale_fraction", r.scale_fraction},
                    {"classic_iters", r.classic_iters},
                    {"hybrid_iters", r.hybrid_iters},
                    {"hybrid_outcome", to_string(r.hybrid_outcome)},
                    {"classic_converged", r.classic_converged},
                    {"hybrid_converged", r.hybrid_converged},
                    {"classic_residual", r.classic_residual},
                    {"hybrid_residual", r.hybrid_residual},
                    {"tolerance", r.tolerance}});
  return j;
}

std::string to_csv(const BenchReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "force_norm,scale_fraction,classic_iters,hybrid_iters,hybrid_outcome,"
         "classic_converged,hybrid_converged,classic_residual,hybrid_residual\n";
  for (const auto& r : report.rows)
    out << r.force_norm << ',' << r.scale_fraction << ',' << r.classic_iters << ','
        << r.hybrid_iters << ',' << to_string(r.hybrid_outcome) << ','
        << r.classic_converged << ',' << r.hybrid_converged << ',' << r.classic_residual
        << ',' << r.hybrid_residual << '\n';
  return out.str();
}

}  // namespace defnet
