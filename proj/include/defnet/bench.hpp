#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "defnet/dataset.hpp"
#include "defnet/solver.hpp"

namespace defnet {

struct BenchRow {
  double force_norm = 0.0;
  /// Target linearized tip displacement / L for swept forces, 0 otherwise.
  double scale_fraction = 0.0;
  int classic_iters = 0;
  int hybrid_iters = 0;
  PredictionUse hybrid_outcome = PredictionUse::NotApplicable;
  bool classic_converged = false;
  bool hybrid_converged = false;
  double classic_residual = 0.0;
  double hybrid_residual = 0.0;
  double tolerance = 0.0;
};

struct BenchAggregates {
  double mean_classic_iters = 0.0;
  double mean_hybrid_iters = 0.0;
  /// 100 * (mean classic - mean hybrid) / mean classic.
  double mean_iteration_reduction_pct = 0.0;
  double classic_convergence_rate = 0.0;
  double hybrid_convergence_rate = 0.0;
  /// hybrid rate / classic rate.
  double convergence_rate_ratio = 0.0;
  double early_exit_pct = 0.0;
  double fallback_pct = 0.0;
  double discarded_pct = 0.0;
  /// Share of forces where hybrid needed no more solves than classic.
  double hybrid_not_worse_pct = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  BenchAggregates aggregates;
};

BenchAggregates aggregate(const std::vector<BenchRow>& rows);

/// Classic and hybrid Newton on the same forces (paired). When
/// `predictor` is empty the classic solution itself is used as the
/// prediction (oracle).
BenchReport run_bench(const FemSystem& system, const RowMatrix& forces,
                      const Predictor& predictor, const SolverConfig& config,
                      int threads = 1,
                      const std::vector<double>& scale_fractions = {});

/// Rescales each force so the largest nodal displacement of the linear
/// response K(0)^-1 f equals fraction * L.
RowMatrix scale_to_linear_displacement(const FemSystem& system,
                                       const RowMatrix& forces, double fraction);

nlohmann::json to_json(const BenchReport& report);
std::string to_csv(const BenchReport& report);

}  // namespace defnet
