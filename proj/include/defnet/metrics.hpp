#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "defnet/dataset.hpp"
#include "defnet/solver.hpp"

namespace defnet {

// Metric kernels take S x N arrays already divided by L. N = 3M.

/// Largest 3D node error over all samples.
double e_max(const RowMatrix& preds, const RowMatrix& truths);
/// (1 / (N S)) * sum_s ||u_s - v_s||.
double e_mean(const RowMatrix& preds, const RowMatrix& truths);
/// 10 log10(||u|| / ||u - v||); +inf for an exact match, -inf for a zero
/// prediction with nonzero error.
double snr_db(const Vector& pred, const Vector& truth);
/// Minimum of snr_db over samples.
double snr_min(const RowMatrix& preds, const RowMatrix& truths);

/// Mean squared error over every component of the scaled arrays.
double scaled_mse(const RowMatrix& preds, const RowMatrix& truths);

struct SampleEvaluation {
  std::size_t index = 0;
  double node_err_max = 0.0;
  double vec_err = 0.0;
  double snr_db = 0.0;
  /// ||R(u_pred)|| / c.
  double residual_norm = 0.0;
  double predict_ms = 0.0;
  int nr_iters_classic = 0;
};

struct EvaluationReport {
  double e_max = 0.0;
  double e_mean = 0.0;
  double snr_min_db = 0.0;
  double mse_scaled = 0.0;
  double mean_residual_norm = 0.0;
  double median_predict_ms = 0.0;
  std::size_t S = 0;
  std::size_t N = 0;
  std::size_t M = 0;
  std::vector<SampleEvaluation> samples;
  /// Forces whose ground-truth solve did not converge.
  std::vector<std::size_t> excluded;
};

/// Ground truth by classic Newton-Raphson (parallel over samples),
/// predictions timed one by one, everything scaled by L before the
/// metrics. `c` normalizes the per-sample residual.
EvaluationReport evaluate(const Predictor& predictor, const FemSystem& system,
                          const RowMatrix& forces, const SolverConfig& config,
                          double c, int threads = 1);

nlohmann::json to_json(const EvaluationReport& report);
/// One row per evaluated sample.
std::string to_csv(const EvaluationReport& report);

}  // namespace defnet
