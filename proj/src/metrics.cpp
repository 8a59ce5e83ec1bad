#include "defnet/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "defnet/error.hpp"
#include "defnet/io.hpp"
#include "defnet/parallel.hpp"

namespace defnet {

namespace {

void check_shapes(const RowMatrix& a, const RowMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ValidationError("prediction and ground-truth arrays differ in shape");
  if (a.cols() % 3 != 0)
    throw ValidationError("dof count must be a multiple of 3");
}

double node_error_max(const Vector& diff) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i + 2 < diff.size(); i += 3)
    worst = std::max(worst, diff.segment<3>(i).norm());
  return worst;
}

}  // namespace

double e_max(const RowMatrix& preds, const RowMatrix& truths) {
  check_shapes(preds, truths);
  double worst = 0.0;
  for (Eigen::Index s = 0; s < preds.rows(); ++s)
    worst = std::max(worst, node_error_max((preds.row(s) - truths.row(s)).transpose()));
  return worst;
}

double e_mean(const RowMatrix& preds, const RowMatrix& truths) {
  check_shapes(preds, truths);
  if (preds.size() == 0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index s = 0; s < preds.rows(); ++s) sum += (preds.row(s) - truths.row(s)).norm();
  return sum / (static_cast<double>(preds.cols()) * static_cast<double>(preds.rows()));
}

double snr_db(const Vector& pred, const Vector& truth) {
  if (pred.size() != truth.size()) throw ValidationError("SNR operands differ in length");
  const double noise = (pred - truth).norm();
  const double signal = pred.norm();
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  if (signal == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / noise);
}

double snr_min(const RowMatrix& preds, const RowMatrix& truths) {
  check_shapes(preds, truths);
  double worst = std::numeric_limits<double>::infinity();
  for (Eigen::Index s = 0; s < preds.rows(); ++s)
    worst = std::min(worst, snr_db(preds.row(s).transpose(), truths.row(s).transpose()));
  return worst;
}

double scaled_mse(const RowMatrix& preds, const RowMatrix& truths) {
  check_shapes(preds, truths);
  if (preds.size() == 0) return 0.0;
  return (preds - truths).squaredNorm() / static_cast<double>(preds.size());
}

EvaluationReport evaluate(const Predictor& predictor, const FemSystem& system,
                          const RowMatrix& forces, const SolverConfig& config,
                          double c, int threads) {
  if (forces.rows() < 1) throw ValidationError("evaluation needs at least one force");
  if (static_cast<std::size_t>(forces.cols()) != system.num_dofs())
    throw ConsistencyError("force arrays do not match the mesh dof count");
  const auto s = static_cast<std::size_t>(forces.rows());

  std::vector<std::optional<SolveResult>> truth(s);
  parallel_for(s, threads, [&](std::size_t i) {
    SolveResult r = newton_raphson(system, forces.row(static_cast<Eigen::Index>(i)).transpose(), config);
    if (r.converged) truth[i] = std::move(r);
  });

  EvaluationReport report;
  report.N = system.num_dofs();
  report.M = system.mesh().num_nodes();
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < s; ++i) {
    if (truth[i]) kept.push_back(i);
    else report.excluded.push_back(i);
  }
  report.S = kept.size();
  if (kept.empty()) throw NumericalError("no ground-truth solve converged");

  const double length = system.characteristic_length();
  const auto n = static_cast<Eigen::Index>(system.num_dofs());
  RowMatrix preds(static_cast<Eigen::Index>(kept.size()), n);
  RowMatrix truths(static_cast<Eigen::Index>(kept.size()), n);
  std::vector<double> latencies;
  for (std::size_t j = 0; j < kept.size(); ++j) {
    const std::size_t i = kept[j];
    const ForceVector f = forces.row(static_cast<Eigen::Index>(i)).transpose();
    const auto t0 = std::chrono::steady_clock::now();
    const DisplacementField u = predictor(f);
    const auto t1 = std::chrono::steady_clock::now();
    if (u.size() != n) throw ValidationError("predictor returned a vector of the wrong length");

    SampleEvaluation row;
    row.index = i;
    row.predict_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    row.nr_iters_classic = truth[i]->iterations;
    try {
      row.residual_norm = residual(system, u, f).norm() / c;
    } catch (const NumericalError&) {
      row.residual_norm = std::numeric_limits<double>::infinity();
    }
    const Vector pu = u / length;
    const Vector tv = truth[i]->u / length;
    row.node_err_max = node_error_max(pu - tv);
    row.vec_err = (pu - tv).norm();
    row.snr_db = snr_db(pu, tv);
    preds.row(static_cast<Eigen::Index>(j)) = pu.transpose();
    truths.row(static_cast<Eigen::Index>(j)) = tv.transpose();
    latencies.push_back(row.predict_ms);
    report.mean_residual_norm += row.residual_norm;
    report.samples.push_back(row);
  }
  report.mean_residual_norm /= static_cast<double>(kept.size());
  report.e_max = e_max(preds, truths);
  report.e_mean = e_mean(preds, truths);
  report.snr_min_db = snr_min(preds, truths);
  report.mse_scaled = scaled_mse(preds, truths);
  std::nth_element(latencies.begin(), latencies.begin() + static_cast<std::ptrdiff_t>(latencies.size() / 2),
                   latencies.end());
  report.median_predict_ms = latencies[latencies.size() / 2];
  return report;
}

nlohmann::json to_json(const EvaluationReport& report) {
  nlohmann::json j;
  j["e_max"] = report.e_max;
  j["e_mean"] = report.e_mean;
  j["snr_min_db"] = number_or_inf(report.snr_min_db);
  j["mse_scaled"] = report.mse_scaled;
  j["mean_residual_norm"] = number_or_inf(report.mean_residual_norm);
  j["median_predict_ms"] = report.median_predict_ms;
  j["S"] = report.S;
  j["N"] = report.N;
  j["M"] = report.M;
  j["excluded"] = report.excluded;
  auto& rows = j["samples"] = nlohmann::json::array();
  for (const auto& s : report.samples)
    rows.push_back({{"idx", s.index},
                    {"node_err_max", s.node_err_max},
                    {"vec_err", s.vec_err},
                    {"snr_db", number_or_inf(s.snr_db)},
                    {"residual_norm", number_or_inf(s.residual_norm)},
                    {"predict_ms", s.predict_ms},
                    {"nr_iters_classic", s.nr_iters_classic}});
  return j;
}

std::string to_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "idx,node_err_max,vec_err,snr_db,residual_norm,predict_ms,nr_iters_classic\n";
  for (const auto& s : report.samples)
    out << s.index << ',' << s.node_err_max << ',' << s.vec_err << ',' << s.snr_db << ','
        << s.residual_norm << ',' << s.predict_ms << ',' << s.nr_iters_classic << '\n';
  return out.str();
}

}  // namespace defnet
