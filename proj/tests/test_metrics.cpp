#include <doctest.h>

#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>
#include <random>

#include "defnet/bench.hpp"
#include "defnet/error.hpp"
#include "defnet/metrics.hpp"
#include "defnet/modal.hpp"
#include "oracles.hpp"

using namespace defnet;

namespace {

RowMatrix random_rows(int s, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  RowMatrix m(s, n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

FemSystem beam() {
  return FemSystem(generate_beam_mesh(4, 1, 1, 0.8, 0.2, 0.2),
                   Material(MaterialModel::StVenantKirchhoff, 1e6, 0.3));
}

RowMatrix beam_forces(const FemSystem& sys, int s, double d_over_l, std::uint64_t seed) {
  const ModalBasis basis = eigendecompose(sys, 3);
  std::mt19937_64 rng(seed);
  RowMatrix f(s, static_cast<Eigen::Index>(sys.num_dofs()));
  for (int i = 0; i < s; ++i)
    f.row(i) = sample_force(sys, basis, d_over_l * sys.characteristic_length(), 0.3, rng).transpose();
  return f;
}

}  // namespace

TEST_CASE("metric kernels by hand") {
  RowMatrix u(1, 6), v(1, 6);
  u << 3, 4, 0, 0, 0, 0;
  v.setZero();
  CHECK(e_max(u, v) == 5.0);
  CHECK(e_mean(u, v) == doctest::Approx(5.0 / 6.0));

  RowMatrix a(2, 3), b(2, 3);
  a << 1, 0, 0, 0, 0, 0;
  b << 0, 0, 0, 0, 0, 0;
  a(1, 0) = 4.0;  // sample norms 1 and 4 over N = 3
  CHECK(e_mean(a, b) == doctest::Approx(5.0 / 6.0));
  CHECK(e_mean(u.leftCols(3), v.leftCols(3)) == doctest::Approx(5.0 / 3.0));

  const Eigen::Vector3d t(1, 0, 0);
  CHECK(snr_db(Eigen::Vector3d(10, 0, 0), Eigen::Vector3d(9, 0, 0)) == doctest::Approx(10.0));
  CHECK(snr_db(t, t) == std::numeric_limits<double>::infinity());
  CHECK(snr_db(Eigen::Vector3d::Zero(), t) == -std::numeric_limits<double>::infinity());

  RowMatrix p(2, 3), q(2, 3);
  p << 10, 0, 0, std::sqrt(10.0), 0, 0;
  q << 9, 0, 0, std::sqrt(10.0) - 1.0, 0, 0;
  CHECK(snr_min(p, q) == doctest::Approx(5.0));
  CHECK(scaled_mse(u, v) == doctest::Approx(25.0 / 6.0));
  CHECK_THROWS_AS(e_max(u, RowMatrix::Zero(2, 6)), ValidationError);
  CHECK_THROWS_AS(e_max(RowMatrix::Zero(1, 5), RowMatrix::Zero(1, 5)), ValidationError);
}

TEST_CASE("metric kernels agree with brute force and respect invariances") {
  const RowMatrix u = random_rows(7, 12, 1);
  const RowMatrix v = random_rows(7, 12, 2);
  CHECK(e_max(u, v) == doctest::Approx(oracle::e_max(u, v)).epsilon(1e-14));
  CHECK(e_mean(u, v) == doctest::Approx(oracle::e_mean(u, v)).epsilon(1e-14));

  // Sample permutation.
  RowMatrix up = u, vp = v;
  up.row(0).swap(up.row(6));
  vp.row(0).swap(vp.row(6));
  CHECK(e_max(up, vp) == e_max(u, v));
  CHECK(e_mean(up, vp) == doctest::Approx(e_mean(u, v)).epsilon(1e-15));
  CHECK(snr_min(up, vp) == snr_min(u, v));

  // Joint scaling: errors scale linearly, SNR is invariant.
  CHECK(e_max(3.0 * u, 3.0 * v) == doctest::Approx(3.0 * e_max(u, v)));
  CHECK(e_mean(3.0 * u, 3.0 * v) == doctest::Approx(3.0 * e_mean(u, v)));
  CHECK(snr_min(3.0 * u, 3.0 * v) == doctest::Approx(snr_min(u, v)));
  CHECK(e_max(v, v) == 0.0);
}

TEST_CASE("evaluate with oracle and zero predictors") {
  const FemSystem sys = beam();
  const RowMatrix forces = beam_forces(sys, 6, 0.1, 4);
  SolverConfig cfg;
  const Predictor oracle_pred = [&](const ForceVector& f) { return newton_raphson(sys, f, cfg).u; };
  const EvaluationReport exact = evaluate(oracle_pred, sys, forces, cfg, 1.0, 2);
  CHECK(exact.e_max == 0.0);
  CHECK(exact.e_mean == 0.0);
  CHECK(std::isinf(exact.snr_min_db));
  CHECK(exact.S == 6);
  CHECK(exact.N == sys.num_dofs());
  CHECK(exact.M == sys.mesh().num_nodes());
  CHECK(exact.excluded.empty());
  for (const auto& s : exact.samples) CHECK(s.nr_iters_classic >= 1);

  const Predictor zero = [&](const ForceVector&) {
    return DisplacementField::Zero(static_cast<Eigen::Index>(sys.num_dofs()));
  };
  const EvaluationReport z = evaluate(zero, sys, forces, cfg, 1.0);
  CHECK(std::isinf(z.snr_min_db));
  CHECK(z.snr_min_db < 0);
  CHECK(z.e_max > 0.0);
  // Residual of u = 0 is ||f|| / c.
  for (const auto& s : z.samples)
    CHECK(s.residual_norm == doctest::Approx(forces.row(static_cast<Eigen::Index>(s.index)).norm()));

  const auto j = to_json(z);
  CHECK(j["snr_min_db"] == "-inf");
  CHECK(j.contains("e_max"));
  const std::string csv = to_csv(z);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
}

TEST_CASE("bench with oracle and zero predictors") {
  const FemSystem sys = beam();
  const RowMatrix forces = beam_forces(sys, 5, 0.2, 8);
  SolverConfig cfg;
  const BenchReport oracle_run = run_bench(sys, forces, {}, cfg, 2);
  REQUIRE(oracle_run.rows.size() == 5);
  for (const auto& r : oracle_run.rows) {
    CHECK(r.hybrid_outcome == PredictionUse::EarlyExit);
    CHECK(r.hybrid_iters == 0);
    CHECK(r.classic_converged);
    CHECK(r.hybrid_converged);
  }
  CHECK(oracle_run.aggregates.early_exit_pct == 100.0);
  CHECK(oracle_run.aggregates.mean_iteration_reduction_pct == 100.0);
  CHECK(oracle_run.aggregates.convergence_rate_ratio == 1.0);

  const Predictor zero = [&](const ForceVector&) {
    return DisplacementField::Zero(static_cast<Eigen::Index>(sys.num_dofs()));
  };
  const BenchReport z = run_bench(sys, forces, zero, cfg);
  for (const auto& r : z.rows) {
    CHECK(r.hybrid_outcome == PredictionUse::Discarded);
    CHECK(r.hybrid_iters == r.classic_iters);
  }
  CHECK(z.aggregates.discarded_pct == 100.0);
  CHECK(z.aggregates.mean_iteration_reduction_pct == 0.0);
  CHECK(z.aggregates.hybrid_not_worse_pct == 100.0);

  // Aggregates are recomputable from the rows.
  const BenchAggregates again = aggregate(z.rows);
  CHECK(again.mean_classic_iters == z.aggregates.mean_classic_iters);
  double sum = 0.0;
  for (const auto& r : z.rows) sum += r.classic_iters;
  CHECK(z.aggregates.mean_classic_iters == doctest::Approx(sum / 5.0));
  CHECK(to_json(z)["rows"].size() == 5);
}

TEST_CASE("aggregate by hand") {
  std::vector<BenchRow> rows(4);
  const int classic[] = {4, 4, 6, 6};
  const int hybrid[] = {0, 2, 7, 3};
  const PredictionUse use[] = {PredictionUse::EarlyExit, PredictionUse::Fallback,
                               PredictionUse::Discarded, PredictionUse::Discarded};
  for (int i = 0; i < 4; ++i) {
    rows[i].classic_iters = classic[i];
    rows[i].hybrid_iters = hybrid[i];
    rows[i].hybrid_outcome = use[i];
    rows[i].classic_converged = true;
    rows[i].hybrid_converged = i != 3;
  }
  const BenchAggregates a = aggregate(rows);
  CHECK(a.mean_classic_iters == 5.0);
  CHECK(a.mean_hybrid_iters == 3.0);
  CHECK(a.mean_iteration_reduction_pct == doctest::Approx(40.0));
  CHECK(a.hybrid_convergence_rate == 0.75);
  CHECK(a.convergence_rate_ratio == 0.75);
  CHECK(a.early_exit_pct == 25.0);
  CHECK(a.fallback_pct == 25.0);
  CHECK(a.discarded_pct == 50.0);
  CHECK(a.hybrid_not_worse_pct == 75.0);
}

TEST_CASE("linear displacement scaling hits the target") {
  const FemSystem sys = beam();
  const RowMatrix forces = beam_forces(sys, 3, 0.1, 2);
  const RowMatrix scaled = scale_to_linear_displacement(sys, forces, 0.05);
  Eigen::SimplicialLDLT<SparseMatrix> k0(reduced_tangent_stiffness(
      sys, DisplacementField::Zero(static_cast<Eigen::Index>(sys.num_dofs()))));
  for (Eigen::Index s = 0; s < 3; ++s) {
    const Vector u = expand(sys, k0.solve(reduce(sys, scaled.row(s).transpose())));
    double peak = 0.0;
    for (Eigen::Index m = 0; m < u.size() / 3; ++m) peak = std::max(peak, u.segment<3>(3 * m).norm());
    CHECK(peak == doctest::Approx(0.05 * sys.characteristic_length()).epsilon(1e-9));
    // Direction is preserved.
    CHECK(scaled.row(s).normalized().dot(forces.row(s).normalized()) == doctest::Approx(1.0));
  }
}
