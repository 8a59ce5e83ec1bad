#include <doctest.h>

#include <random>

#include "defnet/error.hpp"
#include "defnet/solver.hpp"

using namespace defnet;

namespace {

SparseMatrix sparse(const Eigen::MatrixXd& dense) { return dense.sparseView(); }

FemSystem beam_system(int nx, MaterialModel model = MaterialModel::StVenantKirchhoff) {
  return FemSystem(generate_beam_mesh(nx, 2, 2, 2.0 * nx / 10.0, 0.2, 0.2),
                   Material(model, 1e6, 0.3));
}

// Downward load on the free end face.
ForceVector tip_load(const FemSystem& sys, double total) {
  ForceVector f = ForceVector::Zero(static_cast<Eigen::Index>(sys.num_dofs()));
  const auto& nodes = sys.mesh().nodes();
  double x_max = 0.0;
  for (const auto& p : nodes) x_max = std::max(x_max, p.x());
  std::vector<std::size_t> tip;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].x() == x_max) tip.push_back(i);
  for (auto i : tip) f[static_cast<Eigen::Index>(3 * i + 2)] = -total / static_cast<double>(tip.size());
  return f;
}

double peak_node_displacement(const Vector& u) {
  double peak = 0.0;
  for (Eigen::Index i = 0; i < u.size(); i += 3) peak = std::max(peak, u.segment<3>(i).norm());
  return peak;
}

}  // namespace

TEST_CASE("linear solves") {
  for (auto kind : {LinearSolverKind::DirectSymmetric, LinearSolverKind::ConjugateGradient}) {
    const Vector rhs = Vector::LinSpaced(4, 1.0, 4.0);
    CHECK((solve_linear(sparse(Eigen::MatrixXd::Identity(4, 4)), rhs, kind) - rhs).norm() < 1e-12);
    const Vector x = solve_linear(sparse(Eigen::Vector2d(2, 4).asDiagonal().toDenseMatrix()),
                                  Eigen::Vector2d(2, 8), kind);
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(2.0));
  }
}

TEST_CASE("direct and CG agree on a random SPD system") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd a(50, 50);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
  const Eigen::MatrixXd spd = a * a.transpose() + 50.0 * Eigen::MatrixXd::Identity(50, 50);
  Vector rhs(50);
  for (auto& x : rhs) x = n(rng);
  const Vector direct = solve_linear(sparse(spd), rhs, LinearSolverKind::DirectSymmetric);
  const Vector cg = solve_linear(sparse(spd), rhs, LinearSolverKind::ConjugateGradient);
  CHECK((spd * direct - rhs).norm() <= 1e-10 * rhs.norm());
  CHECK((spd * cg - rhs).norm() <= 1e-8 * rhs.norm());
  CHECK((direct - cg).norm() <= 1e-7 * direct.norm());
}

TEST_CASE("linear solve errors") {
  CHECK_THROWS_AS(solve_linear(SparseMatrix(0, 0), Vector(0), LinearSolverKind::DirectSymmetric),
                  ValidationError);
  CHECK_THROWS_AS(solve_linear(sparse(Eigen::MatrixXd::Zero(2, 2)), Eigen::Vector2d(1, 1),
                               LinearSolverKind::DirectSymmetric),
                  NumericalError);
  CHECK_THROWS_AS(solve_linear(sparse(Eigen::MatrixXd::Identity(2, 2)), Vector::Ones(3),
                               LinearSolverKind::DirectSymmetric),
                  ValidationError);
  CHECK(linear_solver_from_string("cg") == LinearSolverKind::ConjugateGradient);
  CHECK_THROWS_AS(linear_solver_from_string("lu"), ValidationError);
}

TEST_CASE("config validation") {
  SolverConfig c;
  c.eps = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = SolverConfig{};
  c.max_iters = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("zero load needs no iterations") {
  const FemSystem sys = beam_system(3);
  const SolveResult r =
      newton_raphson(sys, ForceVector::Zero(static_cast<Eigen::Index>(sys.num_dofs())), {});
  CHECK(r.converged);
  CHECK(r.iterations == 0);
  CHECK(r.residual_history.size() == 1);
  CHECK(r.u.norm() == 0.0);
}

TEST_CASE("near-linear tip load converges in at most two iterations") {
  const FemSystem sys = beam_system(6);
  // Linear response peaks at 0.1% of L. At 1% the slender beam's axial
  // coupling already costs a third iteration.
  const ForceVector unit = tip_load(sys, 1.0);
  const SparseMatrix k0 =
      reduced_tangent_stiffness(sys, Vector::Zero(static_cast<Eigen::Index>(sys.num_dofs())));
  const double linear_peak = peak_node_displacement(
      expand(sys, solve_linear(k0, reduce(sys, unit), LinearSolverKind::DirectSymmetric)));
  const ForceVector f = unit * (0.001 * sys.characteristic_length() / linear_peak);
  const SolveResult r = newton_raphson(sys, f, {});
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
}

TEST_CASE("Newton converges quadratically and honors the tolerance") {
  for (auto model : {MaterialModel::StVenantKirchhoff, MaterialModel::NeoHookean}) {
    const FemSystem sys = beam_system(10, model);
    const ForceVector f = tip_load(sys, 10.0);
    SolverConfig config;
    const SolveResult r = newton_raphson(sys, f, config);
    REQUIRE(r.converged);
    CHECK(r.iterations >= 4);
    CHECK(r.residual_history.size() == static_cast<std::size_t>(r.iterations) + 1);
    CHECK(r.residual_history.back() < r.tolerance);
    CHECK(r.tolerance == doctest::Approx(1e-6 * free_norm(sys, f)));
    CHECK((r.u.array() == 0.0).segment(0, 3).all());
    const auto& h = r.residual_history;
    const std::size_t m = h.size();
    const double order = std::log(h[m - 1] / h[m - 2]) / std::log(h[m - 2] / h[m - 3]);
    CHECK(order >= 1.7);
  }
}

TEST_CASE("non-convergence is reported") {
  const FemSystem sys = beam_system(6);
  SolverConfig config;
  config.max_iters = 1;
  const SolveResult r = newton_raphson(sys, tip_load(sys, 40.0), config);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 1);
  CHECK(r.residual_history.size() == 2);
}

TEST_CASE("both linear solvers reach the same root") {
  const FemSystem sys = beam_system(4);
  const ForceVector f = tip_load(sys, 30.0);
  SolverConfig direct;
  SolverConfig cg;
  cg.linear_solver = LinearSolverKind::ConjugateGradient;
  const SolveResult a = newton_raphson(sys, f, direct);
  const SolveResult b = newton_raphson(sys, f, cg);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK((a.u - b.u).norm() <= 1e-6 * sys.characteristic_length());
}

TEST_CASE("hybrid with an oracle exits early") {
  const FemSystem sys = beam_system(6);
  const ForceVector f = tip_load(sys, 30.0);
  const SolveResult classic = newton_raphson(sys, f, {});
  const SolveResult hybrid = hybrid_newton_raphson(
      sys, f, [&](const ForceVector&) { return classic.u; }, {});
  CHECK(hybrid.prediction_used == PredictionUse::EarlyExit);
  CHECK(hybrid.iterations == 0);
  CHECK(hybrid.converged);
  CHECK(hybrid.residual_history.size() == 1);
  CHECK(hybrid.u == classic.u);
}

TEST_CASE("hybrid with a zero predictor reproduces classic Newton") {
  const FemSystem sys = beam_system(10);
  for (double load : {5.0, 40.0, 120.0}) {
    const ForceVector f = tip_load(sys, load);
    const SolveResult classic = newton_raphson(sys, f, {});
    const SolveResult hybrid = hybrid_newton_raphson(
        sys, f, [&](const ForceVector& g) { return Vector::Zero(g.size()); }, {});
    CHECK(hybrid.prediction_used == PredictionUse::Discarded);
    CHECK(hybrid.iterations == classic.iterations);
    CHECK(hybrid.residual_history == classic.residual_history);
    CHECK(hybrid.u == classic.u);
  }
}

TEST_CASE("hybrid falls back to a good prediction and keeps the monotone guard") {
  const FemSystem sys = beam_system(10);
  const ForceVector f = tip_load(sys, 120.0);
  SolverConfig tight;
  tight.eps = 1e-12;
  const SolveResult exact = newton_raphson(sys, f, tight);
  REQUIRE(exact.converged);
  // A slightly perturbed solution: better than the first Newton iterate,
  // not good enough to exit.
  const Vector guess = exact.u * (1.0 + 1e-3);
  const SolveResult classic = newton_raphson(sys, f, {});
  const SolveResult hybrid = hybrid_newton_raphson(
      sys, f, [&](const ForceVector&) { return guess; }, {});
  REQUIRE(hybrid.converged);
  CHECK(hybrid.prediction_used == PredictionUse::Fallback);
  CHECK(hybrid.residual_history[1] <= classic.residual_history[1]);
  CHECK(hybrid.iterations < classic.iterations);
  CHECK((hybrid.u - classic.u).norm() <= 1e-6 * sys.characteristic_length());
}

TEST_CASE("hybrid discards a useless prediction") {
  const FemSystem sys = beam_system(6);
  const ForceVector f = tip_load(sys, 30.0);
  const SolveResult classic = newton_raphson(sys, f, {});
  for (double junk : {1e3, std::numeric_limits<double>::quiet_NaN()}) {
    const SolveResult hybrid = hybrid_newton_raphson(
        sys, f, [&](const ForceVector& g) { return Vector::Constant(g.size(), junk); }, {});
    CHECK(hybrid.prediction_used == PredictionUse::Discarded);
    CHECK(hybrid.iterations == classic.iterations);
    CHECK((hybrid.u - classic.u).norm() == 0.0);
  }
  // A wrongly sized prediction is also ignored.
  const SolveResult sized = hybrid_newton_raphson(
      sys, f, [](const ForceVector&) { return Vector::Ones(5); }, {});
  CHECK(sized.prediction_used == PredictionUse::Discarded);
}

TEST_CASE("inverting prediction under Neo-Hookean is discarded, not fatal") {
  const FemSystem sys = beam_system(4, MaterialModel::NeoHookean);
  const ForceVector f = tip_load(sys, 10.0);
  const SolveResult hybrid = hybrid_newton_raphson(
      sys, f,
      [&](const ForceVector& g) {
        Vector u = Vector::Zero(g.size());
        for (Eigen::Index i = 0; i < u.size(); i += 3) u[i] = -5.0 * sys.mesh().nodes()[static_cast<std::size_t>(i / 3)].x();
        return u;
      },
      {});
  CHECK(hybrid.converged);
  CHECK(hybrid.prediction_used == PredictionUse::Discarded);
}
