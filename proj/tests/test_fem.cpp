#include <doctest.h>

#include <random>

#include "defnet/error.hpp"
#include "defnet/fem.hpp"
#include "defnet/material.hpp"
#include "oracles.hpp"

using namespace defnet;

namespace {

const Material kStvk = Material::from_lame(MaterialModel::StVenantKirchhoff, 1.0, 1.0);
const Material kNeo = Material::from_lame(MaterialModel::NeoHookean, 1.0, 1.0);

Eigen::Matrix3d random_f(std::mt19937_64& rng, double amplitude) {
  std::uniform_real_distribution<double> d(-amplitude, amplitude);
  Eigen::Matrix3d f = Eigen::Matrix3d::Identity();
  for (int i = 0; i < 9; ++i) f(i / 3, i % 3) += d(rng);
  return f;
}

Eigen::VectorXd flatten(const Eigen::Matrix3d& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), 9);
}

Eigen::Matrix3d unflatten(const Eigen::VectorXd& v) {
  return Eigen::Map<const Eigen::Matrix3d>(v.data());
}

Vector random_u(std::mt19937_64& rng, std::size_t n, double amplitude) {
  std::uniform_real_distribution<double> d(-amplitude, amplitude);
  Vector u(static_cast<Eigen::Index>(n));
  for (auto& x : u) x = d(rng);
  return u;
}

}  // namespace

TEST_CASE("Lame parameters") {
  const Material m(MaterialModel::StVenantKirchhoff, 1000.0, 0.25);
  CHECK(m.lambda() == doctest::Approx(400.0));
  CHECK(m.mu() == doctest::Approx(400.0));
  CHECK_THROWS_AS(Material(MaterialModel::NeoHookean, 0.0, 0.3), ValidationError);
  CHECK_THROWS_AS(Material(MaterialModel::NeoHookean, 1.0, 0.5), ValidationError);
  CHECK_THROWS_AS(Material(MaterialModel::NeoHookean, 1.0, -0.1), ValidationError);
  CHECK(material_model_from_string("neohookean") == MaterialModel::NeoHookean);
  CHECK(material_model_from_string(to_string(MaterialModel::StVenantKirchhoff)) ==
        MaterialModel::StVenantKirchhoff);
  CHECK_THROWS_AS(material_model_from_string("rubber"), ValidationError);
}

TEST_CASE("rest state carries no energy or stress") {
  for (const auto& m : {kStvk, kNeo}) {
    CHECK(strain_energy_density(m, Eigen::Matrix3d::Identity()) == doctest::Approx(0.0));
    CHECK(first_piola(m, Eigen::Matrix3d::Identity()).norm() == doctest::Approx(0.0));
  }
}

TEST_CASE("StVK uniaxial stretch by hand") {
  const Eigen::Matrix3d f = Eigen::Vector3d(1.1, 1.0, 1.0).asDiagonal();
  CHECK(strain_energy_density(kStvk, f) == doctest::Approx(0.0165375).epsilon(1e-12));
  const Eigen::Matrix3d p = first_piola(kStvk, f);
  CHECK(p(0, 0) == doctest::Approx(0.3465).epsilon(1e-12));
  CHECK(p(1, 1) == doctest::Approx(0.105).epsilon(1e-12));
  CHECK(p(2, 2) == doctest::Approx(0.105).epsilon(1e-12));
  CHECK(std::abs(p(0, 1)) + std::abs(p(1, 2)) + std::abs(p(0, 2)) < 1e-15);
}

TEST_CASE("Neo-Hookean rejects inverted elements") {
  Eigen::Matrix3d f = Eigen::Vector3d(-1.0, 1.0, 1.0).asDiagonal();
  CHECK_THROWS_AS(strain_energy_density(kNeo, f), NumericalError);
  CHECK_THROWS_AS(first_piola(kNeo, f), NumericalError);
  f(0, 0) = 0.0;
  CHECK_THROWS_AS(first_piola(kNeo, f), NumericalError);
}

TEST_CASE("Neo-Hookean stress grows without bound under compression") {
  double previous = 0.0;
  for (double s = 0.9; s >= 0.1 - 1e-12; s -= 0.1) {
    const Eigen::Matrix3d f = Eigen::Vector3d(s, 1.0, 1.0).asDiagonal();
    const double magnitude = first_piola(kNeo, f).norm();
    CHECK(magnitude > previous);
    previous = magnitude;
  }
  CHECK(previous > 10.0);
}

TEST_CASE("stress is the energy gradient and its differential is consistent") {
  std::mt19937_64 rng(11);
  for (const auto& m : {kStvk, kNeo, Material(MaterialModel::NeoHookean, 3.0, 0.4)}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::Matrix3d f = random_f(rng, 0.2);
      const auto energy = [&](const Eigen::VectorXd& x) {
        return strain_energy_density(m, unflatten(x));
      };
      const Eigen::VectorXd fd = oracle::central_gradient(energy, flatten(f), 1e-6);
      CHECK(oracle::max_rel_diff(flatten(first_piola(m, f)), fd) < 1e-6);

      const auto stress = [&](const Eigen::VectorXd& x) { return flatten(first_piola(m, unflatten(x))); };
      const Eigen::MatrixXd jac = oracle::central_jacobian(stress, flatten(f), 1e-6);
      Eigen::MatrixXd analytic(9, 9);
      for (int j = 0; j < 9; ++j) {
        Eigen::Matrix3d df = Eigen::Matrix3d::Zero();
        df(j % 3, j / 3) = 1.0;
        analytic.col(j) = flatten(first_piola_differential(m, f, df));
      }
      CHECK(oracle::max_rel_diff(analytic, jac) < 1e-6);
    }
  }
}

TEST_CASE("zero and rigid displacements produce no internal force") {
  const FemSystem sys(generate_beam_mesh(2, 1, 1, 2.0, 1.0, 1.0), kStvk);
  const auto n = static_cast<Eigen::Index>(sys.num_dofs());
  CHECK(internal_forces(sys, Vector::Zero(n)).norm() == 0.0);
  Vector t(n);
  for (Eigen::Index i = 0; i < n; i += 3) t.segment<3>(i) << 0.3, -0.2, 0.7;
  CHECK(internal_forces(sys, t).norm() < 1e-13);
  CHECK(total_strain_energy(sys, t) < 1e-15);
}

TEST_CASE("internal forces and stiffness match finite differences") {
  std::mt19937_64 rng(5);
  const Mesh two = Mesh::create({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}},
                                {{0, 1, 2, 3}, {1, 2, 3, 4}}, {0});
  for (const auto& material : {kStvk, kNeo}) {
    const FemSystem sys(two, material);
    for (int trial = 0; trial < 5; ++trial) {
      const Vector u = random_u(rng, sys.num_dofs(), 0.1);
      const auto energy = [&](const Eigen::VectorXd& x) { return total_strain_energy(sys, x); };
      CHECK(oracle::max_rel_diff(internal_forces(sys, u), oracle::central_gradient(energy, u, 1e-6)) <
            1e-6);
      const auto forces = [&](const Eigen::VectorXd& x) { return internal_forces(sys, x); };
      const Eigen::MatrixXd k = Eigen::MatrixXd(tangent_stiffness(sys, u));
      CHECK(oracle::max_rel_diff(k, oracle::central_jacobian(forces, u, 1e-6)) < 1e-5);
    }
  }
}

TEST_CASE("stiffness is symmetric") {
  std::mt19937_64 rng(8);
  const FemSystem sys(generate_beam_mesh(3, 2, 2, 1.0, 0.5, 0.5), kNeo);
  const Vector u = random_u(rng, sys.num_dofs(), 0.02);
  const Eigen::MatrixXd k = Eigen::MatrixXd(tangent_stiffness(sys, u));
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * k.cwiseAbs().maxCoeff());
}

TEST_CASE("rest stiffness of StVK equals small-strain linear elasticity") {
  const Mesh mesh = generate_beam_mesh(3, 2, 2, 1.2, 0.3, 0.4);
  const Material m(MaterialModel::StVenantKirchhoff, 2.5e5, 0.3);
  const FemSystem sys(mesh, m);
  const Eigen::MatrixXd k = Eigen::MatrixXd(
      tangent_stiffness(sys, Vector::Zero(static_cast<Eigen::Index>(sys.num_dofs()))));
  CHECK(oracle::max_rel_diff(k, oracle::linear_elastic_stiffness(mesh, m.lambda(), m.mu())) < 1e-12);
}

TEST_CASE("reduced stiffness equals the reduced full stiffness and is positive definite") {
  std::mt19937_64 rng(2);
  const FemSystem sys(generate_beam_mesh(4, 1, 1, 2.0, 0.5, 0.5), kStvk);
  const Vector u = random_u(rng, sys.num_dofs(), 0.01);
  const Eigen::MatrixXd direct = Eigen::MatrixXd(reduced_tangent_stiffness(sys, u));
  const Eigen::MatrixXd via_full = Eigen::MatrixXd(reduce(sys, tangent_stiffness(sys, u)));
  CHECK(oracle::max_rel_diff(direct, via_full) < 1e-14);

  const Eigen::MatrixXd k0 = Eigen::MatrixXd(
      reduced_tangent_stiffness(sys, Vector::Zero(static_cast<Eigen::Index>(sys.num_dofs()))));
  Eigen::LLT<Eigen::MatrixXd> llt(k0);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("residual, reduce and expand") {
  const FemSystem sys(generate_beam_mesh(2, 1, 1, 2.0, 1.0, 1.0), kStvk);
  const auto n = static_cast<Eigen::Index>(sys.num_dofs());
  std::mt19937_64 rng(4);
  const Vector f = random_u(rng, sys.num_dofs(), 1.0);
  const Vector r0 = residual(sys, Vector::Zero(n), f);
  for (Eigen::Index i = 0; i < n; ++i)
    CHECK(r0[i] == (sys.reduced_index()[static_cast<std::size_t>(i)] < 0 ? 0.0 : -f[i]));

  const Vector u = expand(sys, reduce(sys, random_u(rng, sys.num_dofs(), 0.05)));
  CHECK(residual(sys, u, internal_forces(sys, u)).norm() == 0.0);

  const Vector red = random_u(rng, sys.num_free(), 1.0);
  CHECK(reduce(sys, expand(sys, red)) == red);
  CHECK(free_norm(sys, expand(sys, red)) == doctest::Approx(red.norm()));
  CHECK(sys.num_free() == sys.num_dofs() - 3 * sys.mesh().fixed_nodes().size());
}

TEST_CASE("no fixed dofs makes reduction the identity") {
  const FemSystem sys(Mesh::create({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {{0, 1, 2, 3}}, {}),
                      kStvk);
  CHECK(sys.num_free() == 12);
  std::mt19937_64 rng(9);
  const Vector v = random_u(rng, 12, 1.0);
  CHECK(reduce(sys, v) == v);
  CHECK(expand(sys, v) == v);
}

TEST_CASE("inverted element is reported with its id") {
  const Mesh two = Mesh::create({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}},
                                {{0, 1, 2, 3}, {1, 2, 3, 4}}, {0});
  const FemSystem sys(two, kNeo);
  Vector u = Vector::Zero(15);
  u.segment<3>(12) << -2.0, -2.0, -2.0;  // pushes node 4 through face 1-2-3
  try {
    internal_forces(sys, u);
    FAIL("expected an inversion error");
  } catch (const ElementInversionError& e) {
    CHECK(e.element() == 1);
  }
  CHECK_THROWS_AS(tangent_stiffness(sys, u), ElementInversionError);
}
