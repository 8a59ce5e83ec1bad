#include "defnet/fem.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "defnet/error.hpp"

namespace defnet {

namespace {

using Eigen::Matrix3d;
using ElementMatrix = Eigen::Matrix<double, 12, 12>;
using ElementVector = Eigen::Matrix<double, 12, 1>;

void check_length(const FemSystem& system, const Vector& v, const char* what) {
  if (static_cast<std::size_t>(v.size()) != system.num_dofs())
    throw ValidationError(std::string(what) + " has length " +
                          std::to_string(v.size()) + ", expected " +
                          std::to_string(system.num_dofs()));
}

void check_element(const FemSystem& system, std::size_t e, const Matrix3d& F) {
  if (system.material().model() == MaterialModel::NeoHookean) {
    const double j = F.determinant();
    if (!(j > 0.0)) throw ElementInversionError(e, j);
  }
}

ElementVector element_forces(const FemSystem& system, std::size_t e,
                             const Matrix3d& F) {
  const auto& g = system.shape_gradients(e);
  const Matrix3d p = first_piola(system.material(), F);
  // f_a = vol * P * grad N_a
  const Eigen::Matrix<double, 3, 4> f =
      system.rest_volume(e) * p * g.transpose();
  return Eigen::Map<const ElementVector>(f.data());
}

ElementMatrix element_stiffness(const FemSystem& system, std::size_t e,
                                const Matrix3d& F) {
  const auto& g = system.shape_gradients(e);
  const double vol = system.rest_volume(e);
  ElementMatrix ke;
  for (int b = 0; b < 4; ++b) {
    for (int k = 0; k < 3; ++k) {
      // dF for a unit displacement of dof (b, k)
      Matrix3d df = Matrix3d::Zero();
      df.row(k) = g.row(b);
      const Matrix3d dp = first_piola_differential(system.material(), F, df);
      const Eigen::Matrix<double, 3, 4> col = vol * dp * g.transpose();
      ke.col(3 * b + k) = Eigen::Map<const ElementVector>(col.data());
    }
  }
  // Exact symmetry of the energy Hessian; removes rounding asymmetry.
  return 0.5 * (ke + ke.transpose());
}

template <typename DofMap>
SparseMatrix assemble_stiffness(const FemSystem& system,
                                const DisplacementField& u, Eigen::Index n,
                                DofMap&& map) {
  const auto& tets = system.mesh().tets();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(tets.size() * 144);
  for (std::size_t e = 0; e < tets.size(); ++e) {
    const Matrix3d F = system.deformation_gradient(e, u);
    check_element(system, e, F);
    const ElementMatrix ke = element_stiffness(system, e, F);
    std::ptrdiff_t dof[12];
    for (int a = 0; a < 4; ++a)
      for (int i = 0; i < 3; ++i) dof[3 * a + i] = map(3 * tets[e][a] + i);
    for (int r = 0; r < 12; ++r) {
      if (dof[r] < 0) continue;
      for (int c = 0; c < 12; ++c)
        if (dof[c] >= 0) triplets.emplace_back(dof[r], dof[c], ke(r, c));
    }
  }
  SparseMatrix k(n, n);
  k.setFromTriplets(triplets.begin(), triplets.end());
  return k;
}

}  // namespace

FemSystem::FemSystem(Mesh mesh, Material material)
    : mesh_(std::move(mesh)), material_(material) {
  const std::size_t n = mesh_.num_dofs();
  std::vector<char> fixed(n, 0);
  for (std::size_t node : mesh_.fixed_nodes())
    for (int i = 0; i < 3; ++i) fixed[3 * node + i] = 1;
  reduced_index_.assign(n, -1);
  for (std::size_t d = 0; d < n; ++d) {
    if (fixed[d]) continue;
    reduced_index_[d] = static_cast<std::ptrdiff_t>(free_dofs_.size());
    free_dofs_.push_back(d);
  }

  const auto& x = mesh_.nodes();
  gradients_.reserve(mesh_.tets().size());
  volumes_.reserve(mesh_.tets().size());
  for (const Tet& t : mesh_.tets()) {
    Matrix3d dm;
    dm.col(0) = x[t[1]] - x[t[0]];
    dm.col(1) = x[t[2]] - x[t[0]];
    dm.col(2) = x[t[3]] - x[t[0]];
    const Matrix3d dm_inv = dm.inverse();
    Eigen::Matrix<double, 4, 3> g;
    g.bottomRows<3>() = dm_inv;
    g.row(0) = -dm_inv.colwise().sum();
    gradients_.push_back(g);
    volumes_.push_back(dm.determinant() / 6.0);
  }
  if (mesh_.num_nodes() > 1) length_ = bounding_box_length(mesh_).value;
}

Matrix3d FemSystem::deformation_gradient(std::size_t e,
                                         const DisplacementField& u) const {
  const Tet& t = mesh_.tets()[e];
  Eigen::Matrix<double, 3, 4> ue;
  for (int a = 0; a < 4; ++a) ue.col(a) = u.segment<3>(3 * t[a]);
  return Matrix3d::Identity() + ue * gradients_[e];
}

double total_strain_energy(const FemSystem& system,
                           const DisplacementField& u) {
  check_length(system, u, "displacement");
  double energy = 0.0;
  for (std::size_t e = 0; e < system.mesh().tets().size(); ++e) {
    const Matrix3d F = system.deformation_gradient(e, u);
    check_element(system, e, F);
    energy += strain_energy_density(system.material(), F) *
              system.rest_volume(e);
  }
  return energy;
}

ForceVector internal_forces(const FemSystem& system,
                            const DisplacementField& u) {
  check_length(system, u, "displacement");
  const auto& tets = system.mesh().tets();
  ForceVector f = ForceVector::Zero(static_cast<Eigen::Index>(system.num_dofs()));
  for (std::size_t e = 0; e < tets.size(); ++e) {
    const Matrix3d F = system.deformation_gradient(e, u);
    check_element(system, e, F);
    const ElementVector fe = element_forces(system, e, F);
    for (int a = 0; a < 4; ++a) f.segment<3>(3 * tets[e][a]) += fe.segment<3>(3 * a);
  }
  return f;
}

SparseMatrix tangent_stiffness(const FemSystem& system,
                               const DisplacementField& u) {
  check_length(system, u, "displacement");
  return assemble_stiffness(
      system, u, static_cast<Eigen::Index>(system.num_dofs()),
      [](std::size_t d) { return static_cast<std::ptrdiff_t>(d); });
}

SparseMatrix reduced_tangent_stiffness(const FemSystem& system,
                                       const DisplacementField& u) {
  check_length(system, u, "displacement");
  const auto& index = system.reduced_index();
  return assemble_stiffness(system, u,
                            static_cast<Eigen::Index>(system.num_free()),
                            [&index](std::size_t d) { return index[d]; });
}

ForceVector residual(const FemSystem& system, const DisplacementField& u,
                     const ForceVector& f_ext) {
  check_length(system, f_ext, "external force");
  ForceVector r = internal_forces(system, u) - f_ext;
  const auto& index = system.reduced_index();
  for (std::size_t d = 0; d < index.size(); ++d)
    if (index[d] < 0) r[static_cast<Eigen::Index>(d)] = 0.0;
  return r;
}

double free_norm(const FemSystem& system, const Vector& v) {
  check_length(system, v, "vector");
  double s = 0.0;
  for (std::size_t d : system.free_dofs()) {
    const double x = v[static_cast<Eigen::Index>(d)];
    s += x * x;
  }
  return std::sqrt(s);
}

Vector reduce(const FemSystem& system, const Vector& full) {
  check_length(system, full, "vector");
  const auto& free = system.free_dofs();
  Vector out(static_cast<Eigen::Index>(free.size()));
  for (std::size_t i = 0; i < free.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = full[static_cast<Eigen::Index>(free[i])];
  return out;
}

SparseMatrix reduce(const FemSystem& system, const SparseMatrix& full) {
  const auto n = static_cast<Eigen::Index>(system.num_dofs());
  if (full.rows() != n || full.cols() != n)
    throw ValidationError("matrix size does not match the system");
  const auto& index = system.reduced_index();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(full.nonZeros()));
  for (Eigen::Index c = 0; c < full.outerSize(); ++c) {
    const auto rc = index[static_cast<std::size_t>(c)];
    if (rc < 0) continue;
    for (SparseMatrix::InnerIterator it(full, c); it; ++it) {
      const auto rr = index[static_cast<std::size_t>(it.row())];
      if (rr >= 0) triplets.emplace_back(rr, rc, it.value());
    }
  }
  const auto m = static_cast<Eigen::Index>(system.num_free());
  SparseMatrix out(m, m);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

Vector expand(const FemSystem& system, const Vector& reduced) {
  if (static_cast<std::size_t>(reduced.size()) != system.num_free())
    throw ValidationError("reduced vector has length " +
                          std::to_string(reduced.size()) + ", expected " +
                          std::to_string(system.num_free()));
  Vector out = Vector::Zero(static_cast<Eigen::Index>(system.num_dofs()));
  const auto& free = system.free_dofs();
  for (std::size_t i = 0; i < free.size(); ++i)
    out[static_cast<Eigen::Index>(free[i])] = reduced[static_cast<Eigen::Index>(i)];
  return out;
}

}  // namespace defnet
