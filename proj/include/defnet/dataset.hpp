#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <Eigen/Core>

#include "defnet/fem.hpp"
#include "defnet/modal.hpp"
#include "defnet/solver.hpp"

namespace defnet {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Global (all components, all samples) mean and population std.
struct ScalarStats {
  double mean = 0.0;
  double std = 1.0;

  bool operator==(const ScalarStats&) const = default;
};

/// Replaces a zero std by 1.
ScalarStats compute_stats(const RowMatrix& values);

struct DatasetConfig {
  int samples = 1000;
  /// Linearized per-mode displacement bound, meters.
  double d_max = 0.0;
  double patch_prob = 0.5;
  std::uint64_t seed = 0;
  SolverConfig solver;
  /// Worker threads; never affects the result.
  int threads = 1;

  static constexpr int kMaxRetries = 10;
  static constexpr double kMaxExhaustedFraction = 0.1;
};

/// Converged (force, displacement) pairs with their normalization data.
struct Dataset {
  Dataset(Mesh mesh_, Material material_)
      : mesh(std::move(mesh_)), material(material_) {}

  Mesh mesh;
  Material material;
  int modes = 0;
  Vector eigenvalues;
  double d_max = 0.0;
  double patch_prob = 0.0;
  std::uint64_t seed = 0;
  SolverConfig solver;

  /// S x N, full dof vectors.
  RowMatrix forces;
  RowMatrix displacements;

  /// max_s ||f_s||, guarded by SolverConfig::kForceFloor.
  double residual_scale = 0.0;
  double length = 0.0;
  ScalarStats force_stats;
  /// Of displacements / L.
  ScalarStats disp_stats;

  /// Extra draws caused by non-converged solves.
  int resampled = 0;
  /// Samples whose retries were exhausted (dropped).
  int exhausted = 0;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(forces.rows());
  }
};

/// Draws one in-distribution external force: modal amplitudes, then a
/// random surface patch with probability `patch_prob`. Deterministic in
/// the generator state.
ForceVector sample_force(const FemSystem& system, const ModalBasis& basis,
                         double d_max, double patch_prob,
                         std::mt19937_64& rng);

/// Samples and solves `config.samples` forces with Newton-Raphson. Each
/// sample's randomness depends only on (seed, sample, attempt), so output
/// is bitwise independent of `config.threads`. Throws NumericalError when
/// more than 10% of samples exhaust their retries.
Dataset generate_dataset(const FemSystem& system, const ModalBasis& basis,
                         const DatasetConfig& config);

/// Writes manifest.json, forces.f64, displacements.f64, mesh.json.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
/// Verifies fingerprints and shapes; throws ConsistencyError.
Dataset load_dataset(const std::filesystem::path& dir);

/// Fingerprint recorded in the dataset manifest (over the array files).
std::string dataset_fingerprint(const std::filesystem::path& dir);

}  // namespace defnet
