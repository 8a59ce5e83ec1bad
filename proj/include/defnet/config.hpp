#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "defnet/material.hpp"
#include "defnet/solver.hpp"
#include "defnet/train.hpp"

namespace defnet {

struct MeshSection {
  /// When set, the mesh is loaded instead of generated.
  std::string path;
  std::array<int, 3> cells{10, 2, 2};
  std::array<double, 3> size{2.0, 0.2, 0.2};
};

struct MaterialSection {
  MaterialModel model = MaterialModel::StVenantKirchhoff;
  double young_modulus = 1e6;
  double poisson_ratio = 0.3;

  Material material() const { return Material(model, young_modulus, poisson_ratio); }
};

struct DatasetSection {
  int modes = 5;
  int samples = 1000;
  double d_max_over_L = 0.15;
  double patch_prob = 0.5;
};

struct EvalSection {
  int samples = 100;
};

struct BenchSection {
  int samples = 100;
  /// Linearized peak displacement / L targets of the force sweep.
  std::vector<double> sweep{0.01, 0.10, 0.25};
};

/// Every knob of an experiment. Serialized as one JSON object; unknown
/// keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  /// 0 = hardware concurrency.
  int threads = 1;
  MeshSection mesh;
  MaterialSection material;
  DatasetSection dataset;
  SolverConfig solver;
  TrainConfig train;
  EvalSection eval;
  BenchSection bench;

  /// Throws ValidationError.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Missing keys keep their defaults. Throws ValidationError.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Applies "section.key=value"; the value is parsed as JSON, falling back
/// to a plain string. Throws ValidationError.
void apply_override(RunConfig& config, const std::string& assignment);

}  // namespace defnet
