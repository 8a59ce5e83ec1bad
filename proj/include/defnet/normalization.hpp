#pragma once

#include "defnet/dataset.hpp"
#include "defnet/fem.hpp"

namespace defnet {

/// Fixed standardization of network inputs (forces) and outputs
/// (displacements divided by L). Operates on free-dof vectors.
struct NormalizationSpec {
  ScalarStats force;
  ScalarStats disp;
  double length = 1.0;

  static NormalizationSpec from_dataset(const Dataset& data) {
    return {data.force_stats, data.disp_stats, data.length};
  }

  Vector standardize_force(const Vector& f) const {
    return (f.array() - force.mean) / force.std;
  }
  /// Physical displacement (meters) -> network target space.
  Vector displacement_to_scaled(const Vector& u) const {
    return ((u / length).array() - disp.mean) / disp.std;
  }
  /// Network output -> physical displacement (meters).
  Vector scaled_to_displacement(const Vector& y) const {
    return (y.array() * disp.std + disp.mean) * length;
  }

  bool operator==(const NormalizationSpec&) const = default;
};

}  // namespace defnet
