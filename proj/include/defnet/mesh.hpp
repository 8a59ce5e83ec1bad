#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace defnet {

using Vec3 = Eigen::Vector3d;
using Tet = std::array<std::size_t, 4>;

/// Linear tetrahedral mesh with a homogeneous Dirichlet (clamped) node set.
///
/// Construct through `Mesh::create`, `generate_beam_mesh` or `load_mesh`;
/// all of them validate indices and orientation, and recompute the
/// surface node set from boundary faces. Immutable afterwards.
class Mesh {
 public:
  /// Empty mesh; a placeholder to assign into.
  Mesh() = default;

  /// Validates and builds. Throws ValidationError on out-of-range or
  /// repeated indices and ConsistencyError on non-positive volume.
  static Mesh create(std::vector<Vec3> nodes, std::vector<Tet> tets,
                     std::vector<std::size_t> fixed_nodes);

  const std::vector<Vec3>& nodes() const noexcept { return nodes_; }
  const std::vector<Tet>& tets() const noexcept { return tets_; }
  /// Sorted, unique.
  const std::vector<std::size_t>& fixed_nodes() const noexcept {
    return fixed_nodes_;
  }
  /// Sorted, unique. Union of the vertices of faces owned by exactly one tet.
  const std::vector<std::size_t>& surface_nodes() const noexcept {
    return surface_nodes_;
  }

  std::size_t num_nodes() const noexcept { return nodes_.size(); }
  std::size_t num_dofs() const noexcept { return 3 * nodes_.size(); }

  /// Signed volume of tet `e`: det([x1-x0, x2-x0, x3-x0]) / 6.
  double signed_volume(std::size_t e) const;

  bool operator==(const Mesh& other) const = default;

 private:
  std::vector<Vec3> nodes_;
  std::vector<Tet> tets_;
  std::vector<std::size_t> fixed_nodes_;
  std::vector<std::size_t> surface_nodes_;
};

/// Longest side of the axis-aligned bounding box of the rest mesh.
struct CharacteristicLength {
  double value;
};

/// Regular (nx+1)(ny+1)(nz+1) grid over [0,sx]x[0,sy]x[0,sz], six tets per
/// cell, clamped at x = 0.
Mesh generate_beam_mesh(int nx, int ny, int nz, double size_x, double size_y,
                        double size_z);

/// Throws ValidationError when the mesh has no extent (e.g. a single node).
CharacteristicLength bounding_box_length(const Mesh& mesh);

/// Boundary face vertices, recomputed from connectivity.
std::vector<std::size_t> compute_surface_nodes(std::size_t num_nodes,
                                               const std::vector<Tet>& tets);

/// JSON: {"version":1,"nodes":[[x,y,z],...],"tets":[[a,b,c,d],...],
/// "fixed_nodes":[...]}.
std::string mesh_to_json(const Mesh& mesh);
Mesh mesh_from_json(const std::string& text);

void save_mesh(const Mesh& mesh, const std::filesystem::path& path);
Mesh load_mesh(const std::filesystem::path& path);

}  // namespace defnet
