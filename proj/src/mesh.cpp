#include "defnet/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "defnet/error.hpp"

namespace defnet {

namespace {

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

double tet_signed_volume(const std::vector<Vec3>& x, const Tet& t) {
  Eigen::Matrix3d dm;
  dm.col(0) = x[t[1]] - x[t[0]];
  dm.col(1) = x[t[2]] - x[t[0]];
  dm.col(2) = x[t[3]] - x[t[0]];
  return dm.determinant() / 6.0;
}

}  // namespace

Mesh Mesh::create(std::vector<Vec3> nodes, std::vector<Tet> tets,
                  std::vector<std::size_t> fixed_nodes) {
  const std::size_t m = nodes.size();
  for (std::size_t i = 0; i < m; ++i) {
    if (!nodes[i].allFinite())
      throw ValidationError("node " + std::to_string(i) +
                            " has non-finite coordinates");
  }
  for (std::size_t e = 0; e < tets.size(); ++e) {
    const Tet& t = tets[e];
    for (std::size_t a = 0; a < 4; ++a) {
      if (t[a] >= m)
        throw ValidationError("tet " + std::to_string(e) + " references node " +
                              std::to_string(t[a]) + " but the mesh has " +
                              std::to_string(m) + " nodes");
      for (std::size_t b = 0; b < a; ++b)
        if (t[a] == t[b])
          throw ValidationError("tet " + std::to_string(e) +
                                " repeats node " + std::to_string(t[a]));
    }
    const double vol = tet_signed_volume(nodes, t);
    if (!(vol > 0.0))
      throw ConsistencyError("tet " + std::to_string(e) +
                             " has non-positive signed volume " +
                             std::to_string(vol));
  }
  for (std::size_t f : fixed_nodes)
    if (f >= m)
      throw ValidationError("fixed node " + std::to_string(f) +
                            " out of range");

  Mesh mesh;
  mesh.surface_nodes_ = compute_surface_nodes(m, tets);
  mesh.nodes_ = std::move(nodes);
  mesh.tets_ = std::move(tets);
  mesh.fixed_nodes_ = sorted_unique(std::move(fixed_nodes));
  return mesh;
}

double Mesh::signed_volume(std::size_t e) const {
  return tet_signed_volume(nodes_, tets_.at(e));
}

std::vector<std::size_t> compute_surface_nodes(std::size_t num_nodes,
                                               const std::vector<Tet>& tets) {
  static constexpr int kFaces[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3},
                                       {0, 1, 2}};
  std::map<std::array<std::size_t, 3>, int> count;
  for (const Tet& t : tets) {
    for (const auto& f : kFaces) {
      std::array<std::size_t, 3> key{t[f[0]], t[f[1]], t[f[2]]};
      std::sort(key.begin(), key.end());
      ++count[key];
    }
  }
  std::vector<char> on_surface(num_nodes, 0);
  for (const auto& [face, n] : count)
    if (n == 1)
      for (std::size_t v : face) on_surface[v] = 1;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < num_nodes; ++i)
    if (on_surface[i]) out.push_back(i);
  return out;
}

Mesh generate_beam_mesh(int nx, int ny, int nz, double size_x, double size_y,
                        double size_z) {
  if (nx < 1 || ny < 1 || nz < 1)
    throw ValidationError("beam subdivisions must be >= 1");
  if (!(size_x > 0.0) || !(size_y > 0.0) || !(size_z > 0.0))
    throw ValidationError("beam sizes must be > 0");

  const auto sx = static_cast<std::size_t>(nx) + 1;
  const auto sy = static_cast<std::size_t>(ny) + 1;
  const auto sz = static_cast<std::size_t>(nz) + 1;
  auto id = [&](std::size_t i, std::size_t j, std::size_t k) {
    return i + sx * (j + sy * k);
  };

  std::vector<Vec3> nodes(sx * sy * sz);
  std::vector<std::size_t> fixed;
  for (std::size_t k = 0; k < sz; ++k)
    for (std::size_t j = 0; j < sy; ++j)
      for (std::size_t i = 0; i < sx; ++i) {
        nodes[id(i, j, k)] = Vec3(size_x * static_cast<double>(i) / nx,
                                  size_y * static_cast<double>(j) / ny,
                                  size_z * static_cast<double>(k) / nz);
        if (i == 0) fixed.push_back(id(i, j, k));
      }

  // Kuhn split: one tet per axis permutation, all sharing the (0,0,0)-(1,1,1)
  // diagonal of the cell.
  static constexpr int kPerm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                      {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  std::vector<Tet> tets;
  tets.reserve(6 * static_cast<std::size_t>(nx * ny * nz));
  for (std::size_t k = 0; k + 1 < sz; ++k)
    for (std::size_t j = 0; j + 1 < sy; ++j)
      for (std::size_t i = 0; i + 1 < sx; ++i)
        for (const auto& p : kPerm) {
          std::array<std::size_t, 3> c{i, j, k};
          Tet t;
          t[0] = id(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[p[s]];
            t[s + 1] = id(c[0], c[1], c[2]);
          }
          if (tet_signed_volume(nodes, t) < 0.0) std::swap(t[2], t[3]);
          tets.push_back(t);
        }

  return Mesh::create(std::move(nodes), std::move(tets), std::move(fixed));
}

CharacteristicLength bounding_box_length(const Mesh& mesh) {
  if (mesh.num_nodes() == 0) throw ValidationError("empty mesh");
  Vec3 lo = mesh.nodes().front();
  Vec3 hi = lo;
  for (const Vec3& x : mesh.nodes()) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  const double l = (hi - lo).maxCoeff();
  if (!(l > 0.0))
    throw ValidationError("mesh bounding box is degenerate (zero extent)");
  return {l};
}

std::string mesh_to_json(const Mesh& mesh) {
  nlohmann::json j;
  j["version"] = 1;
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (const Vec3& x : mesh.nodes()) nodes.push_back({x[0], x[1], x[2]});
  auto& tets = j["tets"] = nlohmann::json::array();
  for (const Tet& t : mesh.tets()) tets.push_back({t[0], t[1], t[2], t[3]});
  j["fixed_nodes"] = mesh.fixed_nodes();
  return j.dump();
}

Mesh mesh_from_json(const std::string& text) {
  std::vector<Vec3> nodes;
  std::vector<Tet> tets;
  std::vector<std::size_t> fixed;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != 1)
      throw ConsistencyError("unsupported mesh version");
    for (const auto& n : j.at("nodes")) {
      if (n.size() != 3) throw ConsistencyError("node must have 3 coordinates");
      nodes.emplace_back(n[0].get<double>(), n[1].get<double>(),
                         n[2].get<double>());
    }
    for (const auto& t : j.at("tets")) {
      if (t.size() != 4) throw ConsistencyError("tet must have 4 indices");
      tets.push_back({t[0].get<std::size_t>(), t[1].get<std::size_t>(),
                      t[2].get<std::size_t>(), t[3].get<std::size_t>()});
    }
    fixed = j.at("fixed_nodes").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConsistencyError(std::string("malformed mesh file: ") + e.what());
  }
  try {
    return Mesh::create(std::move(nodes), std::move(tets), std::move(fixed));
  } catch (const ValidationError& e) {
    throw ConsistencyError(std::string("invalid mesh file: ") + e.what());
  }
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConsistencyError("cannot write " + path.string());
  out << mesh_to_json(mesh) << '\n';
  if (!out) throw ConsistencyError("failed writing " + path.string());
}

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConsistencyError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return mesh_from_json(ss.str());
}

}  // namespace defnet
