#include "defnet/dataset.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "defnet/error.hpp"
#include "defnet/io.hpp"
#include "defnet/parallel.hpp"
#include "defnet/rng.hpp"

namespace defnet {

namespace {

constexpr int kMaxPatchDraws = 100;

struct SampleOutcome {
  std::optional<std::pair<ForceVector, DisplacementField>> pair;
  int failed_attempts = 0;
};

SampleOutcome solve_sample(const FemSystem& system, const ModalBasis& basis,
                           const DatasetConfig& config, std::size_t index) {
  SampleOutcome out;
  for (int attempt = 0; attempt <= DatasetConfig::kMaxRetries; ++attempt) {
    auto rng = make_rng(config.seed, Stream::Dataset, index,
                        static_cast<std::uint64_t>(attempt));
    const ForceVector f =
        sample_force(system, basis, config.d_max, config.patch_prob, rng);
    try {
      SolveResult r = newton_raphson(system, f, config.solver);
      if (r.converged) {
        out.pair.emplace(f, std::move(r.u));
        return out;
      }
    } catch (const NumericalError&) {
      // inverted element or failed factorization: resample
    }
    ++out.failed_attempts;
  }
  return out;
}

nlohmann::json stats_json(const ScalarStats& s) {
  return {{"mean", s.mean}, {"std", s.std}};
}

ScalarStats stats_from_json(const nlohmann::json& j) {
  return {j.at("mean").get<double>(), j.at("std").get<double>()};
}

}  // namespace

ScalarStats compute_stats(const RowMatrix& values) {
  const auto count = static_cast<double>(values.size());
  if (values.size() == 0) return {};
  const double mean = values.sum() / count;
  const double var = (values.array() - mean).square().sum() / count;
  const double std = std::sqrt(var);
  return {mean, std > 0.0 ? std : 1.0};
}

ForceVector sample_force(const FemSystem& system, const ModalBasis& basis,
                         double d_max, double patch_prob,
                         std::mt19937_64& rng) {
  const Vector alpha = sample_amplitudes(basis, d_max, rng);
  ForceVector f = modal_force(system, basis, alpha);
  const bool patch = uniform01(rng) < patch_prob;
  if (!patch || f.norm() == 0.0) return f;

  const auto& surface = system.mesh().surface_nodes();
  const double length = system.characteristic_length();
  for (int draw = 0; draw < kMaxPatchDraws; ++draw) {
    const std::size_t center = surface[uniform_index(rng, surface.size())];
    const double radius = uniform(rng, 0.1, 0.5) * length;
    ForceVector masked = mask_patch(f, system.mesh(), center, radius);
    if (masked.norm() > 0.0) return masked;
  }
  return f;
}

Dataset generate_dataset(const FemSystem& system, const ModalBasis& basis,
                         const DatasetConfig& config) {
  if (config.samples < 1) throw ValidationError("sample count must be >= 1");
  if (!(config.d_max >= 0.0)) throw ValidationError("d_max must be >= 0");
  if (!(config.patch_prob >= 0.0 && config.patch_prob <= 1.0))
    throw ValidationError("patch_prob must be in [0, 1]");
  if (static_cast<std::size_t>(basis.phi.rows()) != system.num_free())
    throw ValidationError("modal basis does not match the system");
  config.solver.validate();

  const auto s = static_cast<std::size_t>(config.samples);
  std::vector<SampleOutcome> outcomes(s);
  parallel_for(s, config.threads, [&](std::size_t i) {
    outcomes[i] = solve_sample(system, basis, config, i);
  });

  Dataset data(system.mesh(), system.material());
  data.modes = basis.k();
  data.eigenvalues = basis.lambda;
  data.d_max = config.d_max;
  data.patch_prob = config.patch_prob;
  data.seed = config.seed;
  data.solver = config.solver;
  data.length = system.characteristic_length();

  std::size_t kept = 0;
  for (const auto& o : outcomes) {
    data.resampled += o.failed_attempts;
    if (o.pair) ++kept;
    else ++data.exhausted;
  }
  if (static_cast<double>(data.exhausted) >
      DatasetConfig::kMaxExhaustedFraction * static_cast<double>(s)) {
    std::ostringstream msg;
    msg << data.exhausted << " of " << s << " samples failed to converge after "
        << DatasetConfig::kMaxRetries << " retries (" << data.resampled
        << " failed solves in total); reduce d_max or raise solver.max_iters";
    throw NumericalError(msg.str());
  }
  if (kept == 0) throw NumericalError("no converged sample");

  const auto n = static_cast<Eigen::Index>(system.num_dofs());
  data.forces.resize(static_cast<Eigen::Index>(kept), n);
  data.displacements.resize(static_cast<Eigen::Index>(kept), n);
  Eigen::Index row = 0;
  double c = 0.0;
  for (const auto& o : outcomes) {
    if (!o.pair) continue;
    data.forces.row(row) = o.pair->first.transpose();
    data.displacements.row(row) = o.pair->second.transpose();
    c = std::max(c, o.pair->first.norm());
    ++row;
  }
  data.residual_scale = std::max(c, SolverConfig::kForceFloor);
  data.force_stats = compute_stats(data.forces);
  data.disp_stats = compute_stats(data.displacements / data.length);
  return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConsistencyError("cannot create " + dir.string() + ": " + ec.message());

  save_mesh(data.mesh, dir / "mesh.json");
  write_f64(dir / "forces.f64", data.forces.data(),
            static_cast<std::size_t>(data.forces.size()));
  write_f64(dir / "displacements.f64", data.displacements.data(),
            static_cast<std::size_t>(data.displacements.size()));

  nlohmann::json m;
  m["version"] = 1;
  m["S"] = data.forces.rows();
  m["N"] = data.forces.cols();
  m["k"] = data.modes;
  m["c"] = data.residual_scale;
  m["L"] = data.length;
  m["material"] = {{"model", to_string(data.material.model())},
                   {"young_modulus", data.material.young_modulus()},
                   {"poisson_ratio", data.material.poisson_ratio()}};
  m["d_max"] = data.d_max;
  m["patch_prob"] = data.patch_prob;
  m["seed"] = data.seed;
  m["force_stats"] = stats_json(data.force_stats);
  m["disp_stats"] = stats_json(data.disp_stats);
  m["mesh_file"] = "mesh.json";
  m["eigenvalues"] = std::vector<double>(
      data.eigenvalues.data(), data.eigenvalues.data() + data.eigenvalues.size());
  m["solver"] = {{"eps", data.solver.eps},
                 {"eta", data.solver.eta},
                 {"max_iters", data.solver.max_iters},
                 {"linear_solver", to_string(data.solver.linear_solver)}};
  m["resampled"] = data.resampled;
  m["exhausted"] = data.exhausted;
  m["fingerprints"] = {{"mesh", file_fingerprint(dir / "mesh.json")},
                       {"forces", file_fingerprint(dir / "forces.f64")},
                       {"displacements", file_fingerprint(dir / "displacements.f64")}};
  write_json(dir / "manifest.json", m);
}

std::string dataset_fingerprint(const std::filesystem::path& dir) {
  const auto m = read_json(dir / "manifest.json");
  const auto& fp = m.at("fingerprints");
  return bytes_fingerprint(fp.at("mesh").get<std::string>() +
                           fp.at("forces").get<std::string>() +
                           fp.at("displacements").get<std::string>());
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto m = read_json(dir / "manifest.json");
  try {
    if (m.at("version").get<int>() != 1)
      throw ConsistencyError("unsupported dataset version");
    const auto mesh_path = dir / m.at("mesh_file").get<std::string>();
    const auto& fp = m.at("fingerprints");
    const auto check = [&](const std::filesystem::path& p, const char* key) {
      if (file_fingerprint(p) != fp.at(key).get<std::string>())
        throw ConsistencyError(p.string() + " does not match its manifest fingerprint");
    };
    check(mesh_path, "mesh");
    check(dir / "forces.f64", "forces");
    check(dir / "displacements.f64", "displacements");

    const auto& mat = m.at("material");
    Dataset data(load_mesh(mesh_path),
                 Material(material_model_from_string(mat.at("model").get<std::string>()),
                          mat.at("young_modulus").get<double>(),
                          mat.at("poisson_ratio").get<double>()));
    const auto s = m.at("S").get<Eigen::Index>();
    const auto n = m.at("N").get<Eigen::Index>();
    if (static_cast<std::size_t>(n) != data.mesh.num_dofs())
      throw ConsistencyError("dataset N does not match its mesh");
    const auto forces = read_f64(dir / "forces.f64");
    const auto disps = read_f64(dir / "displacements.f64");
    if (forces.size() != static_cast<std::size_t>(s * n) ||
        disps.size() != static_cast<std::size_t>(s * n))
      throw ConsistencyError("dataset arrays do not have shape S x N");
    data.forces = Eigen::Map<const RowMatrix>(forces.data(), s, n);
    data.displacements = Eigen::Map<const RowMatrix>(disps.data(), s, n);

    data.modes = m.at("k").get<int>();
    const auto ev = m.at("eigenvalues").get<std::vector<double>>();
    data.eigenvalues = Eigen::Map<const Vector>(ev.data(), static_cast<Eigen::Index>(ev.size()));
    data.residual_scale = m.at("c").get<double>();
    data.length = m.at("L").get<double>();
    data.d_max = m.at("d_max").get<double>();
    data.patch_prob = m.at("patch_prob").get<double>();
    data.seed = m.at("seed").get<std::uint64_t>();
    data.force_stats = stats_from_json(m.at("force_stats"));
    data.disp_stats = stats_from_json(m.at("disp_stats"));
    const auto& sv = m.at("solver");
    data.solver.eps = sv.at("eps").get<double>();
    data.solver.eta = sv.at("eta").get<double>();
    data.solver.max_iters = sv.at("max_iters").get<int>();
    data.solver.linear_solver =
        linear_solver_from_string(sv.at("linear_solver").get<std::string>());
    data.resampled = m.at("resampled").get<int>();
    data.exhausted = m.at("exhausted").get<int>();
    return data;
  } catch (const nlohmann::json::exception& e) {
    throw ConsistencyError("malformed dataset manifest in " + dir.string() +
                           ": " + e.what());
  } catch (const ValidationError& e) {
    throw ConsistencyError("invalid dataset manifest in " + dir.string() +
                           ": " + e.what());
  }
}

}  // namespace defnet
