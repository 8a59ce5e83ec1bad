#include "cli.hpp"

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "defnet/bench.hpp"
#include "defnet/config.hpp"
#include "defnet/dataset.hpp"
#include "defnet/error.hpp"
#include "defnet/io.hpp"
#include "defnet/metrics.hpp"
#include "defnet/modal.hpp"
#include "defnet/parallel.hpp"
#include "defnet/rng.hpp"
#include "defnet/train.hpp"

namespace defnet::cli {
namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
  std::vector<std::string> overrides;
};

RunConfig resolve_config(const GlobalOptions& g) {
  RunConfig config = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
  if (g.seed) {
    config.seed = *g.seed;
    config.train.seed = *g.seed;
  }
  if (g.threads) config.threads = *g.threads;
  for (const auto& o : g.overrides) apply_override(config, o);
  config.validate();
  return config;
}

fs::path out_or(const GlobalOptions& g, const char* fallback) {
  return g.out.empty() ? fs::path(fallback) : fs::path(g.out);
}

// Creates `dir` (one level). A missing parent is an I/O error.
void make_output_dir(const fs::path& dir) {
  const fs::path parent = dir.has_parent_path() ? dir.parent_path() : fs::path(".");
  if (!fs::is_directory(parent))
    throw ConsistencyError("output parent directory " + parent.string() + " does not exist");
  std::error_code ec;
  fs::create_directory(dir, ec);
  if (ec) throw ConsistencyError("cannot create " + dir.string() + ": " + ec.message());
}

Mesh resolve_mesh(const RunConfig& config, const std::string& mesh_path) {
  if (!mesh_path.empty()) return load_mesh(mesh_path);
  if (!config.mesh.path.empty()) return load_mesh(config.mesh.path);
  const auto& c = config.mesh.cells;
  const auto& s = config.mesh.size;
  return generate_beam_mesh(c[0], c[1], c[2], s[0], s[1], s[2]);
}

void require_same_mesh(const Model& model, const Mesh& mesh) {
  if (mesh_fingerprint(mesh) != model.mesh_fingerprint)
    throw ConsistencyError("model and dataset were built on different meshes");
}

// In-distribution forces drawn from the dataset's modal sampler on a
// dedicated random stream.
RowMatrix fresh_forces(const FemSystem& system, const Dataset& data, std::uint64_t seed,
                       Stream stream, int count) {
  const ModalBasis basis = eigendecompose(system, data.modes);
  RowMatrix forces(count, static_cast<Eigen::Index>(system.num_dofs()));
  for (int i = 0; i < count; ++i) {
    auto rng = make_rng(seed, stream, static_cast<std::uint64_t>(i));
    forces.row(i) = sample_force(system, basis, data.d_max, data.patch_prob, rng).transpose();
  }
  return forces;
}

// Looks up the converged Newton solution of a known force.
Predictor oracle_predictor(const FemSystem& system, const RowMatrix& forces,
                           const SolverConfig& solver, int threads) {
  auto solutions = std::make_shared<RowMatrix>(forces.rows(), forces.cols());
  parallel_for(static_cast<std::size_t>(forces.rows()), threads, [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    solutions->row(r) = newton_raphson(system, forces.row(r).transpose(), solver).u.transpose();
  });
  auto known = std::make_shared<RowMatrix>(forces);
  return [known, solutions](const ForceVector& f) -> DisplacementField {
    for (Eigen::Index i = 0; i < known->rows(); ++i)
      if (known->row(i).transpose() == f) return solutions->row(i).transpose();
    return DisplacementField::Zero(f.size());
  };
}

void check_network_width(const Model& model, const FemSystem& system) {
  if (static_cast<std::size_t>(model.network.input_size()) != system.num_free())
    throw ConsistencyError("model width " + std::to_string(model.network.input_size()) +
                           " does not match the mesh's " + std::to_string(system.num_free()) +
                           " free dofs");
}

std::string format_vector(const Vector& v) {
  std::ostringstream s;
  s.precision(6);
  for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? " " : "") << v[i];
  return s.str();
}

int cmd_mesh(const GlobalOptions& g, const std::vector<int>& cells,
             const std::vector<double>& size, std::ostream& out) {
  RunConfig config = resolve_config(g);
  if (!cells.empty()) std::copy(cells.begin(), cells.end(), config.mesh.cells.begin());
  if (!size.empty()) std::copy(size.begin(), size.end(), config.mesh.size.begin());
  const auto& c = config.mesh.cells;
  const auto& s = config.mesh.size;
  const Mesh mesh = generate_beam_mesh(c[0], c[1], c[2], s[0], s[1], s[2]);
  const fs::path path = out_or(g, "mesh.json");
  save_mesh(mesh, path);
  out << "mesh " << path.string() << "\n"
      << "M " << mesh.num_nodes() << "\nN " << mesh.num_dofs() << "\ntets "
      << mesh.tets().size() << "\nL " << bounding_box_length(mesh).value << "\n";
  return 0;
}

int cmd_dataset(const GlobalOptions& g, const std::string& mesh_path, std::ostream& out) {
  const RunConfig config = resolve_config(g);
  const Mesh mesh = resolve_mesh(config, mesh_path);
  const FemSystem system(mesh, config.material.material());
  const ModalBasis basis = eigendecompose(system, config.dataset.modes);

  DatasetConfig dc;
  dc.samples = config.dataset.samples;
  dc.d_max = config.dataset.d_max_over_L * system.characteristic_length();
  dc.patch_prob = config.dataset.patch_prob;
  dc.seed = config.seed;
  dc.solver = config.solver;
  dc.threads = config.threads;
  const Dataset data = generate_dataset(system, basis, dc);

  const fs::path dir = out_or(g, "dataset");
  make_output_dir(dir);
  save_dataset(data, dir);
  out << "dataset " << dir.string() << "\n"
      << "eigenvalues " << format_vector(basis.lambda) << "\n"
      << "c " << data.residual_scale << "\n"
      << "kept " << data.size() << "\nresampled " << data.resampled << "\nexhausted "
      << data.exhausted << "\n";
  return 0;
}

int cmd_train(const GlobalOptions& g, const std::string& dataset_dir, std::ostream& out) {
  const RunConfig config = resolve_config(g);
  const fs::path dir = out_or(g, "model");
  if (fs::exists(dir))
    throw ValidationError("model directory " + dir.string() +
                          " already exists; resuming a run is not supported");
  const Dataset data = load_dataset(dataset_dir);

  const int every = std::max(1, config.train.epochs / 10);
  const TrainResult result = train(data, config.train, [&](const EpochRecord& r) {
    if (r.epoch % every == 0 || r.epoch + 1 == config.train.epochs)
      out << "epoch " << r.epoch << " train " << r.train_loss << " val " << r.val_loss
          << " rho " << r.val_rho << "\n";
  });

  make_output_dir(dir);
  const Model model{result.network, data.material, result.norm, result.residual_scale,
                    dataset_fingerprint(dataset_dir), mesh_fingerprint(data.mesh)};
  nlohmann::json echo = to_json(config)["train"];
  echo["best_epoch"] = result.best_epoch;
  echo["skipped_samples"] = result.skipped_samples;
  save_model(dir, model, data.mesh, echo);

  std::ostringstream csv;
  csv.precision(17);
  csv << "epoch,train_loss,val_loss,val_mse,mean_rho,seconds\n";
  for (const auto& r : result.history)
    csv << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_mse << ','
        << r.val_rho << ',' << r.seconds << '\n';
  write_text(dir / "history.csv", csv.str());
  out << "model " << dir.string() << "\nbest_epoch " << result.best_epoch
      << "\nskipped_samples " << result.skipped_samples << "\n";
  return 0;
}

int cmd_eval(const GlobalOptions& g, const std::string& model_dir,
             const std::string& dataset_dir, bool oracle, int samples, std::ostream& out) {
  RunConfig config = resolve_config(g);
  if (samples > 0) config.eval.samples = samples;
  const Dataset data = load_dataset(dataset_dir);
  const FemSystem system(data.mesh, data.material);
  const RowMatrix forces =
      fresh_forces(system, data, config.seed, Stream::Evaluation, config.eval.samples);

  Predictor predictor;
  double c = data.residual_scale;
  std::optional<Model> model;
  if (oracle) {
    predictor = oracle_predictor(system, forces, config.solver, config.threads);
  } else {
    if (model_dir.empty()) throw ValidationError("eval needs --model or --oracle");
    model.emplace(load_model(model_dir));
    require_same_mesh(*model, data.mesh);
    check_network_width(*model, system);
    c = model->residual_scale;
    predictor = make_predictor(model->network, model->norm, system);
  }
  const EvaluationReport report =
      evaluate(predictor, system, forces, config.solver, c, config.threads);

  const fs::path dir = out_or(g, "eval");
  make_output_dir(dir);
  nlohmann::json j = to_json(report);
  j["predictor"] = oracle ? "oracle" : "model";
  j["seed"] = config.seed;
  write_json(dir / "report.json", j);
  write_text(dir / "samples.csv", to_csv(report));
  out << "e_max " << report.e_max << "\ne_mean " << report.e_mean << "\nsnr_min_db "
      << report.snr_min_db << "\nmse_scaled " << report.mse_scaled << "\nmean_rho "
      << report.mean_residual_norm << "\nmedian_predict_ms " << report.median_predict_ms
      << "\nexcluded " << report.excluded.size() << "\n";
  return 0;
}

int cmd_bench(const GlobalOptions& g, const std::string& model_dir,
              const std::string& dataset_dir, const std::string& kind, bool sweep,
              int samples, std::ostream& out) {
  RunConfig config = resolve_config(g);
  if (samples > 0) config.bench.samples = samples;
  const Dataset data = load_dataset(dataset_dir);
  const FemSystem system(data.mesh, data.material);
  RowMatrix forces = fresh_forces(system, data, config.seed, Stream::Bench, config.bench.samples);
  std::vector<double> fractions;
  if (sweep) {
    RowMatrix swept(forces.rows() * static_cast<Eigen::Index>(config.bench.sweep.size()),
                    forces.cols());
    Eigen::Index row = 0;
    for (double fraction : config.bench.sweep) {
      swept.middleRows(row, forces.rows()) =
          scale_to_linear_displacement(system, forces, fraction);
      row += forces.rows();
      fractions.insert(fractions.end(), static_cast<std::size_t>(forces.rows()), fraction);
    }
    forces = std::move(swept);
  }

  Predictor predictor;
  std::optional<Model> model;
  if (kind == "model") {
    if (model_dir.empty()) throw ValidationError("bench with a model predictor needs --model");
    model.emplace(load_model(model_dir));
    require_same_mesh(*model, data.mesh);
    check_network_width(*model, system);
    predictor = make_predictor(model->network, model->norm, system);
  } else if (kind == "zero") {
    const auto n = static_cast<Eigen::Index>(system.num_dofs());
    predictor = [n](const ForceVector&) { return DisplacementField::Zero(n); };
  } else if (kind != "oracle") {
    throw ValidationError("unknown predictor '" + kind + "' (model, oracle, zero)");
  }
  const BenchReport report =
      run_bench(system, forces, predictor, config.solver, config.threads, fractions);

  const fs::path dir = out_or(g, "bench");
  make_output_dir(dir);
  nlohmann::json j = to_json(report);
  j["predictor"] = kind;
  j["seed"] = config.seed;
  write_json(dir / "report.json", j);
  write_text(dir / "rows.csv", to_csv(report));
  const auto& a = report.aggregates;
  out << "forces " << report.rows.size() << "\nmean_classic_iters " << a.mean_classic_iters
      << "\nmean_hybrid_iters " << a.mean_hybrid_iters << "\nmean_iteration_reduction_pct "
      << a.mean_iteration_reduction_pct << "\nconvergence_rate_ratio "
      << a.convergence_rate_ratio << "\nearly_exit_pct " << a.early_exit_pct
      << "\nfallback_pct " << a.fallback_pct << "\ndiscarded_pct " << a.discarded_pct
      << "\nhybrid_not_worse_pct " << a.hybrid_not_worse_pct << "\n";
  return 0;
}

int cmd_predict(const GlobalOptions& g, const std::string& model_dir,
                const std::string& force_path, std::ostream& out) {
  resolve_config(g);
  Mesh mesh;
  const Model model = load_model(model_dir, &mesh);
  const FemSystem system(mesh, model.material);
  check_network_width(model, system);
  const std::vector<double> values = read_f64(force_path);
  if (values.size() != system.num_dofs())
    throw ConsistencyError("force file holds " + std::to_string(values.size()) +
                           " values, the model mesh has " + std::to_string(system.num_dofs()) +
                           " dofs");
  const ForceVector f = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  const DisplacementField u = predict(model.network, model.norm, system, f);
  const fs::path path = out_or(g, "displacement.f64");
  write_f64(path, u.data(), static_cast<std::size_t>(u.size()));
  out << "displacement " << path.string() << "\n";
  return 0;
}

int cmd_solve(const GlobalOptions& g, const std::string& mesh_path,
              const std::string& force_path, std::ostream& out) {
  const RunConfig config = resolve_config(g);
  const Mesh mesh = resolve_mesh(config, mesh_path);
  const FemSystem system(mesh, config.material.material());
  const std::vector<double> values = read_f64(force_path);
  if (values.size() != system.num_dofs())
    throw ConsistencyError("force file holds " + std::to_string(values.size()) +
                           " values, the mesh has " + std::to_string(system.num_dofs()) + " dofs");
  const ForceVector f = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  const SolveResult r = newton_raphson(system, f, config.solver);
  if (!r.converged)
    throw NumericalError("Newton-Raphson did not converge in " +
                         std::to_string(config.solver.max_iters) + " iterations (residual " +
                         std::to_string(r.residual_history.back()) + ")");
  const fs::path path = out_or(g, "displacement.f64");
  write_f64(path, r.u.data(), static_cast<std::size_t>(r.u.size()));
  out << "displacement " << path.string() << "\niterations " << r.iterations << "\nresidual "
      << r.residual_history.back() << "\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural displacement surrogate for hyperelastic FEM", "defnet"};
  app.fallthrough();
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON run configuration");
  app.add_option("--seed", g.seed, "Seed for every random stream");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
  app.add_option("--out", g.out, "Output file or directory");
  app.add_option("--set", g.overrides, "Config override section.key=value (repeatable)");

  std::vector<int> cells;
  std::vector<double> size;
  auto* mesh_cmd = app.add_subcommand("mesh", "Generate a cantilever beam mesh");
  mesh_cmd->add_option("--cells", cells, "Cells along x y z")->expected(3);
  mesh_cmd->add_option("--size", size, "Extent along x y z in meters")->expected(3);

  std::string mesh_path;
  auto* dataset_cmd = app.add_subcommand("dataset", "Sample modal forces and solve them");
  dataset_cmd->add_option("--mesh", mesh_path, "Mesh file (default: config mesh)");

  std::string dataset_dir = "dataset";
  auto* train_cmd = app.add_subcommand("train", "Train a network on a dataset");
  train_cmd->add_option("--dataset", dataset_dir, "Dataset directory");

  std::string model_dir;
  bool oracle = false;
  int samples = 0;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on fresh forces");
  eval_cmd->add_option("--model", model_dir, "Model directory");
  eval_cmd->add_option("--dataset", dataset_dir, "Dataset directory (sampler and mesh)");
  eval_cmd->add_flag("--oracle", oracle, "Predict with the converged Newton solution");
  eval_cmd->add_option("--samples", samples, "Number of fresh forces");

  std::string predictor_kind = "model";
  bool sweep = false;
  auto* bench_cmd = app.add_subcommand("bench", "Classic vs hybrid Newton-Raphson");
  bench_cmd->add_option("--model", model_dir, "Model directory");
  bench_cmd->add_option("--dataset", dataset_dir, "Dataset directory (sampler and mesh)");
  bench_cmd->add_option("--predictor", predictor_kind, "model, oracle or zero");
  bench_cmd->add_flag("--sweep", sweep, "Rescale forces to the configured displacement sweep");
  bench_cmd->add_option("--samples", samples, "Number of forces per sweep level");

  std::string force_path;
  auto* predict_cmd = app.add_subcommand("predict", "Predict the displacement of one force");
  predict_cmd->add_option("--model", model_dir, "Model directory")->required();
  predict_cmd->add_option("--force", force_path, "Force file (.f64)")->required();

  auto* solve_cmd = app.add_subcommand("solve", "Solve one force with Newton-Raphson");
  solve_cmd->add_option("--mesh", mesh_path, "Mesh file (default: config mesh)");
  solve_cmd->add_option("--force", force_path, "Force file (.f64)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*mesh_cmd) return cmd_mesh(g, cells, size, out);
    if (*dataset_cmd) return cmd_dataset(g, mesh_path, out);
    if (*train_cmd) return cmd_train(g, dataset_dir, out);
    if (*eval_cmd) return cmd_eval(g, model_dir, dataset_dir, oracle, samples, out);
    if (*bench_cmd)
      return cmd_bench(g, model_dir, dataset_dir, predictor_kind, sweep, samples, out);
    if (*predict_cmd) return cmd_predict(g, model_dir, force_path, out);
    if (*solve_cmd) return cmd_solve(g, mesh_path, force_path, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConsistencyError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}

}  // namespace defnet::cli
