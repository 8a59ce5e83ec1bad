#include "defnet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "defnet/error.hpp"
#include "defnet/rng.hpp"

namespace defnet {

namespace {

/// Standardized free-dof inputs and targets, one column per dataset row.
struct TrainingArrays {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
  std::vector<ForceVector> forces;
};

TrainingArrays prepare(const FemSystem& system, const Dataset& data,
                       const NormalizationSpec& norm) {
  const auto s = static_cast<Eigen::Index>(data.size());
  const auto n = static_cast<Eigen::Index>(system.num_free());
  TrainingArrays arrays;
  arrays.inputs.resize(n, s);
  arrays.targets.resize(n, s);
  arrays.forces.reserve(data.size());
  for (Eigen::Index i = 0; i < s; ++i) {
    const ForceVector f = data.forces.row(i).transpose();
    const DisplacementField u = data.displacements.row(i).transpose();
    arrays.inputs.col(i) = norm.standardize_force(reduce(system, f));
    arrays.targets.col(i) = norm.displacement_to_scaled(reduce(system, u));
    arrays.forces.push_back(f);
  }
  return arrays;
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

/// Per-sample loss. Returns false when the prediction inverts an element.
bool sample_loss(LossKind kind, const Vector& out, const Vector& target,
                 const FemSystem& system, const NormalizationSpec& norm,
                 double c, const ForceVector& f, LossValue& value,
                 double& rho, bool need_rho) {
  value = mse(out, target);
  rho = 0.0;
  if (kind == LossKind::Mse && !need_rho) return true;
  try {
    rho = residual_factor(out, system, norm, c, f);
  } catch (const ElementInversionError&) {
    return false;
  }
  if (kind == LossKind::ResidualMul) value = residual_mul(value, rho);
  else if (kind == LossKind::ResidualAdd) value = residual_add(value, rho);
  return true;
}

SetLoss loss_over(const Network& net, const FemSystem& system,
                  const TrainingArrays& arrays, const NormalizationSpec& norm,
                  double c, LossKind kind, const std::vector<std::size_t>& rows) {
  SetLoss out;
  if (rows.empty()) return out;
  Eigen::MatrixXd x(arrays.inputs.rows(), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j)
    x.col(static_cast<Eigen::Index>(j)) = arrays.inputs.col(static_cast<Eigen::Index>(rows[j]));
  const Eigen::MatrixXd y = forward(net, x);
  int valid = 0;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(rows[j]);
    LossValue value;
    double rho = 0.0;
    if (!sample_loss(kind, y.col(static_cast<Eigen::Index>(j)), arrays.targets.col(col),
                     system, norm, c, arrays.forces[rows[j]], value, rho, true)) {
      ++out.skipped;
      continue;
    }
    out.loss += value.loss;
    out.mse += mse(y.col(static_cast<Eigen::Index>(j)), arrays.targets.col(col)).loss;
    out.rho += rho;
    ++valid;
  }
  if (valid > 0) {
    out.loss /= valid;
    out.mse /= valid;
    out.rho /= valid;
  } else {
    out.loss = out.mse = out.rho = std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw ValidationError("epochs must be >= 0");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw ValidationError("validation fraction must be in [0, 1)");
  if (hidden_layers < 0) throw ValidationError("hidden_layers must be >= 0");
  if (!(adam.lr >= 0.0)) throw ValidationError("learning rate must be >= 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    throw ValidationError("Adam betas must be in [0, 1)");
  if (!(adam.eps > 0.0)) throw ValidationError("Adam eps must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ValidationError("lr_decay must be in (0, 1]");
}

double TrainConfig::learning_rate(int epoch) const {
  if (lr_decay == 1.0 || epochs <= 1) return adam.lr;
  return adam.lr * std::pow(lr_decay, static_cast<double>(epoch) / (epochs - 1));
}

SetLoss evaluate_loss(const Network& net, const FemSystem& system,
                      const Dataset& data, const NormalizationSpec& norm,
                      LossKind kind, const std::vector<std::size_t>& rows) {
  const TrainingArrays arrays = prepare(system, data, norm);
  return loss_over(net, system, arrays, norm, data.residual_scale, kind, rows);
}

TrainResult train(const Dataset& data, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  if (data.size() == 0) throw ValidationError("empty dataset");
  const FemSystem system(data.mesh, data.material);
  const NormalizationSpec norm = NormalizationSpec::from_dataset(data);
  const double c = data.residual_scale;
  const TrainingArrays arrays = prepare(system, data, norm);
  const auto n = static_cast<int>(system.num_free());

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto split_rng = make_rng(config.seed, Stream::TrainSplit);
  shuffle(order, split_rng);
  auto n_val = static_cast<std::size_t>(
      std::floor(config.validation_fraction * static_cast<double>(data.size())));
  n_val = std::min(n_val, data.size() - 1);

  TrainResult result{.network = init_network(n, config.hidden_layers, config.seed),
                     .norm = norm,
                     .residual_scale = c};
  result.validation_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  result.train_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  if (config.record_first_epoch)
    result.first_epoch_losses.assign(data.size(), std::numeric_limits<double>::quiet_NaN());

  Network& net = result.network;
  AdamState adam(static_cast<Eigen::Index>(net.parameter_count()), config.adam);
  Eigen::VectorXd best = net.parameters();
  double best_loss = std::numeric_limits<double>::infinity();
  const bool residual_loss = config.loss != LossKind::Mse;

  std::vector<std::size_t> batch_order = result.train_indices;
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  ForwardCache cache;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    adam.config.lr = config.learning_rate(epoch);
    const auto start = std::chrono::steady_clock::now();
    auto rng = make_rng(config.seed, Stream::TrainShuffle, static_cast<std::uint64_t>(epoch));
    batch_order = result.train_indices;
    shuffle(batch_order, rng);

    double epoch_loss = 0.0;
    int epoch_count = 0;
    int batch_index = 0;
    for (std::size_t first = 0; first < batch_order.size(); first += batch_size, ++batch_index) {
      const std::size_t last = std::min(first + batch_size, batch_order.size());
      const auto b = static_cast<Eigen::Index>(last - first);
      Eigen::MatrixXd x(n, b);
      for (Eigen::Index j = 0; j < b; ++j)
        x.col(j) = arrays.inputs.col(static_cast<Eigen::Index>(batch_order[first + static_cast<std::size_t>(j)]));
      const Eigen::MatrixXd y = forward(net, x, &cache);

      Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, b);
      double batch_loss = 0.0;
      int valid = 0;
      for (Eigen::Index j = 0; j < b; ++j) {
        const std::size_t row = batch_order[first + static_cast<std::size_t>(j)];
        LossValue value;
        double rho = 0.0;
        if (!sample_loss(config.loss, y.col(j), arrays.targets.col(static_cast<Eigen::Index>(row)),
                         system, norm, c, arrays.forces[row], value, rho, residual_loss)) {
          ++result.skipped_samples;
          continue;
        }
        g.col(j) = value.grad;
        batch_loss += value.loss;
        ++valid;
        if (config.record_first_epoch && epoch == 0) result.first_epoch_losses[row] = value.loss;
      }
      if (valid == 0) continue;
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << ", batch " << batch_index;
        throw NumericalError(msg.str());
      }
      g /= static_cast<double>(valid);
      const Eigen::VectorXd grad = backward(net, cache, g);
      adam_step(net.mutable_parameters(), grad, adam);
      epoch_loss += batch_loss;
      epoch_count += valid;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_count > 0 ? epoch_loss / epoch_count
                                     : std::numeric_limits<double>::quiet_NaN();
    const std::vector<std::size_t>& monitor =
        result.validation_indices.empty() ? result.train_indices : result.validation_indices;
    const SetLoss val = loss_over(net, system, arrays, norm, c, config.loss, monitor);
    result.skipped_samples += val.skipped;
    rec.val_loss = val.loss;
    rec.val_mse = val.mse;
    rec.val_rho = val.rho;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (rec.val_loss < best_loss) {
      best_loss = rec.val_loss;
      best = net.parameters();
      result.best_epoch = epoch;
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  net.mutable_parameters() = best;
  return result;
}

DisplacementField predict(const Network& net, const NormalizationSpec& norm,
                          const FemSystem& system, const ForceVector& f_ext) {
  const Vector y = forward(net, Vector(norm.standardize_force(reduce(system, f_ext))));
  return expand(system, norm.scaled_to_displacement(y));
}

Predictor make_predictor(const Network& net, const NormalizationSpec& norm,
                         const FemSystem& system) {
  return [&net, norm, &system](const ForceVector& f) {
    return predict(net, norm, system, f);
  };
}

std::string mesh_fingerprint(const Mesh& mesh) {
  return bytes_fingerprint(mesh_to_json(mesh));
}

void save_model(const std::filesystem::path& dir, const Model& model,
                const Mesh& mesh, const nlohmann::json& training_echo) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConsistencyError("cannot create " + dir.string() + ": " + ec.message());
  const Network& net = model.network;
  write_f64(dir / "params.f64", net.parameters().data(), net.parameter_count());
  save_mesh(mesh, dir / "mesh.json");

  nlohmann::json m;
  m["version"] = 1;
  m["N"] = net.input_size();
  m["hidden_layers"] = net.hidden_layers();
  m["widths"] = net.widths();
  m["force_stats"] = {{"mean", model.norm.force.mean}, {"std", model.norm.force.std}};
  m["disp_stats"] = {{"mean", model.norm.disp.mean}, {"std", model.norm.disp.std}};
  m["L"] = model.norm.length;
  m["material"] = {{"model", to_string(model.material.model())},
                   {"young_modulus", model.material.young_modulus()},
                   {"poisson_ratio", model.material.poisson_ratio()}};
  m["c"] = model.residual_scale;
  m["train"] = training_echo;
  m["dataset_fingerprint"] = model.dataset_fingerprint;
  m["mesh_fingerprint"] = mesh_fingerprint(mesh);
  m["mesh_file"] = "mesh.json";
  m["params_fingerprint"] = file_fingerprint(dir / "params.f64");
  write_json(dir / "manifest.json", m);
}

Model load_model(const std::filesystem::path& dir, Mesh* mesh_out) {
  const auto m = read_json(dir / "manifest.json");
  try {
    if (m.at("version").get<int>() != 1) throw ConsistencyError("unsupported model version");
    if (file_fingerprint(dir / "params.f64") != m.at("params_fingerprint").get<std::string>())
      throw ConsistencyError("params.f64 does not match its manifest fingerprint");
    Network net(m.at("widths").get<std::vector<int>>());
    const auto params = read_f64(dir / "params.f64");
    if (params.size() != net.parameter_count())
      throw ConsistencyError("params.f64 has " + std::to_string(params.size()) +
                             " values, the architecture needs " +
                             std::to_string(net.parameter_count()));
    net.mutable_parameters() =
        Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size()));
    NormalizationSpec norm{{m.at("force_stats").at("mean").get<double>(),
                            m.at("force_stats").at("std").get<double>()},
                           {m.at("disp_stats").at("mean").get<double>(),
                            m.at("disp_stats").at("std").get<double>()},
                           m.at("L").get<double>()};
    const auto& mat = m.at("material");
    Model model{std::move(net),
                Material(material_model_from_string(mat.at("model").get<std::string>()),
                         mat.at("young_modulus").get<double>(),
                         mat.at("poisson_ratio").get<double>()),
                norm, m.at("c").get<double>(),
                m.at("dataset_fingerprint").get<std::string>(),
                m.at("mesh_fingerprint").get<std::string>()};
    if (mesh_out) {
      Mesh mesh = load_mesh(dir / m.at("mesh_file").get<std::string>());
      if (mesh_fingerprint(mesh) != model.mesh_fingerprint)
        throw ConsistencyError("model mesh does not match its manifest fingerprint");
      *mesh_out = std::move(mesh);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ConsistencyError("malformed model manifest in " + dir.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ConsistencyError("invalid model in " + dir.string() + ": " + e.what());
  }
}

}  // namespace defnet
