#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "defnet/adam.hpp"
#include "defnet/dataset.hpp"
#include "defnet/io.hpp"
#include "defnet/loss.hpp"
#include "defnet/network.hpp"
#include "defnet/normalization.hpp"
#include "defnet/solver.hpp"

namespace defnet {

struct TrainConfig {
  LossKind loss = LossKind::ResidualMul;
  int epochs = 200;
  int batch_size = 32;
  std::uint64_t seed = 0;
  AdamConfig adam;
  /// Ratio of the last epoch's learning rate to adam.lr; the rate decays
  /// geometrically per epoch. 1 keeps it constant.
  double lr_decay = 1.0;
  double validation_fraction = 0.1;
  int hidden_layers = 3;
  /// Record the per-sample loss of every training sample during epoch 0.
  bool record_first_epoch = false;

  void validate() const;
  double learning_rate(int epoch) const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  /// Plain MSE in scaled space on the validation set.
  double val_mse = 0.0;
  /// Mean residual factor on the validation set.
  double val_rho = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  Network network;
  NormalizationSpec norm;
  double residual_scale = 0.0;
  std::vector<EpochRecord> history{};
  int best_epoch = -1;
  std::vector<std::size_t> train_indices{};
  std::vector<std::size_t> validation_indices{};
  /// Sample evaluations dropped because the prediction inverted an element.
  int skipped_samples = 0;
  /// Epoch-0 per-sample losses, indexed by dataset row (NaN if unvisited).
  std::vector<double> first_epoch_losses{};
};

/// Mini-batch Adam on standardized inputs / targets over free dofs.
/// The batch loss is the mean of per-sample losses; with a residual loss
/// each sample gets its own rho. Returns the parameters of the epoch with
/// the lowest validation loss (training loss when there is no validation
/// split). Deterministic in `config.seed`. Throws NumericalError on a
/// non-finite loss, naming the epoch and batch.
TrainResult train(const Dataset& data, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

/// The loss of `net` over dataset rows `rows` (mean), plus mean MSE and rho.
struct SetLoss {
  double loss = 0.0;
  double mse = 0.0;
  double rho = 0.0;
  int skipped = 0;
};
SetLoss evaluate_loss(const Network& net, const FemSystem& system,
                      const Dataset& data, const NormalizationSpec& norm,
                      LossKind kind, const std::vector<std::size_t>& rows);

/// standardize -> forward -> de-standardize -> * L -> expand.
DisplacementField predict(const Network& net, const NormalizationSpec& norm,
                          const FemSystem& system, const ForceVector& f_ext);

/// Wraps `predict` as a solver predictor.
Predictor make_predictor(const Network& net, const NormalizationSpec& norm,
                         const FemSystem& system);

/// A trained model on disk: manifest.json, params.f64, mesh.json.
struct Model {
  Network network;
  Material material;
  NormalizationSpec norm;
  double residual_scale = 0.0;
  std::string dataset_fingerprint;
  std::string mesh_fingerprint;
};

void save_model(const std::filesystem::path& dir, const Model& model,
                const Mesh& mesh, const nlohmann::json& training_echo);
/// Also returns the embedded mesh. Throws ConsistencyError.
Model load_model(const std::filesystem::path& dir, Mesh* mesh = nullptr);

/// Fingerprint of the mesh as serialized by mesh_to_json.
std::string mesh_fingerprint(const Mesh& mesh);

}  // namespace defnet
