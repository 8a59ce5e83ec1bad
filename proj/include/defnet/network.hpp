#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace defnet {

/// PReLU: x for x >= 0, a*x otherwise. Derivatives use the non-negative
/// branch at x = 0.
inline double prelu(double x, double a) noexcept { return x >= 0.0 ? x : a * x; }
inline double prelu_dx(double x, double a) noexcept { return x >= 0.0 ? 1.0 : a; }
inline double prelu_da(double x) noexcept { return x >= 0.0 ? 0.0 : x; }

/// Fully connected network: hidden layers z = PReLU(W z + b) with one
/// learnable slope per neuron, followed by an affine output layer.
///
/// All parameters live in one contiguous buffer laid out per layer as
/// W (row-major), b, a (hidden layers only). Gradients use the same layout.
class Network {
 public:
  using WeightMap = Eigen::Map<
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstWeightMap = Eigen::Map<
      const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using VectorMap = Eigen::Map<Eigen::VectorXd>;
  using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

  /// widths = {input, hidden..., output}; at least two entries, all >= 1.
  /// Parameters start at zero.
  explicit Network(std::vector<int> widths);

  const std::vector<int>& widths() const noexcept { return widths_; }
  int input_size() const noexcept { return widths_.front(); }
  int output_size() const noexcept { return widths_.back(); }
  /// Number of weight matrices.
  int num_layers() const noexcept { return static_cast<int>(widths_.size()) - 1; }
  int hidden_layers() const noexcept { return num_layers() - 1; }
  bool is_hidden(int layer) const noexcept { return layer < num_layers() - 1; }

  std::size_t parameter_count() const noexcept {
    return static_cast<std::size_t>(params_.size());
  }

  const Eigen::VectorXd& parameters() const noexcept { return params_; }
  /// Mutable access invalidates forward caches taken before it.
  Eigen::VectorXd& mutable_parameters() noexcept {
    ++revision_;
    return params_;
  }
  std::uint64_t revision() const noexcept { return revision_; }

  ConstWeightMap weight(int layer) const { return weight_view(params_, layer); }
  ConstVectorMap bias(int layer) const { return bias_view(params_, layer); }
  /// Hidden layers only.
  ConstVectorMap slope(int layer) const { return slope_view(params_, layer); }

  WeightMap weight(int layer) {
    ++revision_;
    return weight_view(params_, layer);
  }
  VectorMap bias(int layer) {
    ++revision_;
    return bias_view(params_, layer);
  }
  VectorMap slope(int layer) {
    ++revision_;
    return slope_view(params_, layer);
  }

  /// Views into any buffer sharing this network's layout (e.g. gradients).
  ConstWeightMap weight_view(const Eigen::VectorXd& buf, int layer) const;
  ConstVectorMap bias_view(const Eigen::VectorXd& buf, int layer) const;
  ConstVectorMap slope_view(const Eigen::VectorXd& buf, int layer) const;
  WeightMap weight_view(Eigen::VectorXd& buf, int layer) const;
  VectorMap bias_view(Eigen::VectorXd& buf, int layer) const;
  VectorMap slope_view(Eigen::VectorXd& buf, int layer) const;

 private:
  struct Offsets {
    std::size_t weight, bias, slope;
  };

  std::vector<int> widths_;
  std::vector<Offsets> offsets_;
  Eigen::VectorXd params_;
  std::uint64_t revision_ = 0;
};

/// 4 N^2 + 7 N parameters at the default depth of 3 hidden layers.
std::size_t default_parameter_count(std::size_t n);

/// All widths n. He-normal weights (std sqrt(2 / fan_in)), zero biases,
/// slopes 0.25. Deterministic in `seed`.
Network init_network(int n, int hidden_layers, std::uint64_t seed);

/// Activations kept by forward() for backward(). Columns are samples.
struct ForwardCache {
  const Network* network = nullptr;
  std::uint64_t revision = 0;
  /// inputs[i] feeds layer i; pre[i] = W_i inputs[i] + b_i.
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> pre;
};

/// Batched forward pass; x is input_size x batch. Throws ValidationError
/// on a shape mismatch.
Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& x,
                        ForwardCache* cache = nullptr);
Eigen::VectorXd forward(const Network& net, const Eigen::VectorXd& x);

/// Gradient of sum(grad_y .* y) with respect to every parameter, in the
/// network's buffer layout. Throws ValidationError when the cache does not
/// come from the current parameters of `net`.
Eigen::VectorXd backward(const Network& net, const ForwardCache& cache,
                         const Eigen::MatrixXd& grad_y);

}  // namespace defnet
