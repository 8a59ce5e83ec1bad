#include "defnet/network.hpp"

#include <cmath>
#include <string>

#include "defnet/error.hpp"
#include "defnet/rng.hpp"

namespace defnet {

Network::Network(std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2)
    throw ValidationError("a network needs at least an input and an output width");
  for (int w : widths_)
    if (w < 1) throw ValidationError("layer widths must be >= 1");
  std::size_t offset = 0;
  for (int layer = 0; layer < num_layers(); ++layer) {
    const auto in = static_cast<std::size_t>(widths_[layer]);
    const auto out = static_cast<std::size_t>(widths_[layer + 1]);
    Offsets o{};
    o.weight = offset;
    offset += in * out;
    o.bias = offset;
    offset += out;
    o.slope = offset;
    if (is_hidden(layer)) offset += out;
    offsets_.push_back(o);
  }
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));
}

Network::ConstWeightMap Network::weight_view(const Eigen::VectorXd& buf,
                                             int layer) const {
  return {buf.data() + offsets_.at(layer).weight, widths_[layer + 1], widths_[layer]};
}
Network::ConstVectorMap Network::bias_view(const Eigen::VectorXd& buf,
                                           int layer) const {
  return {buf.data() + offsets_.at(layer).bias, widths_[layer + 1]};
}
Network::ConstVectorMap Network::slope_view(const Eigen::VectorXd& buf,
                                            int layer) const {
  if (!is_hidden(layer)) throw ValidationError("the output layer has no PReLU slopes");
  return {buf.data() + offsets_.at(layer).slope, widths_[layer + 1]};
}
Network::WeightMap Network::weight_view(Eigen::VectorXd& buf, int layer) const {
  return {buf.data() + offsets_.at(layer).weight, widths_[layer + 1], widths_[layer]};
}
Network::VectorMap Network::bias_view(Eigen::VectorXd& buf, int layer) const {
  return {buf.data() + offsets_.at(layer).bias, widths_[layer + 1]};
}
Network::VectorMap Network::slope_view(Eigen::VectorXd& buf, int layer) const {
  if (!is_hidden(layer)) throw ValidationError("the output layer has no PReLU slopes");
  return {buf.data() + offsets_.at(layer).slope, widths_[layer + 1]};
}

std::size_t default_parameter_count(std::size_t n) { return 4 * n * n + 7 * n; }

Network init_network(int n, int hidden_layers, std::uint64_t seed) {
  if (n < 1) throw ValidationError("network width must be >= 1");
  if (hidden_layers < 0) throw ValidationError("hidden layer count must be >= 0");
  Network net(std::vector<int>(static_cast<std::size_t>(hidden_layers) + 2, n));
  auto rng = make_rng(seed, Stream::NetworkInit);
  for (int layer = 0; layer < net.num_layers(); ++layer) {
    auto w = net.weight(layer);
    const double std = std::sqrt(2.0 / static_cast<double>(w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = std * standard_normal(rng);
    if (net.is_hidden(layer)) net.slope(layer).setConstant(0.25);
  }
  return net;
}

Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& x,
                        ForwardCache* cache) {
  if (x.rows() != net.input_size())
    throw ValidationError("network input has " + std::to_string(x.rows()) +
                          " rows, expected " + std::to_string(net.input_size()));
  if (cache) {
    cache->network = &net;
    cache->revision = net.revision();
    cache->inputs.clear();
    cache->pre.clear();
  }
  Eigen::MatrixXd z = x;
  for (int layer = 0; layer < net.num_layers(); ++layer) {
    Eigen::MatrixXd a = net.weight(layer) * z;
    a.colwise() += net.bias(layer);
    if (cache) {
      cache->inputs.push_back(std::move(z));
      cache->pre.push_back(a);
    }
    if (net.is_hidden(layer)) {
      const auto slope = net.slope(layer);
      for (Eigen::Index c = 0; c < a.cols(); ++c)
        for (Eigen::Index r = 0; r < a.rows(); ++r)
          a(r, c) = prelu(a(r, c), slope[r]);
    }
    z = std::move(a);
  }
  return z;
}

Eigen::VectorXd forward(const Network& net, const Eigen::VectorXd& x) {
  return forward(net, Eigen::MatrixXd(x), nullptr).col(0);
}

Eigen::VectorXd backward(const Network& net, const ForwardCache& cache,
                         const Eigen::MatrixXd& grad_y) {
  if (cache.network != &net || cache.revision != net.revision() ||
      static_cast<int>(cache.pre.size()) != net.num_layers())
    throw ValidationError("stale forward cache: parameters changed since forward()");
  const Eigen::Index batch = cache.inputs.front().cols();
  if (grad_y.rows() != net.output_size() || grad_y.cols() != batch)
    throw ValidationError("output gradient shape does not match the forward batch");

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.parameters().size());
  Eigen::MatrixXd g = grad_y;  // dL/d(layer output)
  for (int layer = net.num_layers() - 1; layer >= 0; --layer) {
    const Eigen::MatrixXd& a = cache.pre[static_cast<std::size_t>(layer)];
    if (net.is_hidden(layer)) {
      const auto slope = net.slope(layer);
      auto dslope = net.slope_view(grad, layer);
      for (Eigen::Index c = 0; c < a.cols(); ++c)
        for (Eigen::Index r = 0; r < a.rows(); ++r) {
          dslope[r] += g(r, c) * prelu_da(a(r, c));
          g(r, c) *= prelu_dx(a(r, c), slope[r]);
        }
    }
    const Eigen::MatrixXd& z = cache.inputs[static_cast<std::size_t>(layer)];
    net.weight_view(grad, layer).noalias() = g * z.transpose();
    net.bias_view(grad, layer) = g.rowwise().sum();
    if (layer > 0) g = net.weight(layer).transpose() * g;
  }
  return grad;
}

}  // namespace defnet
