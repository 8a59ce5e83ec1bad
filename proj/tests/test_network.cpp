#include <doctest.h>

#include <random>

#include "defnet/adam.hpp"
#include "defnet/error.hpp"
#include "defnet/network.hpp"
#include "oracles.hpp"

using namespace defnet;

namespace {

Network random_net(std::vector<int> widths, std::uint64_t seed) {
  Network net(std::move(widths));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (auto& p : net.mutable_parameters()) p = d(rng);
  for (int l = 0; l < net.num_layers(); ++l)
    if (net.is_hidden(l))
      for (auto& a : net.slope(l)) a = 0.1 + 0.4 * (d(rng) + 1.0) / 2.0;
  return net;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

}  // namespace

TEST_CASE("PReLU values and derivatives") {
  CHECK(prelu(2.0, 0.25) == 2.0);
  CHECK(prelu(-2.0, 0.25) == -0.5);
  CHECK(prelu(0.0, 0.7) == 0.0);
  CHECK(prelu_dx(0.0, 0.7) == 1.0);
  CHECK(prelu_dx(-1.0, 0.7) == 0.7);
  CHECK(prelu_da(0.0) == 0.0);
  CHECK(prelu_da(-3.0) == -3.0);
  CHECK(prelu_da(3.0) == 0.0);
}

TEST_CASE("parameter count follows 4N^2 + 7N") {
  CHECK(init_network(10, 3, 0).parameter_count() == 470);
  CHECK(init_network(1, 3, 0).parameter_count() == 11);
  for (int n : {2, 7, 33}) {
    const auto expected = static_cast<std::size_t>(4 * n * n + 7 * n);
    CHECK(init_network(n, 3, 1).parameter_count() == expected);
    CHECK(default_parameter_count(static_cast<std::size_t>(n)) == expected);
  }
  CHECK(Network({3, 4, 2}).parameter_count() == 3 * 4 + 4 + 4 + 4 * 2 + 2);
  CHECK_THROWS_AS(Network({3}), ValidationError);
  CHECK_THROWS_AS(Network({3, 0, 2}), ValidationError);
}

TEST_CASE("initialization") {
  const Network a = init_network(64, 3, 42);
  CHECK(a.parameters() == init_network(64, 3, 42).parameters());
  CHECK(a.parameters() != init_network(64, 3, 43).parameters());
  for (int l = 0; l < a.num_layers(); ++l) {
    CHECK(a.bias(l).norm() == 0.0);
    if (a.is_hidden(l)) CHECK((a.slope(l).array() == 0.25).all());
    const auto w = a.weight(l);
    const double mean = w.mean();
    const double std = std::sqrt((w.array() - mean).square().mean());
    CHECK(std::abs(mean) < 0.01);
    CHECK(std == doctest::Approx(std::sqrt(2.0 / 64.0)).epsilon(0.05));
  }
}

TEST_CASE("forward pass by hand") {
  SUBCASE("zero parameters give zero output") {
    const Network net({4, 4, 4});
    CHECK(forward(net, Eigen::VectorXd(Eigen::VectorXd::Ones(4))).norm() == 0.0);
  }
  SUBCASE("identity layers") {
    Network net({2, 2, 2});
    net.weight(0) = Eigen::Matrix2d::Identity();
    net.weight(1) = Eigen::Matrix2d::Identity();
    net.slope(0).setConstant(0.25);
    const Eigen::VectorXd y = forward(net, Eigen::VectorXd(Eigen::Vector2d(-1.0, 2.0)));
    CHECK(y[0] == -0.25);
    CHECK(y[1] == 2.0);
  }
  SUBCASE("two identity hidden layers compose PReLU twice") {
    Network net({3, 3, 3, 3});
    for (int l = 0; l < 3; ++l) net.weight(l) = Eigen::Matrix3d::Identity();
    net.slope(0) << 0.1, 0.2, 0.3;
    net.slope(1) << 0.5, 0.6, 0.7;
    const Eigen::Vector3d x(-2.0, 1.5, -0.5);
    const Eigen::VectorXd y = forward(net, Eigen::VectorXd(x));
    for (int i = 0; i < 3; ++i)
      CHECK(y[i] == prelu(prelu(x[i], net.slope(0)[i]), net.slope(1)[i]));
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(forward(Network({3, 2}), Eigen::VectorXd(Eigen::VectorXd::Ones(4))), ValidationError);
  }
}

TEST_CASE("first-layer pre-activations scale linearly without biases") {
  Network net = random_net({5, 6, 6, 5}, 3);
  for (int l = 0; l < net.num_layers(); ++l) net.bias(l).setZero();
  const Eigen::MatrixXd x = random_matrix(5, 1, 4);
  ForwardCache a, b;
  forward(net, x, &a);
  forward(net, 2.5 * x, &b);
  CHECK((b.pre[0] - 2.5 * a.pre[0]).norm() < 1e-12);
}

TEST_CASE("batched forward equals per-sample forward") {
  const Network net = random_net({6, 6, 6, 6, 6}, 9);
  const Eigen::MatrixXd x = random_matrix(6, 5, 10);
  const Eigen::MatrixXd y = forward(net, x);
  for (Eigen::Index s = 0; s < 5; ++s)
    CHECK((y.col(s) - forward(net, Eigen::VectorXd(x.col(s)))).norm() < 1e-14);
}

TEST_CASE("backpropagation matches central differences for every parameter") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Network net = random_net({6, 6, 6, 6, 6}, seed);
    const Eigen::MatrixXd x = random_matrix(6, 3, seed + 100);
    const Eigen::MatrixXd g = random_matrix(6, 3, seed + 200);
    ForwardCache cache;
    forward(net, x, &cache);
    const Eigen::VectorXd grad = backward(net, cache, g);

    const Eigen::VectorXd p0 = net.parameters();
    const auto objective = [&](const Eigen::VectorXd& p) {
      net.mutable_parameters() = p;
      return (forward(net, x).array() * g.array()).sum();
    };
    const Eigen::VectorXd fd = oracle::central_gradient(objective, p0, 1e-6);
    net.mutable_parameters() = p0;
    // Per parameter group.
    for (int l = 0; l < net.num_layers(); ++l) {
      CHECK(oracle::max_rel_diff(net.weight_view(grad, l), net.weight_view(fd, l)) < 1e-6);
      CHECK(oracle::max_rel_diff(net.bias_view(grad, l), net.bias_view(fd, l)) < 1e-6);
      if (net.is_hidden(l))
        CHECK(oracle::max_rel_diff(net.slope_view(grad, l), net.slope_view(fd, l)) < 1e-6);
    }
  }
}

TEST_CASE("backward edge cases") {
  Network net = random_net({4, 4, 4}, 5);
  const Eigen::MatrixXd x = random_matrix(4, 2, 6);
  ForwardCache cache;
  forward(net, x, &cache);
  CHECK(backward(net, cache, Eigen::MatrixXd::Zero(4, 2)).norm() == 0.0);

  // All pre-activations positive: slope gradients vanish.
  Network positive({3, 3, 3});
  positive.weight(0) = Eigen::Matrix3d::Identity();
  positive.weight(1) = Eigen::Matrix3d::Identity();
  positive.bias(0).setConstant(10.0);
  ForwardCache pc;
  forward(positive, Eigen::MatrixXd::Ones(3, 2), &pc);
  const Eigen::VectorXd pg = backward(positive, pc, Eigen::MatrixXd::Ones(3, 2));
  CHECK(positive.slope_view(pg, 0).norm() == 0.0);

  // Parameter changes invalidate the cache.
  net.bias(0)[0] += 1.0;
  CHECK_THROWS_AS(backward(net, cache, Eigen::MatrixXd::Ones(4, 2)), ValidationError);
  ForwardCache empty;
  CHECK_THROWS_AS(backward(net, empty, Eigen::MatrixXd::Ones(4, 2)), ValidationError);
}

TEST_CASE("Adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Eigen::VectorXd p = Eigen::VectorXd::LinSpaced(5, -1.0, 1.0);
    const Eigen::VectorXd before = p;
    AdamState s(5);
    adam_step(p, Eigen::VectorXd::Zero(5), s);
    CHECK(p == before);
    CHECK(s.t == 1);
  }
  SUBCASE("single scalar step by hand") {
    Eigen::VectorXd p = Eigen::VectorXd::Ones(1);
    AdamConfig c;
    c.lr = 0.1;
    AdamState s(1, c);
    adam_step(p, Eigen::VectorXd::Ones(1), s);
    CHECK(p[0] == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-15));
    CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-7));
  }
  SUBCASE("first step moves against the gradient") {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(4);
    Eigen::VectorXd g(4);
    g << 3.0, -0.001, 2e5, -7.0;
    AdamState s(4);
    adam_step(p, g, s);
    for (int i = 0; i < 4; ++i) CHECK(p[i] * g[i] < 0.0);
  }
  SUBCASE("defaults") {
    const AdamConfig c;
    CHECK(c.lr == 1e-4);
    CHECK(c.beta1 == 0.9);
    CHECK(c.beta2 == 0.999);
    CHECK(c.eps == 1e-8);
  }
}
