#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "mfcg/errors.hpp"
#include "mfcg/net.hpp"
#include "testutil.hpp"

using namespace mfcg;
using testutil::fd_grad;
using testutil::max_rel_err;
using testutil::random_net;

namespace {

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v(0) = x;
  return v;
}

// independent evaluation of a 1-hidden-layer tanh net from raw coefficients
double reference_tanh_net(const std::vector<double>& w1,
                          const std::vector<double>& b1,
                          const std::vector<double>& w2, double b2, double x) {
  double out = b2;
  for (std::size_t j = 0; j < w1.size(); ++j)
    out += w2[j] * std::tanh(w1[j] * x + b1[j]);
  return out;
}

}  // namespace

TEST_CASE("forward: zero network maps everything to zero") {
  MlpNet net = MlpNet::mlp(1, {16}, 1);
  for (double x : {-3.0, 0.0, 1.5, 100.0})
    CHECK(net.forward(vec1(x))(0) == 0.0);
}

TEST_CASE("forward: single affine layer") {
  MlpNet net({{1, 1, Act::Identity}});
  net.params() << 2.0, 1.0;  // w, b
  CHECK(net.forward(vec1(3.0))(0) == doctest::Approx(7.0).epsilon(1e-15));
}

TEST_CASE("forward: hand-set tanh composition matches reference evaluation") {
  const std::vector<double> w1 = {0.3, -1.2, 0.7};
  const std::vector<double> b1 = {0.1, 0.4, -0.9};
  const std::vector<double> w2 = {1.5, -0.25, 0.6};
  const double b2 = 0.05;
  MlpNet net = MlpNet::mlp(1, {3}, 1);
  net.params() << 0.3, -1.2, 0.7, 0.1, 0.4, -0.9, 1.5, -0.25, 0.6, 0.05;
  for (double x : {-2.0, -0.3, 0.0, 0.8, 2.5}) {
    const double want = reference_tanh_net(w1, b1, w2, b2, x);
    CHECK(std::abs(net.forward(vec1(x))(0) - want) <= 1e-12);
  }
}

TEST_CASE("forward: deterministic and shape-checked") {
  MlpNet net = random_net(2, {8}, 3, 77);
  Eigen::VectorXd x(2);
  x << 0.3, -1.1;
  const Eigen::VectorXd a = net.forward(x);
  const Eigen::VectorXd b = net.forward(x);
  CHECK(a == b);  // bitwise
  CHECK_THROWS_AS(net.forward(vec1(0.0)), UsageError);
  Eigen::VectorXd bad(2);
  bad << 1.0, std::nan("");
  CHECK_THROWS_AS(net.forward(bad), UsageError);
}

TEST_CASE("param_grad: affine layer gives (x, 1)") {
  MlpNet net({{1, 1, Act::Identity}});
  net.params() << 2.0, 1.0;
  const Eigen::VectorXd g = param_grad(net, vec1(3.0), vec1(1.0));
  CHECK(g(0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(g(1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("param_grad: zero upstream gives zero gradient") {
  MlpNet net = random_net(1, {8}, 1, 3);
  CHECK(param_grad(net, vec1(0.7), vec1(0.0)).isZero(0.0));
}

TEST_CASE("param_grad matches central finite differences on random nets") {
  for (int trial = 0; trial < 100; ++trial) {
    MlpNet net = random_net(1, {6}, 1, 1000 + trial);
    const double x = testutil::random_vec(1, 50 + trial)(0);
    const Eigen::VectorXd up = vec1(1.0);
    const Eigen::VectorXd got = param_grad(net, vec1(x), up);
    const Eigen::VectorXd want = fd_grad(
        [&] { return net.forward(vec1(x))(0); }, net.params(), 1e-5);
    CHECK(max_rel_err(got, want) <= 1e-5);
  }
}

TEST_CASE("param_grad handles multi-output and multi-layer nets") {
  for (int trial = 0; trial < 20; ++trial) {
    MlpNet net = random_net(3, {5, 4}, 2, 9000 + trial);
    const Eigen::VectorXd x = testutil::random_vec(3, 70 + trial);
    const Eigen::VectorXd up = testutil::random_vec(2, 170 + trial);
    const Eigen::VectorXd got = param_grad(net, x, up);
    const Eigen::VectorXd want = fd_grad(
        [&] { return up.dot(net.forward(x)); }, net.params(), 1e-5);
    CHECK(max_rel_err(got, want) <= 1e-5);
  }
}

TEST_CASE("input_derivative: affine layer returns its weight") {
  MlpNet net({{1, 1, Act::Identity}});
  net.params() << 2.0, 1.0;
  CHECK(input_derivative(net, vec1(0.3))(0, 0) ==
        doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("input_derivative: unit-weight tanh at zero has slope one") {
  MlpNet net({{1, 1, Act::Tanh}});
  net.params() << 1.0, 0.0;
  CHECK(input_derivative(net, vec1(0.0))(0, 0) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("input_derivative matches finite differences") {
  for (int trial = 0; trial < 100; ++trial) {
    MlpNet net = random_net(1, {7}, 1, 2000 + trial);
    const double x = testutil::random_vec(1, 60 + trial)(0);
    const double got = input_derivative(net, vec1(x))(0, 0);
    const double h = 1e-5;
    const double want =
        (net.forward(vec1(x + h))(0) - net.forward(vec1(x - h))(0)) / (2 * h);
    const double scale = std::max({std::abs(got), std::abs(want), 1e-4});
    CHECK(std::abs(got - want) / scale <= 1e-6);
  }
}

TEST_CASE("input_derivative: full Jacobian on a vector-valued net") {
  MlpNet net = random_net(3, {6}, 2, 4242);
  const Eigen::VectorXd x = testutil::random_vec(3, 4243);
  const Eigen::MatrixXd J = input_derivative(net, x);
  REQUIRE(J.rows() == 3);
  REQUIRE(J.cols() == 2);
  const double h = 1e-6;
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    const Eigen::VectorXd diff = (net.forward(xp) - net.forward(xm)) / (2 * h);
    for (int k = 0; k < 2; ++k)
      CHECK(std::abs(J(j, k) - diff(k)) <=
            1e-6 * std::max({std::abs(J(j, k)), std::abs(diff(k)), 1e-3}));
  }
}

TEST_CASE("param_grad_of_input_derivative: affine layer gives (1, 0)") {
  MlpNet net({{1, 1, Act::Identity}});
  net.params() << 2.0, 1.0;
  const Eigen::VectorXd g = param_grad_of_input_derivative(net, vec1(0.4));
  CHECK(g(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g(1) == 0.0);
}

TEST_CASE("param_grad_of_input_derivative: zero network has zero gradient") {
  MlpNet net = MlpNet::mlp(1, {8}, 1);
  CHECK(param_grad_of_input_derivative(net, vec1(0.9)).isZero(0.0));
}

TEST_CASE("param_grad_of_input_derivative matches finite differences") {
  for (int trial = 0; trial < 100; ++trial) {
    MlpNet net = random_net(1, {6}, 1, 3000 + trial);
    const double x = testutil::random_vec(1, 80 + trial)(0);
    const Eigen::VectorXd got = param_grad_of_input_derivative(net, vec1(x));
    const Eigen::VectorXd want = fd_grad(
        [&] { return input_derivative(net, vec1(x))(0, 0); }, net.params(),
        1e-4);
    CHECK(max_rel_err(got, want) <= 1e-4);
  }
}

TEST_CASE("quadratic-form gradient agrees with scaled trace gradient in 1d") {
  MlpNet net = random_net(1, {9}, 1, 515);
  const Eigen::VectorXd z = vec1(-1.7);
  const Eigen::VectorXd a = param_grad_of_quadratic_form(net, vec1(0.2), z);
  const Eigen::VectorXd b =
      param_grad_of_input_derivative(net, vec1(0.2)) * (z(0) * z(0));
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-13 * b.cwiseAbs().maxCoeff());
}

TEST_CASE("softplus head: positive output with floor and exact chain rule") {
  MlpNet net = MlpNet::mlp(1, {4}, 1, HeadMap::Softplus);
  rng::Stream rs(99);
  net.init_params(rs);
  CHECK(net.forward(vec1(0.5))(0) > 0.0);

  // push the head strongly negative: output must sit exactly on the floor
  net.params().tail(1)(0) = -40.0;
  net.params().segment(net.param_count() - 5, 4).setZero();
  CHECK(net.forward(vec1(0.3))(0) == kSoftplusFloor);

  for (int trial = 0; trial < 30; ++trial) {
    MlpNet sp = random_net(1, {5}, 1, 7000 + trial, HeadMap::Softplus);
    const double x = testutil::random_vec(1, 90 + trial)(0);
    const Eigen::VectorXd got = param_grad(sp, vec1(x), vec1(1.0));
    const Eigen::VectorXd want =
        fd_grad([&] { return sp.forward(vec1(x))(0); }, sp.params(), 1e-5);
    CHECK(max_rel_err(got, want) <= 1e-5);
  }
}

TEST_CASE("adam: zero gradient is the identity and keeps moments at zero") {
  Eigen::VectorXd params = testutil::random_vec(6, 11);
  const Eigen::VectorXd before = params;
  AdamState st(6);
  for (int i = 0; i < 5; ++i)
    adam_step(params, Eigen::VectorXd::Zero(6), st, 0.01);
  CHECK(params == before);
  CHECK(st.m.isZero(0.0));
  CHECK(st.v.isZero(0.0));
  CHECK(st.step == 5);
}

TEST_CASE("adam: first step follows the hand-unrolled recursion") {
  const double g = 0.37, lr = 1e-3;
  Eigen::VectorXd params = vec1(2.0);
  AdamState st(1);
  adam_step(params, vec1(g), st, lr);
  // one step by hand: m = (1-b1) g, v = (1-b2) g^2, both bias-corrected back
  // to g and g^2
  const double m_hat = g;
  const double v_hat = g * g;
  const double want = 2.0 - lr * m_hat / (std::sqrt(v_hat) + st.eps);
  CHECK(std::abs(params(0) - want) <= 1e-15);
  // close to a pure sign step
  CHECK(params(0) == doctest::Approx(2.0 - lr).epsilon(1e-6));
}

TEST_CASE("adam: two constant-gradient steps match the recursion") {
  const double g = -1.4, lr = 0.05;
  Eigen::VectorXd params = vec1(0.5);
  AdamState st(1);
  adam_step(params, vec1(g), st, lr);
  adam_step(params, vec1(g), st, lr);

  double m = 0, v = 0, x = 0.5;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int t = 1; t <= 2; ++t) {
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    x -= lr * (m / (1 - std::pow(b1, t))) /
         (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
  }
  CHECK(std::abs(params(0) - x) <= 1e-12);
}

TEST_CASE("adam: non-finite gradients leave parameters untouched") {
  Eigen::VectorXd params = vec1(1.0);
  AdamState st(1);
  Eigen::VectorXd bad = vec1(std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(adam_step(params, bad, st, 0.1), DivergenceError);
  CHECK(params(0) == 1.0);
  CHECK(st.step == 0);
}

TEST_CASE("adam: rejects non-positive learning rate and size mismatch") {
  Eigen::VectorXd params = vec1(1.0);
  AdamState st(1);
  CHECK_THROWS_AS(adam_step(params, vec1(1.0), st, 0.0), UsageError);
  AdamState st2(2);
  CHECK_THROWS_AS(adam_step(params, vec1(1.0), st2, 0.1), UsageError);
}

TEST_CASE("glorot initialization: weights within limits, biases zero") {
  MlpNet net = MlpNet::mlp(1, {128}, 1);
  rng::Stream rs(5);
  net.init_params(rs);
  const double lim0 = std::sqrt(6.0 / 129.0);
  for (int j = 0; j < 128; ++j) {
    CHECK(std::abs(net.params()(j)) <= lim0);
    CHECK(net.params()(static_cast<long>(net.bias_offset(0)) + j) == 0.0);
  }
  CHECK(net.params()(net.param_count() - 1) == 0.0);
}

TEST_CASE("checkpoint json round-trips bitwise") {
  MlpNet net = random_net(1, {12}, 1, 321, HeadMap::Softplus);
  AdamState st(net.param_count());
  adam_step(net.params(), testutil::random_vec(net.param_count(), 5), st, 1e-3);
  const nlohmann::json j = net_checkpoint_to_json(net, st);
  const std::string text = j.dump();

  MlpNet loaded = MlpNet::mlp(1, {1}, 1);
  AdamState lst;
  net_checkpoint_from_json(nlohmann::json::parse(text), loaded, lst);
  CHECK(loaded.params() == net.params());
  CHECK(lst.m == st.m);
  CHECK(lst.v == st.v);
  CHECK(lst.step == st.step);
  CHECK(loaded.head() == net.head());
  CHECK(loaded.layers().size() == net.layers().size());
}

TEST_CASE("parameter count matches sum over layers of (in+1)*out") {
  MlpNet net = MlpNet::mlp(3, {7, 5}, 2);
  CHECK(net.param_count() == (3 + 1) * 7 + (7 + 1) * 5 + (5 + 1) * 2);
}
