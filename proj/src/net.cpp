#include "mfcg/net.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "mfcg/errors.hpp"

namespace mfcg {

namespace {

using RowMajorMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

double softplus(double u) {
  return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

double sigmoid(double u) {
  return u > 0.0 ? 1.0 / (1.0 + std::exp(-u))
                 : std::exp(u) / (1.0 + std::exp(u));
}

}  // namespace

MlpNet::MlpNet(std::vector<LayerSpec> layers, HeadMap head)
    : layers_(std::move(layers)), head_(head) {
  if (layers_.empty()) throw UsageError("MlpNet needs at least one layer");
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& s = layers_[l];
    if (s.in <= 0 || s.out <= 0) throw UsageError("bad layer dimensions");
    if (l > 0 && s.in != layers_[l - 1].out)
      throw UsageError("layer dimensions do not chain");
    w_off_.push_back(off);
    off += static_cast<std::size_t>(s.in) * s.out;
    b_off_.push_back(off);
    off += s.out;
  }
  if (head_ == HeadMap::Softplus && layers_.back().out != 1)
    throw UsageError("softplus head requires a scalar output");
  params_ = Eigen::VectorXd::Zero(static_cast<long>(off));
}

MlpNet MlpNet::mlp(int input, const std::vector<int>& hidden, int output,
                   HeadMap head) {
  std::vector<LayerSpec> specs;
  int prev = input;
  for (int h : hidden) {
    specs.push_back({prev, h, Act::Tanh});
    prev = h;
  }
  specs.push_back({prev, output, Act::Identity});
  return MlpNet(std::move(specs), head);
}

void MlpNet::init_params(rng::Stream& rs) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& s = layers_[l];
    const double limit = std::sqrt(6.0 / (s.in + s.out));
    double* w = params_.data() + w_off_[l];
    const long nw = static_cast<long>(s.in) * s.out;
    for (long k = 0; k < nw; ++k) w[k] = (2.0 * rs.next_unit() - 1.0) * limit;
    params_.segment(static_cast<long>(b_off_[l]), s.out).setZero();
  }
}

void MlpNet::check_input(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim())
    throw UsageError("input dimension mismatch: got " +
                     std::to_string(x.size()) + ", net expects " +
                     std::to_string(input_dim()));
  if (!x.allFinite()) throw UsageError("non-finite network input");
}

void MlpNet::forward(const Eigen::VectorXd& x, Eigen::VectorXd& y,
                     Workspace& ws) const {
  check_input(x);
  const std::size_t L = layers_.size();
  ws.z.resize(L);
  ws.a.resize(L);
  ws.input = x;
  const Eigen::VectorXd* prev = &ws.input;
  for (std::size_t l = 0; l < L; ++l) {
    const auto& s = layers_[l];
    ConstRowMajorMap W(params_.data() + w_off_[l], s.out, s.in);
    ws.z[l].noalias() = W * (*prev);
    ws.z[l] += params_.segment(static_cast<long>(b_off_[l]), s.out);
    ws.a[l] = ws.z[l];
    if (s.act == Act::Tanh) tanh_inplace(ws.a[l]);
    prev = &ws.a[l];
  }
  if (head_ == HeadMap::Softplus) {
    ws.head_in = ws.a[L - 1](0);
    ws.head_out = std::max(softplus(ws.head_in), kSoftplusFloor);
    y.resize(1);
    y(0) = ws.head_out;
  } else {
    y = ws.a[L - 1];
  }
}

Eigen::VectorXd MlpNet::forward(const Eigen::VectorXd& x) const {
  Workspace ws;
  Eigen::VectorXd y;
  forward(x, y, ws);
  return y;
}

double MlpNet::value1(double x, Workspace& ws) const {
  Eigen::VectorXd xv(1), yv;
  xv(0) = x;
  forward(xv, yv, ws);
  return yv(0);
}

double MlpNet::value1(double x) const {
  Workspace ws;
  return value1(x, ws);
}

void MlpNet::backward(const Workspace& ws, const Eigen::VectorXd& upstream,
                      Eigen::Ref<Eigen::VectorXd> grad,
                      Eigen::VectorXd* input_grad) const {
  const std::size_t L = layers_.size();
  if (upstream.size() != output_dim())
    throw UsageError("upstream dimension mismatch");
  if (!upstream.allFinite()) throw UsageError("non-finite upstream");
  if (grad.size() != params_.size())
    throw UsageError("gradient buffer has wrong size");

  Eigen::VectorXd lam = upstream;
  if (head_ == HeadMap::Softplus) {
    const double sp = softplus(ws.head_in);
    lam(0) *= (sp < kSoftplusFloor) ? 0.0 : sigmoid(ws.head_in);
  }
  Eigen::VectorXd kappa;
  for (std::size_t li = L; li-- > 0;) {
    const auto& s = layers_[li];
    if (s.act == Act::Tanh)
      kappa = lam.array() * (1.0 - ws.a[li].array().square());
    else
      kappa = lam;
    const Eigen::VectorXd& prev = (li == 0) ? ws.input : ws.a[li - 1];
    RowMajorMap Gw(grad.data() + w_off_[li], s.out, s.in);
    Gw.noalias() += kappa * prev.transpose();
    grad.segment(static_cast<long>(b_off_[li]), s.out) += kappa;
    if (li > 0 || input_grad != nullptr) {
      ConstRowMajorMap W(params_.data() + w_off_[li], s.out, s.in);
      lam.noalias() = W.transpose() * kappa;
    }
  }
  if (input_grad != nullptr) *input_grad = lam;
}

void MlpNet::jvp(const Workspace& ws, const Eigen::VectorXd& dir,
                 Eigen::VectorXd& dy, Tangent& t) const {
  if (dir.size() != input_dim()) throw UsageError("direction dim mismatch");
  const std::size_t L = layers_.size();
  t.dz.resize(L);
  t.da.resize(L);
  t.dinput = dir;
  const Eigen::VectorXd* dprev = &t.dinput;
  for (std::size_t l = 0; l < L; ++l) {
    const auto& s = layers_[l];
    ConstRowMajorMap W(params_.data() + w_off_[l], s.out, s.in);
    t.dz[l].noalias() = W * (*dprev);
    if (s.act == Act::Tanh)
      t.da[l] = t.dz[l].array() * (1.0 - ws.a[l].array().square());
    else
      t.da[l] = t.dz[l];
    dprev = &t.da[l];
  }
  if (head_ == HeadMap::Softplus) {
    const double sp = softplus(ws.head_in);
    const double d1 = (sp < kSoftplusFloor) ? 0.0 : sigmoid(ws.head_in);
    dy.resize(1);
    dy(0) = d1 * t.da[L - 1](0);
    t.dhead_out = dy(0);
  } else {
    dy = t.da[L - 1];
  }
}

void MlpNet::grad_of_jvp(const Workspace& ws, const Tangent& t,
                         const Eigen::VectorXd& upstream,
                         Eigen::Ref<Eigen::VectorXd> grad) const {
  const std::size_t L = layers_.size();
  if (upstream.size() != output_dim())
    throw UsageError("upstream dimension mismatch");
  if (grad.size() != params_.size())
    throw UsageError("gradient buffer has wrong size");

  // lam = dS/da, mu = dS/d(adot) with S = upstream . head(jvp output)
  Eigen::VectorXd lam, mu;
  if (head_ == HeadMap::Softplus) {
    const double sp = softplus(ws.head_in);
    const bool floored = sp < kSoftplusFloor;
    const double sig = floored ? 0.0 : sigmoid(ws.head_in);
    const double dsig = floored ? 0.0 : sig * (1.0 - sig);
    lam = Eigen::VectorXd::Zero(1);
    mu = Eigen::VectorXd::Zero(1);
    lam(0) = upstream(0) * dsig * t.da[L - 1](0);
    mu(0) = upstream(0) * sig;
  } else {
    lam = Eigen::VectorXd::Zero(output_dim());
    mu = upstream;
  }

  Eigen::VectorXd kappa, nu;
  for (std::size_t li = L; li-- > 0;) {
    const auto& s = layers_[li];
    if (s.act == Act::Tanh) {
      const auto phi1 = (1.0 - ws.a[li].array().square()).eval();
      const auto phi2 = (-2.0 * ws.a[li].array() * phi1).eval();
      kappa = lam.array() * phi1 + mu.array() * phi2 * t.dz[li].array();
      nu = mu.array() * phi1;
    } else {
      kappa = lam;
      nu = mu;
    }
    const Eigen::VectorXd& prev = (li == 0) ? ws.input : ws.a[li - 1];
    const Eigen::VectorXd& dprev = (li == 0) ? t.dinput : t.da[li - 1];
    RowMajorMap Gw(grad.data() + w_off_[li], s.out, s.in);
    Gw.noalias() += kappa * prev.transpose();
    Gw.noalias() += nu * dprev.transpose();
    grad.segment(static_cast<long>(b_off_[li]), s.out) += kappa;
    if (li > 0) {
      ConstRowMajorMap W(params_.data() + w_off_[li], s.out, s.in);
      lam.noalias() = W.transpose() * kappa;
      mu.noalias() = W.transpose() * nu;
    }
  }
}

Eigen::MatrixXd MlpNet::input_jacobian(const Eigen::VectorXd& x) const {
  Workspace ws;
  Eigen::VectorXd y;
  forward(x, y, ws);
  Eigen::MatrixXd J(input_dim(), output_dim());
  Tangent t;
  Eigen::VectorXd dir = Eigen::VectorXd::Zero(input_dim());
  Eigen::VectorXd dy;
  for (int j = 0; j < input_dim(); ++j) {
    dir(j) = 1.0;
    jvp(ws, dir, dy, t);
    J.row(j) = dy.transpose();
    dir(j) = 0.0;
  }
  return J;
}

Eigen::VectorXd param_grad(const MlpNet& net, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& upstream) {
  Workspace ws;
  Eigen::VectorXd y;
  net.forward(x, y, ws);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.param_count());
  net.backward(ws, upstream, grad);
  return grad;
}

Eigen::MatrixXd input_derivative(const MlpNet& net, const Eigen::VectorXd& x) {
  return net.input_jacobian(x);
}

Eigen::VectorXd param_grad_of_input_derivative(const MlpNet& net,
                                               const Eigen::VectorXd& x) {
  if (net.input_dim() != net.output_dim())
    throw UsageError("trace needs matching input/output dims");
  Workspace ws;
  Eigen::VectorXd y;
  net.forward(x, y, ws);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.param_count());
  Tangent t;
  Eigen::VectorXd dir = Eigen::VectorXd::Zero(net.input_dim());
  Eigen::VectorXd dy;
  for (int j = 0; j < net.input_dim(); ++j) {
    dir(j) = 1.0;
    net.jvp(ws, dir, dy, t);
    net.grad_of_jvp(ws, t, dir, grad);
    dir(j) = 0.0;
  }
  return grad;
}

Eigen::VectorXd param_grad_of_quadratic_form(const MlpNet& net,
                                             const Eigen::VectorXd& x,
                                             const Eigen::VectorXd& dir) {
  if (net.input_dim() != net.output_dim())
    throw UsageError("quadratic form needs matching input/output dims");
  Workspace ws;
  Eigen::VectorXd y;
  net.forward(x, y, ws);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.param_count());
  Tangent t;
  Eigen::VectorXd dy;
  net.jvp(ws, dir, dy, t);
  net.grad_of_jvp(ws, t, dir, grad);
  return grad;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
               AdamState& state, double lr) {
  if (grad.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw UsageError("adam_step size mismatch");
  if (!(lr > 0.0)) throw UsageError("adam_step needs lr > 0");
  if (!grad.allFinite())
    throw DivergenceError("adam_step: non-finite gradient");
  state.step += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v.array() =
      state.beta2 * state.v.array() + (1.0 - state.beta2) * grad.array().square();
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  params.array() -=
      lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + state.eps);
  if (!params.allFinite())
    throw DivergenceError("adam_step produced non-finite parameters");
}

namespace {

const char* act_name(Act a) { return a == Act::Tanh ? "tanh" : "identity"; }

Act act_from_name(const std::string& s) {
  if (s == "tanh") return Act::Tanh;
  if (s == "identity") return Act::Identity;
  throw IoError("unknown activation: " + s);
}

}  // namespace

nlohmann::json net_to_json(const MlpNet& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& s : net.layers())
    layers.push_back({{"in", s.in}, {"out", s.out}, {"act", act_name(s.act)}});
  nlohmann::json j;
  j["layers"] = layers;
  j["head"] = net.head() == HeadMap::Softplus ? "softplus" : "identity";
  j["params"] = std::vector<double>(net.params().data(),
                                    net.params().data() + net.param_count());
  return j;
}

MlpNet net_from_json(const nlohmann::json& j) {
  std::vector<LayerSpec> specs;
  for (const auto& lj : j.at("layers"))
    specs.push_back({lj.at("in").get<int>(), lj.at("out").get<int>(),
                     act_from_name(lj.at("act").get<std::string>())});
  const HeadMap head = j.at("head").get<std::string>() == "softplus"
                           ? HeadMap::Softplus
                           : HeadMap::Identity;
  MlpNet net(std::move(specs), head);
  const auto vals = j.at("params").get<std::vector<double>>();
  if (static_cast<int>(vals.size()) != net.param_count())
    throw IoError("checkpoint parameter count mismatch");
  net.params() = Eigen::Map<const Eigen::VectorXd>(
      vals.data(), static_cast<long>(vals.size()));
  return net;
}

nlohmann::json adam_to_json(const AdamState& st) {
  nlohmann::json j;
  j["m"] = std::vector<double>(st.m.data(), st.m.data() + st.m.size());
  j["v"] = std::vector<double>(st.v.data(), st.v.data() + st.v.size());
  j["step"] = st.step;
  j["beta1"] = st.beta1;
  j["beta2"] = st.beta2;
  j["eps"] = st.eps;
  return j;
}

AdamState adam_from_json(const nlohmann::json& j) {
  const auto m = j.at("m").get<std::vector<double>>();
  const auto v = j.at("v").get<std::vector<double>>();
  if (m.size() != v.size()) throw IoError("optimizer state size mismatch");
  AdamState st(static_cast<int>(m.size()));
  st.m = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<long>(m.size()));
  st.v = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
  st.step = j.at("step").get<long>();
  st.beta1 = j.at("beta1").get<double>();
  st.beta2 = j.at("beta2").get<double>();
  st.eps = j.at("eps").get<double>();
  return st;
}

nlohmann::json net_checkpoint_to_json(const MlpNet& net, const AdamState& st) {
  nlohmann::json j;
  j["net"] = net_to_json(net);
  j["optimizer"] = adam_to_json(st);
  return j;
}

void net_checkpoint_from_json(const nlohmann::json& j, MlpNet& net,
                              AdamState& st) {
  net = net_from_json(j.at("net"));
  st = adam_from_json(j.at("optimizer"));
  if (st.m.size() != net.param_count())
    throw IoError("optimizer state does not match network");
}

}  // namespace mfcg
