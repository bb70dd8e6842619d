#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "mfcg/rng.hpp"

namespace mfcg {

enum class Act { Tanh, Identity };

// optional map applied to a scalar output; Softplus is floored so a policy
// standard deviation can never collapse to zero
enum class HeadMap { Identity, Softplus };

inline constexpr double kSoftplusFloor = 1e-4;

struct LayerSpec {
  int in = 0;
  int out = 0;
  Act act = Act::Identity;
};

// Per-evaluation scratch: preactivations and activations of every layer.
// Reusable across calls; sized lazily by forward().
struct Workspace {
  Eigen::VectorXd input;
  std::vector<Eigen::VectorXd> z;  // preactivation per layer
  std::vector<Eigen::VectorXd> a;  // activation per layer
  double head_in = 0.0;            // scalar entering the head map
  double head_out = 0.0;
};

// Tangent counterpart of Workspace for forward-mode passes.
struct Tangent {
  Eigen::VectorXd dinput;
  std::vector<Eigen::VectorXd> dz;
  std::vector<Eigen::VectorXd> da;
  double dhead_out = 0.0;
};

// Dense feed-forward network over a flat parameter vector.
//
// Layout: per layer, the weight matrix row-major (out x in) followed by the
// bias. Three differentiation modes are provided:
//   - backward():      d(upstream . y)/dtheta, reverse mode
//   - jvp():           (dy/dx) . dir, forward mode
//   - grad_of_jvp():   d(upstream . jvp)/dtheta, reverse over forward —
//                      the exact gradient of divergence-type terms
// All accumulation runs in a fixed left-to-right order, so repeated calls
// are bitwise identical.
class MlpNet {
 public:
  MlpNet(std::vector<LayerSpec> layers, HeadMap head = HeadMap::Identity);

  // tanh hidden layers, identity output layer
  static MlpNet mlp(int input, const std::vector<int>& hidden, int output,
                    HeadMap head = HeadMap::Identity);

  int input_dim() const { return layers_.front().in; }
  int output_dim() const { return layers_.back().out; }
  int param_count() const { return static_cast<int>(params_.size()); }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  HeadMap head() const { return head_; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  // Glorot-uniform weights, zero biases
  void init_params(rng::Stream& rs);

  // y = f(x); fills ws for use by the gradient passes
  void forward(const Eigen::VectorXd& x, Eigen::VectorXd& y,
               Workspace& ws) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  // accumulate d(upstream . y)/dtheta into grad; optional input gradient
  void backward(const Workspace& ws, const Eigen::VectorXd& upstream,
                Eigen::Ref<Eigen::VectorXd> grad,
                Eigen::VectorXd* input_grad = nullptr) const;

  // tangent of y along dir, reusing a forward() workspace
  void jvp(const Workspace& ws, const Eigen::VectorXd& dir,
           Eigen::VectorXd& dy, Tangent& t) const;

  // accumulate d(upstream . jvp)/dtheta into grad; ws/t from forward()+jvp()
  void grad_of_jvp(const Workspace& ws, const Tangent& t,
                   const Eigen::VectorXd& upstream,
                   Eigen::Ref<Eigen::VectorXd> grad) const;

  // full Jacobian dy/dx as an input_dim x output_dim matrix
  Eigen::MatrixXd input_jacobian(const Eigen::VectorXd& x) const;

  // scalar-in scalar-out conveniences for the d=1 pipeline
  double value1(double x, Workspace& ws) const;
  double value1(double x) const;

  std::size_t weight_offset(int layer) const { return w_off_[layer]; }
  std::size_t bias_offset(int layer) const { return b_off_[layer]; }

 private:
  void check_input(const Eigen::VectorXd& x) const;

  std::vector<LayerSpec> layers_;
  HeadMap head_;
  std::vector<std::size_t> w_off_, b_off_;
  Eigen::VectorXd params_;
};

// named operations over a net, matching how the training code consumes them

// d(upstream . f(x))/dtheta as a fresh flat vector
Eigen::VectorXd param_grad(const MlpNet& net, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& upstream);

// dy/dx (input_dim x output_dim)
Eigen::MatrixXd input_derivative(const MlpNet& net, const Eigen::VectorXd& x);

// gradient over theta of tr(df/dx); requires input_dim == output_dim
Eigen::VectorXd param_grad_of_input_derivative(const MlpNet& net,
                                               const Eigen::VectorXd& x);

// gradient over theta of dir . (df/dx) . dir (Hutchinson quadratic form)
Eigen::VectorXd param_grad_of_quadratic_form(const MlpNet& net,
                                             const Eigen::VectorXd& x,
                                             const Eigen::VectorXd& dir);

struct AdamState {
  Eigen::VectorXd m, v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(int n)
      : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

// standard Adam with bias correction; throws on non-finite gradients
// (parameters untouched) and on a non-finite update result
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
               AdamState& state, double lr);

// checkpoint wire format: {architecture, flat params, optimizer state}
nlohmann::json net_to_json(const MlpNet& net);
MlpNet net_from_json(const nlohmann::json& j);
nlohmann::json adam_to_json(const AdamState& st);
AdamState adam_from_json(const nlohmann::json& j);
nlohmann::json net_checkpoint_to_json(const MlpNet& net, const AdamState& st);
void net_checkpoint_from_json(const nlohmann::json& j, MlpNet& net,
                              AdamState& st);

// vectorized tanh built on exp; |err| < 4e-16 over the full range
inline void tanh_inplace(Eigen::VectorXd& v) {
  v.array() = 1.0 - 2.0 / ((2.0 * v.array()).exp() + 1.0);
}

}  // namespace mfcg
