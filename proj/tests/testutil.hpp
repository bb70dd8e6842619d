#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "mfcg/net.hpp"
#include "mfcg/rng.hpp"

namespace testutil {

// central finite differences of a scalar function over a parameter vector
inline Eigen::VectorXd fd_grad(const std::function<double()>& f,
                               Eigen::VectorXd& params, double h) {
  Eigen::VectorXd g(params.size());
  for (long i = 0; i < params.size(); ++i) {
    const double saved = params(i);
    params(i) = saved + h;
    const double fp = f();
    params(i) = saved - h;
    const double fm = f();
    params(i) = saved;
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

// coordinate-wise relative comparison with a scale floor tied to the
// gradient's own magnitude
inline double max_rel_err(const Eigen::VectorXd& got,
                          const Eigen::VectorXd& want) {
  const double scale_floor =
      std::max(1e-10, 1e-2 * want.cwiseAbs().maxCoeff());
  double worst = 0.0;
  for (long i = 0; i < got.size(); ++i) {
    const double scale =
        std::max({std::abs(got(i)), std::abs(want(i)), scale_floor});
    worst = std::max(worst, std::abs(got(i) - want(i)) / scale);
  }
  return worst;
}

inline mfcg::MlpNet random_net(int input, std::vector<int> hidden, int output,
                               std::uint64_t seed,
                               mfcg::HeadMap head = mfcg::HeadMap::Identity) {
  mfcg::MlpNet net = mfcg::MlpNet::mlp(input, hidden, output, head);
  mfcg::rng::Stream rs(seed);
  net.init_params(rs);
  return net;
}

inline Eigen::VectorXd random_vec(long n, std::uint64_t seed,
                                  double scale = 1.0) {
  mfcg::rng::Stream rs(seed);
  Eigen::VectorXd v(n);
  for (long i = 0; i < n; ++i) v(i) = scale * rs.next_normal();
  return v;
}

}  // namespace testutil
