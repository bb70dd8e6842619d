#pragma once

#include <stdexcept>
#include <string>

namespace mfcg {

// caller passed something structurally wrong (bad dimension, bad config)
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// numerics blew up (non-finite update, runaway Langevin particle)
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what, long step = -1)
      : std::runtime_error(what), step(step) {}
  long step;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mfcg
