#pragma once

#include <Eigen/Core>

#include "extragrad/rng.hpp"

namespace extragrad {

/// State of a data-sampling process: the current sample w plus the RNG stream
/// that drives the next transition. Plain value type; each simulation worker
/// owns its copy.
struct KernelState {
  Eigen::VectorXd w;
  RngStream rng;
};

}  // namespace extragrad
