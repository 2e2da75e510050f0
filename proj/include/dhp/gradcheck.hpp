#pragma once
// Finite-difference check of net::backward in double precision.

#include <cstdint>
#include <string>
#include <vector>

namespace dhp::net {

struct GradcheckOptions {
  std::uint64_t seed = 1;
  int steps = 1;               // tape length
  int samples_per_tensor = 12;
  double h = 1e-4;             // central-difference step
  double tolerance = 1e-4;     // max relative error
};

struct TensorCheck {
  std::string tensor;
  int checked = 0;
  int skipped_kinks = 0;       // perturbations that flipped a ReLU
  double max_rel_error = 0.0;
};

struct GradcheckReport {
  std::vector<TensorCheck> tensors;
  double max_rel_error = 0.0;
  bool passed = false;
};

GradcheckReport run_gradcheck(const GradcheckOptions& opts);

}  // namespace dhp::net
