#include "dhp/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dhp/net.hpp"

namespace dhp::net {

namespace {

// Relative error with a small absolute floor so that near-zero entries do not
// divide by noise.
double rel_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
}

}  // namespace

GradcheckReport run_gradcheck(const GradcheckOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  Params<double> p = init_params<double>(opts.seed, 10.0);
  // Wake up the zero-initialised heads and biases so every block carries gradient.
  for (int t = 0; t < kTensorCount; ++t) {
    const auto tensor = static_cast<Tensor>(t);
    const auto& info = tensor_layout()[t];
    const bool bias = info.shape.size() == 1;
    const double scale = bias ? 0.1 : (tensor == Tensor::PolicyW || tensor == Tensor::MagnitudeW ? 0.1 : 0.0);
    if (scale > 0.0)
      for (double& v : p.tensor(tensor)) v += scale * unit(rng);
  }

  std::vector<Observation> obs(opts.steps);
  for (auto& o : obs)
    for (float& v : o.values) v = float(0.5 + 0.5 * unit(rng));

  LstmState<double> init;
  for (int j = 0; j < kHidden; ++j) {
    init.h[j] = 0.1 * unit(rng);
    init.c[j] = 0.1 * unit(rng);
  }

  std::vector<StepTarget> targets(opts.steps);
  for (auto& tg : targets) {
    tg.action = int(std::uniform_int_distribution<int>(0, kDirections - 1)(rng));
    tg.advantage = unit(rng);
    tg.value_target = unit(rng);
    tg.value_coef = 0.5;
    tg.entropy_coef = 0.05;
    tg.magnitude_coef = 1.0;
    const double centre = 5.0 + 3.0 * unit(rng);
    tg.magnitude_objective = [centre](double nu) {
      const double z = (nu - centre) / 2.0;
      const double g = std::exp(-0.5 * z * z);
      return ScalarObjective{g, -g * z / 2.0};
    };
  }

  std::vector<StepCache<double>> tape(opts.steps);
  LstmState<double> state = init;
  for (int t = 0; t < opts.steps; ++t) {
    forward(p, obs[t], state, &tape[t]);
    state = tape[t].next;
  }
  const Params<double> grad = backward<double>(p, tape, targets);

  std::vector<char> base_pattern, pattern;
  objective<double>(p, obs, init, targets, &base_pattern);

  GradcheckReport report;
  for (int t = 0; t < kTensorCount; ++t) {
    const auto& info = tensor_layout()[t];
    TensorCheck check;
    check.tensor = info.name;
    std::uniform_int_distribution<std::size_t> pick(0, info.count - 1);
    const bool exhaustive = info.count <= std::size_t(opts.samples_per_tensor);
    const int wanted = exhaustive ? int(info.count) : opts.samples_per_tensor;
    int attempts = 0;
    while (check.checked < wanted && attempts < 50 * wanted) {
      ++attempts;
      const std::size_t k = exhaustive ? std::size_t(check.checked) : pick(rng);
      double& w = p.data[info.offset + k];
      const double orig = w;
      w = orig + opts.h;
      const double lp = objective<double>(p, obs, init, targets, &pattern);
      const bool kink_p = pattern != base_pattern;
      w = orig - opts.h;
      const double lm = objective<double>(p, obs, init, targets, &pattern);
      const bool kink_m = pattern != base_pattern;
      w = orig;
      if (kink_p || kink_m) {
        ++check.skipped_kinks;
        if (exhaustive) ++check.checked;
        continue;
      }
      const double numeric = (lp - lm) / (2.0 * opts.h);
      const double err = rel_error(grad.data[info.offset + k], numeric);
      check.max_rel_error = std::max(check.max_rel_error, err);
      ++check.checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.tensors.push_back(check);
  }
  report.passed = report.max_rel_error < opts.tolerance;
  return report;
}

}  // namespace dhp::net
