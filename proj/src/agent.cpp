#include "dhp/agent.hpp"

#include <algorithm>
#include <cmath>

#include "dhp/error.hpp"

namespace dhp {

Bearing action_bearing(int action) {
  if (action < 0 || action >= net::kDirections) throw InputError("action index out of range");
  return Bearing(45.0 * action);
}

int nearest_action(Bearing dir) {
  int best = 0;
  double best_d = 1e9;
  for (int k = 0; k < net::kDirections; ++k) {
    const double d = phase_diff(dir, action_bearing(k));
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

int greedy_direction(std::span<const float> policy) {
  return int(std::max_element(policy.begin(), policy.end()) - policy.begin());
}

int sample_direction(std::span<const float> policy, double epsilon, std::mt19937_64& rng) {
  if (policy.size() != std::size_t(net::kDirections)) throw InputError("policy must have 8 entries");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (epsilon > 0.0 && u(rng) < epsilon)
    return std::uniform_int_distribution<int>(0, net::kDirections - 1)(rng);
  double total = 0.0;
  for (float p : policy) total += p;
  const double x = u(rng) * total;
  double acc = 0.0;
  for (int k = 0; k < net::kDirections; ++k) {
    acc += policy[k];
    if (x < acc) return k;
  }
  for (int k = net::kDirections - 1; k >= 0; --k)
    if (policy[k] > 0.0f) return k;
  return net::kDirections - 1;
}

GroundTruthSeq ground_truth_sequence(std::span<const HMTrace> traces) {
  if (traces.empty()) throw InputError("no traces");
  const std::size_t n = traces.front().positions.size();
  if (n < 2) throw InputError("traces need at least two frames");
  GroundTruthSeq seq(n - 1);
  for (const HMTrace& tr : traces) {
    if (tr.positions.size() != n) throw InputError("traces of one video differ in length");
    const auto steps = derive_scanpath(tr);
    for (std::size_t t = 0; t + 1 < n; ++t) seq[t].push_back({tr.positions[t], steps[t]});
  }
  return seq;
}

EpisodeResult run_episode(std::span<const Frame> frames, std::span<const std::vector<GroundTruthEntry>> gt,
                          const net::Params<float>& params, const EpisodeOptions& opts) {
  if (frames.size() < 2) throw InputError("episode needs at least two frames");
  const std::size_t steps = frames.size() - 1;
  if (!gt.empty() && gt.size() != steps)
    throw InputError("ground truth is not aligned with the frames");
  for (const auto& g : gt)
    if (g.empty()) throw InputError("empty ground-truth set");

  std::mt19937_64 rng(opts.seed);
  EpisodeResult res;
  res.positions.reserve(frames.size());
  res.positions.push_back(opts.start);
  res.tape.steps.resize(steps);
  if (opts.record_caches) res.tape.caches.resize(steps);

  net::LstmState<float> state;
  GeoPos pos = opts.start;
  for (std::size_t t = 0; t < steps; ++t) {
    ExperienceStep& e = res.tape.steps[t];
    e.frame = int(t);
    e.position = pos;
    e.obs = extract_fov(frames[t], pos);
    e.prev_state = state;
    const auto out = net::forward(params, e.obs, state,
                                  opts.record_caches ? &res.tape.caches[t] : nullptr);
    e.policy = out.policy;
    e.value = out.value;

    const std::optional<ScanpathStep> forced = opts.forced ? opts.forced(int(t)) : std::nullopt;
    if (forced) {
      e.action = nearest_action(forced->dir);
      e.action_dir = forced->dir;
      e.action_mag = forced->mag;
    } else {
      e.action = opts.greedy ? greedy_direction(out.policy) : sample_direction(out.policy, opts.epsilon, rng);
      e.action_dir = action_bearing(e.action);
      e.action_mag = ArcLen(std::clamp(double(out.magnitude), 0.0, params.nu_max));
    }
    if (!gt.empty()) {
      e.r_alpha = reward_alpha(pos, e.action_dir, gt[t], opts.reward);
      e.r_nu = reward_nu(pos, ScanpathStep(e.action_dir, e.action_mag), gt[t], opts.reward);
    }
    pos = geodesic_step(pos, e.action_dir, e.action_mag);
    res.positions.push_back(pos);
    state = out.next;
  }
  res.tape.terminal = true;
  return res;
}

}  // namespace dhp
