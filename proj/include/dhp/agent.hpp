#pragma once
// One workflow: observe the viewport at the current predicted position, run
// the network, pick a direction and magnitude, score the step against the
// recorded viewers, and move.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "dhp/net.hpp"
#include "dhp/pandata.hpp"
#include "dhp/reward.hpp"

namespace dhp {

// Action k heads along bearing 45*k degrees.
Bearing action_bearing(int action);
// Nearest of the 8 action bearings; exact ties go to the smaller bearing.
int nearest_action(Bearing dir);

// With probability epsilon uniform over the 8 actions, otherwise categorical
// over `policy`.
int sample_direction(std::span<const float> policy, double epsilon, std::mt19937_64& rng);
int greedy_direction(std::span<const float> policy);

// Per-step ground truth: entry t holds every viewer's position at frame t and
// step from frame t to t+1. Traces must share one length.
using GroundTruthSeq = std::vector<std::vector<GroundTruthEntry>>;
GroundTruthSeq ground_truth_sequence(std::span<const HMTrace> traces);

struct ExperienceStep {
  int frame = 0;
  GeoPos position;                 // where the observation was taken
  Observation obs;
  net::LstmState<float> prev_state;
  int action = 0;
  Bearing action_dir;
  ArcLen action_mag;
  double r_alpha = 0.0;
  double r_nu = 0.0;
  std::array<float, net::kDirections> policy{};
  float value = 0.0f;
};

struct EpisodeTape {
  std::vector<ExperienceStep> steps;
  std::vector<net::StepCache<float>> caches;  // parallel to steps when recorded
  bool terminal = false;
};

struct EpisodeOptions {
  double epsilon = 0.0;
  bool greedy = false;          // argmax instead of sampling
  bool record_caches = true;    // needed for backward
  std::uint64_t seed = 0;
  GeoPos start{0.0, 0.0};
  RewardParams reward;
  // Replaces the network's action at a step when it returns a value.
  std::function<std::optional<ScanpathStep>(int step)> forced;
};

struct EpisodeResult {
  EpisodeTape tape;
  std::vector<GeoPos> positions;  // one per frame: start, then after each step
};

// Runs frames.size()-1 steps. `gt` is either empty (no rewards are scored) or
// holds exactly frames.size()-1 non-empty entries.
EpisodeResult run_episode(std::span<const Frame> frames, std::span<const std::vector<GroundTruthEntry>> gt,
                          const net::Params<float>& params, const EpisodeOptions& opts);

}  // namespace dhp
