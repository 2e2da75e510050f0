#pragma once
// Online prediction for one viewer: before predicting frame t+1, fine-tune on
// the frames seen so far (stage I), then roll the network along the known
// history and step from the current position (stage II).

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dhp/metrics.hpp"
#include "dhp/net.hpp"
#include "dhp/pandata.hpp"
#include "dhp/reward.hpp"
#include "json.hpp"

namespace dhp {

struct OnlineConfig {
  int episodes = 30;          // E, cap per frame
  double th_mo = 0.7;         // early stop once the episode's mean MO exceeds this
  bool use_offline_init = true;
  bool use_gt_history = true;
  double lr = 1e-4;
  double rms_decay = 0.99;
  double rms_eps = 0.1;
  double epsilon = 0.1;
  double gamma = 0.99;
  double entropy_beta = 0.01;
  double value_coef = 0.5;
  double magnitude_coef = 1.0;
  double grad_clip = 40.0;
  double nu_max = 10.0;       // for fresh parameters and baseline 2
  MoResolution train_mo{64, 32};
  MoResolution eval_mo{512, 256};
  std::uint64_t seed = 1;
  RewardParams reward;

  void validate() const;
};

struct OnlineParams {
  net::Params<float> params;
  net::RmsProp<float> optimizer;
};

// Fresh parameters or the offline checkpoint, per config.use_offline_init.
OnlineParams initial_online_params(const OnlineConfig& cfg, const net::Params<float>* offline);

struct StageReport {
  int episodes = 0;
  bool early_stopped = false;
  std::vector<double> episode_mean_mo;
};

// Stage I with frames 0..t and viewer positions 0..t (t >= 1): episodes replay
// steps 0..t-1 from (0, 0) with a zeroed LSTM, scored against the single viewer.
StageReport online_train_step(std::span<const Frame> frames, std::span<const GeoPos> positions, OnlineParams& state,
                              const OnlineConfig& cfg, std::uint64_t seed);

// Stage II: roll the LSTM along observations at positions 0..t, take the
// greedy direction and the magnitude at frame t, step from positions[t].
GeoPos online_predict_step(std::span<const Frame> frames, std::span<const GeoPos> positions,
                           const net::Params<float>& params);

struct OnlineFrameLog {
  int frame = 0;                 // frame being predicted
  std::string position_source;   // "ground_truth" or "predicted"
  StageReport stage;
  GeoPos history_tail;           // last history position fed to stage II
  GeoPos prediction;
  double mo = 0.0;

  nlohmann::json to_json() const;
};

struct OnlineRun {
  std::vector<GeoPos> predicted;  // for frames 1..T-1
  std::vector<double> mo;         // against the viewer at the same frames
  std::vector<OnlineFrameLog> log;
  double mean_mo() const;
};

// Alternates stage I and stage II over the whole trace.
OnlineRun run_online(std::span<const Frame> frames, std::span<const GeoPos> trace, const OnlineConfig& cfg,
                     const net::Params<float>* offline);

// Repeats the last step; a single known position or a stationary last step
// predicts no motion.
GeoPos baseline1(std::span<const GeoPos> prefix);

// Uniform direction in [0, 360), uniform magnitude in [0, nu_max].
ScanpathStep baseline2(std::mt19937_64& rng, double nu_max);

// Baselines run over a trace with the same frame alignment as run_online.
OnlineRun run_baseline1(std::span<const GeoPos> trace, MoResolution res);
OnlineRun run_baseline2(std::span<const GeoPos> trace, double nu_max, std::uint64_t seed, MoResolution res);

}  // namespace dhp
