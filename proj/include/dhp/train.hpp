#pragma once
// Offline training: W workers run episodes on snapshots of a shared parameter
// store and submit whole-episode gradients, which the store applies one at a
// time with RMSProp. Also the supervised baseline trainer, which shares the
// network and the worker machinery but fits directions by cross-entropy and
// magnitudes by squared error along the recorded viewer paths.

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "dhp/agent.hpp"
#include "dhp/net.hpp"
#include "dhp/pandata_io.hpp"
#include "dhp/reward.hpp"
#include "json.hpp"

namespace dhp {

struct TrainConfig {
  int workers = 1;
  double gamma = 0.99;
  double lr = 1e-4;
  double rms_decay = 0.99;
  double rms_eps = 0.1;
  double entropy_beta = 0.01;
  double epsilon = 0.1;
  double nu_max = 10.0;
  double value_coef = 0.5;
  double magnitude_coef = 1.0;
  double grad_clip = 40.0;      // global-norm clip before submission; 0 disables
  int max_episodes = 1000;      // total over all workers
  double max_seconds = 0.0;     // wallclock budget; 0 means none
  int max_steps = 0;            // per-episode step cap; 0 means the whole video
  int frame_stride = 1;         // act on every stride-th frame
  int checkpoint_every = 0;     // updates between periodic checkpoints; 0 disables
  std::uint64_t seed = 1;
  RewardParams reward;

  void validate() const;
};

// A video prepared for episodes: strided frames and the matching per-step
// ground truth of all its viewers.
struct TrainingVideo {
  std::string video_id;
  std::vector<Frame> frames;
  GroundTruthSeq gt;
  std::vector<HMTrace> traces;  // strided as well
};

TrainingVideo make_training_video(const VideoData& data, int stride = 1, int max_steps = 0);

// G_t = r_t + gamma * G_{t+1}, with G after the last step equal to 0.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);

class GlobalStore {
 public:
  GlobalStore(net::Params<float> init, net::RmsProp<float> optimizer);

  // Complete, immutable parameter set; never torn by concurrent updates.
  std::shared_ptr<const net::Params<float>> snapshot() const;

  // One RMSProp step. Returns the update count after applying. Throws
  // NumericError on non-finite gradients, leaving the store unchanged.
  std::uint64_t apply(const net::Params<float>& grads);

  std::uint64_t updates() const;

 private:
  mutable std::mutex apply_mutex_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const net::Params<float>> current_;
  net::RmsProp<float> optimizer_;
  std::uint64_t updates_ = 0;
};

// Loss terms of a recorded DRL episode: value regression onto the discounted
// direction returns, advantage-weighted log-likelihood of the taken actions,
// entropy bonus, and the magnitude reward itself.
std::vector<net::StepTarget> drl_targets(const EpisodeTape& tape, std::span<const std::vector<GroundTruthEntry>> gt,
                                         const TrainConfig& cfg);

// Scales grads in place so their global norm is at most max_norm.
void clip_gradients(net::Params<float>& grads, double max_norm);

struct EpisodeLog {
  int worker = 0;
  int episode = 0;  // global claim order
  std::string video_id;
  double mean_r_alpha = 0.0;
  double mean_r_nu = 0.0;
  double value_loss = 0.0;
  int steps = 0;
  double wallclock = 0.0;  // seconds since training started
  std::uint64_t update = 0;
  nlohmann::json extra;  // trainer-specific fields

  nlohmann::json to_json() const;
};

struct TrainHooks {
  std::function<void(const EpisodeLog&)> on_episode;
  std::function<void(const net::Params<float>&, std::uint64_t update)> on_checkpoint;
};

struct TrainResult {
  net::Params<float> params;
  std::vector<EpisodeLog> log;  // in completion order
  std::uint64_t updates = 0;
};

TrainResult train_offline(std::span<const TrainingVideo> videos, const TrainConfig& cfg,
                          const TrainHooks& hooks = {}, const net::Params<float>* init = nullptr);

// Mean cross-entropy plus mean squared magnitude error of one viewer's path,
// with observations taken at the recorded positions.
double supervised_loss(const net::Params<float>& params, const TrainingVideo& video, std::size_t subject);

TrainResult train_supervised(std::span<const TrainingVideo> videos, const TrainConfig& cfg,
                             const TrainHooks& hooks = {}, const net::Params<float>* init = nullptr);

// Seed for (base, worker, episode), well mixed.
std::uint64_t episode_seed(std::uint64_t base, int worker, int episode);

}  // namespace dhp
