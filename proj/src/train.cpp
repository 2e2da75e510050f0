#include "dhp/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include "dhp/error.hpp"

namespace dhp {

void TrainConfig::validate() const {
  if (workers < 1) throw InputError("train: workers must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("train: gamma must be in [0, 1)");
  if (!(lr > 0.0)) throw InputError("train: lr must be positive");
  if (!(rms_decay > 0.0 && rms_decay < 1.0)) throw InputError("train: rms_decay must be in (0, 1)");
  if (!(rms_eps > 0.0)) throw InputError("train: rms_eps must be positive");
  if (!(entropy_beta >= 0.0)) throw InputError("train: entropy_beta must be >= 0");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InputError("train: epsilon must be in [0, 1]");
  if (!(nu_max > 0.0)) throw InputError("train: nu_max must be positive");
  if (!(value_coef >= 0.0) || !(magnitude_coef >= 0.0)) throw InputError("train: loss weights must be >= 0");
  if (!(grad_clip >= 0.0)) throw InputError("train: grad_clip must be >= 0");
  if (max_episodes < 0 || max_steps < 0 || checkpoint_every < 0) throw InputError("train: counts must be >= 0");
  if (!(max_seconds >= 0.0)) throw InputError("train: max_seconds must be >= 0");
  if (frame_stride < 1) throw InputError("train: frame_stride must be >= 1");
  reward.validate();
}

TrainingVideo make_training_video(const VideoData& data, int stride, int max_steps) {
  if (stride < 1) throw InputError("frame stride must be >= 1");
  TrainingVideo v;
  v.video_id = data.video.video_id;
  std::vector<std::size_t> keep;
  for (std::size_t t = 0; t < data.video.frames.size(); t += std::size_t(stride)) {
    if (max_steps > 0 && keep.size() == std::size_t(max_steps) + 1) break;
    keep.push_back(t);
  }
  if (keep.size() < 2) throw InputError(v.video_id + ": fewer than two frames after striding");
  for (std::size_t t : keep) v.frames.push_back(data.video.frames[t]);
  for (const HMTrace& tr : data.traces) {
    HMTrace s{tr.video_id, tr.subject_id, {}};
    for (std::size_t t : keep) s.positions.push_back(tr.positions.at(t));
    v.traces.push_back(std::move(s));
  }
  v.gt = ground_truth_sequence(v.traces);
  return v;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    acc = rewards[t] + gamma * acc;
    g[t] = acc;
  }
  return g;
}

GlobalStore::GlobalStore(net::Params<float> init, net::RmsProp<float> optimizer)
    : current_(std::make_shared<const net::Params<float>>(std::move(init))), optimizer_(std::move(optimizer)) {}

std::shared_ptr<const net::Params<float>> GlobalStore::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return current_;
}

std::uint64_t GlobalStore::apply(const net::Params<float>& grads) {
  std::lock_guard lock(apply_mutex_);
  auto next = std::make_shared<net::Params<float>>(*snapshot());
  optimizer_.apply(*next, grads);
  {
    std::lock_guard slock(snapshot_mutex_);
    current_ = std::move(next);
  }
  return ++updates_;
}

std::uint64_t GlobalStore::updates() const {
  std::lock_guard lock(apply_mutex_);
  return updates_;
}

std::vector<net::StepTarget> drl_targets(const EpisodeTape& tape, std::span<const std::vector<GroundTruthEntry>> gt,
                                         const TrainConfig& cfg) {
  if (gt.size() < tape.steps.size()) throw InputError("drl_targets: ground truth shorter than the tape");
  std::vector<double> r(tape.steps.size());
  for (std::size_t t = 0; t < r.size(); ++t) r[t] = tape.steps[t].r_alpha;
  const auto returns = discounted_returns(r, cfg.gamma);
  std::vector<net::StepTarget> targets(tape.steps.size());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const ExperienceStep& e = tape.steps[t];
    net::StepTarget& tg = targets[t];
    tg.action = e.action;
    tg.advantage = returns[t] - double(e.value);
    tg.value_target = returns[t];
    tg.value_coef = cfg.value_coef;
    tg.entropy_coef = cfg.entropy_beta;
    tg.magnitude_coef = cfg.magnitude_coef;
    tg.magnitude_objective = [pos = e.position, dir = e.action_dir, g = gt[t], rp = cfg.reward](double nu) {
      const ScanpathStep step(dir, ArcLen(std::max(nu, 0.0)));
      return net::ScalarObjective{reward_nu(pos, step, g, rp), grad_reward_nu_wrt_mag(pos, step, g, rp)};
    };
  }
  return targets;
}

void clip_gradients(net::Params<float>& grads, double max_norm) {
  if (max_norm <= 0.0) return;
  const double n = net::grad_norm(grads);
  if (!std::isfinite(n)) throw NumericError("non-finite gradient norm");
  if (n <= max_norm) return;
  const float s = float(max_norm / n);
  for (float& v : grads.data) v *= s;
}

nlohmann::json EpisodeLog::to_json() const {
  nlohmann::json j{{"worker", worker},         {"episode", episode},         {"video_id", video_id},
                   {"mean_r_alpha", mean_r_alpha}, {"mean_r_nu", mean_r_nu}, {"value_loss", value_loss},
                   {"steps", steps},           {"wallclock", wallclock},     {"update", update}};
  if (extra.is_object())
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

std::uint64_t episode_seed(std::uint64_t base, int worker, int episode) {
  std::seed_seq seq{std::uint32_t(base), std::uint32_t(base >> 32), std::uint32_t(worker), std::uint32_t(episode)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (std::uint64_t(out[0]) << 32) | out[1];
}

namespace {

// Runs one episode for `worker`'s `local`-th turn on `snap`, fills `grads`,
// returns the log entry (without timing and update fields).
using EpisodeFn = std::function<EpisodeLog(int worker, int local, const net::Params<float>& snap,
                                           net::Params<float>& grads)>;

TrainResult run_workers(std::span<const TrainingVideo> videos, const TrainConfig& cfg, const TrainHooks& hooks,
                        const net::Params<float>* init, const EpisodeFn& episode) {
  cfg.validate();
  if (videos.empty()) throw InputError("train: empty training set");
  net::Params<float> start = init ? *init : net::init_params<float>(cfg.seed, cfg.nu_max);
  if (start.data.size() != net::param_count()) throw InputError("train: initial parameters have the wrong size");
  net::RmsProp<float> opt;
  opt.lr = cfg.lr;
  opt.decay = cfg.rms_decay;
  opt.eps = cfg.rms_eps;
  GlobalStore store(std::move(start), opt);

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  std::atomic<int> claimed{0};
  std::atomic<bool> stop{false};
  std::mutex log_mutex;
  std::exception_ptr failure;
  TrainResult result;

  auto worker_loop = [&](int w) {
    try {
      for (int local = 0; !stop.load(); ++local) {
        if (cfg.max_seconds > 0.0 && elapsed() >= cfg.max_seconds) break;
        const int e = claimed.fetch_add(1);
        if (e >= cfg.max_episodes) break;
        const auto snap = store.snapshot();
        net::Params<float> grads;
        EpisodeLog log = episode(w, local, *snap, grads);
        clip_gradients(grads, cfg.grad_clip);
        const std::uint64_t update = store.apply(grads);
        log.worker = w;
        log.episode = e;
        log.update = update;
        log.wallclock = elapsed();
        std::lock_guard lock(log_mutex);
        result.log.push_back(log);
        if (hooks.on_episode) hooks.on_episode(log);
        if (hooks.on_checkpoint && cfg.checkpoint_every > 0 && update % std::uint64_t(cfg.checkpoint_every) == 0)
          hooks.on_checkpoint(*store.snapshot(), update);
      }
    } catch (...) {
      std::lock_guard lock(log_mutex);
      if (!failure) failure = std::current_exception();
      stop = true;
    }
  };

  if (cfg.workers == 1) {
    worker_loop(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < cfg.workers; ++w) threads.emplace_back(worker_loop, w);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  result.params = *store.snapshot();
  result.updates = store.updates();
  for (float v : result.params.data)
    if (!std::isfinite(v)) throw NumericError("train: parameters became non-finite");
  return result;
}

const TrainingVideo& assigned_video(std::span<const TrainingVideo> videos, const TrainConfig& cfg, int worker,
                                    int local) {
  const std::size_t k = std::size_t(worker) + std::size_t(local) * std::size_t(cfg.workers);
  return videos[k % videos.size()];
}

}  // namespace

TrainResult train_offline(std::span<const TrainingVideo> videos, const TrainConfig& cfg, const TrainHooks& hooks,
                          const net::Params<float>* init) {
  auto episode = [&](int w, int local, const net::Params<float>& snap, net::Params<float>& grads) {
    const TrainingVideo& vid = assigned_video(videos, cfg, w, local);
    EpisodeOptions opts;
    opts.epsilon = cfg.epsilon;
    opts.seed = episode_seed(cfg.seed, w, local);
    opts.reward = cfg.reward;
    EpisodeResult res = run_episode(vid.frames, vid.gt, snap, opts);
    const auto targets = drl_targets(res.tape, vid.gt, cfg);
    grads = net::backward<float>(snap, res.tape.caches, targets);

    EpisodeLog log;
    log.video_id = vid.video_id;
    log.steps = int(res.tape.steps.size());
    for (std::size_t t = 0; t < res.tape.steps.size(); ++t) {
      const ExperienceStep& e = res.tape.steps[t];
      log.mean_r_alpha += e.r_alpha;
      log.mean_r_nu += e.r_nu;
      const double d = targets[t].value_target - double(e.value);
      log.value_loss += d * d;
    }
    const double n = std::max(1, log.steps);
    log.mean_r_alpha /= n;
    log.mean_r_nu /= n;
    log.value_loss /= n;
    double mag = 0.0;
    for (const auto& e : res.tape.steps) mag += e.action_mag.deg();
    log.extra = {{"mean_magnitude", mag / n}};
    return log;
  };
  return run_workers(videos, cfg, hooks, init, episode);
}

namespace {

struct SupervisedPass {
  std::vector<net::StepCache<float>> caches;
  std::vector<net::StepTarget> targets;
  double ce = 0.0;
  double mse = 0.0;
  double accuracy = 0.0;
};

SupervisedPass supervised_pass(const net::Params<float>& params, const TrainingVideo& video, std::size_t subject,
                               bool with_targets) {
  if (subject >= video.traces.size()) throw InputError("supervised: subject index out of range");
  const HMTrace& tr = video.traces[subject];
  const auto steps = derive_scanpath(tr);
  const std::size_t T = steps.size();
  SupervisedPass pass;
  pass.caches.resize(T);
  if (with_targets) pass.targets.resize(T);
  net::LstmState<float> state;
  for (std::size_t t = 0; t < T; ++t) {
    const Observation obs = extract_fov(video.frames[t], tr.positions[t]);
    const auto out = net::forward(params, obs, state, &pass.caches[t]);
    state = out.next;
    const int a = nearest_action(steps[t].dir);
    const double nu = steps[t].mag.deg();
    pass.ce -= std::log(std::max(double(out.policy[a]), 1e-300));
    const double dm = double(out.magnitude) - nu;
    pass.mse += dm * dm;
    pass.accuracy += greedy_direction(out.policy) == a ? 1.0 : 0.0;
    if (with_targets) {
      net::StepTarget& tg = pass.targets[t];
      tg.action = a;
      tg.advantage = 1.0 / double(T);
      tg.magnitude_coef = 1.0;
      tg.magnitude_objective = [nu, T](double v) {
        const double d = v - nu;
        return net::ScalarObjective{-d * d / double(T), -2.0 * d / double(T)};
      };
    }
  }
  pass.ce /= double(T);
  pass.mse /= double(T);
  pass.accuracy /= double(T);
  return pass;
}

}  // namespace

double supervised_loss(const net::Params<float>& params, const TrainingVideo& video, std::size_t subject) {
  const SupervisedPass pass = supervised_pass(params, video, subject, false);
  return pass.ce + pass.mse;
}

TrainResult train_supervised(std::span<const TrainingVideo> videos, const TrainConfig& cfg, const TrainHooks& hooks,
                             const net::Params<float>* init) {
  auto episode = [&](int w, int local, const net::Params<float>& snap, net::Params<float>& grads) {
    const TrainingVideo& vid = assigned_video(videos, cfg, w, local);
    const std::size_t k = std::size_t(w) + std::size_t(local) * std::size_t(cfg.workers);
    const std::size_t subject = (k / videos.size()) % vid.traces.size();
    SupervisedPass pass = supervised_pass(snap, vid, subject, true);
    grads = net::backward<float>(snap, pass.caches, pass.targets);
    EpisodeLog log;
    log.video_id = vid.video_id;
    log.steps = int(pass.caches.size());
    log.extra = {{"subject_id", vid.traces[subject].subject_id},
                 {"cross_entropy", pass.ce},
                 {"magnitude_mse", pass.mse},
                 {"direction_accuracy", pass.accuracy}};
    return log;
  };
  return run_workers(videos, cfg, hooks, init, episode);
}

}  // namespace dhp
