#include "dhp/online.hpp"

#include <cmath>

#include "dhp/agent.hpp"
#include "dhp/error.hpp"
#include "dhp/train.hpp"

namespace dhp {

void OnlineConfig::validate() const {
  if (episodes < 1) throw InputError("online: episodes must be >= 1");
  if (!(th_mo > 0.0 && th_mo < 1.0)) throw InputError("online: th_mo must be in (0, 1)");
  if (!(lr > 0.0) || !(rms_eps > 0.0) || !(rms_decay > 0.0 && rms_decay < 1.0))
    throw InputError("online: bad optimizer settings");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InputError("online: epsilon must be in [0, 1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("online: gamma must be in [0, 1)");
  if (!(nu_max > 0.0)) throw InputError("online: nu_max must be positive");
  if (!(entropy_beta >= 0.0) || !(value_coef >= 0.0) || !(magnitude_coef >= 0.0) || !(grad_clip >= 0.0))
    throw InputError("online: loss weights must be >= 0");
  reward.validate();
}

OnlineParams initial_online_params(const OnlineConfig& cfg, const net::Params<float>* offline) {
  OnlineParams s;
  if (cfg.use_offline_init) {
    if (!offline) throw InputError("online: offline initialisation requested without a checkpoint");
    s.params = *offline;
  } else {
    s.params = net::init_params<float>(cfg.seed, cfg.nu_max);
  }
  s.optimizer.lr = cfg.lr;
  s.optimizer.decay = cfg.rms_decay;
  s.optimizer.eps = cfg.rms_eps;
  return s;
}

StageReport online_train_step(std::span<const Frame> frames, std::span<const GeoPos> positions, OnlineParams& state,
                              const OnlineConfig& cfg, std::uint64_t seed) {
  if (positions.size() < 2) throw InputError("online training needs at least two known positions");
  if (frames.size() < positions.size()) throw InputError("online training: fewer frames than positions");
  const std::size_t t = positions.size() - 1;
  const auto frames_used = frames.first(t + 1);
  const auto steps = derive_scanpath(positions);
  GroundTruthSeq gt(t);
  for (std::size_t i = 0; i < t; ++i) gt[i] = {GroundTruthEntry{positions[i], steps[i]}};

  TrainConfig tc;
  tc.gamma = cfg.gamma;
  tc.entropy_beta = cfg.entropy_beta;
  tc.value_coef = cfg.value_coef;
  tc.magnitude_coef = cfg.magnitude_coef;
  tc.reward = cfg.reward;

  StageReport report;
  for (int e = 0; e < cfg.episodes; ++e) {
    EpisodeOptions eo;
    eo.epsilon = cfg.epsilon;
    eo.seed = episode_seed(seed, int(t), e);
    eo.reward = cfg.reward;
    EpisodeResult res = run_episode(frames_used, gt, state.params, eo);
    double mo_sum = 0.0;
    for (std::size_t i = 0; i < t; ++i) mo_sum += mo(res.positions[i + 1], positions[i + 1], cfg.train_mo);
    const double mean_mo = mo_sum / double(t);
    report.episode_mean_mo.push_back(mean_mo);
    ++report.episodes;

    const auto targets = drl_targets(res.tape, gt, tc);
    net::Params<float> grads = net::backward<float>(state.params, res.tape.caches, targets);
    clip_gradients(grads, cfg.grad_clip);
    state.optimizer.apply(state.params, grads);
    if (mean_mo > cfg.th_mo) {
      report.early_stopped = true;
      break;
    }
  }
  return report;
}

GeoPos online_predict_step(std::span<const Frame> frames, std::span<const GeoPos> positions,
                           const net::Params<float>& params) {
  if (positions.empty()) throw InputError("online prediction needs at least one known position");
  if (frames.size() < positions.size()) throw InputError("online prediction: fewer frames than positions");
  net::LstmState<float> state;
  net::NetOutput<float> out;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    out = net::forward(params, extract_fov(frames[i], positions[i]), state);
    state = out.next;
  }
  const Bearing dir = action_bearing(greedy_direction(out.policy));
  const double mag = std::clamp(double(out.magnitude), 0.0, params.nu_max);
  return geodesic_step(positions.back(), dir, ArcLen(mag));
}

nlohmann::json OnlineFrameLog::to_json() const {
  return {{"frame", frame},
          {"position_source", position_source},
          {"episodes", stage.episodes},
          {"early_stopped", stage.early_stopped},
          {"episode_mean_mo", stage.episode_mean_mo},
          {"history_tail", {history_tail.lon(), history_tail.lat()}},
          {"prediction", {prediction.lon(), prediction.lat()}},
          {"mo", mo}};
}

double OnlineRun::mean_mo() const {
  if (mo.empty()) return 0.0;
  double s = 0.0;
  for (double v : mo) s += v;
  return s / double(mo.size());
}

OnlineRun run_online(std::span<const Frame> frames, std::span<const GeoPos> trace, const OnlineConfig& cfg,
                     const net::Params<float>* offline) {
  cfg.validate();
  if (trace.size() < 2) throw InputError("online: trace needs at least two frames");
  if (frames.size() != trace.size()) throw InputError("online: trace and video differ in length");
  OnlineParams state = initial_online_params(cfg, offline);

  OnlineRun run;
  std::vector<GeoPos> history{trace[0]};
  for (std::size_t t = 0; t + 1 < trace.size(); ++t) {
    OnlineFrameLog log;
    log.frame = int(t + 1);
    log.position_source = cfg.use_gt_history ? "ground_truth" : "predicted";
    if (t >= 1) log.stage = online_train_step(frames, history, state, cfg, cfg.seed);
    log.history_tail = history.back();
    log.prediction = online_predict_step(frames, history, state.params);
    log.mo = mo(log.prediction, trace[t + 1], cfg.eval_mo);
    run.predicted.push_back(log.prediction);
    run.mo.push_back(log.mo);
    history.push_back(cfg.use_gt_history ? trace[t + 1] : log.prediction);
    run.log.push_back(std::move(log));
  }
  return run;
}

GeoPos baseline1(std::span<const GeoPos> prefix) {
  if (prefix.empty()) throw InputError("baseline 1 needs a known position");
  if (prefix.size() == 1) return prefix.back();
  const GeoPos& a = prefix[prefix.size() - 2];
  const GeoPos& b = prefix.back();
  const auto dir = bearing_between(a, b);
  if (!dir) return b;
  return geodesic_step(b, *dir, great_circle_dist(a, b));
}

ScanpathStep baseline2(std::mt19937_64& rng, double nu_max) {
  if (!(nu_max >= 0.0)) throw InputError("baseline 2: nu_max must be >= 0");
  std::uniform_real_distribution<double> dir(0.0, 360.0);
  std::uniform_real_distribution<double> mag(0.0, nu_max);
  const double d = dir(rng);
  const double m = mag(rng);
  return ScanpathStep(Bearing(d), ArcLen(m));
}

OnlineRun run_baseline1(std::span<const GeoPos> trace, MoResolution res) {
  if (trace.size() < 2) throw InputError("baseline: trace needs at least two frames");
  OnlineRun run;
  for (std::size_t t = 0; t + 1 < trace.size(); ++t) {
    const GeoPos p = baseline1(trace.first(t + 1));
    run.predicted.push_back(p);
    run.mo.push_back(mo(p, trace[t + 1], res));
  }
  return run;
}

OnlineRun run_baseline2(std::span<const GeoPos> trace, double nu_max, std::uint64_t seed, MoResolution res) {
  if (trace.size() < 2) throw InputError("baseline: trace needs at least two frames");
  std::mt19937_64 rng(seed);
  OnlineRun run;
  for (std::size_t t = 0; t + 1 < trace.size(); ++t) {
    const ScanpathStep s = baseline2(rng, nu_max);
    const GeoPos p = geodesic_step(trace[t], s.dir, s.mag);
    run.predicted.push_back(p);
    run.mo.push_back(mo(p, trace[t + 1], res));
  }
  return run;
}

}  // namespace dhp
