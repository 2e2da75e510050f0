// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--work DIR] [--only 1,4,7]

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dhp/config.hpp"
#include "dhp/evaluate.hpp"
#include "dhp/gradcheck.hpp"
#include "dhp/metrics.hpp"
#include "dhp/offline.hpp"
#include "dhp/online.hpp"
#include "dhp/pandata_io.hpp"
#include "dhp/reward.hpp"
#include "dhp/synth.hpp"
#include "dhp/train.hpp"

namespace fs = std::filesystem;
using namespace dhp;

namespace {

const fs::path kConfigDir = DHP_CONFIG_DIR;
constexpr double kD2R = std::numbers::pi / 180.0;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double cpu_seconds() { return double(std::clock()) / CLOCKS_PER_SEC; }

// ---------------------------------------------------------------------------
// 1. Geometry

void geometry(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> lon(-180, 180), lat(-89, 89), brg(0, 360), dist(1e-3, 179);
  double worst_step = 0, worst_bearing = 0, worst_dist = 0;
  for (int k = 0; k < 10000; ++k) {
    const GeoPos p(lon(rng), lat(rng));
    const Bearing b(brg(rng));
    const ArcLen d(dist(rng));
    const GeoPos q = geodesic_step(p, b, d);
    worst_step = std::max(worst_step, std::abs(great_circle_dist(p, q).deg() - d.deg()));
    const auto back = bearing_between(p, q);
    if (!back) {
      worst_bearing = 360;
      continue;
    }
    worst_bearing = std::max(worst_bearing, phase_diff(*back, b));
    const GeoPos r = geodesic_step(p, *back, great_circle_dist(p, q));
    worst_dist = std::max(worst_dist, great_circle_dist(r, q).deg());
  }
  const double secs = seconds_since(t0);
  o.detail << "max |dist(step)-d| " << worst_step << ", max bearing error " << worst_bearing
           << ", max re-step error " << worst_dist << ", " << secs << " s";
  o.require(worst_step < 1e-9, "dist(step) within 1e-9");
  o.require(worst_bearing < 1e-6 && worst_dist < 1e-6, "inversion within 1e-6");
  o.require(secs < 5, "runtime < 5 s");
}

// ---------------------------------------------------------------------------
// 2. Reward oracle

struct RefReward {
  RewardParams p;

  static double phase(double a, double b) {
    const double d = std::fmod(std::fabs(a - b), 360.0);
    return std::min(d, 360.0 - d);
  }
  static std::array<double, 3> unit(const GeoPos& g) {
    const double la = g.lat() * kD2R, lo = g.lon() * kD2R;
    return {std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo), std::sin(la)};
  }
  static double dist_rad(const GeoPos& a, const GeoPos& b) {
    const auto x = unit(a), y = unit(b);
    const double cx = x[1] * y[2] - x[2] * y[1], cy = x[2] * y[0] - x[0] * y[2], cz = x[0] * y[1] - x[1] * y[0];
    return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), x[0] * y[0] + x[1] * y[1] + x[2] * y[2]);
  }
  double validity(const GeoPos& pos, double dir, const GroundTruthEntry& g) const {
    const double dd = phase(dir, g.step.dir.deg()) / p.rho_deg;
    const double ds = dist_rad(pos, g.position) / p.varrho_rad;
    return std::exp(-0.5 * dd * dd) * std::exp(-0.5 * ds * ds);
  }
  double alpha(const GeoPos& pos, double dir, const std::vector<GroundTruthEntry>& gt) const {
    double s = 0;
    for (const auto& g : gt) s += validity(pos, dir, g);
    return s / double(gt.size());
  }
  double nu(const GeoPos& pos, double dir, double mag, const std::vector<GroundTruthEntry>& gt) const {
    double s = 0;
    for (const auto& g : gt) {
      const double dm = (mag - g.step.mag.deg()) / p.varsigma_deg;
      s += std::exp(-0.5 * dm * dm) * validity(pos, dir, g);
    }
    return s / double(gt.size());
  }
};

void reward_oracle(Outcome& o) {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    RefReward ref;
    ref.p.rho_deg = 10 + 80 * u(rng);
    ref.p.varrho_rad = 0.2 + 1.5 * u(rng);
    ref.p.varsigma_deg = 0.3 + 3 * u(rng);
    const GeoPos pos(360 * u(rng) - 180, 140 * u(rng) - 70);
    std::vector<GroundTruthEntry> gt;
    const int m = 1 + int(12 * u(rng));
    for (int i = 0; i < m; ++i) {
      const GeoPos gp = geodesic_step(pos, Bearing(360 * u(rng)), ArcLen(60 * u(rng)));
      gt.push_back({gp, ScanpathStep(Bearing(360 * u(rng)), ArcLen(5 * u(rng)))});
    }
    const double dir = 360 * u(rng), mag = 5 * u(rng);
    const ScanpathStep step{Bearing(dir), ArcLen(mag)};
    worst = std::max(worst, std::abs(reward_alpha(pos, Bearing(dir), gt, ref.p) - ref.alpha(pos, dir, gt)));
    worst = std::max(worst, std::abs(reward_nu(pos, step, gt, ref.p) - ref.nu(pos, step.dir.deg(), mag, gt)));
  }

  const RewardParams d;
  const GeoPos c(0, 0);
  const std::vector<GroundTruthEntry> at_c{{c, ScanpathStep(Bearing(90), ArcLen(1))}};
  const double exact = reward_alpha(c, Bearing(90), at_c, d);
  const double half_dir = reward_alpha(c, Bearing(90 + d.rho_deg), at_c, d);
  const std::vector<GroundTruthEntry> far{{geodesic_step(c, Bearing(0), ArcLen(d.varrho_rad / kD2R)),
                                           ScanpathStep(Bearing(90), ArcLen(1))}};
  const double product =
      reward_nu(c, ScanpathStep(Bearing(90 + d.rho_deg), ArcLen(1 + d.varsigma_deg)), far, d);
  const double closed = std::max({std::abs(exact - 1.0), std::abs(half_dir - std::exp(-0.5)),
                                  std::abs(product - std::exp(-1.5))});
  o.detail << "max |impl-ref| " << worst << " over 1000 configurations, closed forms " << closed;
  o.require(worst <= 1e-12, "oracle within 1e-12");
  o.require(closed <= 1e-12, "closed forms within 1e-12");
}

// ---------------------------------------------------------------------------
// 3. Gradient check

void gradient_check(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  bool all = true;
  for (int steps : {1, 5}) {
    net::GradcheckOptions g;
    g.steps = steps;
    g.seed = 7;
    const auto r = net::run_gradcheck(g);
    worst = std::max(worst, r.max_rel_error);
    all = all && r.passed && r.tensors.size() == std::size_t(net::kTensorCount);
  }
  const std::string cmd = std::string("\"") + DHP_CLI + "\" gradcheck --seed 3 > /dev/null";
  const int status = std::system(cmd.c_str());
  const double secs = seconds_since(t0);
  o.detail << "max relative error " << worst << ", cli exit " << status << ", " << secs << " s";
  o.require(all && worst < 1e-4, "relative error < 1e-4 on every tensor");
  o.require(status == 0, "gradcheck exits 0");
  o.require(secs < 120, "runtime < 2 min");
}

// ---------------------------------------------------------------------------
// 4. Mean overlap

GeoPos antipode(const GeoPos& p) { return GeoPos(p.lon() + 180.0, -p.lat()); }

// Stratified sampling over viewport P in (azimuth, sin elevation), which is
// uniform in solid angle; membership in G by explicit rotation.
double mo_monte_carlo(const GeoPos& p, const GeoPos& g, int side, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  const double plo = p.lon() * kD2R, pla = p.lat() * kD2R;
  const double glo = g.lon() * kD2R, gla = g.lat() * kD2R;
  long inside = 0;
  for (int a = 0; a < side; ++a)
    for (int b = 0; b < side; ++b) {
      const double az = (-51.5 + 103.0 * (a + u(rng)) / side) * kD2R;
      const double el = std::asin(-0.5 + (b + u(rng)) / side);
      const double x2 = std::cos(el) * std::cos(az), y2 = std::cos(el) * std::sin(az), z2 = std::sin(el);
      const double x1 = std::cos(pla) * x2 - std::sin(pla) * z2;
      const double z1 = std::sin(pla) * x2 + std::cos(pla) * z2;
      const double vx = std::cos(plo) * x1 - std::sin(plo) * y2;
      const double vy = std::sin(plo) * x1 + std::cos(plo) * y2;
      const double gx1 = std::cos(glo) * vx + std::sin(glo) * vy;
      const double gy1 = -std::sin(glo) * vx + std::cos(glo) * vy;
      const double gx2 = std::cos(gla) * gx1 + std::sin(gla) * z1;
      const double gz2 = -std::sin(gla) * gx1 + std::cos(gla) * z1;
      const double gaz = std::atan2(gy1, gx2) / kD2R;
      const double gel = std::asin(std::clamp(gz2, -1.0, 1.0)) / kD2R;
      inside += std::abs(gaz) <= 51.5 && std::abs(gel) <= 30.0;
    }
  const double f = double(inside) / double(side) / double(side);
  return f / (2.0 - f);
}

void mean_overlap(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> lon(-180, 180), lat(-80, 80), brg(0, 360), sep(0, 110);
  bool self_one = true, antipodal_zero = true;
  double worst_res = 0, worst_mc = 0;
  for (int k = 0; k < 100; ++k) {
    const GeoPos p(lon(rng), lat(rng));
    const GeoPos g = geodesic_step(p, Bearing(brg(rng)), ArcLen(sep(rng)));
    self_one = self_one && mo(p, p) == 1.0;
    antipodal_zero = antipodal_zero && mo(p, antipode(p)) == 0.0;
    const double m = mo(p, g);
    worst_res = std::max(worst_res, std::abs(m - mo(p, g, {1024, 512})));
    worst_mc = std::max(worst_mc, std::abs(m - mo_monte_carlo(p, g, 1000, rng)));
  }
  const double secs = seconds_since(t0);
  o.detail << "max resolution-doubling change " << worst_res << ", max |mo-MC| " << worst_mc << ", " << secs << " s";
  o.require(self_one, "mo(p,p) == 1");
  o.require(antipodal_zero, "antipodal mo == 0");
  o.require(worst_res < 1e-3, "stable under doubling within 1e-3");
  o.require(worst_mc < 2e-3, "within 2e-3 of Monte Carlo");
  o.require(secs < 120, "runtime < 2 min");
}

// ---------------------------------------------------------------------------
// 5. Map metric oracles

HMMap random_map(Raster r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  HMMap m(r);
  for (double& v : m.values) v = u(rng);
  return m;
}

std::size_t oracle_cell(Raster r, const GeoPos& p) {
  long col = std::lround((p.lon() + 180.0) * r.width / 360.0) % r.width;
  long row = std::clamp(std::lround((90.0 - p.lat()) * r.height / 180.0), 0L, long(r.height - 1));
  return std::size_t(row) * r.width + std::size_t(col);
}

double cc_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = double(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

double nss_oracle(const HMMap& m, const std::vector<GeoPos>& pts) {
  const double n = double(m.values.size());
  double mean = 0;
  for (double v : m.values) mean += v;
  mean /= n;
  double var = 0;
  for (double v : m.values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  double s = 0;
  for (const GeoPos& p : pts) s += (m.values[oracle_cell(m.raster, p)] - mean) / sd;
  return s / double(pts.size());
}

double auc_oracle(const HMMap& m, const std::vector<GeoPos>& pos, const std::vector<GeoPos>& neg) {
  double s = 0;
  for (const GeoPos& p : pos)
    for (const GeoPos& q : neg) {
      const double x = m.values[oracle_cell(m.raster, p)], y = m.values[oracle_cell(m.raster, q)];
      s += x > y ? 1.0 : x == y ? 0.5 : 0.0;
    }
  return s / double(pos.size() * neg.size());
}

void metric_oracles(Outcome& o) {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> lon(-180, 180), lat(-85, 85), u(0, 1);
  const Raster r{64, 32};
  double worst = 0, worst_inv = 0;
  for (int k = 0; k < 50; ++k) {
    const HMMap a = random_map(r, rng), b = random_map(r, rng);
    std::vector<GeoPos> pos, neg;
    for (int i = 0; i < 30; ++i) pos.emplace_back(lon(rng), lat(rng));
    for (int i = 0; i < 40; ++i) neg.emplace_back(lon(rng), lat(rng));
    worst = std::max(worst, std::abs(cc(a, b) - cc_oracle(a.values, b.values)));
    worst = std::max(worst, std::abs(nss(a, pos) - nss_oracle(a, pos)));
    worst = std::max(worst, std::abs(shuffled_auc(a, pos, neg) - auc_oracle(a, pos, neg)));

    const double scale = 0.1 + 5 * u(rng), shift = 10 * u(rng) - 5;
    HMMap aff = a, mono = a;
    for (double& v : aff.values) v = scale * v + shift;
    for (double& v : mono.values) v = std::exp(3 * v) + v * v * v;
    worst_inv = std::max(worst_inv, std::abs(cc(aff, b) - cc(a, b)));
    worst_inv = std::max(worst_inv, std::abs(nss(aff, pos) - nss(a, pos)));
    worst_inv = std::max(worst_inv, std::abs(shuffled_auc(mono, pos, neg) - shuffled_auc(a, pos, neg)));
  }
  o.detail << "max |impl-oracle| " << worst << ", max invariance drift " << worst_inv;
  o.require(worst <= 1e-12, "oracles within 1e-12");
  o.require(worst_inv <= 1e-9, "invariances within 1e-9");
}

// ---------------------------------------------------------------------------
// 6. FCB fit recovery

std::vector<GeoPos> centre_gaussian(std::mt19937_64& rng, int n, double sd) {
  std::normal_distribution<double> g(0, sd);
  std::vector<GeoPos> out;
  while (int(out.size()) < n) {
    const double x = g(rng), y = g(rng);
    if (std::abs(y) < 89) out.emplace_back(x, y);
  }
  return out;
}

void fcb_recovery(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> lon(-180, 180), lat(-60, 60);
  // exp(-r^2/sigma^2) has per-axis std sigma/sqrt(2).
  const double sigma = 21.1, sd = sigma / std::sqrt(2.0);
  const Raster r{256, 128};
  std::vector<HMMap> pred, gt;
  for (int t = 0; t < 6; ++t) {
    gt.push_back(build_hm_map(centre_gaussian(rng, 3000, sd), r, 3.0));
    std::vector<GeoPos> noise;
    for (int k = 0; k < 30; ++k) noise.emplace_back(lon(rng), lat(rng));
    pred.push_back(build_hm_map(noise, r, 10.0));
  }
  const FcbFit sampled = fit_fcb(pred, gt);

  const Raster rs{128, 64};
  const HMMap f = fcb_map(rs, sigma);
  const double w1 = 0.48;
  std::vector<HMMap> spred, sgt;
  for (int t = 0; t < 6; ++t) {
    std::vector<GeoPos> pts;
    const GeoPos c(60.0 * t - 150, 10.0 * (t % 3) - 10);
    for (int k = 0; k < 25; ++k) pts.push_back(geodesic_step(c, Bearing(360 * (k * 0.618 - std::floor(k * 0.618))), ArcLen(3 + k)));
    spred.push_back(build_hm_map(pts, rs, 10.0));
    sgt.push_back(combine_fcb(spred.back(), f, w1, 1 - w1));
  }
  const FcbFit mixed = fit_fcb(spred, sgt);
  const double secs = seconds_since(t0);
  o.detail << "sampled sigma_f " << sampled.params.sigma_f_deg << " deg, self-consistent w1 " << mixed.params.w1
           << " (true " << w1 << "), " << secs << " s";
  o.require(sampled.params.sigma_f_deg >= 18 && sampled.params.sigma_f_deg <= 24, "sigma_f in [18, 24]");
  o.require(std::abs(mixed.params.w1 - w1) <= 0.02, "w1 within 0.02");
  o.require(secs < 300, "runtime < 5 min");
}

// ---------------------------------------------------------------------------
// Synthetic worlds shared by 7, 8 and 9

struct World {
  std::vector<TrainingVideo> train;  // first `train_subjects` viewers of each video
  std::vector<VideoData> heldout;    // the remaining viewers, with the same frames
};

World make_world(const std::string& spec_file, std::uint64_t seed, int train_subjects) {
  const SynthSpec spec = synth_spec_from_json(read_json_file(kConfigDir / spec_file));
  World w;
  for (const SynthVideo& v : gen_synthetic(spec, seed)) {
    VideoData all = to_video_data(v);
    VideoData tr = all, ho = all;
    tr.traces.assign(all.traces.begin(), all.traces.begin() + train_subjects);
    ho.traces.assign(all.traces.begin() + train_subjects, all.traces.end());
    w.train.push_back(make_training_video(tr));
    w.heldout.push_back(std::move(ho));
  }
  return w;
}

double mean_nss(const std::vector<VideoData>& videos, const std::function<std::vector<HMMap>(const Video&)>& maps,
                const RunConfig& cfg) {
  std::vector<EvalVideo> in;
  for (const VideoData& v : videos) in.push_back({v.video.video_id, maps(v.video), v.traces});
  const auto scores = evaluate_maps(in, cfg.eval, cfg.sigma_smooth_deg);
  double s = 0;
  for (const auto& v : scores) s += v.nss;
  return s / double(scores.size());
}

double window_mean_r_alpha(const std::vector<EpisodeLog>& log, bool first, std::size_t n) {
  std::vector<EpisodeLog> byclaim = log;
  std::sort(byclaim.begin(), byclaim.end(), [](const auto& a, const auto& b) { return a.episode < b.episode; });
  n = std::min(n, byclaim.size());
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += byclaim[first ? i : byclaim.size() - n + i].mean_r_alpha;
  return s / double(n);
}

struct OfflineRun {
  RunConfig cfg;
  World world;
  TrainResult drl;
  double cpu_secs = 0;
  double nss_drl = 0;
  bool ready = false;
};

constexpr std::uint64_t kWanderSeed = 7;
constexpr int kWanderTrainSubjects = 8;
constexpr std::size_t kRewardWindow = 20;

OfflineRun& offline_run() {
  static OfflineRun run;
  if (run.ready) return run;
  run.cfg = load_run_config(kConfigDir / "synth_wander.json");
  run.world = make_world("synth_wander_spec.json", kWanderSeed, kWanderTrainSubjects);
  const double c0 = cpu_seconds();
  run.drl = train_offline(run.world.train, run.cfg.train);
  run.cpu_secs = cpu_seconds() - c0;
  run.nss_drl = mean_nss(
      run.world.heldout, [&](const Video& v) { return predict_hm_maps(v.frames, run.drl.params, run.cfg.offline); },
      run.cfg);
  run.ready = true;
  return run;
}

// ---------------------------------------------------------------------------
// 7. Offline learning

void offline_learning(Outcome& o) {
  OfflineRun& run = offline_run();
  const RunConfig& cfg = run.cfg;
  const auto untrained = net::init_params<float>(cfg.train.seed, cfg.nu_max);
  const double nss_untrained = mean_nss(
      run.world.heldout, [&](const Video& v) { return predict_hm_maps(v.frames, untrained, cfg.offline); }, cfg);
  const FcbParams fcb;
  const HMMap prior = fcb_map(cfg.map_raster, fcb.sigma_f_deg, cfg.fcb.half_exponent);
  const double nss_fcb = mean_nss(
      run.world.heldout, [&](const Video& v) { return std::vector<HMMap>(v.frames.size(), prior); }, cfg);
  const double ra_first = window_mean_r_alpha(run.drl.log, true, kRewardWindow);
  const double ra_last = window_mean_r_alpha(run.drl.log, false, kRewardWindow);
  o.detail << "NSS trained " << run.nss_drl << ", FCB-only " << nss_fcb << ", untrained " << nss_untrained
           << "; r_alpha first/last " << kRewardWindow << " episodes " << ra_first << " -> " << ra_last << "; "
           << run.drl.log.size() << " episodes, " << run.cpu_secs << " CPU s";
  o.require(run.nss_drl > 1.0, "NSS > 1.0");
  o.require(run.nss_drl > nss_fcb, "beats FCB-only");
  o.require(run.nss_drl > nss_untrained, "beats untrained");
  o.require(ra_last >= 1.5 * ra_first, "r_alpha up by >= 50%");
  o.require(run.cpu_secs <= 1800, "training <= 30 CPU min");
}

// ---------------------------------------------------------------------------
// 8. Online prediction

constexpr std::uint64_t kJumpSeed = 8;
constexpr int kJumpTrainSubjects = 8;
constexpr int kOnlineTraces = 8;

void online_prediction(Outcome& o) {
  const RunConfig cfg = load_run_config(kConfigDir / "synth_jump.json");
  const World world = make_world("synth_jump_spec.json", kJumpSeed, kJumpTrainSubjects);
  const TrainResult trained = train_offline(world.train, cfg.train);

  double full = 0, b1 = 0, b2 = 0, no_init = 0, no_gt = 0;
  int n = 0;
  // The first held-out viewer of each of the first videos.
  for (const VideoData& v : world.heldout) {
    if (n == kOnlineTraces) break;
    const std::span<const Frame> frames = v.video.frames;
    const std::span<const GeoPos> trace = v.traces.front().positions;
    OnlineConfig oc = cfg.online;
    full += run_online(frames, trace, oc, &trained.params).mean_mo();
    b1 += run_baseline1(trace, oc.eval_mo).mean_mo();
    b2 += run_baseline2(trace, oc.nu_max, oc.seed + std::uint64_t(n), oc.eval_mo).mean_mo();
    oc.use_offline_init = false;
    no_init += run_online(frames, trace, oc, nullptr).mean_mo();
    oc.use_offline_init = true;
    oc.use_gt_history = false;
    no_gt += run_online(frames, trace, oc, &trained.params).mean_mo();
    ++n;
  }
  full /= n, b1 /= n, b2 /= n, no_init /= n, no_gt /= n;
  o.detail << "mean MO online " << full << ", baseline 1 " << b1 << ", baseline 2 " << b2
           << ", without offline init " << no_init << ", without gt history " << no_gt << " (" << n << " traces)";
  o.require(full >= b1 + 0.2, "beats baseline 1 by >= 0.2");
  o.require(full >= b2 + 0.2, "beats baseline 2 by >= 0.2");
  o.require(no_init < full, "offline init helps");
  o.require(no_gt < full, "gt history helps");
}

// ---------------------------------------------------------------------------
// 9. Supervised baseline

void supervised_ablation(Outcome& o) {
  OfflineRun& run = offline_run();
  TrainConfig tc = run.cfg.train;
  tc.max_episodes = int(run.drl.log.size());
  const TrainResult sup = train_supervised(run.world.train, tc);
  const double nss_sup = mean_nss(
      run.world.heldout, [&](const Video& v) { return predict_hm_maps(v.frames, sup.params, run.cfg.offline); },
      run.cfg);
  o.detail << "NSS reward-trained " << run.nss_drl << ", supervised " << nss_sup << " (" << tc.max_episodes
           << " episodes each)";
  o.require(run.nss_drl > nss_sup, "reward-trained beats supervised");
}

// ---------------------------------------------------------------------------
// 10. Determinism

struct DeterminismProbe {
  std::vector<float> params;
  std::vector<std::string> log;
  std::vector<std::vector<double>> maps;
  std::vector<std::string> scores;
  std::vector<double> online_mo;
  friend bool operator==(const DeterminismProbe&, const DeterminismProbe&) = default;
};

DeterminismProbe determinism_probe() {
  SynthSpec spec = synth_spec_from_json(read_json_file(kConfigDir / "synth_wander_spec.json"));
  spec.videos = 2;
  spec.frames = 30;
  spec.subjects = 6;
  std::vector<TrainingVideo> train;
  std::vector<VideoData> data;
  for (const SynthVideo& v : gen_synthetic(spec, 99)) {
    data.push_back(to_video_data(v));
    train.push_back(make_training_video(data.back()));
  }
  RunConfig cfg = load_run_config(kConfigDir / "synth_wander.json");
  cfg.train.workers = 1;
  cfg.train.max_episodes = 12;
  cfg.offline.workflows = 8;
  cfg.offline.threads = 2;
  cfg.online.episodes = 3;
  const TrainResult r = train_offline(train, cfg.train);

  DeterminismProbe p;
  p.params = r.params.data;
  for (EpisodeLog l : r.log) {
    l.wallclock = 0;
    p.log.push_back(l.to_json().dump());
  }
  std::vector<EvalVideo> in;
  for (const VideoData& v : data) {
    auto maps = predict_hm_maps(v.video.frames, r.params, cfg.offline);
    for (const HMMap& m : maps) p.maps.push_back(m.values);
    in.push_back({v.video.video_id, std::move(maps), v.traces});
  }
  p.scores.push_back(eval_report_json(evaluate_maps(in, cfg.eval, cfg.sigma_smooth_deg, FcbParams{})).dump());
  const auto frames = std::span(data[0].video.frames).first(8);
  const auto trace = std::span(data[0].traces[0].positions).first(8);
  p.online_mo = run_online(frames, trace, cfg.online, &r.params).mo;
  return p;
}

void determinism(Outcome& o) {
  const DeterminismProbe a = determinism_probe(), b = determinism_probe();
  o.detail << a.log.size() << " episodes, " << a.maps.size() << " maps, " << a.online_mo.size()
           << " online predictions compared";
  o.require(a.params == b.params, "parameters identical");
  o.require(a.log == b.log, "training logs identical");
  o.require(a.maps == b.maps, "maps identical");
  o.require(a.scores == b.scores, "evaluation identical");
  o.require(a.online_mo == b.online_mo, "online run identical");
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  fs::path work = fs::temp_directory_path() / "dhp_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    } else {
      std::fprintf(stderr, "usage: acceptance [--work DIR] [--only 1,2,...]\n");
      return 2;
    }
  }
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"geometry round trips", geometry},
      {"reward oracle", reward_oracle},
      {"gradient check", gradient_check},
      {"mean overlap", mean_overlap},
      {"map metric oracles", metric_oracles},
      {"FCB fit recovery", fcb_recovery},
      {"synthetic offline learning", offline_learning},
      {"synthetic online prediction", online_prediction},
      {"supervised baseline ablation", supervised_ablation},
      {"determinism", determinism},
  };
  int failed = 0;
  nlohmann::json report = nlohmann::json::array();
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = int(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      criteria[k].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failed += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(), o.detail.str().c_str());
    std::fflush(stdout);
    report.push_back({{"criterion", id}, {"name", criteria[k].first}, {"pass", o.pass}, {"detail", o.detail.str()}});
  }
  write_json_file(work / "acceptance.json", report);
  return failed == 0 ? 0 : 1;
}
