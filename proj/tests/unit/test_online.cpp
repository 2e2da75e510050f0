#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dhp/error.hpp"
#include "dhp/online.hpp"
#include "dhp/synth.hpp"

using namespace dhp;

namespace {

SynthVideo pursuit_video(int frames, std::uint64_t seed = 1) {
  SynthSpec s;
  s.frames = frames;
  s.subjects = 2;
  BlobSpec b;
  b.kind = BlobSpec::Kind::Orbit;
  b.bearing_deg = 90;
  b.speed_deg = 2.0;
  s.blobs = {b};
  s.noise_bearing_deg = 5;
  return gen_synthetic(s, seed)[0];
}

OnlineConfig fast_config() {
  OnlineConfig c;
  c.episodes = 3;
  c.use_offline_init = false;
  c.eval_mo = {128, 64};
  c.lr = 1e-3;
  return c;
}

// Zero weights with a fixed greedy action and magnitude nu_max/2.
net::Params<float> scripted_params(int action, double nu_max) {
  auto p = net::zero_params<float>(nu_max);
  p.tensor(net::Tensor::PolicyB)[action] = 5.0f;
  return p;
}

std::array<double, 3> unit(const GeoPos& g) {
  const double d = std::numbers::pi / 180.0;
  return {std::cos(g.lat() * d) * std::cos(g.lon() * d), std::cos(g.lat() * d) * std::sin(g.lon() * d),
          std::sin(g.lat() * d)};
}

}  // namespace

TEST(OnlineConfig, Validates) {
  OnlineConfig c;
  EXPECT_NO_THROW(c.validate());
  c.episodes = 0;
  EXPECT_THROW(c.validate(), InputError);
  c = {};
  c.th_mo = 1.0;
  EXPECT_THROW(c.validate(), InputError);
  c = {};
  EXPECT_THROW(initial_online_params(c, nullptr), InputError);
}

TEST(Baseline1, ClosedForms) {
  const std::vector<GeoPos> north{{0, 0}, {0, 1}};
  const GeoPos p = baseline1(north);
  EXPECT_NEAR(p.lon(), 0.0, 1e-12);
  EXPECT_NEAR(p.lat(), 2.0, 1e-12);
  const std::vector<GeoPos> still{{0, 0}, {0, 0}};
  EXPECT_EQ(baseline1(still), GeoPos(0, 0));
  const std::vector<GeoPos> one{{12, 34}};
  EXPECT_EQ(baseline1(one), GeoPos(12, 34));
}

TEST(Baseline1, MatchesIndependentStepRepeat) {
  // Initial bearing and destination-point formulas in plain trigonometry.
  auto repeat = [](const GeoPos& a, const GeoPos& b) {
    const double d = std::numbers::pi / 180.0;
    const double p1 = a.lat() * d, p2 = b.lat() * d, dl = (b.lon() - a.lon()) * d;
    const double brg = std::atan2(std::sin(dl) * std::cos(p2),
                                  std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dl));
    const double hav = std::pow(std::sin((p2 - p1) / 2), 2) + std::cos(p1) * std::cos(p2) * std::pow(std::sin(dl / 2), 2);
    const double delta = 2 * std::asin(std::sqrt(hav));
    const double lat = std::asin(std::sin(p2) * std::cos(delta) + std::cos(p2) * std::sin(delta) * std::cos(brg));
    const double lon = b.lon() * d + std::atan2(std::sin(brg) * std::sin(delta) * std::cos(p2),
                                                std::cos(delta) - std::sin(p2) * std::sin(lat));
    return GeoPos(lon / d, lat / d);
  };
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0, 1);
  std::vector<GeoPos> tr{{0, 0}};
  double heading = 30;
  for (int t = 0; t < 200; ++t) {
    heading += 5 * g(rng);
    tr.push_back(geodesic_step(tr.back(), Bearing(heading), ArcLen(1.0 + 0.5 * std::abs(g(rng)))));
  }
  const auto run = run_baseline1(tr, {64, 32});
  for (std::size_t t = 1; t + 1 < tr.size(); ++t) {
    const auto p = unit(run.predicted[t]), q = unit(repeat(tr[t - 1], tr[t]));
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(p[k], q[k], 1e-12);
  }
  EXPECT_EQ(run.predicted[0], tr[0]);
}

TEST(Baseline2, UniformDirectionsBoundedMagnitudes) {
  std::mt19937_64 rng(2);
  std::array<long, 8> bins{};
  const long n = 100000;
  for (long i = 0; i < n; ++i) {
    const ScanpathStep s = baseline2(rng, 4.0);
    ASSERT_GE(s.mag.deg(), 0.0);
    ASSERT_LE(s.mag.deg(), 4.0);
    ++bins[std::min(7, int(s.dir.deg() / 45.0))];
  }
  double x2 = 0;
  for (long c : bins) x2 += (c - n / 8.0) * (c - n / 8.0) / (n / 8.0);
  EXPECT_LT(x2, 24.32);
  std::mt19937_64 r1(3), r2(3);
  for (int i = 0; i < 100; ++i) {
    const auto a = baseline2(r1, 10.0), b = baseline2(r2, 10.0);
    EXPECT_EQ(a.dir.deg(), b.dir.deg());
    EXPECT_EQ(a.mag.deg(), b.mag.deg());
  }
}

TEST(Baseline2, StepsFromTheViewerPosition) {
  const auto v = pursuit_video(10);
  const auto run = run_baseline2(v.traces[0].positions, 5.0, 9, {64, 32});
  std::mt19937_64 rng(9);
  for (std::size_t t = 0; t < run.predicted.size(); ++t) {
    const ScanpathStep s = baseline2(rng, 5.0);
    EXPECT_EQ(run.predicted[t], geodesic_step(v.traces[0].positions[t], s.dir, s.mag));
  }
}

TEST(PredictStep, ZeroMagnitudeStaysPut) {
  const auto v = pursuit_video(5);
  auto p = scripted_params(3, 10.0);
  p.tensor(net::Tensor::MagnitudeB)[0] = -200.0f;
  const std::vector<GeoPos> hist{{0, 0}, {2, 1}, {4, -1}};
  const GeoPos q = online_predict_step(v.frames, hist, p);
  EXPECT_LT(great_circle_dist(q, hist.back()).deg(), 1e-12);
}

TEST(PredictStep, GreedyEastByOneDegree) {
  const auto v = pursuit_video(3);
  const auto p = scripted_params(2, 2.0);
  const std::vector<GeoPos> hist{{0, 0}};
  const GeoPos q = online_predict_step(v.frames, hist, p);
  EXPECT_NEAR(q.lon(), 1.0, 1e-9);
  EXPECT_NEAR(q.lat(), 0.0, 1e-9);
}

TEST(PredictStep, RollsAlongTheGivenHistory) {
  const auto v = pursuit_video(6);
  auto p = net::init_params<float>(4, 10.0);
  std::mt19937_64 rng(4);
  std::normal_distribution<float> n(0.0f, 0.3f);
  for (auto t : {net::Tensor::PolicyW, net::Tensor::MagnitudeW})
    for (float& w : p.tensor(t)) w += n(rng);
  const std::vector<GeoPos> a{{0, 0}, {2, 0}, {4, 0}}, b{{0, 0}, {-20, 10}, {4, 0}};
  // Same final position, different observations along the way.
  EXPECT_NE(online_predict_step(v.frames, a, p), online_predict_step(v.frames, b, p));
}

TEST(TrainStep, SingleEpisodeCap) {
  const auto v = pursuit_video(6);
  OnlineConfig c = fast_config();
  c.episodes = 1;
  c.th_mo = 0.99;
  OnlineParams st = initial_online_params(c, nullptr);
  const auto before = st.params.data;
  const auto r = online_train_step(v.frames, std::span(v.traces[0].positions).first(5), st, c, 1);
  EXPECT_EQ(r.episodes, 1);
  EXPECT_EQ(r.episode_mean_mo.size(), 1u);
  EXPECT_NE(st.params.data, before);
}

TEST(TrainStep, StationaryViewerStopsAfterFirstEpisode) {
  const auto v = pursuit_video(8);
  const std::vector<GeoPos> still(6, GeoPos(0, 0));
  OnlineConfig c = fast_config();
  c.episodes = 10;
  OnlineParams st;
  st.params = scripted_params(0, 10.0);
  st.params.tensor(net::Tensor::MagnitudeB)[0] = -200.0f;
  st.optimizer.lr = c.lr;
  const auto r = online_train_step(v.frames, still, st, c, 1);
  EXPECT_EQ(r.episodes, 1);
  EXPECT_TRUE(r.early_stopped);
  EXPECT_NEAR(r.episode_mean_mo[0], 1.0, 1e-12);
}

TEST(TrainStep, RunsUntilCapWhenOverlapIsPoor) {
  const auto v = pursuit_video(8);
  OnlineConfig c = fast_config();
  c.episodes = 4;
  c.th_mo = 0.99;
  OnlineParams st;
  st.params = scripted_params(6, 20.0);  // walks west quickly while the viewer goes east
  st.optimizer.lr = c.lr;
  const auto r = online_train_step(v.frames, std::span(v.traces[0].positions).first(7), st, c, 1);
  EXPECT_EQ(r.episodes, 4);
  EXPECT_FALSE(r.early_stopped);
  for (double m : r.episode_mean_mo) {
    EXPECT_GE(m, 0.0);
    EXPECT_LT(m, 0.99);
  }
}

TEST(TrainStep, NeedsTwoPositions) {
  const auto v = pursuit_video(4);
  OnlineConfig c = fast_config();
  OnlineParams st = initial_online_params(c, nullptr);
  const std::vector<GeoPos> one{{0, 0}};
  EXPECT_THROW(online_train_step(v.frames, one, st, c, 1), InputError);
}

TEST(TrainStep, SeededDeltasRepeat) {
  const auto v = pursuit_video(6);
  OnlineConfig c = fast_config();
  c.th_mo = 0.99;
  OnlineParams a = initial_online_params(c, nullptr), b = initial_online_params(c, nullptr);
  online_train_step(v.frames, std::span(v.traces[0].positions).first(5), a, c, 7);
  online_train_step(v.frames, std::span(v.traces[0].positions).first(5), b, c, 7);
  EXPECT_EQ(a.params.data, b.params.data);
}

TEST(RunOnline, LengthTwoTraceGivesOnePrediction) {
  const auto v = pursuit_video(2);
  const auto r = run_online(v.frames, v.traces[0].positions, fast_config(), nullptr);
  ASSERT_EQ(r.predicted.size(), 1u);
  ASSERT_EQ(r.mo.size(), 1u);
  EXPECT_EQ(r.log[0].stage.episodes, 0);
  EXPECT_EQ(r.log[0].frame, 1);
}

TEST(RunOnline, DeterministicMoSequence) {
  const auto v = pursuit_video(6);
  const auto a = run_online(v.frames, v.traces[0].positions, fast_config(), nullptr);
  const auto b = run_online(v.frames, v.traces[0].positions, fast_config(), nullptr);
  EXPECT_EQ(a.mo, b.mo);
  EXPECT_EQ(a.predicted, b.predicted);
  ASSERT_EQ(a.mo.size(), 5u);
  for (double m : a.mo) {
    EXPECT_GE(m, 0.0);
    EXPECT_LE(m, 1.0);
  }
}

TEST(RunOnline, HistoryFlagOnlyChangesThePositionSource) {
  const auto v = pursuit_video(6);
  const auto& trace = v.traces[0].positions;
  OnlineConfig c = fast_config();
  const auto gt = run_online(v.frames, trace, c, nullptr);
  c.use_gt_history = false;
  const auto pred = run_online(v.frames, trace, c, nullptr);
  ASSERT_EQ(gt.log.size(), pred.log.size());
  EXPECT_EQ(gt.log[0].prediction, pred.log[0].prediction);
  for (std::size_t k = 0; k < gt.log.size(); ++k) {
    EXPECT_EQ(gt.log[k].position_source, "ground_truth");
    EXPECT_EQ(pred.log[k].position_source, "predicted");
    EXPECT_EQ(gt.log[k].history_tail, trace[k]);
    EXPECT_EQ(pred.log[k].history_tail, k == 0 ? trace[0] : pred.predicted[k - 1]);
    EXPECT_EQ(gt.log[k].stage.episodes == 0, k == 0);
    EXPECT_EQ(pred.log[k].stage.episodes == 0, k == 0);
  }
}

TEST(RunOnline, OfflineInitOnlyChangesStartingParameters) {
  const auto v = pursuit_video(5);
  OnlineConfig c = fast_config();
  const auto fresh = net::init_params<float>(c.seed, c.nu_max);
  const auto a = run_online(v.frames, v.traces[0].positions, c, nullptr);
  c.use_offline_init = true;
  const auto b = run_online(v.frames, v.traces[0].positions, c, &fresh);
  EXPECT_EQ(a.mo, b.mo);
  EXPECT_EQ(a.log[1].stage.episode_mean_mo, b.log[1].stage.episode_mean_mo);
}

TEST(RunOnline, MisalignedInputsThrow) {
  const auto v = pursuit_video(5);
  EXPECT_THROW(run_online(std::span(v.frames).first(4), v.traces[0].positions, fast_config(), nullptr), InputError);
}
