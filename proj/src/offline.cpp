#include "dhp/offline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <thread>

#include "dhp/agent.hpp"
#include "dhp/error.hpp"
#include "dhp/strict_json.hpp"

namespace dhp {

namespace {

std::uint64_t workflow_seed(std::uint64_t base, int workflow) {
  std::seed_seq seq{std::uint32_t(base), std::uint32_t(base >> 32), std::uint32_t(workflow), 0x77u};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (std::uint64_t(out[0]) << 32) | out[1];
}

}  // namespace

std::vector<std::vector<GeoPos>> run_workflows(std::span<const Frame> frames, const net::Params<float>& params,
                                               const PredictOptions& opts) {
  if (opts.workflows < 1) throw InputError("predict: need at least one workflow");
  if (opts.threads < 1) throw InputError("predict: threads must be >= 1");
  if (frames.size() < 2) throw InputError("predict: need at least two frames");
  std::vector<std::vector<GeoPos>> out(opts.workflows);
  auto run = [&](int w) {
    EpisodeOptions eo;
    eo.epsilon = 0.0;
    eo.greedy = opts.greedy;
    eo.record_caches = false;
    eo.seed = workflow_seed(opts.seed, w);
    out[w] = run_episode(frames, {}, params, eo).positions;
  };
  if (opts.threads == 1) {
    for (int w = 0; w < opts.workflows; ++w) run(w);
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < opts.threads; ++k)
      pool.emplace_back([&, k] {
        for (int w = k; w < opts.workflows; w += opts.threads) run(w);
      });
    for (auto& t : pool) t.join();
  }
  return out;
}

std::vector<HMMap> maps_from_workflows(const std::vector<std::vector<GeoPos>>& positions, Raster raster,
                                       double sigma_smooth_deg) {
  if (positions.empty()) throw InputError("maps: no workflows");
  const std::size_t T = positions.front().size();
  std::vector<HMMap> maps;
  maps.reserve(T);
  std::vector<GeoPos> at(positions.size());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t w = 0; w < positions.size(); ++w) at[w] = positions[w].at(t);
    maps.push_back(build_hm_map(at, raster, sigma_smooth_deg));
  }
  return maps;
}

std::vector<HMMap> predict_hm_maps(std::span<const Frame> frames, const net::Params<float>& params,
                                   const PredictOptions& opts) {
  return maps_from_workflows(run_workflows(frames, params, opts), opts.raster, opts.sigma_smooth_deg);
}

std::vector<HMMap> ground_truth_maps(std::span<const HMTrace> traces, Raster raster, double sigma_smooth_deg) {
  if (traces.empty()) throw InputError("ground truth maps: no traces");
  std::vector<std::vector<GeoPos>> positions;
  for (const HMTrace& tr : traces) {
    if (tr.positions.size() != traces.front().positions.size())
      throw InputError("ground truth maps: traces differ in length");
    positions.push_back(tr.positions);
  }
  return maps_from_workflows(positions, raster, sigma_smooth_deg);
}

void FcbParams::validate() const {
  if (!(sigma_f_deg > 0.0)) throw InputError("fcb: sigma_f must be positive");
  if (!(w1 >= 0.0) || !(w2 >= 0.0)) throw InputError("fcb: weights must be non-negative");
  if (std::abs(w1 + w2 - 1.0) > 1e-9) throw InputError("fcb: w1 + w2 must equal 1");
}

nlohmann::json FcbParams::to_json() const { return {{"sigma_f_deg", sigma_f_deg}, {"w1", w1}, {"w2", w2}}; }

FcbParams FcbParams::from_json(const nlohmann::json& j) {
  StrictObject o(j, "fcb parameters");
  FcbParams p;
  p.sigma_f_deg = o.require<double>("sigma_f_deg");
  p.w1 = o.require<double>("w1");
  p.w2 = o.require<double>("w2");
  o.finish();
  p.validate();
  return p;
}

double fcb_value(double lon_deg, double lat_deg, double sigma_f_deg, bool half_exponent) {
  double dl = std::abs(wrap_lon(lon_deg));
  if (dl > 180.0) dl = 360.0 - dl;
  const double denom = (half_exponent ? 2.0 : 1.0) * sigma_f_deg * sigma_f_deg;
  return std::exp(-(dl * dl + lat_deg * lat_deg) / denom);
}

HMMap fcb_map(Raster raster, double sigma_f_deg, bool half_exponent) {
  if (!(sigma_f_deg > 0.0)) throw InputError("fcb: sigma_f must be positive");
  HMMap m(raster);
  for (int i = 0; i < raster.height; ++i)
    for (int j = 0; j < raster.width; ++j)
      m.at(i, j) = fcb_value(raster.lon_of_col(j), raster.lat_of_row(i), sigma_f_deg, half_exponent);
  return m;
}

HMMap combine_fcb(const HMMap& map, const HMMap& fcb, double w1, double w2) {
  if (!(map.raster == fcb.raster)) throw InputError("combine_fcb: raster mismatch");
  if (!(w1 >= 0.0) || !(w2 >= 0.0) || std::abs(w1 + w2 - 1.0) > 1e-9)
    throw InputError("combine_fcb: need non-negative weights summing to 1");
  HMMap out(map.raster);
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] = w1 * fcb.values[k] + w2 * map.values[k];
  return out;
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

// Centered copy and its sum of squares.
std::vector<double> centered(const std::vector<double>& v, double& ss) {
  const double m = mean_of(v);
  std::vector<double> c(v.size());
  ss = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    c[k] = v[k] - m;
    ss += c[k] * c[k];
  }
  return c;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

struct FrameStats {
  std::vector<double> p, g;  // centered predicted and ground truth
  double pp = 0.0, gg = 0.0, pg = 0.0;
};

// Summed CC over frames for one sigma at every w1 on the grid.
std::vector<double> cc_curve(const std::vector<FrameStats>& frames, const HMMap& fcb, int w1_steps) {
  double ff = 0.0;
  const std::vector<double> f = centered(fcb.values, ff);
  std::vector<double> total(std::size_t(w1_steps) + 1, 0.0);
  for (const FrameStats& s : frames) {
    const double fg = dot(f, s.g), fp = dot(f, s.p);
    for (int k = 0; k <= w1_steps; ++k) {
      const double a = double(k) / w1_steps, b = 1.0 - a;
      const double var = a * a * ff + 2.0 * a * b * fp + b * b * s.pp;
      const double cov = a * fg + b * s.pg;
      total[k] += var > 0.0 ? std::clamp(cov / std::sqrt(var * s.gg), -1.0, 1.0) : 0.0;
    }
  }
  return total;
}

}  // namespace

FcbFit fit_fcb(std::span<const HMMap> predicted, std::span<const HMMap> ground_truth, const FcbFitOptions& opts) {
  if (predicted.size() != ground_truth.size()) throw InputError("fit_fcb: sequences differ in length");
  if (predicted.empty()) throw InputError("fit_fcb: no frames");
  if (!(opts.sigma_min > 0.0) || opts.sigma_max < opts.sigma_min || !(opts.coarse_step > 0.0) ||
      !(opts.fine_step > 0.0) || !(opts.w1_step > 0.0) || opts.w1_step > 1.0)
    throw InputError("fit_fcb: bad search grid");
  const Raster raster = predicted.front().raster;

  FcbFit fit;
  std::vector<FrameStats> frames;
  for (std::size_t t = 0; t < predicted.size(); ++t) {
    if (!(predicted[t].raster == raster) || !(ground_truth[t].raster == raster))
      throw InputError("fit_fcb: raster mismatch at frame " + std::to_string(t));
    FrameStats s;
    s.p = centered(predicted[t].values, s.pp);
    s.g = centered(ground_truth[t].values, s.gg);
    if (!(s.pp > 0.0) || !(s.gg > 0.0)) {
      std::fprintf(stderr, "warning: fit_fcb skips frame %zu (constant map, CC undefined)\n", t);
      fit.skipped_frames.push_back(int(t));
      continue;
    }
    s.pg = dot(s.p, s.g);
    frames.push_back(std::move(s));
  }
  if (frames.empty()) throw NumericError("fit_fcb: every frame has a constant map");

  const int w1_steps = int(std::lround(1.0 / opts.w1_step));
  double best = -1e300, best_sigma = opts.sigma_min;
  int best_k = 0;
  auto scan = [&](double sigma) {
    const auto curve = cc_curve(frames, fcb_map(raster, sigma, opts.half_exponent), w1_steps);
    for (int k = 0; k <= w1_steps; ++k)
      if (curve[k] > best || (curve[k] == best && (sigma < best_sigma || (sigma == best_sigma && k < best_k)))) {
        best = curve[k];
        best_sigma = sigma;
        best_k = k;
      }
  };
  auto grid = [](double lo, double hi, double step) {
    std::vector<double> v;
    const int n = int(std::floor((hi - lo) / step + 1e-9));
    for (int k = 0; k <= n; ++k) v.push_back(lo + k * step);
    return v;
  };
  for (double s : grid(opts.sigma_min, opts.sigma_max, opts.coarse_step)) scan(s);
  const double lo = std::max(opts.sigma_min, best_sigma - opts.coarse_step);
  const double hi = std::min(opts.sigma_max, best_sigma + opts.coarse_step);
  for (double s : grid(lo, hi, opts.fine_step)) scan(s);

  fit.params.sigma_f_deg = best_sigma;
  fit.params.w1 = double(best_k) / w1_steps;
  fit.params.w2 = 1.0 - fit.params.w1;
  fit.mean_cc = best / double(frames.size());
  return fit;
}

}  // namespace dhp
