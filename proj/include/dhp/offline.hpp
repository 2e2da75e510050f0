#pragma once
// Offline HM-map prediction from N stochastic workflows, and the front-centre
// bias (FCB) prior that is blended into the predicted maps.

#include <cstdint>
#include <span>
#include <vector>

#include "dhp/net.hpp"
#include "dhp/pandata.hpp"
#include "json.hpp"

namespace dhp {

struct PredictOptions {
  int workflows = 58;
  std::uint64_t seed = 1;
  bool greedy = false;  // argmax directions; every workflow then coincides
  Raster raster = kDefaultMapRaster;
  double sigma_smooth_deg = kDefaultSmoothDeg;
  int threads = 1;
};

// positions[w][t]: workflow w's position at frame t. Each workflow starts at
// (0, 0) and samples categorically (no epsilon mixing).
std::vector<std::vector<GeoPos>> run_workflows(std::span<const Frame> frames, const net::Params<float>& params,
                                               const PredictOptions& opts);

// One map per frame from the positions of all workflows at that frame.
std::vector<HMMap> maps_from_workflows(const std::vector<std::vector<GeoPos>>& positions, Raster raster,
                                       double sigma_smooth_deg);

std::vector<HMMap> predict_hm_maps(std::span<const Frame> frames, const net::Params<float>& params,
                                   const PredictOptions& opts);

// Maps of recorded viewers: frame t is built from every trace's position at t.
std::vector<HMMap> ground_truth_maps(std::span<const HMTrace> traces, Raster raster, double sigma_smooth_deg);

struct FcbParams {
  double sigma_f_deg = 21.1;
  double w1 = 0.48;  // weight of the FCB map
  double w2 = 0.52;  // weight of the predicted map

  void validate() const;
  nlohmann::json to_json() const;
  static FcbParams from_json(const nlohmann::json& j);
};

// exp(-(dlon^2 + dlat^2) / sigma^2) around (0, 0) with wrapped dlon. With
// `half_exponent` the denominator is 2 sigma^2.
double fcb_value(double lon_deg, double lat_deg, double sigma_f_deg, bool half_exponent = false);
HMMap fcb_map(Raster raster, double sigma_f_deg, bool half_exponent = false);

// w1 * fcb + w2 * map, cell by cell.
HMMap combine_fcb(const HMMap& map, const HMMap& fcb, double w1, double w2);

struct FcbFitOptions {
  double sigma_min = 5.0;
  double sigma_max = 60.0;
  double coarse_step = 5.0;
  double fine_step = 0.5;
  double w1_step = 0.01;
  bool half_exponent = false;
};

struct FcbFit {
  FcbParams params;
  double mean_cc = 0.0;             // at the optimum, over used frames
  std::vector<int> skipped_frames;  // constant predicted or ground-truth map
};

// Maximises the summed CC of combine_fcb(pred_t, fcb, w1, 1 - w1) against
// gt_t. Throws NumericError when every frame is degenerate.
FcbFit fit_fcb(std::span<const HMMap> predicted, std::span<const HMMap> ground_truth,
               const FcbFitOptions& opts = {});

}  // namespace dhp
