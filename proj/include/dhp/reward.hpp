#pragma once
// Direction and magnitude rewards of a predicted scanpath step against the
// recorded steps of M subjects.
//
// r_alpha = 1/M sum_m g(D_d/rho) g(D_s/varrho)
// r_nu    = 1/M sum_m g((nu - nu_m)/varsigma) g(D_d/rho) g(D_s/varrho)
// with g(x) = exp(-x^2/2), D_d the bearing phase difference in degrees and D_s
// the great-circle distance in radians.

#include <span>

#include "dhp/pandata.hpp"
#include "dhp/sphere.hpp"

namespace dhp {

struct RewardParams {
  double rho_deg = 42.0;       // direction scale
  double varrho_rad = 0.7;     // position-validity scale
  double varsigma_deg = 1.0;   // magnitude scale, degrees per step

  void validate() const;
};

struct GroundTruthEntry {
  GeoPos position;
  ScanpathStep step;
};

// Throw InputError for an empty ground-truth set.
double reward_alpha(const GeoPos& pred_pos, Bearing pred_dir,
                    std::span<const GroundTruthEntry> gt, const RewardParams& params);

double reward_nu(const GeoPos& pred_pos, const ScanpathStep& pred_step,
                 std::span<const GroundTruthEntry> gt, const RewardParams& params);

// d reward_nu / d pred magnitude, with position and direction held fixed.
double grad_reward_nu_wrt_mag(const GeoPos& pred_pos, const ScanpathStep& pred_step,
                              std::span<const GroundTruthEntry> gt, const RewardParams& params);

}  // namespace dhp
