#include "dhp/reward.hpp"

#include <cmath>

#include "dhp/error.hpp"

namespace dhp {

void RewardParams::validate() const {
  if (!(rho_deg > 0.0) || !(varrho_rad > 0.0) || !(varsigma_deg > 0.0))
    throw InputError("reward parameters must be strictly positive");
}

namespace {

double gauss(double x) { return std::exp(-0.5 * x * x); }

void require_gt(std::span<const GroundTruthEntry> gt) {
  if (gt.empty()) throw InputError("reward: empty ground-truth set");
}

// Direction similarity times position validity for subject m.
double gate(const GeoPos& pred_pos, Bearing pred_dir, const GroundTruthEntry& g,
            const RewardParams& p) {
  const double dd = phase_diff(pred_dir, g.step.dir);
  const double ds = to_rad(great_circle_dist(pred_pos, g.position).deg());
  return gauss(dd / p.rho_deg) * gauss(ds / p.varrho_rad);
}

}  // namespace

double reward_alpha(const GeoPos& pred_pos, Bearing pred_dir,
                    std::span<const GroundTruthEntry> gt, const RewardParams& params) {
  require_gt(gt);
  double sum = 0.0;
  for (const auto& g : gt) sum += gate(pred_pos, pred_dir, g, params);
  return sum / double(gt.size());
}

double reward_nu(const GeoPos& pred_pos, const ScanpathStep& pred_step,
                 std::span<const GroundTruthEntry> gt, const RewardParams& params) {
  require_gt(gt);
  double sum = 0.0;
  for (const auto& g : gt) {
    const double dm = (pred_step.mag.deg() - g.step.mag.deg()) / params.varsigma_deg;
    sum += gauss(dm) * gate(pred_pos, pred_step.dir, g, params);
  }
  return sum / double(gt.size());
}

double grad_reward_nu_wrt_mag(const GeoPos& pred_pos, const ScanpathStep& pred_step,
                              std::span<const GroundTruthEntry> gt, const RewardParams& params) {
  require_gt(gt);
  double sum = 0.0;
  for (const auto& g : gt) {
    const double dm = (pred_step.mag.deg() - g.step.mag.deg()) / params.varsigma_deg;
    sum += -dm / params.varsigma_deg * gauss(dm) * gate(pred_pos, pred_step.dir, g, params);
  }
  return sum / double(gt.size());
}

}  // namespace dhp
