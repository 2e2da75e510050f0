#pragma once
// Map and viewport evaluation: CC, NSS, shuffled AUC, and mean overlap (MO).

#include <span>
#include <vector>

#include "dhp/pandata.hpp"

namespace dhp {

enum class Weighting {
  Unweighted,  // plain raster cells; used for all reported numbers
  SolidAngle,  // rows weighted by cos(latitude)
};

// Pearson correlation over cells. NumericError if either map is constant.
double cc(const HMMap& a, const HMMap& b, Weighting w = Weighting::Unweighted);

// Mean z-score of the map at the cells containing `positions`.
double nss(const HMMap& map, std::span<const GeoPos> positions,
           Weighting w = Weighting::Unweighted);

// ROC area of map values at positives vs negatives, ties count one half.
double shuffled_auc(const HMMap& map, std::span<const GeoPos> positives,
                    std::span<const GeoPos> negatives);

// Rank-statistic AUC over raw scores.
double auc_from_scores(std::span<const double> positives, std::span<const double> negatives);

struct MoResolution {
  int width = 512;
  int height = 256;
};

// Whether `point` falls in the 103x60 deg zero-roll viewport centred at `center`,
// judged by azimuth/elevation in the viewport's own frame.
bool viewport_contains(const GeoPos& center, const GeoPos& point);

// Intersection over union of the two viewports' solid angles.
double mo(const GeoPos& center_p, const GeoPos& center_g, MoResolution res = {});

}  // namespace dhp
