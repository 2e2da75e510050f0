#pragma once
// Scores predicted map sequences against recorded viewers: CC against the
// viewers' own map, NSS and shuffled AUC at the viewers' positions.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dhp/config.hpp"
#include "dhp/offline.hpp"
#include "dhp/pandata.hpp"
#include "json.hpp"

namespace dhp {

struct EvalVideo {
  std::string video_id;
  std::vector<HMMap> maps;       // one per frame
  std::vector<HMTrace> traces;   // viewers of this video, same frame count
};

struct FrameScores {
  int frame = 0;
  std::optional<double> cc;  // empty when a map is constant
  std::optional<double> nss;
  double sauc = 0.5;
};

struct VideoScores {
  std::string video_id;
  double cc = 0.0;   // means over frames where the score is defined
  double nss = 0.0;
  double sauc = 0.0;
  std::vector<FrameScores> per_frame;
};

// Shuffled-AUC negatives for frame t of video v are the viewer positions at
// `cfg.sauc_other_frames` frames drawn from the other videos, or from other
// frames of the same video when only one video is evaluated.
std::vector<VideoScores> evaluate_maps(std::span<const EvalVideo> videos, const EvalConfig& cfg, double sigma_smooth_deg,
                                       const std::optional<FcbParams>& fcb = std::nullopt,
                                       bool fcb_half_exponent = false);

nlohmann::json eval_report_json(std::span<const VideoScores> scores);
void write_eval_csv(const std::filesystem::path& path, std::span<const VideoScores> scores);

}  // namespace dhp
