#pragma once
// Run configuration: one JSON document (schema_version 1) holding every
// hyperparameter. Omitted keys take the defaults below; unknown keys are
// errors.

#include <cstdint>
#include <filesystem>

#include "dhp/metrics.hpp"
#include "dhp/offline.hpp"
#include "dhp/online.hpp"
#include "dhp/reward.hpp"
#include "dhp/train.hpp"
#include "json.hpp"

namespace dhp {

inline constexpr int kConfigSchemaVersion = 1;

struct EvalConfig {
  int sauc_other_frames = 10;  // negatives: viewer positions of this many other frames
  std::uint64_t sauc_seed = 1;
  MoResolution mo{512, 256};
};

struct RunConfig {
  RewardParams reward;
  double nu_max = 10.0;
  TrainConfig train;
  Raster map_raster = kDefaultMapRaster;
  double sigma_smooth_deg = kDefaultSmoothDeg;
  PredictOptions offline;
  FcbFitOptions fcb;
  OnlineConfig online;
  EvalConfig eval;

  // Pushes the shared settings (reward, nu_max, map raster) into the sections.
  void propagate();
  nlohmann::json to_json() const;
};

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace dhp
