#pragma once
// Synthetic panoramic videos: bright Gaussian blobs on a dark sphere, watched
// by scripted subjects that start at the front centre and pursue a blob.

#include <cstdint>
#include <string>
#include <vector>

#include "dhp/pandata.hpp"

namespace dhp {

struct BlobSpec {
  enum class Kind { Static, Orbit, Wander, Jump };

  Kind kind = Kind::Static;
  GeoPos start{0.0, 0.0};
  double sigma_deg = 8.0;  // blob radius (Gaussian std, great-circle degrees)
  double peak = 255.0;

  // Orbit / Wander: constant speed along a heading.
  double bearing_deg = 90.0;
  bool random_bearing = false;  // draw the initial heading per video
  double speed_deg = 1.0;
  double turn_sigma_deg = 0.0;  // Wander: heading random walk per frame

  // Jump: every `hold` frames, move by a random arc in [jump_min, jump_max].
  int hold = 1;
  double jump_min_deg = 15.0;
  double jump_max_deg = 25.0;
  bool compass8 = false;  // restrict jump headings to the 8 compass bearings

  double lat_limit_deg = 60.0;  // trajectories stay within |lat| <= limit
};

struct SynthSpec {
  std::string video_prefix = "synth";
  int videos = 1;
  int width = 64;
  int height = 32;
  int frames = 200;
  double fps = 30.0;
  double background = 16.0;
  std::vector<BlobSpec> blobs{BlobSpec{}};

  int subjects = 8;  // subject m pursues blob m % blobs.size()
  double pursuit_gain = 1.0;
  double noise_bearing_deg = 0.0;
  double noise_mag_deg = 0.0;
  double max_speed_deg = 180.0;
};

struct SynthVideo {
  std::string video_id;
  double fps = 30.0;
  std::vector<Frame> frames;
  std::vector<HMTrace> traces;
  std::vector<std::vector<GeoPos>> blob_paths;  // [blob][frame]
};

// Deterministic given (spec, seed). Throws InputError on invalid specs.
std::vector<SynthVideo> gen_synthetic(const SynthSpec& spec, std::uint64_t seed);

// Renders one frame with blobs at the given centres.
Frame render_blobs(const SynthSpec& spec, const std::vector<GeoPos>& centers);

}  // namespace dhp
