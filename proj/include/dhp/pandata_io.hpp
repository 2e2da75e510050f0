#pragma once
// On-disk stores: frame directories (video.json + binary PGM frames), trace
// CSVs, and HM map sequences (raw float32 + JSON sidecars).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dhp/pandata.hpp"
#include "dhp/synth.hpp"
#include "json.hpp"

namespace dhp {

namespace fs = std::filesystem;

struct Video {
  std::string video_id;
  double fps = 30.0;
  std::vector<Frame> frames;
};

void write_pgm(const fs::path& path, int width, int height, std::span<const std::uint8_t> bytes);
void write_pgm(const fs::path& path, const Frame& frame);
Frame read_pgm(const fs::path& path);

// <dir>/video.json and <dir>/frame_%06d.pgm, frames numbered from 0.
void write_video(const fs::path& dir, const Video& video);
Video read_video(const fs::path& dir);

// Header: video_id,subject_id,frame,lon_deg,lat_deg
void write_traces_csv(const fs::path& path, const std::vector<HMTrace>& traces);
std::vector<HMTrace> read_traces_csv(const fs::path& path);

// Header: video_id,subject_id,frame,dir_deg,mag_deg
void write_scanpaths_csv(const fs::path& path, const std::vector<HMTrace>& traces);

// <path> raw little-endian float32 row-major; sidecar <path stem>.json {width,height}.
void write_map(const fs::path& f32_path, const HMMap& map);
HMMap read_map(const fs::path& f32_path);

struct MapSequence {
  std::string video_id;
  std::vector<HMMap> maps;
};

// <dir>/map_%06d.f32 (+ sidecars) and <dir>/maps.json index.
void write_map_sequence(const fs::path& dir, const MapSequence& seq);
MapSequence read_map_sequence(const fs::path& dir);

// Linear grey levels, map maximum at 255.
void export_map_pgm(const fs::path& path, const HMMap& map);

// A data directory holds one subdirectory per video with video.json, the
// frames, and traces.csv. Videos are returned sorted by directory name.
struct VideoData {
  Video video;
  std::vector<HMTrace> traces;
};
void write_dataset(const fs::path& dir, const std::vector<VideoData>& videos);
void write_video_data(const fs::path& video_dir, const VideoData& data);
VideoData read_video_data(const fs::path& video_dir);
std::vector<VideoData> read_dataset(const fs::path& dir);
VideoData to_video_data(const SynthVideo& v);

// Online predictions. Header: video_id,subject_id,frame,pred_lon_deg,pred_lat_deg,mo
struct PredictionRow {
  std::string video_id;
  std::string subject_id;
  int frame = 0;
  GeoPos pred;
  double mo = 0.0;
};
void write_predictions_csv(const fs::path& path, const std::vector<PredictionRow>& rows);
std::vector<PredictionRow> read_predictions_csv(const fs::path& path);

// Keeps only the traces whose subject id is listed.
std::vector<HMTrace> select_subjects(const std::vector<HMTrace>& traces,
                                     const std::vector<std::string>& subjects);

SynthSpec synth_spec_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const fs::path& path);
void write_json_file(const fs::path& path, const nlohmann::json& j);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace dhp
