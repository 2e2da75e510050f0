#include "dhp/pandata_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "dhp/error.hpp"
#include "dhp/strict_json.hpp"

namespace dhp {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("bad JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_pgm(const fs::path& path, int width, int height, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

void write_pgm(const fs::path& path, const Frame& frame) {
  write_pgm(path, frame.width(), frame.height(), frame.pixels());
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(char(c));
  }
  return tok;
}

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw InputError("bad integer in " + what + ": '" + s + "'");
  return v;
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw InputError("bad number in " + what + ": '" + s + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string frame_name(const char* pattern, int index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, index);
  return buf;
}

float to_le(float v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto u = std::bit_cast<std::uint32_t>(v);
    u = __builtin_bswap32(u);
    return std::bit_cast<float>(u);
  }
  return v;
}

fs::path sidecar_of(const fs::path& f32_path) {
  fs::path p = f32_path;
  return p.replace_extension(".json");
}

}  // namespace

Frame read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  if (pgm_token(in) != "P5") throw InputError(path.string() + ": not a binary PGM (P5)");
  const int w = parse_int(pgm_token(in), path.string());
  const int h = parse_int(pgm_token(in), path.string());
  const int maxval = parse_int(pgm_token(in), path.string());
  if (maxval != 255) throw InputError(path.string() + ": maxval must be 255");
  if (w <= 0 || h <= 0) throw InputError(path.string() + ": bad dimensions");
  std::vector<std::uint8_t> px(std::size_t(w) * h);
  in.read(reinterpret_cast<char*>(px.data()), std::streamsize(px.size()));
  if (in.gcount() != std::streamsize(px.size())) throw InputError(path.string() + ": truncated pixel data");
  return Frame(w, h, std::move(px));
}

void write_video(const fs::path& dir, const Video& video) {
  if (video.frames.empty()) throw InputError("write_video: no frames");
  fs::create_directories(dir);
  json meta{{"video_id", video.video_id},
            {"width", video.frames[0].width()},
            {"height", video.frames[0].height()},
            {"frame_count", video.frames.size()},
            {"fps", video.fps}};
  write_json_file(dir / "video.json", meta);
  for (std::size_t t = 0; t < video.frames.size(); ++t)
    write_pgm(dir / frame_name("frame_%06d.pgm", int(t)), video.frames[t]);
}

Video read_video(const fs::path& dir) {
  const json meta = read_json_file(dir / "video.json");
  StrictObject obj(meta, (dir / "video.json").string());
  Video v;
  v.video_id = obj.require<std::string>("video_id");
  const int w = obj.require<int>("width");
  const int h = obj.require<int>("height");
  const int n = obj.require<int>("frame_count");
  v.fps = obj.require<double>("fps");
  obj.finish();
  if (n < 1) throw InputError(dir.string() + ": frame_count must be positive");
  v.frames.reserve(n);
  for (int t = 0; t < n; ++t) {
    Frame f = read_pgm(dir / frame_name("frame_%06d.pgm", t));
    if (f.width() != w || f.height() != h) throw InputError(dir.string() + ": frame size differs from manifest");
    v.frames.push_back(std::move(f));
  }
  return v;
}

void write_traces_csv(const fs::path& path, const std::vector<HMTrace>& traces) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "video_id,subject_id,frame,lon_deg,lat_deg\n";
  for (const HMTrace& tr : traces)
    for (std::size_t t = 0; t < tr.positions.size(); ++t)
      out << tr.video_id << ',' << tr.subject_id << ',' << t << ','
          << format_double(tr.positions[t].lon()) << ',' << format_double(tr.positions[t].lat()) << '\n';
}

std::vector<HMTrace> read_traces_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || split_csv(line) != std::vector<std::string>{"video_id", "subject_id", "frame", "lon_deg", "lat_deg"})
    throw InputError(path.string() + ": bad trace CSV header");
  std::map<std::pair<std::string, std::string>, std::map<int, GeoPos>> rows;
  std::vector<std::pair<std::string, std::string>> order;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (f.size() != 5) throw InputError(where + ": expected 5 fields");
    const auto key = std::make_pair(f[0], f[1]);
    if (!rows.count(key)) order.push_back(key);
    const int frame = parse_int(f[2], where);
    if (!rows[key].emplace(frame, GeoPos(parse_double(f[3], where), parse_double(f[4], where))).second)
      throw InputError(where + ": duplicate frame");
  }
  std::vector<HMTrace> out;
  for (const auto& key : order) {
    HMTrace tr{key.first, key.second, {}};
    int expect = 0;
    for (const auto& [frame, pos] : rows[key]) {
      if (frame != expect) throw InputError(path.string() + ": frames of " + key.first + "/" + key.second + " are not contiguous from 0");
      tr.positions.push_back(pos);
      ++expect;
    }
    if (tr.positions.size() < 2) throw InputError(path.string() + ": trace " + key.first + "/" + key.second + " has fewer than 2 frames");
    out.push_back(std::move(tr));
  }
  return out;
}

void write_scanpaths_csv(const fs::path& path, const std::vector<HMTrace>& traces) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "video_id,subject_id,frame,dir_deg,mag_deg\n";
  for (const HMTrace& tr : traces) {
    const auto steps = derive_scanpath(tr);
    for (std::size_t t = 0; t < steps.size(); ++t)
      out << tr.video_id << ',' << tr.subject_id << ',' << t << ',' << format_double(steps[t].dir.deg())
          << ',' << format_double(steps[t].mag.deg()) << '\n';
  }
}

void write_predictions_csv(const fs::path& path, const std::vector<PredictionRow>& rows) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "video_id,subject_id,frame,pred_lon_deg,pred_lat_deg,mo\n";
  for (const PredictionRow& r : rows)
    out << r.video_id << ',' << r.subject_id << ',' << r.frame << ',' << format_double(r.pred.lon()) << ','
        << format_double(r.pred.lat()) << ',' << format_double(r.mo) << '\n';
}

std::vector<PredictionRow> read_predictions_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      split_csv(line) != std::vector<std::string>{"video_id", "subject_id", "frame", "pred_lon_deg", "pred_lat_deg", "mo"})
    throw InputError(path.string() + ": bad prediction CSV header");
  std::vector<PredictionRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (f.size() != 6) throw InputError(where + ": expected 6 fields");
    rows.push_back({f[0], f[1], parse_int(f[2], where), GeoPos(parse_double(f[3], where), parse_double(f[4], where)),
                    parse_double(f[5], where)});
  }
  return rows;
}

void write_map(const fs::path& f32_path, const HMMap& map) {
  std::ofstream out(f32_path, std::ios::binary);
  if (!out) throw InputError("cannot write " + f32_path.string());
  std::vector<float> buf(map.values.size());
  for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = to_le(static_cast<float>(map.values[k]));
  out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size() * sizeof(float)));
  write_json_file(sidecar_of(f32_path), json{{"width", map.raster.width}, {"height", map.raster.height}});
}

HMMap read_map(const fs::path& f32_path) {
  const json side = read_json_file(sidecar_of(f32_path));
  StrictObject obj(side, sidecar_of(f32_path).string());
  const Raster r{obj.require<int>("width"), obj.require<int>("height")};
  obj.finish();
  if (r.width <= 0 || r.height <= 0) throw InputError(f32_path.string() + ": bad dimensions");
  std::ifstream in(f32_path, std::ios::binary);
  if (!in) throw InputError("cannot open " + f32_path.string());
  std::vector<float> buf(r.cells());
  in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size() * sizeof(float)));
  if (in.gcount() != std::streamsize(buf.size() * sizeof(float)))
    throw InputError(f32_path.string() + ": truncated map");
  HMMap map(r);
  for (std::size_t k = 0; k < buf.size(); ++k) map.values[k] = to_le(buf[k]);
  return map;
}

void write_map_sequence(const fs::path& dir, const MapSequence& seq) {
  if (seq.maps.empty()) throw InputError("write_map_sequence: no maps");
  fs::create_directories(dir);
  for (std::size_t t = 0; t < seq.maps.size(); ++t)
    write_map(dir / frame_name("map_%06d.f32", int(t)), seq.maps[t]);
  write_json_file(dir / "maps.json", json{{"video_id", seq.video_id},
                                          {"frame_count", seq.maps.size()},
                                          {"width", seq.maps[0].raster.width},
                                          {"height", seq.maps[0].raster.height}});
}

MapSequence read_map_sequence(const fs::path& dir) {
  const json idx = read_json_file(dir / "maps.json");
  StrictObject obj(idx, (dir / "maps.json").string());
  MapSequence seq;
  seq.video_id = obj.require<std::string>("video_id");
  const int n = obj.require<int>("frame_count");
  const Raster r{obj.require<int>("width"), obj.require<int>("height")};
  obj.finish();
  for (int t = 0; t < n; ++t) {
    HMMap m = read_map(dir / frame_name("map_%06d.f32", t));
    if (!(m.raster == r)) throw InputError(dir.string() + ": map raster differs from index");
    seq.maps.push_back(std::move(m));
  }
  return seq;
}

void export_map_pgm(const fs::path& path, const HMMap& map) {
  double hi = 0.0;
  for (double v : map.values) hi = std::max(hi, v);
  std::vector<std::uint8_t> px(map.values.size());
  for (std::size_t k = 0; k < px.size(); ++k)
    px[k] = hi > 0.0 ? std::uint8_t(std::lround(std::clamp(map.values[k] / hi, 0.0, 1.0) * 255.0)) : 0;
  write_pgm(path, map.raster.width, map.raster.height, px);
}

namespace {

GeoPos geopos_from_json(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 2) throw InputError(ctx + ": expected [lon, lat]");
  return GeoPos(j[0].get<double>(), j[1].get<double>());
}

BlobSpec blob_from_json(const json& j, const std::string& ctx) {
  StrictObject o(j, ctx);
  BlobSpec b;
  const std::string kind = o.get<std::string>("kind", "static");
  if (kind == "static") b.kind = BlobSpec::Kind::Static;
  else if (kind == "orbit") b.kind = BlobSpec::Kind::Orbit;
  else if (kind == "wander") b.kind = BlobSpec::Kind::Wander;
  else if (kind == "jump") b.kind = BlobSpec::Kind::Jump;
  else throw InputError(ctx + ": unknown blob kind '" + kind + "'");
  if (o.has("start")) b.start = geopos_from_json(o.child("start"), ctx + ".start");
  b.sigma_deg = o.get("sigma_deg", b.sigma_deg);
  b.peak = o.get("peak", b.peak);
  b.bearing_deg = o.get("bearing_deg", b.bearing_deg);
  b.random_bearing = o.get("random_bearing", b.random_bearing);
  b.speed_deg = o.get("speed_deg", b.speed_deg);
  b.turn_sigma_deg = o.get("turn_sigma_deg", b.turn_sigma_deg);
  b.hold = o.get("hold", b.hold);
  b.jump_min_deg = o.get("jump_min_deg", b.jump_min_deg);
  b.jump_max_deg = o.get("jump_max_deg", b.jump_max_deg);
  b.compass8 = o.get("compass8", b.compass8);
  b.lat_limit_deg = o.get("lat_limit_deg", b.lat_limit_deg);
  o.finish();
  return b;
}

}  // namespace

SynthSpec synth_spec_from_json(const json& j) {
  StrictObject o(j, "synth spec");
  SynthSpec s;
  s.video_prefix = o.get("video_prefix", s.video_prefix);
  s.videos = o.get("videos", s.videos);
  s.width = o.get("width", s.width);
  s.height = o.get("height", s.height);
  s.frames = o.get("frames", s.frames);
  s.fps = o.get("fps", s.fps);
  s.background = o.get("background", s.background);
  if (o.has("blobs")) {
    const json& arr = o.child("blobs");
    if (!arr.is_array()) throw InputError("synth spec: blobs must be an array");
    s.blobs.clear();
    for (std::size_t k = 0; k < arr.size(); ++k)
      s.blobs.push_back(blob_from_json(arr[k], "synth spec.blobs[" + std::to_string(k) + "]"));
  }
  s.subjects = o.get("subjects", s.subjects);
  s.pursuit_gain = o.get("pursuit_gain", s.pursuit_gain);
  s.noise_bearing_deg = o.get("noise_bearing_deg", s.noise_bearing_deg);
  s.noise_mag_deg = o.get("noise_mag_deg", s.noise_mag_deg);
  s.max_speed_deg = o.get("max_speed_deg", s.max_speed_deg);
  o.finish();
  return s;
}

void write_video_data(const fs::path& video_dir, const VideoData& data) {
  write_video(video_dir, data.video);
  write_traces_csv(video_dir / "traces.csv", data.traces);
}

VideoData read_video_data(const fs::path& video_dir) {
  VideoData d;
  d.video = read_video(video_dir);
  d.traces = read_traces_csv(video_dir / "traces.csv");
  if (d.traces.empty()) throw InputError(video_dir.string() + ": no traces");
  for (const HMTrace& tr : d.traces) {
    if (tr.video_id != d.video.video_id)
      throw InputError(video_dir.string() + ": trace for video '" + tr.video_id + "' in directory of '" +
                       d.video.video_id + "'");
    if (tr.positions.size() != d.video.frames.size())
      throw InputError(video_dir.string() + ": trace " + tr.subject_id + " length differs from frame count");
  }
  return d;
}

void write_dataset(const fs::path& dir, const std::vector<VideoData>& videos) {
  fs::create_directories(dir);
  for (const VideoData& v : videos) write_video_data(dir / v.video.video_id, v);
}

std::vector<VideoData> read_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError(dir.string() + ": not a directory");
  if (fs::exists(dir / "video.json")) return {read_video_data(dir)};
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory() && fs::exists(entry.path() / "video.json")) subdirs.push_back(entry.path());
  std::sort(subdirs.begin(), subdirs.end());
  if (subdirs.empty()) throw InputError(dir.string() + ": no videos found");
  std::vector<VideoData> out;
  for (const auto& d : subdirs) out.push_back(read_video_data(d));
  return out;
}

VideoData to_video_data(const SynthVideo& v) {
  return VideoData{Video{v.video_id, v.fps, v.frames}, v.traces};
}

std::vector<HMTrace> select_subjects(const std::vector<HMTrace>& traces,
                                     const std::vector<std::string>& subjects) {
  std::vector<HMTrace> out;
  for (const HMTrace& tr : traces)
    if (std::find(subjects.begin(), subjects.end(), tr.subject_id) != subjects.end()) out.push_back(tr);
  return out;
}

}  // namespace dhp
