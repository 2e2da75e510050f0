#include "dhp/evaluate.hpp"

#include <fstream>
#include <random>

#include "dhp/error.hpp"
#include "dhp/metrics.hpp"
#include "dhp/pandata_io.hpp"

namespace dhp {

namespace {

std::vector<GeoPos> positions_at(const std::vector<HMTrace>& traces, std::size_t t) {
  std::vector<GeoPos> out;
  for (const HMTrace& tr : traces) out.push_back(tr.positions.at(t));
  return out;
}

}  // namespace

std::vector<VideoScores> evaluate_maps(std::span<const EvalVideo> videos, const EvalConfig& cfg, double sigma_smooth_deg,
                                       const std::optional<FcbParams>& fcb, bool fcb_half_exponent) {
  if (videos.empty()) throw InputError("evaluate: no videos");
  for (const EvalVideo& v : videos) {
    if (v.traces.empty()) throw InputError("evaluate: no traces for " + v.video_id);
    if (v.maps.empty()) throw InputError("evaluate: no maps for " + v.video_id);
    for (const HMTrace& tr : v.traces)
      if (tr.positions.size() != v.maps.size())
        throw InputError("evaluate: " + v.video_id + "/" + tr.subject_id + " length differs from the map count");
  }
  std::vector<VideoScores> out;
  for (std::size_t vi = 0; vi < videos.size(); ++vi) {
    const EvalVideo& v = videos[vi];
    const Raster raster = v.maps.front().raster;
    std::optional<HMMap> prior;
    if (fcb) prior = fcb_map(raster, fcb->sigma_f_deg, fcb_half_exponent);
    VideoScores vs;
    vs.video_id = v.video_id;
    int n_cc = 0, n_nss = 0;
    for (std::size_t t = 0; t < v.maps.size(); ++t) {
      const HMMap map = prior ? combine_fcb(v.maps[t], *prior, fcb->w1, fcb->w2) : v.maps[t];
      const auto pos = positions_at(v.traces, t);
      FrameScores fs;
      fs.frame = int(t);
      try {
        fs.cc = cc(map, build_hm_map(pos, raster, sigma_smooth_deg));
      } catch (const NumericError&) {
      }
      try {
        fs.nss = nss(map, pos);
      } catch (const NumericError&) {
      }

      std::mt19937_64 rng(cfg.sauc_seed ^ (0x9e3779b97f4a7c15ULL * (vi + 1)) ^ (0xbf58476d1ce4e5b9ULL * (t + 1)));
      std::vector<GeoPos> negatives;
      for (int k = 0; k < cfg.sauc_other_frames; ++k) {
        const EvalVideo* src = &v;
        std::size_t frame = 0;
        if (videos.size() > 1) {
          std::size_t other = std::uniform_int_distribution<std::size_t>(0, videos.size() - 2)(rng);
          if (other >= vi) ++other;
          src = &videos[other];
          frame = std::uniform_int_distribution<std::size_t>(0, src->maps.size() - 1)(rng);
        } else {
          if (v.maps.size() < 2) break;
          frame = std::uniform_int_distribution<std::size_t>(0, v.maps.size() - 2)(rng);
          if (frame >= t) ++frame;
        }
        for (const GeoPos& p : positions_at(src->traces, frame)) negatives.push_back(p);
      }
      if (!negatives.empty()) fs.sauc = shuffled_auc(map, pos, negatives);

      if (fs.cc) vs.cc += *fs.cc, ++n_cc;
      if (fs.nss) vs.nss += *fs.nss, ++n_nss;
      vs.sauc += fs.sauc;
      vs.per_frame.push_back(fs);
    }
    vs.cc = n_cc ? vs.cc / n_cc : 0.0;
    vs.nss = n_nss ? vs.nss / n_nss : 0.0;
    vs.sauc /= double(vs.per_frame.size());
    out.push_back(std::move(vs));
  }
  return out;
}

nlohmann::json eval_report_json(std::span<const VideoScores> scores) {
  nlohmann::json j = nlohmann::json::object();
  for (const VideoScores& v : scores) {
    nlohmann::json frames = nlohmann::json::array();
    for (const FrameScores& f : v.per_frame)
      frames.push_back({{"frame", f.frame},
                        {"cc", f.cc ? nlohmann::json(*f.cc) : nlohmann::json(nullptr)},
                        {"nss", f.nss ? nlohmann::json(*f.nss) : nlohmann::json(nullptr)},
                        {"sauc", f.sauc}});
    j[v.video_id] = {{"cc", v.cc}, {"nss", v.nss}, {"sauc", v.sauc}, {"per_frame", frames}};
  }
  return j;
}

void write_eval_csv(const std::filesystem::path& path, std::span<const VideoScores> scores) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "video_id,frame,cc,nss,sauc\n";
  for (const VideoScores& v : scores)
    for (const FrameScores& f : v.per_frame)
      out << v.video_id << ',' << f.frame << ',' << (f.cc ? format_double(*f.cc) : "") << ','
          << (f.nss ? format_double(*f.nss) : "") << ',' << format_double(f.sauc) << '\n';
}

}  // namespace dhp
