#include "dhp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "dhp/error.hpp"

namespace dhp {
namespace {

void validate(const SynthSpec& s) {
  if (s.width != 2 * s.height || s.width < 64) throw InputError("synth: need width == 2*height >= 64");
  if (s.frames < 2) throw InputError("synth: need at least 2 frames");
  if (s.videos < 1) throw InputError("synth: need at least one video");
  if (s.subjects < 1) throw InputError("synth: need at least one subject");
  if (s.blobs.empty()) throw InputError("synth: need at least one blob");
  if (s.pursuit_gain < 0.0 || s.noise_bearing_deg < 0.0 || s.noise_mag_deg < 0.0 ||
      s.max_speed_deg < 0.0)
    throw InputError("synth: pursuit parameters must be non-negative");
  for (const BlobSpec& b : s.blobs) {
    if (!(b.sigma_deg > 0.0)) throw InputError("synth: blob sigma must be positive");
    if (b.hold < 1) throw InputError("synth: jump hold must be >= 1");
    if (b.jump_min_deg < 0.0 || b.jump_max_deg < b.jump_min_deg || b.jump_max_deg > 90.0)
      throw InputError("synth: need 0 <= jump_min <= jump_max <= 90");
    if (b.speed_deg < 0.0) throw InputError("synth: speed must be non-negative");
    if (!(b.lat_limit_deg > 0.0) || b.lat_limit_deg > 90.0)
      throw InputError("synth: lat_limit must be in (0, 90]");
  }
}

// Point at arc length s (any sign or size) along the great circle leaving
// `start` with `heading`.
GeoPos great_circle_point(const GeoPos& start, Bearing heading, double s_deg) {
  const Vec3 u = to_unit(start);
  const Vec3 n = north_of(start);
  const Vec3 e = east_of(start);
  const double th = to_rad(heading.deg());
  const double s = to_rad(s_deg);
  Vec3 out;
  for (int k = 0; k < 3; ++k)
    out[k] = std::cos(s) * u[k] + std::sin(s) * (std::cos(th) * n[k] + std::sin(th) * e[k]);
  return from_unit(out);
}

// Heading on arrival after travelling from `from` to `to` along a great circle.
Bearing arrival_heading(const GeoPos& from, const GeoPos& to, Bearing fallback) {
  const auto back = bearing_between(to, from);
  return back ? Bearing(back->deg() + 180.0) : fallback;
}

std::vector<GeoPos> blob_path(const BlobSpec& b, int frames, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<GeoPos> path;
  path.reserve(frames);
  path.push_back(b.start);
  Bearing heading(b.random_bearing ? 360.0 * unit(rng) : b.bearing_deg);

  for (int t = 1; t < frames; ++t) {
    const GeoPos& cur = path.back();
    switch (b.kind) {
      case BlobSpec::Kind::Static:
        path.push_back(cur);
        break;
      case BlobSpec::Kind::Orbit:
        path.push_back(great_circle_point(b.start, heading, b.speed_deg * t));
        break;
      case BlobSpec::Kind::Wander: {
        Bearing h(heading.deg() + b.turn_sigma_deg * gauss(rng));
        GeoPos next = geodesic_step(cur, h, ArcLen(b.speed_deg));
        if (std::abs(next.lat()) > b.lat_limit_deg) {
          h = Bearing(180.0 - h.deg());  // mirror the north/south component
          next = geodesic_step(cur, h, ArcLen(b.speed_deg));
        }
        heading = arrival_heading(cur, next, h);
        path.push_back(next);
        break;
      }
      case BlobSpec::Kind::Jump: {
        if (t % b.hold != 0) {
          path.push_back(cur);
          break;
        }
        GeoPos next = cur;
        for (int attempt = 0; attempt < 1000; ++attempt) {
          const double hd = b.compass8 ? 45.0 * std::floor(8.0 * unit(rng)) : 360.0 * unit(rng);
          const double mag = b.jump_min_deg + (b.jump_max_deg - b.jump_min_deg) * unit(rng);
          next = geodesic_step(cur, Bearing(hd), ArcLen(mag));
          if (std::abs(next.lat()) <= b.lat_limit_deg) break;
          next = cur;
        }
        path.push_back(next);
        break;
      }
    }
  }
  return path;
}

std::vector<Vec3> pixel_directions(const Raster& r) {
  std::vector<Vec3> dirs(r.cells());
  for (int i = 0; i < r.height; ++i)
    for (int j = 0; j < r.width; ++j)
      dirs[std::size_t(i) * r.width + j] = to_unit(GeoPos(r.lon_of_col(j), r.lat_of_row(i)));
  return dirs;
}

Frame render(const SynthSpec& spec, const std::vector<Vec3>& dirs,
             const std::vector<GeoPos>& centers) {
  std::vector<double> acc(dirs.size(), spec.background);
  for (std::size_t b = 0; b < centers.size(); ++b) {
    const BlobSpec& blob = spec.blobs[b];
    const Vec3 c = to_unit(centers[b]);
    const double inv2s2 = 1.0 / (2.0 * blob.sigma_deg * blob.sigma_deg);
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      const double cosd = std::clamp(dirs[k][0] * c[0] + dirs[k][1] * c[1] + dirs[k][2] * c[2], -1.0, 1.0);
      const double d = to_deg(std::acos(cosd));
      acc[k] += blob.peak * std::exp(-d * d * inv2s2);
    }
  }
  std::vector<std::uint8_t> px(acc.size());
  for (std::size_t k = 0; k < acc.size(); ++k)
    px[k] = static_cast<std::uint8_t>(std::lround(std::clamp(acc[k], 0.0, 255.0)));
  return Frame(spec.width, spec.height, std::move(px));
}

std::vector<GeoPos> pursue(const SynthSpec& spec, const std::vector<GeoPos>& target,
                           std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<GeoPos> pos;
  pos.reserve(target.size());
  pos.emplace_back(0.0, 0.0);
  for (std::size_t t = 0; t + 1 < target.size(); ++t) {
    const GeoPos& p = pos.back();
    const auto brg = bearing_between(p, target[t]);
    double heading = brg ? brg->deg() : 0.0;
    double mag = brg ? spec.pursuit_gain * great_circle_dist(p, target[t]).deg() : 0.0;
    // Draw both noises every frame so the stream does not depend on geometry.
    const double nb = gauss(rng);
    const double nm = gauss(rng);
    heading += spec.noise_bearing_deg * nb;
    mag = std::clamp(mag + spec.noise_mag_deg * nm, 0.0, spec.max_speed_deg);
    pos.push_back(geodesic_step(p, Bearing(heading), ArcLen(mag)));
  }
  return pos;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(a),
                    std::uint32_t(b)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (std::uint64_t(out[1]) << 32) | out[0];
}

}  // namespace

Frame render_blobs(const SynthSpec& spec, const std::vector<GeoPos>& centers) {
  validate(spec);
  return render(spec, pixel_directions(Raster{spec.width, spec.height}), centers);
}

std::vector<SynthVideo> gen_synthetic(const SynthSpec& spec, std::uint64_t seed) {
  validate(spec);
  const std::vector<Vec3> dirs = pixel_directions(Raster{spec.width, spec.height});
  std::vector<SynthVideo> out;
  for (int v = 0; v < spec.videos; ++v) {
    SynthVideo video;
    char id[64];
    std::snprintf(id, sizeof id, "%s_%03d", spec.video_prefix.c_str(), v);
    video.video_id = id;
    video.fps = spec.fps;

    for (std::size_t b = 0; b < spec.blobs.size(); ++b) {
      std::mt19937_64 rng(mix(seed, 2 * std::uint64_t(v), b));
      video.blob_paths.push_back(blob_path(spec.blobs[b], spec.frames, rng));
    }
    std::vector<GeoPos> centers(spec.blobs.size());
    for (int t = 0; t < spec.frames; ++t) {
      for (std::size_t b = 0; b < spec.blobs.size(); ++b) centers[b] = video.blob_paths[b][t];
      video.frames.push_back(render(spec, dirs, centers));
    }
    for (int m = 0; m < spec.subjects; ++m) {
      std::mt19937_64 rng(mix(seed, 2 * std::uint64_t(v) + 1, std::uint64_t(m)));
      HMTrace trace;
      trace.video_id = video.video_id;
      char sid[32];
      std::snprintf(sid, sizeof sid, "s%02d", m);
      trace.subject_id = sid;
      trace.positions = pursue(spec, video.blob_paths[std::size_t(m) % spec.blobs.size()], rng);
      video.traces.push_back(std::move(trace));
    }
    out.push_back(std::move(video));
  }
  return out;
}

}  // namespace dhp
