#include "dhp/pandata.hpp"

#include <algorithm>
#include <cmath>

#include "dhp/error.hpp"
#include "dhp/simd/kernels.hpp"

namespace dhp {

int Raster::col_of(double lon) const {
  long j = std::lround((lon + 180.0) * width / 360.0) % width;
  if (j < 0) j += width;
  return static_cast<int>(j);
}

int Raster::row_of(double lat) const {
  const long i = std::lround((90.0 - lat) * height / 180.0);
  return static_cast<int>(std::clamp<long>(i, 0, height - 1));
}

namespace {

void check_frame_dims(int width, int height) {
  if (width != 2 * height || width < 64)
    throw InputError("Frame: need width == 2*height and width >= 64, got " +
                     std::to_string(width) + "x" + std::to_string(height));
}

struct FovGrid {
  std::array<double, kObsSide> u{};  // horizontal tangent-plane coordinate per column
  std::array<double, kObsSide> v{};  // vertical, per row (row 0 at the top)
};

const FovGrid& fov_grid() {
  static const FovGrid grid = [] {
    FovGrid g;
    const double tu = std::tan(to_rad(kFovWidthDeg / 2));
    const double tv = std::tan(to_rad(kFovHeightDeg / 2));
    for (int k = 0; k < kObsSide; ++k) {
      const double s = 2.0 * (k + 0.5) / kObsSide - 1.0;
      g.u[k] = s * tu;
      g.v[k] = -s * tv;
    }
    return g;
  }();
  return grid;
}

}  // namespace

Frame::Frame(int width, int height, std::vector<std::uint8_t> pixels)
    : raster_{width, height}, pixels_(std::move(pixels)) {
  check_frame_dims(width, height);
  if (pixels_.size() != raster_.cells()) throw InputError("Frame: pixel count mismatch");
}

Frame::Frame(int width, int height, std::uint8_t fill)
    : raster_{width, height}, pixels_(raster_.cells(), fill) {
  check_frame_dims(width, height);
}

Observation extract_fov(const Frame& frame, const GeoPos& center) {
  const FovGrid& grid = fov_grid();
  const int w = frame.width();
  const int h = frame.height();
  const double phi = to_rad(center.lat());
  const double cphi = std::cos(phi), sphi = std::sin(phi);
  // Sampling works relative to the centre longitude; the centre column is
  // split into integer and fractional parts so that shifting the centre by
  // whole columns shifts every sample by exactly the same amount.
  const double cx = (center.lon() + 180.0) * w / 360.0;
  const double cx_int = std::floor(cx);
  const double cx_frac = cx - cx_int;

  Observation obs;
  for (int r = 0; r < kObsSide; ++r) {
    const double v = grid.v[r];
    for (int c = 0; c < kObsSide; ++c) {
      const double u = grid.u[c];
      // centre (cphi, 0, sphi) + u * east (0, 1, 0) + v * north (-sphi, 0, cphi)
      const double dx = cphi - v * sphi;
      const double dy = u;
      const double dz = sphi + v * cphi;
      const double lon_rel = to_deg(std::atan2(dy, dx));
      const double lat = to_deg(std::atan2(dz, std::hypot(dx, dy)));

      const double xl = lon_rel * w / 360.0;
      const double xl_int = std::floor(xl);
      double frac = (xl - xl_int) + cx_frac;
      const double carry = std::floor(frac);
      frac -= carry;
      long j0 = static_cast<long>(xl_int + cx_int + carry) % w;
      if (j0 < 0) j0 += w;
      const long j1 = (j0 + 1) % w;

      const double y = (90.0 - lat) * h / 180.0;
      const double y_int = std::floor(y);
      const double fy = y - y_int;
      const int i0 = std::clamp(static_cast<int>(y_int), 0, h - 1);
      const int i1 = std::clamp(static_cast<int>(y_int) + 1, 0, h - 1);

      const double top = (1.0 - frac) * frame.at(i0, int(j0)) + frac * frame.at(i0, int(j1));
      const double bot = (1.0 - frac) * frame.at(i1, int(j0)) + frac * frame.at(i1, int(j1));
      const double val = ((1.0 - fy) * top + fy * bot) / 255.0;
      obs.values[std::size_t(r) * kObsSide + c] = static_cast<float>(std::clamp(val, 0.0, 1.0));
    }
  }
  return obs;
}

std::vector<ScanpathStep> derive_scanpath(std::span<const GeoPos> positions) {
  if (positions.size() < 2) throw InputError("derive_scanpath: need at least two positions");
  std::vector<ScanpathStep> steps;
  steps.reserve(positions.size() - 1);
  for (std::size_t t = 0; t + 1 < positions.size(); ++t) {
    const ArcLen d = great_circle_dist(positions[t], positions[t + 1]);
    const auto b = bearing_between(positions[t], positions[t + 1]);
    if (b) {
      steps.emplace_back(*b, d);
    } else if (d.deg() < 90.0) {
      steps.emplace_back(Bearing(0.0), ArcLen(0.0));
    } else {
      throw InputError("derive_scanpath: antipodal consecutive positions at frame " +
                       std::to_string(t));
    }
  }
  return steps;
}

std::vector<ScanpathStep> derive_scanpath(const HMTrace& trace) {
  return derive_scanpath(std::span<const GeoPos>(trace.positions));
}

std::vector<GeoPos> integrate_scanpath(const GeoPos& start, std::span<const ScanpathStep> steps) {
  std::vector<GeoPos> out;
  out.reserve(steps.size() + 1);
  out.push_back(start);
  for (const ScanpathStep& s : steps) out.push_back(geodesic_step(out.back(), s.dir, s.mag));
  return out;
}

HMMap build_hm_map(std::span<const GeoPos> positions, Raster raster, double sigma_deg) {
  if (positions.empty()) throw InputError("build_hm_map: no positions");
  if (!(sigma_deg > 0.0)) throw InputError("build_hm_map: sigma must be positive");
  if (raster.width <= 0 || raster.height <= 0) throw InputError("build_hm_map: empty raster");

  std::vector<GeoPos> sorted(positions.begin(), positions.end());
  std::sort(sorted.begin(), sorted.end(), [](const GeoPos& a, const GeoPos& b) {
    return a.lon() != b.lon() ? a.lon() < b.lon() : a.lat() < b.lat();
  });

  HMMap map(raster);
  const double inv2s2 = 1.0 / (2.0 * sigma_deg * sigma_deg);
  std::vector<double> colw(raster.width);
  for (const GeoPos& p : sorted) {
    for (int j = 0; j < raster.width; ++j) {
      double dl = std::abs(raster.lon_of_col(j) - p.lon());
      if (dl > 180.0) dl = 360.0 - dl;
      colw[j] = std::exp(-dl * dl * inv2s2);
    }
    for (int i = 0; i < raster.height; ++i) {
      const double dphi = raster.lat_of_row(i) - p.lat();
      const double roww = std::exp(-dphi * dphi * inv2s2);
      if (roww == 0.0) continue;
      simd::axpy(roww, std::span<const double>(colw),
                 std::span<double>(map.values).subspan(std::size_t(i) * raster.width,
                                                       raster.width));
    }
  }
  const double peak = *std::max_element(map.values.begin(), map.values.end());
  if (!(peak > 0.0)) throw NumericError("build_hm_map: all-zero map");
  for (double& v : map.values) v /= peak;
  return map;
}

}  // namespace dhp
