#pragma once
// Panoramic frames, viewport observations, head-movement traces, and HM maps.
//
// Rasters (frames and maps) are equirectangular with sample (row i, col j)
// located at lon = -180 + 360*j/W, lat = 90 - 180*i/H. Column 0 is lon -180,
// row 0 is lat +90, and for even sizes sample (H/2, W/2) is exactly (0, 0).

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dhp/sphere.hpp"

namespace dhp {

inline constexpr int kObsSide = 42;
inline constexpr int kObsCells = kObsSide * kObsSide;
inline constexpr double kFovWidthDeg = 103.0;
inline constexpr double kFovHeightDeg = 60.0;

struct Raster {
  int width = 0;
  int height = 0;

  std::size_t cells() const { return static_cast<std::size_t>(width) * height; }
  double lon_of_col(int j) const { return -180.0 + 360.0 * j / width; }
  double lat_of_row(int i) const { return 90.0 - 180.0 * i / height; }
  // Nearest sample; longitude wraps, latitude clamps to the last row.
  int col_of(double lon) const;
  int row_of(double lat) const;
  std::size_t cell_of(const GeoPos& p) const {
    return static_cast<std::size_t>(row_of(p.lat())) * width + col_of(p.lon());
  }
  friend bool operator==(const Raster&, const Raster&) = default;
};

class Frame {
 public:
  Frame() = default;
  // Requires width == 2*height and width >= 64.
  Frame(int width, int height, std::vector<std::uint8_t> pixels);
  Frame(int width, int height, std::uint8_t fill);

  int width() const { return raster_.width; }
  int height() const { return raster_.height; }
  const Raster& raster() const { return raster_; }
  std::uint8_t at(int row, int col) const { return pixels_[std::size_t(row) * width() + col]; }
  std::uint8_t& at(int row, int col) { return pixels_[std::size_t(row) * width() + col]; }
  std::span<const std::uint8_t> pixels() const { return pixels_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  Raster raster_;
  std::vector<std::uint8_t> pixels_;
};

// 42x42 luma in [0, 1], row-major, row 0 at the top of the viewport.
struct Observation {
  std::array<float, kObsCells> values{};
  friend bool operator==(const Observation&, const Observation&) = default;
};

// Gnomonic 103x60 deg viewport at `center`, zero roll, bilinear samples.
Observation extract_fov(const Frame& frame, const GeoPos& center);

struct HMTrace {
  std::string video_id;
  std::string subject_id;
  std::vector<GeoPos> positions;  // one per frame, at least two
};

struct ScanpathStep {
  Bearing dir;
  ArcLen mag;

  ScanpathStep() = default;
  ScanpathStep(Bearing d, ArcLen m) : dir(m.deg() == 0.0 ? Bearing(0.0) : d), mag(m) {}
};

// Step t moves positions[t] to positions[t+1]. Antipodal neighbours throw.
std::vector<ScanpathStep> derive_scanpath(const HMTrace& trace);
std::vector<ScanpathStep> derive_scanpath(std::span<const GeoPos> positions);

// Replays steps from `start`; inverse of derive_scanpath.
std::vector<GeoPos> integrate_scanpath(const GeoPos& start, std::span<const ScanpathStep> steps);

struct HMMap {
  Raster raster;
  std::vector<double> values;  // row-major, raster.cells() entries

  HMMap() = default;
  explicit HMMap(Raster r, double fill = 0.0) : raster(r), values(r.cells(), fill) {}
  double at(int row, int col) const { return values[std::size_t(row) * raster.width + col]; }
  double& at(int row, int col) { return values[std::size_t(row) * raster.width + col]; }
};

inline constexpr Raster kDefaultMapRaster{256, 128};
inline constexpr double kDefaultSmoothDeg = 10.0;

// Sum of (lon, lat) Gaussians with longitude wrap, scaled to peak 1.
// Result is independent of the order of `positions`.
HMMap build_hm_map(std::span<const GeoPos> positions, Raster raster = kDefaultMapRaster,
                   double sigma_deg = kDefaultSmoothDeg);

}  // namespace dhp
