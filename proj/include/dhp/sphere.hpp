#pragma once
// Unit-sphere geometry in geographic coordinates.
//
// Angles cross this interface in degrees. Bearings are measured clockwise from
// due north (direction of increasing latitude), so 90 deg points east.

#include <array>
#include <optional>

namespace dhp {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegPerRad = 180.0 / kPi;

constexpr double to_rad(double deg) { return deg / kDegPerRad; }
constexpr double to_deg(double rad) { return rad * kDegPerRad; }

double wrap_lon(double lon_deg);     // into [-180, 180)
double wrap_bearing(double deg);     // into [0, 360)

class GeoPos {
 public:
  GeoPos() = default;
  // Longitude is wrapped; |lat| beyond 90 (plus rounding slack) throws.
  GeoPos(double lon_deg, double lat_deg);

  double lon() const { return lon_; }
  double lat() const { return lat_; }

  friend bool operator==(const GeoPos&, const GeoPos&) = default;

 private:
  double lon_ = 0.0;
  double lat_ = 0.0;
};

class Bearing {
 public:
  Bearing() = default;
  explicit Bearing(double deg) : deg_(wrap_bearing(deg)) {}
  double deg() const { return deg_; }
  friend bool operator==(const Bearing&, const Bearing&) = default;

 private:
  double deg_ = 0.0;
};

class ArcLen {
 public:
  ArcLen() = default;
  explicit ArcLen(double deg);  // throws on negative or NaN
  double deg() const { return deg_; }
  friend bool operator==(const ArcLen&, const ArcLen&) = default;

 private:
  double deg_ = 0.0;
};

using Vec3 = std::array<double, 3>;

Vec3 to_unit(const GeoPos& p);
GeoPos from_unit(const Vec3& v);  // v need not be normalized
// Local tangent basis at p; at the poles north follows the canonical lon.
Vec3 north_of(const GeoPos& p);
Vec3 east_of(const GeoPos& p);

ArcLen great_circle_dist(const GeoPos& a, const GeoPos& b);

// Minimal absolute difference, in [0, 180].
double phase_diff(Bearing a, Bearing b);

GeoPos geodesic_step(const GeoPos& p, Bearing heading, ArcLen d);

// Initial bearing of the great circle from a to b. Empty when a and b are
// identical or antipodal.
std::optional<Bearing> bearing_between(const GeoPos& a, const GeoPos& b);

}  // namespace dhp
