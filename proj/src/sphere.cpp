#include "dhp/sphere.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "dhp/error.hpp"

namespace dhp {

double wrap_lon(double lon_deg) {
  if (lon_deg >= -180.0 && lon_deg < 180.0) return lon_deg;
  double x = std::fmod(lon_deg + 180.0, 360.0);
  if (x < 0.0) x += 360.0;
  double lon = x - 180.0;
  if (lon >= 180.0) lon -= 360.0;
  return lon;
}

double wrap_bearing(double deg) {
  double x = std::fmod(deg, 360.0);
  if (x < 0.0) x += 360.0;
  if (x >= 360.0) x -= 360.0;
  return x;
}

GeoPos::GeoPos(double lon_deg, double lat_deg) {
  if (!std::isfinite(lon_deg) || !std::isfinite(lat_deg))
    throw InputError("GeoPos: non-finite coordinate");
  constexpr double kSlack = 1e-9;
  if (std::abs(lat_deg) > 90.0 + kSlack)
    throw InputError("GeoPos: latitude out of range: " + std::to_string(lat_deg));
  if (lat_deg > 90.0) lat_deg = 90.0;
  if (lat_deg < -90.0) lat_deg = -90.0;
  lat_ = lat_deg;
  lon_ = std::abs(lat_deg) == 90.0 ? 0.0 : wrap_lon(lon_deg);
}

ArcLen::ArcLen(double deg) : deg_(deg) {
  if (!(deg >= 0.0) || !std::isfinite(deg)) throw InputError("ArcLen: must be finite and >= 0");
}

Vec3 to_unit(const GeoPos& p) {
  const double lat = to_rad(p.lat());
  const double lon = to_rad(p.lon());
  return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

GeoPos from_unit(const Vec3& v) {
  const double h = std::hypot(v[0], v[1]);
  const double lat = to_deg(std::atan2(v[2], h));
  const double lon = h == 0.0 ? 0.0 : to_deg(std::atan2(v[1], v[0]));
  return GeoPos(lon, lat);
}

Vec3 north_of(const GeoPos& p) {
  const double lat = to_rad(p.lat());
  const double lon = to_rad(p.lon());
  return {-std::sin(lat) * std::cos(lon), -std::sin(lat) * std::sin(lon), std::cos(lat)};
}

Vec3 east_of(const GeoPos& p) {
  const double lon = to_rad(p.lon());
  return {-std::sin(lon), std::cos(lon), 0.0};
}

namespace {

double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

}  // namespace

ArcLen great_circle_dist(const GeoPos& pa, const GeoPos& pb) {
  // Haversine below 90 degrees, where it keeps full relative precision;
  // Vincenty's atan2 form beyond, where haversine degrades. Fixed argument
  // order keeps the result exactly symmetric.
  const bool swap = std::make_pair(pb.lon(), pb.lat()) < std::make_pair(pa.lon(), pa.lat());
  const GeoPos& a = swap ? pb : pa;
  const GeoPos& b = swap ? pa : pb;
  const double p1 = to_rad(a.lat()), p2 = to_rad(b.lat());
  const double dl = to_rad(b.lon() - a.lon());
  const double c1 = std::cos(p1), c2 = std::cos(p2);
  const double sp = std::sin(0.5 * to_rad(b.lat() - a.lat())), sl = std::sin(0.5 * dl);
  const double h = sp * sp + c1 * c2 * sl * sl;
  if (h < 0.5) return ArcLen(to_deg(2.0 * std::asin(std::sqrt(h))));
  const double s1 = std::sin(p1), s2 = std::sin(p2);
  const double cd = std::cos(dl), sd = std::sin(dl);
  const double x = c2 * sd;
  const double y = c1 * s2 - s1 * c2 * cd;
  return ArcLen(to_deg(std::atan2(std::hypot(x, y), s1 * s2 + c1 * c2 * cd)));
}

double phase_diff(Bearing a, Bearing b) {
  const double d = std::fmod(std::abs(a.deg() - b.deg()), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

GeoPos geodesic_step(const GeoPos& p, Bearing heading, ArcLen d) {
  const Vec3 u = to_unit(p);
  const Vec3 n = north_of(p);
  const Vec3 e = east_of(p);
  const double th = to_rad(heading.deg());
  const double dd = to_rad(d.deg());
  const double ct = std::cos(th), st = std::sin(th);
  const double cd = std::cos(dd), sd = std::sin(dd);
  Vec3 out;
  for (int k = 0; k < 3; ++k) out[k] = cd * u[k] + sd * (ct * n[k] + st * e[k]);
  return from_unit(out);
}

std::optional<Bearing> bearing_between(const GeoPos& a, const GeoPos& b) {
  const Vec3 ub = to_unit(b);
  const double x = dot3(ub, north_of(a));
  const double y = dot3(ub, east_of(a));
  if (std::hypot(x, y) <= 1e-14) return std::nullopt;
  return Bearing(to_deg(std::atan2(y, x)));
}

}  // namespace dhp
