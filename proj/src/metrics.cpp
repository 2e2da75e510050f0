#include "dhp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dhp/error.hpp"

namespace dhp {
namespace {

std::vector<double> cell_weights(const Raster& r, Weighting w) {
  std::vector<double> out(r.cells(), 1.0);
  if (w == Weighting::SolidAngle)
    for (int i = 0; i < r.height; ++i)
      std::fill_n(out.begin() + std::ptrdiff_t(i) * r.width, r.width,
                  std::cos(to_rad(r.lat_of_row(i))));
  return out;
}

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

Moments moments(const std::vector<double>& v, const std::vector<double>& wts) {
  double ws = 0.0, s = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    ws += wts[k];
    s += wts[k] * v[k];
  }
  const double mean = s / ws;
  double ss = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) ss += wts[k] * (v[k] - mean) * (v[k] - mean);
  return {mean, std::sqrt(ss / ws)};
}

}  // namespace

double cc(const HMMap& a, const HMMap& b, Weighting w) {
  if (!(a.raster == b.raster)) throw InputError("cc: raster mismatch");
  const auto wts = cell_weights(a.raster, w);
  const Moments ma = moments(a.values, wts);
  const Moments mb = moments(b.values, wts);
  if (!(ma.sd > 0.0) || !(mb.sd > 0.0)) throw NumericError("cc: undefined for a constant map");
  double ws = 0.0, cov = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    ws += wts[k];
    cov += wts[k] * (a.values[k] - ma.mean) * (b.values[k] - mb.mean);
  }
  return std::clamp(cov / ws / (ma.sd * mb.sd), -1.0, 1.0);
}

double nss(const HMMap& map, std::span<const GeoPos> positions, Weighting w) {
  if (positions.empty()) throw InputError("nss: no positions");
  const Moments m = moments(map.values, cell_weights(map.raster, w));
  if (!(m.sd > 0.0)) throw NumericError("nss: undefined for a constant map");
  double sum = 0.0;
  for (const GeoPos& p : positions) sum += (map.values[map.raster.cell_of(p)] - m.mean) / m.sd;
  return sum / double(positions.size());
}

double auc_from_scores(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) throw InputError("auc: empty score list");
  struct Item {
    double v;
    bool pos;
  };
  std::vector<Item> all;
  all.reserve(positives.size() + negatives.size());
  for (double v : positives) all.push_back({v, true});
  for (double v : negatives) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Item& x, const Item& y) { return x.v < y.v; });
  // Sum of mid-ranks (1-based) of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    std::size_t npos = 0;
    while (j < all.size() && all[j].v == all[i].v) npos += all[j++].pos;
    const double mid = 0.5 * double(i + 1 + j);
    rank_sum += mid * double(npos);
    i = j;
  }
  const double np = double(positives.size());
  const double nn = double(negatives.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double shuffled_auc(const HMMap& map, std::span<const GeoPos> positives,
                    std::span<const GeoPos> negatives) {
  if (positives.empty() || negatives.empty()) throw InputError("shuffled_auc: empty position list");
  std::vector<double> ps, ns;
  for (const GeoPos& p : positives) ps.push_back(map.values[map.raster.cell_of(p)]);
  for (const GeoPos& p : negatives) ns.push_back(map.values[map.raster.cell_of(p)]);
  return auc_from_scores(ps, ns);
}

namespace {

const double kHalfW = to_rad(kFovWidthDeg / 2);
const double kHalfH = to_rad(kFovHeightDeg / 2);
const double kTanHalfW = std::tan(kHalfW);
const double kSinHalfH = std::sin(kHalfH);
constexpr int kMoRowsPerCell = 4;

struct Frame3 {
  Vec3 c, e, n;
  explicit Frame3(const GeoPos& p) : c(to_unit(p)), e(east_of(p)), n(north_of(p)) {}
};

double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

bool inside(const Frame3& f, const Vec3& p) {
  const double x = dot3(p, f.c);
  if (x <= 0.0) return false;
  return std::abs(dot3(p, f.e)) <= kTanHalfW * x && std::abs(dot3(p, f.n)) <= kSinHalfH;
}

}  // namespace

bool viewport_contains(const GeoPos& center, const GeoPos& point) {
  return inside(Frame3(center), to_unit(point));
}

double mo(const GeoPos& center_p, const GeoPos& center_g, MoResolution res) {
  if (res.width < 8 || res.height < 4) throw InputError("mo: resolution too small");
  if (center_p == center_g) return 1.0;
  // Integrate over the first viewport in its own azimuth/elevation grid; the
  // order is fixed so the result is exactly symmetric in its arguments.
  const bool swap = std::make_pair(center_g.lon(), center_g.lat()) <
                    std::make_pair(center_p.lon(), center_p.lat());
  const Frame3 fp(swap ? center_g : center_p);
  const Frame3 fg(swap ? center_p : center_g);

  // Azimuth cuts are exact per row; rows are oversampled relative to the raster.
  const int n_el = kMoRowsPerCell * std::max(2, int(std::ceil(kFovHeightDeg / (180.0 / res.height))));
  const int n_az = std::max(2, int(std::ceil(kFovWidthDeg / (360.0 / res.width))));
  const double d_el = 2.0 * kHalfH / n_el;
  const double d_az = 2.0 * kHalfW / n_az;

  auto point = [&](double az, double cel, double sel) {
    const double ca = std::cos(az), sa = std::sin(az);
    Vec3 v;
    for (int k = 0; k < 3; ++k) v[k] = cel * ca * fp.c[k] + cel * sa * fp.e[k] + sel * fp.n[k];
    return v;
  };

  double area = 0.0, inter = 0.0;
  std::vector<char> in(n_az + 1);
  for (int r = 0; r < n_el; ++r) {
    const double el = -kHalfH + (r + 0.5) * d_el;
    const double cel = std::cos(el), sel = std::sin(el);
    for (int k = 0; k <= n_az; ++k) in[k] = inside(fg, point(-kHalfW + k * d_az, cel, sel));
    double len = 0.0;
    for (int k = 0; k < n_az; ++k) {
      const double a0 = -kHalfW + k * d_az;
      if (in[k] && in[k + 1]) {
        len += d_az;
      } else if (in[k] != in[k + 1]) {
        double lo = a0, hi = a0 + d_az;  // in[k] state holds at lo
        for (int it = 0; it < 48; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (bool(inside(fg, point(mid, cel, sel))) == bool(in[k])) lo = mid;
          else hi = mid;
        }
        const double cut = 0.5 * (lo + hi);
        len += in[k] ? cut - a0 : a0 + d_az - cut;
      }
    }
    area += 2.0 * kHalfW * cel * d_el;
    inter += len * cel * d_el;
  }
  return std::clamp(inter / (2.0 * area - inter), 0.0, 1.0);
}

}  // namespace dhp
