#include "obbkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace obbkit {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = 1.57079632679489661923;

// Relative slack for treating two extents as equal (exact-square ties).
// Well above accumulated rounding, far below any meaningful distinction.
constexpr double kTieRel = 1e-12;

// Relative sine tolerance when testing turn direction for convexity.
constexpr double kConvexRel = 1e-12;

double edge_angle(const Point2& e) { return fold_angle(std::atan2(e.y, e.x)); }

}  // namespace

bool finite(const Point2& p) {
  return std::isfinite(p.x) && std::isfinite(p.y);
}

double fold_angle(double theta) {
  double t = std::fmod(theta, kPi);
  if (t < 0.0) t += kPi;
  if (t >= kPi) t = 0.0;  // rounding of the += above can land exactly on pi
  return t;
}

ObbParams::ObbParams(double cx_, double cy_, double length_, double width_,
                     double theta_)
    : cx(cx_), cy(cy_), length(length_), width(width_), theta(theta_) {
  if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(length) ||
      !std::isfinite(width) || !std::isfinite(theta)) {
    throw ValidationError("ObbParams: non-finite field");
  }
  if (length <= 0.0 || width <= 0.0) {
    throw ValidationError("ObbParams: extents must be positive");
  }
  if (width > length) {
    std::swap(length, width);
    theta += kHalfPi;
  }
  theta = fold_angle(theta);
}

ImageSize::ImageSize(int w, int h) : width_px(w), height_px(h) {
  if (w <= 0 || h <= 0) {
    throw ValidationError("ImageSize: dimensions must be positive");
  }
}

double Quad::area() const {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Point2& p = pts[i];
    const Point2& q = pts[(i + 1) % 4];
    s += p.x * q.y - q.x * p.y;
  }
  return 0.5 * s;
}

Point2 Quad::centroid() const {
  return {(pts[0].x + pts[1].x + pts[2].x + pts[3].x) * 0.25,
          (pts[0].y + pts[1].y + pts[2].y + pts[3].y) * 0.25};
}

Quad make_quad(const Point2& p0, const Point2& p1, const Point2& p2,
               const Point2& p3) {
  Quad q{{p0, p1, p2, p3}};
  for (const Point2& p : q.pts) {
    if (!finite(p)) throw ValidationError("quad: non-finite corner");
  }
  double a = q.area();
  if (a < 0.0) {
    q.pts = {p0, p3, p2, p1};
    a = -a;
  }
  if (a <= GeomTolerances{}.degenerate_area) {
    throw ValidationError("quad: degenerate (zero area)");
  }
  for (int i = 0; i < 4; ++i) {
    const Point2 e = q.pts[(i + 1) % 4] - q.pts[i];
    const Point2 f = q.pts[(i + 2) % 4] - q.pts[(i + 1) % 4];
    if (cross(e, f) < -kConvexRel * norm(e) * norm(f)) {
      throw ValidationError("quad: corners are not convex");
    }
  }
  return q;
}

KeypointBox obb_to_keypoints(const ObbParams& b) {
  const double ux = std::cos(b.theta);
  const double uy = std::sin(b.theta);
  const double h = 0.5 * b.length;
  return {{b.cx, b.cy}, {b.cx + h * ux, b.cy + h * uy}, b.width};
}

ObbParams keypoints_to_obb(const KeypointBox& k) {
  if (!finite(k.center) || !finite(k.head) || !std::isfinite(k.width)) {
    throw ValidationError("keypoints: non-finite field");
  }
  const Point2 axis = k.head - k.center;
  const double half = norm(axis);
  if (half == 0.0) {
    throw ValidationError("keypoints: head coincides with center");
  }
  if (k.width <= 0.0) {
    throw ValidationError("keypoints: width must be positive");
  }
  double len = 2.0 * half;
  // Snap exact-square ties so the heading axis wins over the swap rule.
  if (std::abs(len - k.width) <= kTieRel * std::max(len, k.width)) {
    len = k.width;
  }
  return ObbParams(k.center.x, k.center.y, len, k.width,
                   std::atan2(axis.y, axis.x));
}

Quad obb_to_quad(const ObbParams& b) {
  const Point2 u{std::cos(b.theta), std::sin(b.theta)};
  const Point2 v = perp(u);
  const Point2 c{b.cx, b.cy};
  const Point2 du = u * (0.5 * b.length);
  const Point2 dv = v * (0.5 * b.width);
  return Quad{{c + du + dv, c - du + dv, c - du - dv, c + du - dv}};
}

ObbParams quad_to_obb(const Quad& q, const GeomTolerances& tol) {
  const double a = q.area();
  if (std::abs(a) <= tol.degenerate_area) {
    throw ValidationError("quad_to_obb: degenerate quad (zero area)");
  }

  const Point2 e0 = q.pts[1] - q.pts[0];
  const Point2 e1 = q.pts[2] - q.pts[1];
  const Point2 e2 = q.pts[3] - q.pts[2];
  const Point2 e3 = q.pts[0] - q.pts[3];
  const double n0 = norm(e0), n1 = norm(e1), n2 = norm(e2), n3 = norm(e3);

  // |sin| of the deviation from parallel / perpendicular.
  const auto sin_off_parallel = [](const Point2& u, const Point2& v, double nu,
                                   double nv) {
    return std::abs(cross(u, v)) / (nu * nv);
  };
  const auto sin_off_perp = [](const Point2& u, const Point2& v, double nu,
                               double nv) {
    return std::abs(dot(u, v)) / (nu * nv);
  };

  const bool rect_like =
      n0 > 0.0 && n1 > 0.0 && n2 > 0.0 && n3 > 0.0 &&
      sin_off_parallel(e0, e2, n0, n2) <= tol.parallel_rad &&
      sin_off_parallel(e1, e3, n1, n3) <= tol.parallel_rad &&
      sin_off_perp(e0, e1, n0, n1) <= tol.parallel_rad;

  const Point2 c = q.centroid();
  if (rect_like) {
    const double len_a = 0.5 * (n0 + n2);
    const double len_b = 0.5 * (n1 + n3);
    // Ties go to the edge leaving the first-listed corner.
    const bool tie = std::abs(len_a - len_b) <= kTieRel * std::max(len_a, len_b);
    if (tie || len_a > len_b) {
      return ObbParams(c.x, c.y, std::max(len_a, len_b),
                       std::min(len_a, len_b), edge_angle(e0));
    }
    return ObbParams(c.x, c.y, len_b, len_a, edge_angle(e1));
  }

  // Minimum-area enclosing rectangle: one side is collinear with a quad
  // edge, so trying all four edge directions is exhaustive.
  double best_area = std::numeric_limits<double>::infinity();
  Point2 best_center{};
  double best_du = 0.0, best_dv = 0.0, best_theta = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Point2 e = q.pts[(i + 1) % 4] - q.pts[i];
    const double ne = norm(e);
    if (ne == 0.0) continue;
    const Point2 u = e * (1.0 / ne);
    const Point2 v = perp(u);
    double smin = 0.0, smax = 0.0, tmin = 0.0, tmax = 0.0;
    for (int j = 1; j < 4; ++j) {
      const Point2 d = q.pts[(i + j) % 4] - q.pts[i];
      const double s = dot(d, u);
      const double t = dot(d, v);
      smin = std::min(smin, s);
      smax = std::max(smax, s);
      tmin = std::min(tmin, t);
      tmax = std::max(tmax, t);
    }
    const double du = smax - smin;
    const double dv = tmax - tmin;
    if (du * dv < best_area) {
      best_area = du * dv;
      best_center = q.pts[i] + u * (0.5 * (smin + smax)) + v * (0.5 * (tmin + tmax));
      best_du = du;
      best_dv = dv;
      best_theta = edge_angle(e);
    }
  }
  // The constructor canonicalizes when the cross extent is the longer one.
  return ObbParams(best_center.x, best_center.y, best_du, best_dv, best_theta);
}

namespace {

// Clips a convex CCW polygon by the half-plane left of edge a->b.
void clip_by_edge(std::vector<Point2>& poly, std::vector<Point2>& out,
                  const Point2& a, const Point2& b) {
  out.clear();
  const Point2 e = b - a;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % n];
    const double dp = cross(e, p - a);
    const double dq = cross(e, q - a);
    if (dp >= 0.0) {
      out.push_back(p);
      if (dq < 0.0) out.push_back(p + (q - p) * (dp / (dp - dq)));
    } else if (dq >= 0.0) {
      out.push_back(p + (q - p) * (dp / (dp - dq)));
    }
  }
  poly.swap(out);
}

double shoelace(const std::vector<Point2>& poly) {
  const size_t n = poly.size();
  if (n < 3) return 0.0;
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % n];
    s += p.x * q.y - q.x * p.y;
  }
  return 0.5 * s;
}

bool quad_less(const Quad& a, const Quad& b) {
  for (int i = 0; i < 4; ++i) {
    if (a.pts[i].x != b.pts[i].x) return a.pts[i].x < b.pts[i].x;
    if (a.pts[i].y != b.pts[i].y) return a.pts[i].y < b.pts[i].y;
  }
  return false;
}

}  // namespace

double polygon_intersection_area(const Quad& a, const Quad& b) {
  std::vector<Point2> poly(a.pts.begin(), a.pts.end());
  std::vector<Point2> scratch;
  poly.reserve(8);
  scratch.reserve(8);
  for (int i = 0; i < 4 && !poly.empty(); ++i) {
    clip_by_edge(poly, scratch, b.pts[i], b.pts[(i + 1) % 4]);
  }
  return std::clamp(shoelace(poly), 0.0, std::min(a.area(), b.area()));
}

double quad_iou(const Quad& a, const Quad& b) {
  // Fixed clip order makes the result bit-identical under argument swap.
  const Quad& lo = quad_less(b, a) ? b : a;
  const Quad& hi = quad_less(b, a) ? a : b;
  const double inter = polygon_intersection_area(lo, hi);
  const double uni = lo.area() + hi.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double rotated_iou(const ObbParams& a, const ObbParams& b) {
  return quad_iou(obb_to_quad(a), obb_to_quad(b));
}

namespace {

struct BoxFrame {
  Point2 c, u, v;
  double hl, hw;

  explicit BoxFrame(const ObbParams& b)
      : c{b.cx, b.cy},
        u{std::cos(b.theta), std::sin(b.theta)},
        v{-u.y, u.x},
        hl(0.5 * b.length),
        hw(0.5 * b.width) {}
};

struct Interval {
  double lo, hi;  // empty when lo > hi

  void intersect(const Interval& o) {
    lo = std::max(lo, o.lo);
    hi = std::min(hi, o.hi);
  }
};

constexpr Interval kEmpty{1.0, 0.0};
constexpr Interval kFull{-std::numeric_limits<double>::infinity(),
                         std::numeric_limits<double>::infinity()};

// x-range satisfying |ax*x + c0| <= half for the scan row.
Interval band_interval(double ax, double c0, double half) {
  if (ax == 0.0) return std::abs(c0) <= half ? kFull : kEmpty;
  const double x1 = (-half - c0) / ax;
  const double x2 = (half - c0) / ax;
  return {std::min(x1, x2), std::max(x1, x2)};
}

// x-interval of the box slice at height y.
Interval row_interval(const BoxFrame& f, double y) {
  Interval r = band_interval(f.u.x, (y - f.c.y) * f.u.y - f.u.x * f.c.x, f.hl);
  r.intersect(band_interval(f.v.x, (y - f.c.y) * f.v.y - f.v.x * f.c.x, f.hw));
  return r;
}

// Number of lattice abscissas x0 + (i+0.5)*dx, i in [0,grid), inside [lo,hi].
long long lattice_count(const Interval& iv, double x0, double dx, int grid) {
  if (iv.lo > iv.hi) return 0;
  double ilo = std::ceil((iv.lo - x0) / dx - 0.5);
  double ihi = std::floor((iv.hi - x0) / dx - 0.5);
  if (ilo < 0.0) ilo = 0.0;
  if (ihi > static_cast<double>(grid - 1)) ihi = static_cast<double>(grid - 1);
  if (!(ilo <= ihi)) return 0;
  return static_cast<long long>(ihi) - static_cast<long long>(ilo) + 1;
}

}  // namespace

double raster_iou_oracle(const ObbParams& a, const ObbParams& b, int grid) {
  if (grid < 100) {
    throw ValidationError("raster_iou_oracle: grid must be >= 100");
  }
  const Quad qa = obb_to_quad(a);
  const Quad qb = obb_to_quad(b);
  double xmin = qa.pts[0].x, xmax = xmin, ymin = qa.pts[0].y, ymax = ymin;
  for (const Quad* q : {&qa, &qb}) {
    for (const Point2& p : q->pts) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  const double dx = (xmax - xmin) / grid;
  const double dy = (ymax - ymin) / grid;
  if (dx <= 0.0 || dy <= 0.0) return 0.0;

  const BoxFrame fa(a), fb(b);
  long long in_a = 0, in_b = 0, in_both = 0;
  for (int j = 0; j < grid; ++j) {
    const double y = ymin + (j + 0.5) * dy;
    const Interval ia = row_interval(fa, y);
    const Interval ib = row_interval(fb, y);
    in_a += lattice_count(ia, xmin, dx, grid);
    in_b += lattice_count(ib, xmin, dx, grid);
    Interval ii = ia;
    ii.intersect(ib);
    in_both += lattice_count(ii, xmin, dx, grid);
  }
  const long long uni = in_a + in_b - in_both;
  if (uni <= 0) return 0.0;
  return static_cast<double>(in_both) / static_cast<double>(uni);
}

}  // namespace obbkit
