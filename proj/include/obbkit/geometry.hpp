#pragma once

#include <array>
#include <cmath>

#include "obbkit/errors.hpp"

namespace obbkit {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Point2 operator+(const Point2& p) const { return {x + p.x, y + p.y}; }
  Point2 operator-(const Point2& p) const { return {x - p.x, y - p.y}; }
  Point2 operator*(double k) const { return {x * k, y * k}; }
  bool operator==(const Point2& p) const { return x == p.x && y == p.y; }
};

inline double dot(const Point2& a, const Point2& b) {
  return a.x * b.x + a.y * b.y;
}
inline double cross(const Point2& a, const Point2& b) {
  return a.x * b.y - a.y * b.x;
}
inline double sq_norm(const Point2& a) { return a.x * a.x + a.y * a.y; }
inline double norm(const Point2& a) { return std::hypot(a.x, a.y); }
inline double dist_sq(const Point2& a, const Point2& b) {
  return sq_norm(a - b);
}
// 90-degree counter-clockwise rotation.
inline Point2 perp(const Point2& a) { return {-a.y, a.x}; }

bool finite(const Point2& p);

// Folds an angle into the canonical heading range [0, pi).
double fold_angle(double theta);

// Oriented rectangle: center, extent along the heading axis (length),
// extent across it (width), heading angle theta in [0, pi).
// Canonical form keeps length >= width; constructors swap the axes
// (rotating theta by pi/2) when given width > length.
struct ObbParams {
  double cx = 0.0;
  double cy = 0.0;
  double length = 1.0;
  double width = 1.0;
  double theta = 0.0;

  ObbParams() = default;
  ObbParams(double cx, double cy, double length, double width, double theta);

  double area() const { return length * width; }
  Point2 center() const { return {cx, cy}; }
};

// Convex quadrilateral, corners in counter-clockwise order
// (positive shoelace area).
struct Quad {
  std::array<Point2, 4> pts{};

  double area() const;
  Point2 centroid() const;
};

// Builds a Quad from four corners, reversing the order if they are
// given clockwise. Throws ValidationError for degenerate (zero-area)
// or non-convex input.
Quad make_quad(const Point2& p0, const Point2& p1, const Point2& p2,
               const Point2& p3);

// The head-tail keypoint representation of an oriented box: the center,
// the head extremity of the long axis, and the width across it. The
// tail is always derived, never stored.
struct KeypointBox {
  Point2 center{};
  Point2 head{1.0, 0.0};
  double width = 1.0;

  Point2 tail() const { return {2.0 * center.x - head.x, 2.0 * center.y - head.y}; }
  // Same box with head and tail exchanged.
  KeypointBox flipped() const { return {center, tail(), width}; }
};

struct ImageSize {
  int width_px = 1;
  int height_px = 1;

  ImageSize() = default;
  ImageSize(int w, int h);

  // Pixel count W*H, the default loss normalization constant.
  double pixel_count() const {
    return static_cast<double>(width_px) * static_cast<double>(height_px);
  }
  // Squared diagonal W^2 + H^2, the alternative normalization.
  double diag_sq() const {
    const double w = width_px, h = height_px;
    return w * w + h * h;
  }
};

// Module-level coordinate tolerances.
struct GeomTolerances {
  double parallel_rad = 1e-6;     // rectangle-likeness of quads
  double degenerate_area = 1e-9;  // px^2, below this a quad is degenerate
};

KeypointBox obb_to_keypoints(const ObbParams& b);

// Inverse of obb_to_keypoints up to the head/tail ambiguity: the result
// is canonical (length >= width, theta in [0, pi)). Throws
// ValidationError when head == center.
ObbParams keypoints_to_obb(const KeypointBox& k);

Quad obb_to_quad(const ObbParams& b);

// Fits an ObbParams to a quad. Rectangle-like quads (opposite edges
// parallel and adjacent edges perpendicular within tol.parallel_rad)
// convert directly with the longer side as heading axis; anything else
// is fit by the minimum-area enclosing rectangle. Throws
// ValidationError for quads with |area| <= tol.degenerate_area.
ObbParams quad_to_obb(const Quad& q, const GeomTolerances& tol = {});

// Area of the convex intersection of two CCW quads (convex polygon
// clipping + shoelace). Disjoint quads yield 0.
double polygon_intersection_area(const Quad& a, const Quad& b);

// Intersection over union of two convex CCW quads. Exactly symmetric
// in its arguments.
double quad_iou(const Quad& a, const Quad& b);

// Intersection over union of two oriented boxes, in [0, 1].
double rotated_iou(const ObbParams& a, const ObbParams& b);

// IoU estimated by point-in-box counting over a grid x grid lattice of
// cell centers covering the joint bounding region. Converges to
// rotated_iou as grid grows. Requires grid >= 100.
double raster_iou_oracle(const ObbParams& a, const ObbParams& b, int grid);

}  // namespace obbkit
