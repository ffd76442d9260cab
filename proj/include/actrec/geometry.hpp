#pragma once

#include <cmath>

namespace actrec {

/// Pixel position in image coordinates: origin top-left, y grows downward.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }

inline double norm(Point2 v) { return std::hypot(v.x, v.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Axis-aligned box given by its top-left (x_t, y_t) and bottom-right
/// (x_b, y_b) corners.
struct BBox {
  double x_t = 0.0;
  double y_t = 0.0;
  double x_b = 0.0;
  double y_b = 0.0;

  Point2 top_left() const { return {x_t, y_t}; }
  Point2 bottom_right() const { return {x_b, y_b}; }
  double width() const { return x_b - x_t; }
  double height() const { return y_b - y_t; }

  bool valid() const {
    return std::isfinite(x_t) && std::isfinite(y_t) && std::isfinite(x_b) && std::isfinite(y_b) && x_t <= x_b &&
           y_t <= y_b;
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Box midpoint, used as the object's position.
inline Point2 centroid(const BBox& b) { return {(b.x_t + b.x_b) / 2.0, (b.y_t + b.y_b) / 2.0}; }

/// Bottom-right minus top-left corner. Its angle tracks in-plane rotation of
/// the object.
inline Point2 local_changes(const BBox& b) { return {b.x_b - b.x_t, b.y_b - b.y_t}; }

inline double angle(Point2 v) { return std::atan2(v.y, v.x); }

/// Box of the given size centred on `c`.
inline BBox box_around(Point2 c, double width, double height) {
  return {c.x - width / 2.0, c.y - height / 2.0, c.x + width / 2.0, c.y + height / 2.0};
}

}  // namespace actrec
