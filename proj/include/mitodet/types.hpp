#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

namespace mitodet {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(const Point& a, const Point& b) noexcept {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Axis-aligned box in continuous pixel coordinates; valid when x2 > x1 and y2 > y1.
struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return std::max(0.0, width()) * std::max(0.0, height()); }
  Point center() const noexcept { return {0.5 * (x1 + x2), 0.5 * (y1 + y2)}; }
  bool valid() const noexcept { return x2 > x1 && y2 > y1; }

  static BoundingBox from_center(Point c, double w, double h) noexcept {
    return {c.x - 0.5 * w, c.y - 0.5 * h, c.x + 0.5 * w, c.y + 0.5 * h};
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// A predicted mitosis. When a box is present the centroid is its center.
struct Detection {
  Point centroid;
  double confidence = 1.0;
  std::optional<BoundingBox> box;

  static Detection from_box(const BoundingBox& b, double confidence) {
    return {b.center(), confidence, b};
  }

  friend bool operator==(const Detection&, const Detection&) = default;
};

}  // namespace mitodet
