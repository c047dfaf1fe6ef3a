#pragma once

// Weak centroid labels -> synthetic circle/ellipse masks and their boxes.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "mitodet/errors.hpp"
#include "mitodet/random.hpp"
#include "mitodet/raster.hpp"
#include "mitodet/types.hpp"

namespace mitodet::annotation {

struct CentroidLabel {
  std::string slide_id;
  int x = 0;  // column
  int y = 0;  // row

  Point point() const noexcept { return {static_cast<double>(x), static_cast<double>(y)}; }

  friend bool operator==(const CentroidLabel&, const CentroidLabel&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline int parse_coordinate(std::string_view field, std::size_t line) {
  field = trim(field);
  int value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc{} || ptr != end) {
    throw MalformedAnnotation(line, "not an integer: '" + std::string(field) + "'");
  }
  if (value < 0) throw MalformedAnnotation(line, "negative coordinate " + std::to_string(value));
  return value;
}

}  // namespace detail

/// Reads "x,y" integer pairs, one per line. With `swap_xy` the columns are read as "row,col".
inline std::vector<CentroidLabel> parse_centroids(std::istream& in, const std::string& slide_id = {},
                                                  bool swap_xy = false) {
  std::vector<CentroidLabel> labels;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view text = detail::trim(raw);
    if (text.empty()) continue;
    const auto comma = text.find(',');
    if (comma == std::string_view::npos || text.find(',', comma + 1) != std::string_view::npos) {
      throw MalformedAnnotation(line, "expected exactly two comma-separated fields");
    }
    const int first = detail::parse_coordinate(text.substr(0, comma), line);
    const int second = detail::parse_coordinate(text.substr(comma + 1), line);
    labels.push_back(swap_xy ? CentroidLabel{slide_id, second, first} : CentroidLabel{slide_id, first, second});
  }
  return labels;
}

enum class ShapeKind { Circle, Ellipse };

inline constexpr int kMinRadius = 10;
inline constexpr int kMaxRadius = 16;
inline constexpr int kMinSemiAxis = 5;
inline constexpr int kMaxSemiAxis = 13;

/// Circle (radius) or ellipse (semi-axes a, b with the a-axis at `orientation_deg`
/// from +x towards +y). Integer pixel coordinates are pixel centers.
struct MaskShape {
  ShapeKind kind = ShapeKind::Circle;
  Point center;
  int radius = kMinRadius;
  int semi_axis_a = kMinSemiAxis;
  int semi_axis_b = kMinSemiAxis;
  int orientation_deg = 90;

  static MaskShape circle(Point center, int radius) {
    MaskShape s{ShapeKind::Circle, center, radius, kMinSemiAxis, kMinSemiAxis, 90};
    s.validate();
    return s;
  }

  static MaskShape ellipse(Point center, int a, int b, int orientation_deg) {
    MaskShape s{ShapeKind::Ellipse, center, kMinRadius, a, b, orientation_deg};
    s.validate();
    return s;
  }

  void validate() const {
    if (kind == ShapeKind::Circle) {
      if (radius < kMinRadius || radius > kMaxRadius) throw ValidationError("circle radius outside [10, 16]");
    } else {
      if (semi_axis_a < kMinSemiAxis || semi_axis_a > kMaxSemiAxis || semi_axis_b < kMinSemiAxis ||
          semi_axis_b > kMaxSemiAxis) {
        throw ValidationError("ellipse semi-axis outside [5, 13]");
      }
      if (orientation_deg != 60 && orientation_deg != 90) throw ValidationError("ellipse orientation must be 60 or 90");
    }
  }

  /// Analytic inclusion test for the point (x, y).
  bool contains(double x, double y) const noexcept {
    const double dx = x - center.x;
    const double dy = y - center.y;
    if (kind == ShapeKind::Circle) return dx * dx + dy * dy <= static_cast<double>(radius * radius);
    const double t = orientation_deg * std::numbers::pi / 180.0;
    const double u = dx * std::cos(t) + dy * std::sin(t);
    const double v = -dx * std::sin(t) + dy * std::cos(t);
    const double a = semi_axis_a;
    const double b = semi_axis_b;
    return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
  }

  friend bool operator==(const MaskShape&, const MaskShape&) = default;
};

/// Fair coin between circle and ellipse; integer parameters drawn uniformly.
inline MaskShape synthesize_shape(const CentroidLabel& label, Rng& rng) {
  const Point c = label.point();
  if (uniform_below(rng, 2) == 0) return MaskShape::circle(c, uniform_int(rng, kMinRadius, kMaxRadius));
  const int a = uniform_int(rng, kMinSemiAxis, kMaxSemiAxis);
  const int b = uniform_int(rng, kMinSemiAxis, kMaxSemiAxis);
  const int theta = uniform_below(rng, 2) == 0 ? 60 : 90;
  return MaskShape::ellipse(c, a, b, theta);
}

/// Tight axis-aligned bound, rounded outward to whole pixels.
inline BoundingBox shape_bbox(const MaskShape& shape) {
  double ex = 0.0;
  double ey = 0.0;
  if (shape.kind == ShapeKind::Circle) {
    ex = ey = shape.radius;
  } else {
    const double t = shape.orientation_deg * std::numbers::pi / 180.0;
    const double a2 = static_cast<double>(shape.semi_axis_a) * shape.semi_axis_a;
    const double b2 = static_cast<double>(shape.semi_axis_b) * shape.semi_axis_b;
    const double c2 = std::cos(t) * std::cos(t);
    const double s2 = std::sin(t) * std::sin(t);
    ex = std::sqrt(a2 * c2 + b2 * s2);
    ey = std::sqrt(a2 * s2 + b2 * c2);
  }
  // 1e-9 keeps cos(90 deg) ~ 6e-17 from pushing an exact extent up a pixel.
  return {std::floor(shape.center.x - ex + 1e-9), std::floor(shape.center.y - ey + 1e-9),
          std::ceil(shape.center.x + ex - 1e-9), std::ceil(shape.center.y + ey - 1e-9)};
}

/// Pixel (x, y) is on iff the shape contains its center; pixels outside the image are dropped.
inline BinaryMask rasterize_shape(const MaskShape& shape, int width, int height) {
  if (width <= 0 || height <= 0) throw ValidationError("mask dimensions must be positive");
  BinaryMask mask(width, height, 1, 0);
  const BoundingBox box = shape_bbox(shape);
  const int x0 = std::max(0, static_cast<int>(box.x1));
  const int y0 = std::max(0, static_cast<int>(box.y1));
  const int x1 = std::min(width - 1, static_cast<int>(box.x2));
  const int y1 = std::min(height - 1, static_cast<int>(box.y2));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (shape.contains(x, y)) mask(x, y) = 1;
    }
  }
  return mask;
}

/// Mask restricted to the part of the shape's box that lies inside the image.
struct MaskPatch {
  int x = 0;
  int y = 0;
  BinaryMask mask;
};

struct GroundTruthObject {
  MaskShape shape;
  BoundingBox bbox;
  MaskPatch raster;
};

inline MaskPatch rasterize_patch(const MaskShape& shape, int width, int height) {
  const BoundingBox box = shape_bbox(shape);
  const int x0 = std::clamp(static_cast<int>(box.x1), 0, width);
  const int y0 = std::clamp(static_cast<int>(box.y1), 0, height);
  const int x1 = std::clamp(static_cast<int>(box.x2) + 1, 0, width);
  const int y1 = std::clamp(static_cast<int>(box.y2) + 1, 0, height);
  MaskPatch patch{x0, y0, BinaryMask(x1 - x0, y1 - y0, 1, 0)};
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      if (shape.contains(x, y)) patch.mask(x - x0, y - y0) = 1;
    }
  }
  return patch;
}

/// One synthetic object per label, drawn in label order from `rng`.
inline std::vector<GroundTruthObject> synthesize_objects(const std::vector<CentroidLabel>& labels, int width,
                                                         int height, Rng& rng) {
  if (width <= 0 || height <= 0) throw ValidationError("image dimensions must be positive");
  std::vector<GroundTruthObject> objects;
  objects.reserve(labels.size());
  for (const auto& label : labels) {
    const MaskShape shape = synthesize_shape(label, rng);
    objects.push_back({shape, shape_bbox(shape), rasterize_patch(shape, width, height)});
  }
  return objects;
}

/// Union of all object masks as a full-size 0/1 raster.
inline BinaryMask union_mask(const std::vector<GroundTruthObject>& objects, int width, int height) {
  BinaryMask mask(width, height, 1, 0);
  for (const auto& obj : objects) {
    const auto& p = obj.raster;
    for (int y = 0; y < p.mask.height(); ++y) {
      for (int x = 0; x < p.mask.width(); ++x) {
        if (p.mask(x, y)) mask(p.x + x, p.y + y) = 1;
      }
    }
  }
  return mask;
}

}  // namespace mitodet::annotation
