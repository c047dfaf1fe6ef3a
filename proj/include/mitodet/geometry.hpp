#pragma once

// Anchors, IoU, RPN target assignment, box-delta coding, NMS and ROI-align.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mitodet/errors.hpp"
#include "mitodet/raster.hpp"
#include "mitodet/tiling.hpp"
#include "mitodet/types.hpp"

namespace mitodet::geometry {

/// Width:height ratio of an anchor.
enum class AspectRatio { OneToTwo, OneToOne, TwoToOne };

inline constexpr double ratio_value(AspectRatio r) noexcept {
  switch (r) {
    case AspectRatio::OneToTwo: return 0.5;
    case AspectRatio::OneToOne: return 1.0;
    case AspectRatio::TwoToOne: return 2.0;
  }
  return 1.0;
}

inline constexpr std::array<int, 4> kAnchorScales{32, 64, 128, 256};
inline constexpr std::array<AspectRatio, 3> kAnchorRatios{AspectRatio::OneToTwo, AspectRatio::OneToOne,
                                                          AspectRatio::TwoToOne};
inline constexpr std::size_t kAnchorsPerLocation = kAnchorScales.size() * kAnchorRatios.size();

struct Anchor {
  BoundingBox box;
  int scale = 32;
  AspectRatio ratio = AspectRatio::OneToOne;
  int grid_x = 0;
  int grid_y = 0;
};

/// Area-preserving shape: w = s * sqrt(rho), h = s / sqrt(rho).
inline BoundingBox anchor_box(Point center, int scale, AspectRatio ratio) {
  const double root = std::sqrt(ratio_value(ratio));
  return BoundingBox::from_center(center, scale * root, scale / root);
}

/// Twelve anchors per grid cell, centered at ((i + 0.5) * stride, (j + 0.5) * stride).
/// Cells are visited row-major; within a cell scales vary slowest.
inline std::vector<Anchor> generate_anchors(int grid_width, int grid_height, double feature_stride) {
  if (grid_width <= 0 || grid_height <= 0 || !(feature_stride > 0.0)) {
    throw ValidationError("anchor grid and stride must be positive");
  }
  std::vector<Anchor> anchors;
  anchors.reserve(static_cast<std::size_t>(grid_width) * static_cast<std::size_t>(grid_height) *
                  kAnchorsPerLocation);
  for (int j = 0; j < grid_height; ++j) {
    for (int i = 0; i < grid_width; ++i) {
      const Point c{(i + 0.5) * feature_stride, (j + 0.5) * feature_stride};
      for (int s : kAnchorScales) {
        for (AspectRatio r : kAnchorRatios) anchors.push_back({anchor_box(c, s, r), s, r, i, j});
      }
    }
  }
  return anchors;
}

inline double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

struct BoxDeltas {
  double tx = 0.0;
  double ty = 0.0;
  double tw = 0.0;
  double th = 0.0;

  std::array<double, 4> as_array() const noexcept { return {tx, ty, tw, th}; }
  friend bool operator==(const BoxDeltas&, const BoxDeltas&) = default;
};

inline BoxDeltas encode_box_deltas(const BoundingBox& anchor, const BoundingBox& gt) {
  if (!anchor.valid() || !gt.valid()) throw ValidationError("cannot encode deltas of an invalid box");
  const Point a = anchor.center();
  const Point g = gt.center();
  return {(g.x - a.x) / anchor.width(), (g.y - a.y) / anchor.height(), std::log(gt.width() / anchor.width()),
          std::log(gt.height() / anchor.height())};
}

inline BoundingBox decode_box_deltas(const BoundingBox& anchor, const BoxDeltas& d) {
  const Point a = anchor.center();
  const Point c{a.x + d.tx * anchor.width(), a.y + d.ty * anchor.height()};
  return BoundingBox::from_center(c, anchor.width() * std::exp(d.tw), anchor.height() * std::exp(d.th));
}

enum class RpnLabel { Negative, Ignore, Positive };

struct RpnTarget {
  std::size_t anchor_index = 0;
  RpnLabel label = RpnLabel::Negative;
  std::optional<std::size_t> gt_index;  // best-IoU ground truth, Positive only
  std::optional<BoxDeltas> deltas;      // present iff Positive
  double max_iou = 0.0;
};

struct RpnThresholds {
  double positive = 0.7;
  double negative = 0.3;

  void validate() const {
    if (!(negative >= 0.0 && negative < positive && positive <= 1.0)) {
      throw ValidationError("RPN thresholds must satisfy 0 <= negative < positive <= 1");
    }
  }
};

/// Positive: best IoU above `positive`, or the first anchor reaching a ground
/// truth's maximum IoU (when that maximum is nonzero). Negative: best IoU below
/// `negative`. Everything else is ignored.
inline std::vector<RpnTarget> assign_rpn_targets(std::span<const Anchor> anchors, std::span<const BoundingBox> gts,
                                                 RpnThresholds thresholds = {}) {
  thresholds.validate();
  std::vector<RpnTarget> targets(anchors.size());
  std::vector<double> gt_best(gts.size(), 0.0);
  std::vector<std::size_t> gt_argmax(gts.size(), 0);

  for (std::size_t a = 0; a < anchors.size(); ++a) {
    auto& t = targets[a];
    t.anchor_index = a;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double v = iou(anchors[a].box, gts[g]);
      if (!t.gt_index || v > t.max_iou) {
        t.max_iou = v;
        t.gt_index = g;
      }
      if (v > gt_best[g]) {
        gt_best[g] = v;
        gt_argmax[g] = a;
      }
    }
  }

  std::vector<bool> rescued(anchors.size(), false);
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (gt_best[g] > 0.0) rescued[gt_argmax[g]] = true;
  }

  for (std::size_t a = 0; a < anchors.size(); ++a) {
    auto& t = targets[a];
    if (t.max_iou > thresholds.positive || rescued[a]) {
      t.label = RpnLabel::Positive;
      t.deltas = encode_box_deltas(anchors[a].box, gts[*t.gt_index]);
    } else {
      t.label = t.max_iou < thresholds.negative ? RpnLabel::Negative : RpnLabel::Ignore;
      t.gt_index.reset();
    }
  }
  return targets;
}

/// Greedy suppression over boxed detections, highest confidence first; ties keep input order.
inline std::vector<Detection> nms(const std::vector<Detection>& detections, double iou_threshold) {
  for (const auto& d : detections) {
    if (!d.box) throw ValidationError("nms requires every detection to carry a box");
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) throw ValidationError("confidence must lie in [0, 1]");
  }
  std::vector<Detection> kept;
  for (std::size_t i : tiling::confidence_order(detections)) {
    const auto& box = *detections[i].box;
    const bool clear = std::all_of(kept.begin(), kept.end(),
                                   [&](const Detection& k) { return iou(*k.box, box) <= iou_threshold; });
    if (clear) kept.push_back(detections[i]);
  }
  return kept;
}

/// Bilinear sample of channel `c`. Cell (i, j) is centered at (i + 0.5, j + 0.5);
/// samples beyond the outermost centers take the border value.
template <typename T>
double bilinear_sample(const Raster<T>& feature, double x, double y, int c = 0) {
  const double fx = std::clamp(x - 0.5, 0.0, static_cast<double>(feature.width() - 1));
  const double fy = std::clamp(y - 0.5, 0.0, static_cast<double>(feature.height() - 1));
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const int x1 = std::min(x0 + 1, feature.width() - 1);
  const int y1 = std::min(y0 + 1, feature.height() - 1);
  const double wx = fx - x0;
  const double wy = fy - y0;
  const double top = (1.0 - wx) * feature(x0, y0, c) + wx * feature(x1, y0, c);
  const double bottom = (1.0 - wx) * feature(x0, y1, c) + wx * feature(x1, y1, c);
  return (1.0 - wy) * top + wy * bottom;
}

/// Pools `box` (clamped to the feature extent [0, W] x [0, H]) into an
/// out_size x out_size grid per channel. Each bin averages samples_per_bin^2
/// bilinear samples placed at fractional positions (k + 0.5) / samples_per_bin.
template <typename T>
FloatRaster roi_align(const Raster<T>& feature, const BoundingBox& box, int out_size, int samples_per_bin) {
  if (out_size < 1 || samples_per_bin < 1) throw ValidationError("roi_align needs out_size and samples >= 1");
  if (feature.empty()) throw ValidationError("roi_align on an empty feature map");
  const double x1 = std::clamp(box.x1, 0.0, static_cast<double>(feature.width()));
  const double y1 = std::clamp(box.y1, 0.0, static_cast<double>(feature.height()));
  const double x2 = std::clamp(box.x2, 0.0, static_cast<double>(feature.width()));
  const double y2 = std::clamp(box.y2, 0.0, static_cast<double>(feature.height()));
  if (!(x2 > x1) || !(y2 > y1)) throw DegenerateBox("box has zero extent after clamping to the feature map");

  const double bin_w = (x2 - x1) / out_size;
  const double bin_h = (y2 - y1) / out_size;
  const double n = samples_per_bin;
  FloatRaster out(out_size, out_size, feature.channels());
  for (int by = 0; by < out_size; ++by) {
    for (int bx = 0; bx < out_size; ++bx) {
      for (int c = 0; c < feature.channels(); ++c) {
        double sum = 0.0;
        for (int sy = 0; sy < samples_per_bin; ++sy) {
          const double y = y1 + bin_h * (by + (sy + 0.5) / n);
          for (int sx = 0; sx < samples_per_bin; ++sx) {
            const double x = x1 + bin_w * (bx + (sx + 0.5) / n);
            sum += bilinear_sample(feature, x, y, c);
          }
        }
        out(bx, by, c) = sum / (n * n);
      }
    }
  }
  return out;
}

}  // namespace mitodet::geometry
