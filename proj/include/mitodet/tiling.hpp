#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "mitodet/errors.hpp"
#include "mitodet/raster.hpp"
#include "mitodet/types.hpp"

namespace mitodet::tiling {

struct TileOrigin {
  int x = 0;
  int y = 0;

  friend auto operator<=>(const TileOrigin&, const TileOrigin&) = default;
};

/// Sliding-window layout of one slide. Origins are sorted lexicographically on (x, y).
struct TilePlan {
  int slide_width = 0;
  int slide_height = 0;
  int tile_size = 0;
  int stride = 0;
  std::vector<TileOrigin> origins;
  std::vector<bool> padded;

  std::size_t size() const noexcept { return origins.size(); }

  friend bool operator==(const TilePlan&, const TilePlan&) = default;
};

struct TileRef {
  std::size_t index = 0;
  TileOrigin origin;
  bool flipped = false;
};

inline int stride_for(int tile_size, double overlap) {
  return static_cast<int>(std::floor(static_cast<double>(tile_size) * (1.0 - overlap) + 1e-9));
}

/// Origins along one axis: 0, stride, 2*stride, ... plus a final origin clamped
/// to dim - tile when the regular steps stop short of the border.
inline std::vector<int> axis_origins(int dim, int tile_size, int stride) {
  std::vector<int> out{0};
  if (dim <= tile_size) return out;
  for (int o = stride; o + tile_size <= dim; o += stride) out.push_back(o);
  if (out.back() + tile_size < dim) out.push_back(dim - tile_size);
  return out;
}

inline TilePlan plan_tiles(int slide_width, int slide_height, int tile_size = 512, double overlap = 0.6) {
  if (slide_width <= 0 || slide_height <= 0) throw InvalidTiling("slide dimensions must be positive");
  if (tile_size < 32) throw InvalidTiling("tile size must be at least 32");
  if (!(overlap >= 0.0 && overlap <= 0.95)) throw InvalidTiling("overlap must lie in [0, 0.95]");

  TilePlan plan;
  plan.slide_width = slide_width;
  plan.slide_height = slide_height;
  plan.tile_size = tile_size;
  plan.stride = stride_for(tile_size, overlap);

  const auto xs = axis_origins(slide_width, tile_size, plan.stride);
  const auto ys = axis_origins(slide_height, tile_size, plan.stride);
  const bool padded = slide_width < tile_size || slide_height < tile_size;
  for (int x : xs) {
    for (int y : ys) {
      plan.origins.push_back({x, y});
      plan.padded.push_back(padded);
    }
  }
  return plan;
}

inline TileRef tile_ref(const TilePlan& plan, std::size_t index, bool flipped = false) {
  if (index >= plan.size()) throw ValidationError("tile index out of range");
  return {index, plan.origins[index], flipped};
}

/// Copies the tile window; area outside the image is 0. Flipped tiles have their columns reversed.
inline RasterImage extract_tile(const RasterImage& image, const TileRef& ref, int tile_size) {
  RasterImage tile(tile_size, tile_size, 0);
  tile.microns_per_pixel = image.microns_per_pixel;
  const int x_end = std::min(tile_size, image.width() - ref.origin.x);
  const int y_end = std::min(tile_size, image.height() - ref.origin.y);
  for (int ty = 0; ty < y_end; ++ty) {
    for (int tx = 0; tx < x_end; ++tx) {
      const int dx = ref.flipped ? tile_size - 1 - tx : tx;
      for (int c = 0; c < RasterImage::kChannels; ++c) {
        tile(dx, ty, c) = image(ref.origin.x + tx, ref.origin.y + ty, c);
      }
    }
  }
  return tile;
}

inline Point map_local_to_slide(const TileRef& ref, Point local, int tile_size) {
  const double x = ref.flipped ? static_cast<double>(tile_size - 1) - local.x : local.x;
  return {ref.origin.x + x, ref.origin.y + local.y};
}

/// Inverse of map_local_to_slide.
inline Point map_slide_to_local(const TileRef& ref, Point global, int tile_size) {
  const double x = global.x - ref.origin.x;
  return {ref.flipped ? static_cast<double>(tile_size - 1) - x : x, global.y - ref.origin.y};
}

/// Indices sorted by confidence descending, input order among equals.
inline std::vector<std::size_t> confidence_order(const std::vector<Detection>& detections) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].confidence > detections[b].confidence;
  });
  return order;
}

/// Greedy cross-tile deduplication: a detection survives iff its centroid is at
/// least `dedup_radius` from every higher-confidence survivor.
inline std::vector<Detection> merge_tile_detections(const std::vector<Detection>& detections,
                                                    double dedup_radius = 30.0) {
  for (const auto& d : detections) {
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) throw ValidationError("confidence must lie in [0, 1]");
  }
  std::vector<Detection> kept;
  for (std::size_t i : confidence_order(detections)) {
    const auto& candidate = detections[i];
    const bool clear = std::all_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return distance(k.centroid, candidate.centroid) >= dedup_radius;
    });
    if (clear) kept.push_back(candidate);
  }
  return kept;
}

}  // namespace mitodet::tiling
