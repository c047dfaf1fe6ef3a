#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mitodet/tiling.hpp"
#include "oracles.hpp"

namespace mitodet::tiling {
namespace {

// Brute-force coverage count per pixel, independent of the origin generator.
std::vector<int> coverage(const TilePlan& plan) {
  std::vector<int> hits(static_cast<std::size_t>(plan.slide_width) * static_cast<std::size_t>(plan.slide_height), 0);
  for (const auto& o : plan.origins) {
    for (int y = o.y; y < std::min(o.y + plan.tile_size, plan.slide_height); ++y) {
      for (int x = o.x; x < std::min(o.x + plan.tile_size, plan.slide_width); ++x) {
        ++hits[static_cast<std::size_t>(y) * static_cast<std::size_t>(plan.slide_width) + static_cast<std::size_t>(x)];
      }
    }
  }
  return hits;
}

TEST(PlanTiles, AperioSlide) {
  const TilePlan plan = plan_tiles(2000, 2000, 512, 0.6);
  EXPECT_EQ(plan.stride, 204);
  EXPECT_EQ(plan.size(), 81u);
  const std::vector<int> expected_axis{0, 204, 408, 612, 816, 1020, 1224, 1428, 1488};
  EXPECT_EQ(axis_origins(2000, 512, 204), expected_axis);
  for (int h : coverage(plan)) ASSERT_GE(h, 1);
  for (bool p : plan.padded) EXPECT_FALSE(p);
}

TEST(PlanTiles, ExactTileAndSmallSlide) {
  const TilePlan exact = plan_tiles(512, 512);
  ASSERT_EQ(exact.size(), 1u);
  EXPECT_EQ(exact.origins[0], (TileOrigin{0, 0}));
  EXPECT_FALSE(exact.padded[0]);

  const TilePlan small = plan_tiles(500, 500);
  ASSERT_EQ(small.size(), 1u);
  EXPECT_EQ(small.origins[0], (TileOrigin{0, 0}));
  EXPECT_TRUE(small.padded[0]);
}

TEST(PlanTiles, RejectsInvalidInput) {
  EXPECT_THROW((void)plan_tiles(0, 100), InvalidTiling);
  EXPECT_THROW((void)plan_tiles(100, -1), InvalidTiling);
  EXPECT_THROW((void)plan_tiles(100, 100, 16), InvalidTiling);
  EXPECT_THROW((void)plan_tiles(100, 100, 512, 0.96), InvalidTiling);
}

TEST(PlanTiles, RandomSlidesAreCoveredSortedAndOverlapping) {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const int w = uniform_int(rng, 100, 3000);
    const int h = uniform_int(rng, 100, 3000);
    const TilePlan plan = plan_tiles(w, h);
    for (int hits : coverage(plan)) ASSERT_GE(hits, 1) << w << "x" << h;
    for (std::size_t i = 1; i < plan.size(); ++i) ASSERT_LT(plan.origins[i - 1], plan.origins[i]);

    const auto xs = axis_origins(w, 512, plan.stride);
    for (std::size_t i = 1; i < xs.size(); ++i) {
      if (i + 1 < xs.size()) EXPECT_EQ(xs[i] - xs[i - 1], plan.stride);
      if (w >= 512) EXPECT_GE(xs[i - 1] + 512 - xs[i], static_cast<int>(std::ceil(512 * 0.6)));
    }
    if (w >= 512) EXPECT_EQ(xs.back(), w - 512);
  }
}

TEST(PlanTiles, LargestCircleLabelFitsInSomeTile) {
  const TilePlan plan = plan_tiles(1539, 1376);
  Rng rng(23);
  for (int i = 0; i < 2000; ++i) {
    const int cx = uniform_int(rng, 16, 1539 - 17);
    const int cy = uniform_int(rng, 16, 1376 - 17);
    bool inside = false;
    for (const auto& o : plan.origins) {
      if (cx - 16 >= o.x && cx + 16 < o.x + 512 && cy - 16 >= o.y && cy + 16 < o.y + 512) inside = true;
    }
    ASSERT_TRUE(inside) << cx << "," << cy;
  }
}

RasterImage gradient_image(int w, int h) {
  RasterImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img(x, y, 0) = static_cast<std::uint8_t>(x % 251);
      img(x, y, 1) = static_cast<std::uint8_t>(y % 251);
      img(x, y, 2) = static_cast<std::uint8_t>((x + y) % 7);
    }
  }
  return img;
}

TEST(ExtractTile, ConstantImage) {
  const RasterImage img(700, 600, 42);
  const TilePlan plan = plan_tiles(700, 600);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const RasterImage tile = extract_tile(img, tile_ref(plan, i), 512);
    for (auto v : tile.values()) ASSERT_EQ(v, 42);
  }
}

TEST(ExtractTile, FlipReversesColumns) {
  const RasterImage img = gradient_image(800, 600);
  const TileRef plain{0, {204, 10}, false};
  const TileRef flipped{0, {204, 10}, true};
  const RasterImage a = extract_tile(img, plain, 512);
  const RasterImage b = extract_tile(img, flipped, 512);
  for (int y = 0; y < 512; y += 37) {
    for (int c = 0; c < 512; ++c) {
      for (int k = 0; k < 3; ++k) ASSERT_EQ(b(511 - c, y, k), a(c, y, k));
    }
  }
  EXPECT_EQ(a(10, 20, 0), img(214, 30, 0));
}

TEST(ExtractTile, PaddedAreaIsZero) {
  const RasterImage img(500, 500, 9);
  const TilePlan plan = plan_tiles(500, 500);
  const RasterImage t = extract_tile(img, tile_ref(plan, 0), 512);
  for (int y = 0; y < 512; ++y) {
    for (int x = 0; x < 512; ++x) {
      const std::uint8_t expected = (x < 500 && y < 500) ? 9 : 0;
      ASSERT_EQ(t(x, y, 1), expected);
    }
  }
}

TEST(MapLocalToSlide, Examples) {
  EXPECT_EQ(map_local_to_slide({0, {204, 0}, false}, {10, 20}, 512), (Point{214, 20}));
  EXPECT_EQ(map_local_to_slide({0, {0, 0}, true}, {0, 5}, 512), (Point{511, 5}));
}

TEST(MapLocalToSlide, RoundTripAndAgreesWithExtraction) {
  const RasterImage img = gradient_image(900, 700);
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const TileRef ref{0, {uniform_int(rng, 0, 388), uniform_int(rng, 0, 188)}, uniform_below(rng, 2) == 1};
    const RasterImage tile = extract_tile(img, ref, 512);
    const Point local{static_cast<double>(uniform_int(rng, 0, 511)), static_cast<double>(uniform_int(rng, 0, 511))};
    const Point global = map_local_to_slide(ref, local, 512);
    EXPECT_EQ(map_slide_to_local(ref, global, 512), local);
    const int gx = static_cast<int>(global.x);
    const int gy = static_cast<int>(global.y);
    for (int k = 0; k < 3; ++k) {
      ASSERT_EQ(tile(static_cast<int>(local.x), static_cast<int>(local.y), k), img(gx, gy, k));
    }
  }
}

Detection at(double x, double y, double conf) { return {{x, y}, conf, std::nullopt}; }

TEST(MergeTileDetections, Examples) {
  auto kept = merge_tile_detections({at(100, 100, 0.8), at(105, 100, 0.9)});
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_DOUBLE_EQ(kept[0].confidence, 0.9);

  kept = merge_tile_detections({at(100, 100, 0.9), at(140, 100, 0.8)});
  EXPECT_EQ(kept.size(), 2u);

  // Chain A-B-C, 20 px apart: B falls to A, then C is 40 px from A and survives.
  kept = merge_tile_detections({at(0, 0, 0.9), at(20, 0, 0.8), at(40, 0, 0.7)});
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].centroid, (Point{0, 0}));
  EXPECT_EQ(kept[1].centroid, (Point{40, 0}));
}

TEST(MergeTileDetections, OutputSpacedAndSorted) {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Detection> dets;
    const int n = uniform_int(rng, 0, 40);
    for (int i = 0; i < n; ++i) dets.push_back(at(uniform_real(rng, 0, 200), uniform_real(rng, 0, 200), uniform_unit(rng)));
    const auto kept = merge_tile_detections(dets, 30.0);
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (i > 0) EXPECT_GE(kept[i - 1].confidence, kept[i].confidence);
      for (std::size_t j = i + 1; j < kept.size(); ++j) EXPECT_GE(distance(kept[i].centroid, kept[j].centroid), 30.0);
    }
  }
  EXPECT_THROW((void)merge_tile_detections({at(0, 0, 1.5)}), ValidationError);
}

}  // namespace
}  // namespace mitodet::tiling
