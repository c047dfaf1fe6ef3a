#include <gtest/gtest.h>

#include <cmath>

#include "mitodet/evaluation.hpp"
#include "oracles.hpp"

namespace mitodet::evaluation {
namespace {

Detection at(double x, double y, double conf = 0.9) { return {{x, y}, conf, std::nullopt}; }

TEST(ComputePrf, ReportedRows) {
  // Precision/recall pairs reported for the compared detectors and their F-scores.
  auto f = [](double p, double r) { return 2 * p * r / (p + r); };
  EXPECT_NEAR(f(0.86, 0.86), 0.86, 0.005);
  EXPECT_NEAR(f(0.76, 0.66), 0.708, 0.005);
  EXPECT_NEAR(f(0.77, 0.66), 0.713, 0.005);

  const Metrics m = compute_prf(86, 14, 14);
  EXPECT_NEAR(m.precision, 0.86, 1e-12);
  EXPECT_NEAR(m.recall, 0.86, 1e-12);
  EXPECT_NEAR(m.f_score, 0.86, 1e-12);
}

TEST(ComputePrf, DegenerateCounts) {
  const Metrics none = compute_prf(0, 0, 0);
  EXPECT_EQ(none.precision, 1.0);
  EXPECT_EQ(none.recall, 1.0);
  EXPECT_EQ(none.f_score, 1.0);
  const Metrics misses = compute_prf(0, 0, 5);
  EXPECT_EQ(misses.precision, 0.0);
  EXPECT_EQ(misses.recall, 0.0);
  EXPECT_EQ(misses.f_score, 0.0);
  const Metrics fps = compute_prf(0, 3, 0);
  EXPECT_EQ(fps.precision, 0.0);
  EXPECT_EQ(fps.f_score, 0.0);
}

TEST(ComputePrf, HarmonicMeanIdentity) {
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const auto tp = static_cast<std::size_t>(uniform_int(rng, 1, 200));
    const auto fp = static_cast<std::size_t>(uniform_int(rng, 0, 200));
    const auto fn = static_cast<std::size_t>(uniform_int(rng, 0, 200));
    const Metrics m = compute_prf(tp, fp, fn);
    EXPECT_NEAR(m.f_score, 2.0 * tp / (2.0 * tp + fp + fn), 1e-12);
  }
}

TEST(MatchDetections, Examples) {
  // A detection 25 px away matches; 35 px does not.
  auto r = match_detections({at(125, 100)}, {{100, 100}});
  EXPECT_EQ(r.tp, 1u);
  r = match_detections({at(135, 100)}, {{100, 100}});
  EXPECT_EQ(r.tp, 0u);
  EXPECT_EQ(r.fp, 1u);
  EXPECT_EQ(r.fn, 1u);
  // Radius is inclusive.
  EXPECT_EQ(match_detections({at(130, 100)}, {{100, 100}}).tp, 1u);
  // Two detections on one gt: one TP and one FP.
  r = match_detections({at(100, 110), at(100, 90)}, {{100, 100}});
  EXPECT_EQ(r.tp, 1u);
  EXPECT_EQ(r.fp, 1u);
  EXPECT_EQ(r.fn, 0u);
}

TEST(MatchDetections, PrefersMaximumCardinality) {
  // Greedy nearest-first would pair d0 with g1 and strand g0.
  const std::vector<Detection> dets{at(20, 0), at(45, 0)};
  const std::vector<Point> gts{{0, 0}, {25, 0}};
  const auto r = match_detections(dets, gts);
  EXPECT_EQ(r.tp, 2u);
  ASSERT_EQ(r.pairs.size(), 2u);
  EXPECT_EQ(r.pairs[0], (MatchedPair{0, 0, 20.0}));
  EXPECT_EQ(r.pairs[1], (MatchedPair{1, 1, 20.0}));
}

TEST(MatchDetections, AgreesWithBruteForce) {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Detection> dets;
    std::vector<Point> pts;
    std::vector<Point> gts;
    const int nd = uniform_int(rng, 0, 7);
    const int ng = uniform_int(rng, 0, 7);
    for (int i = 0; i < nd; ++i) {
      dets.push_back(at(uniform_real(rng, 0, 100), uniform_real(rng, 0, 100)));
      pts.push_back(dets.back().centroid);
    }
    for (int i = 0; i < ng; ++i) gts.push_back({uniform_real(rng, 0, 100), uniform_real(rng, 0, 100)});
    const auto r = match_detections(dets, gts);
    const auto oracle = oracle::brute_force_matching(pts, gts, 30.0);
    ASSERT_EQ(r.tp, oracle.count);
    double total = 0;
    for (const auto& p : r.pairs) {
      total += p.distance;
      EXPECT_LE(p.distance, 30.0);
    }
    EXPECT_NEAR(total, oracle.total, 1e-9);
    EXPECT_EQ(r.tp + r.fp, dets.size());
    EXPECT_EQ(r.tp + r.fn, gts.size());
  }
}

TEST(MatchDetections, RejectsBadRadius) { EXPECT_THROW((void)match_detections({}, {}, 0.0), ValidationError); }

TEST(MitoticActivityScore, Bands) {
  EXPECT_EQ(mitotic_activity_score(0), 1);
  EXPECT_EQ(mitotic_activity_score(5), 1);
  EXPECT_EQ(mitotic_activity_score(11), 1);
  EXPECT_EQ(mitotic_activity_score(12), 2);
  EXPECT_EQ(mitotic_activity_score(15), 2);
  EXPECT_EQ(mitotic_activity_score(22), 2);
  EXPECT_EQ(mitotic_activity_score(23), 3);
  EXPECT_EQ(mitotic_activity_score(30), 3);
  EXPECT_THROW((void)mitotic_activity_score(-1), ValidationError);
  for (int c = 1; c <= 50; ++c) EXPECT_GE(mitotic_activity_score(c), mitotic_activity_score(c - 1));
}

TEST(EvaluateSlide, DeduplicatesBeforeMatching) {
  const std::vector<Detection> dets{at(100, 100, 0.9), at(105, 100, 0.8), at(400, 400, 0.7)};
  const auto e = evaluate_slide(dets, {{100, 100}, {200, 200}});
  EXPECT_EQ(e.merged.size(), 2u);
  EXPECT_EQ(e.match.tp, 1u);
  EXPECT_EQ(e.match.fp, 1u);
  EXPECT_EQ(e.match.fn, 1u);
  EXPECT_NEAR(e.metrics.f_score, 0.5, 1e-12);
  EXPECT_EQ(e.activity_score_pred, 1);
  EXPECT_EQ(e.activity_score_gt, 1);
}

}  // namespace
}  // namespace mitodet::evaluation
