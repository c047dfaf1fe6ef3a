#pragma once

// Scoring protocol: one-to-one centroid matching within a radius,
// precision/recall/F-score, and the three-band mitotic activity grade.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "mitodet/errors.hpp"
#include "mitodet/tiling.hpp"
#include "mitodet/types.hpp"

namespace mitodet::evaluation {

inline constexpr double kMatchRadius = 30.0;

struct MatchedPair {
  std::size_t detection = 0;
  std::size_t gt = 0;
  double distance = 0.0;

  friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

struct MatchResult {
  std::vector<MatchedPair> pairs;                 // sorted by detection index
  std::vector<std::size_t> unmatched_detections;  // false positives
  std::vector<std::size_t> unmatched_gts;         // false negatives
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

namespace detail {

/// Minimum-cost assignment of every row to a distinct column (rows <= cols).
/// Returns the column chosen for each row.
inline std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  const std::size_t m = n ? cost[0].size() : 0;
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> owner(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = owner[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (owner[j] != 0) assignment[owner[j] - 1] = j - 1;
  }
  return assignment;
}

class DisjointSets {
public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

/// Maximum-cardinality one-to-one matching of detection centroids to ground
/// truth points within `radius` (inclusive); among maximum matchings the total
/// distance is minimal. A second detection near an already matched gt is a FP.
inline MatchResult match_detections(const std::vector<Detection>& detections, const std::vector<Point>& gts,
                                    double radius = kMatchRadius) {
  if (!(radius > 0.0)) throw ValidationError("match radius must be positive");
  const std::size_t nd = detections.size();
  const std::size_t ng = gts.size();
  const double r2 = radius * radius;

  // Nodes 0..nd-1 are detections, nd..nd+ng-1 are gts.
  detail::DisjointSets sets(nd + ng);
  std::vector<std::vector<std::size_t>> neighbours(nd);
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t g = 0; g < ng; ++g) {
      const double dx = detections[d].centroid.x - gts[g].x;
      const double dy = detections[d].centroid.y - gts[g].y;
      if (dx * dx + dy * dy <= r2) {
        neighbours[d].push_back(g);
        sets.unite(d, nd + g);
      }
    }
  }

  std::vector<std::vector<std::size_t>> comp_dets(nd + ng);
  std::vector<std::vector<std::size_t>> comp_gts(nd + ng);
  for (std::size_t d = 0; d < nd; ++d) {
    if (!neighbours[d].empty()) comp_dets[sets.find(d)].push_back(d);
  }
  for (std::size_t g = 0; g < ng; ++g) comp_gts[sets.find(nd + g)].push_back(g);

  MatchResult result;
  std::vector<bool> det_matched(nd, false);
  std::vector<bool> gt_matched(ng, false);
  for (std::size_t c = 0; c < nd + ng; ++c) {
    const auto& ds = comp_dets[c];
    const auto& gs = comp_gts[c];
    if (ds.empty() || gs.empty()) continue;

    // Matched edges cost (distance - big); `big` exceeds any achievable distance
    // sum, so fewer matches can never be cheaper than more.
    const double big = radius * static_cast<double>(std::min(ds.size(), gs.size()) + 1) + 1.0;
    const bool transpose = ds.size() > gs.size();
    const auto& rows = transpose ? gs : ds;
    const auto& cols = transpose ? ds : gs;
    std::vector<std::vector<double>> cost(rows.size(), std::vector<double>(cols.size(), 0.0));
    auto edge = [&](std::size_t r, std::size_t col, double& dist) {
      const std::size_t d = transpose ? cols[col] : rows[r];
      const std::size_t g = transpose ? rows[r] : cols[col];
      dist = distance(detections[d].centroid, gts[g]);
      return std::find(neighbours[d].begin(), neighbours[d].end(), g) != neighbours[d].end();
    };
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t col = 0; col < cols.size(); ++col) {
        double dist = 0.0;
        if (edge(r, col, dist)) cost[r][col] = dist - big;
      }
    }
    const auto assignment = detail::hungarian(cost);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      double dist = 0.0;
      if (!edge(r, assignment[r], dist)) continue;
      const std::size_t d = transpose ? cols[assignment[r]] : rows[r];
      const std::size_t g = transpose ? rows[r] : cols[assignment[r]];
      result.pairs.push_back({d, g, dist});
      det_matched[d] = true;
      gt_matched[g] = true;
    }
  }

  std::sort(result.pairs.begin(), result.pairs.end(),
            [](const MatchedPair& a, const MatchedPair& b) { return a.detection < b.detection; });
  for (std::size_t d = 0; d < nd; ++d) {
    if (!det_matched[d]) result.unmatched_detections.push_back(d);
  }
  for (std::size_t g = 0; g < ng; ++g) {
    if (!gt_matched[g]) result.unmatched_gts.push_back(g);
  }
  result.tp = result.pairs.size();
  result.fp = result.unmatched_detections.size();
  result.fn = result.unmatched_gts.size();
  return result;
}

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

/// Precision, recall and their harmonic mean. No counts at all scores (1, 1, 1);
/// otherwise an undefined ratio is reported as 0.
inline Metrics compute_prf(std::size_t tp, std::size_t fp, std::size_t fn) {
  if (tp == 0 && fp == 0 && fn == 0) return {1.0, 1.0, 1.0};
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  Metrics m;
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  const double sum = m.precision + m.recall;
  m.f_score = sum > 0.0 ? 2.0 * m.precision * m.recall / sum : 0.0;
  return m;
}

/// Nottingham mitotic activity band for a count per 10 HPF: 1 (0-11), 2 (12-22), 3 (23+).
inline int mitotic_activity_score(long long count_per_10_hpf) {
  if (count_per_10_hpf < 0) throw ValidationError("mitotic count must be nonnegative");
  if (count_per_10_hpf <= 11) return 1;
  if (count_per_10_hpf <= 22) return 2;
  return 3;
}

struct SlideEvaluation {
  std::vector<Detection> merged;
  MatchResult match;
  Metrics metrics;
  int activity_score_pred = 1;
  int activity_score_gt = 1;
};

/// Merge overlapping-tile detections, match against ground truth and grade.
/// The predicted grade counts the merged detections.
inline SlideEvaluation evaluate_slide(const std::vector<Detection>& detections, const std::vector<Point>& gts,
                                      double radius = kMatchRadius, double dedup_radius = kMatchRadius) {
  SlideEvaluation e;
  e.merged = tiling::merge_tile_detections(detections, dedup_radius);
  e.match = match_detections(e.merged, gts, radius);
  e.metrics = compute_prf(e.match.tp, e.match.fp, e.match.fn);
  e.activity_score_pred = mitotic_activity_score(static_cast<long long>(e.merged.size()));
  e.activity_score_gt = mitotic_activity_score(static_cast<long long>(gts.size()));
  return e;
}

}  // namespace mitodet::evaluation
