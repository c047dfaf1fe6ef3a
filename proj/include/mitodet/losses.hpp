#pragma once

// Detection/segmentation objective: log loss, smooth L1, the combined
// classification + regression term, mask BCE, and a central-difference checker.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mitodet/errors.hpp"
#include "mitodet/random.hpp"

namespace mitodet::losses {

template <std::floating_point T>
struct ValueGrad {
  T value{};
  T grad{};
};

template <std::floating_point T>
inline constexpr T kDefaultEps = T(1e-12);

/// -ln P(label | p) with the probability clamped to [eps, 1 - eps].
/// The derivative is w.r.t. p and vanishes inside the clamped region.
template <std::floating_point T>
ValueGrad<T> cls_log_loss(T p, int label, T eps = kDefaultEps<T>) {
  const T q = label ? p : T(1) - p;
  const T clamped = std::clamp(q, eps, T(1) - eps);
  const T dq_dp = label ? T(1) : T(-1);
  const T grad = (q == clamped) ? -dq_dp / q : T(0);
  return {-std::log(clamped), grad};
}

/// 0.5 d^2 for |d| < 1, |d| - 0.5 otherwise.
template <std::floating_point T>
ValueGrad<T> smooth_l1(T d) {
  if (std::abs(d) < T(1)) return {T(0.5) * d * d, d};
  return {std::abs(d) - T(0.5), d > T(0) ? T(1) : T(-1)};
}

using Box4 = std::array<double, 4>;

/// Per-anchor probabilities and labels; predicted/target deltas are indexed by
/// anchor too but only anchors with label 1 contribute to regression.
struct ClsRegBatch {
  std::vector<double> probabilities;
  std::vector<int> labels;
  std::vector<Box4> predicted_deltas;
  std::vector<Box4> target_deltas;
  double n_cls = 1.0;
  double n_reg = 1.0;
  double lambda = 1.0;

  void validate() const {
    const auto n = probabilities.size();
    if (labels.size() != n || predicted_deltas.size() != n || target_deltas.size() != n) {
      throw ValidationError("batch arrays must have one entry per anchor");
    }
    if (!(n_cls >= 1.0) || !(n_reg >= 1.0)) throw ValidationError("N_cls and N_reg must be at least 1");
    if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
    for (std::size_t k = 0; k < n; ++k) {
      if (labels[k] != 0 && labels[k] != 1) throw ValidationError("labels must be 0 or 1");
      if (!(probabilities[k] >= 0.0 && probabilities[k] <= 1.0)) throw ValidationError("probability outside [0, 1]");
    }
  }
};

struct ClsRegResult {
  double value = 0.0;
  double cls_term = 0.0;  // (1/N_cls) sum of log losses
  double reg_term = 0.0;  // (lambda/N_reg) sum over positives of smooth L1
  std::vector<double> grad_probabilities;
  std::vector<Box4> grad_deltas;
};

inline ClsRegResult cls_reg_loss(const ClsRegBatch& batch, double eps = kDefaultEps<double>) {
  batch.validate();
  const auto n = batch.probabilities.size();
  ClsRegResult r;
  r.grad_probabilities.assign(n, 0.0);
  r.grad_deltas.assign(n, Box4{});
  const double reg_scale = batch.lambda / batch.n_reg;
  double cls_sum = 0.0;
  double reg_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto cls = cls_log_loss(batch.probabilities[k], batch.labels[k], eps);
    cls_sum += cls.value;
    r.grad_probabilities[k] = cls.grad / batch.n_cls;
    if (batch.labels[k] == 1) {
      for (std::size_t i = 0; i < 4; ++i) {
        const auto reg = smooth_l1(batch.predicted_deltas[k][i] - batch.target_deltas[k][i]);
        reg_sum += reg.value;
        r.grad_deltas[k][i] = reg_scale * reg.grad;
      }
    }
  }
  r.cls_term = cls_sum / batch.n_cls;
  r.reg_term = reg_scale * reg_sum;
  r.value = r.cls_term + r.reg_term;
  return r;
}

/// Predicted probabilities and 0/1 ground truth on a width x height grid, row-major.
struct MaskPair {
  int width = 0;
  int height = 0;
  std::vector<double> predicted;
  std::vector<int> truth;

  void validate() const {
    if (width <= 0 || height <= 0) throw ValidationError("mask grid must be nonempty");
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (predicted.size() != n || truth.size() != n) throw ValidationError("mask arrays do not match the grid");
    for (std::size_t i = 0; i < n; ++i) {
      if (truth[i] != 0 && truth[i] != 1) throw ValidationError("mask truth must be 0 or 1");
      if (!(predicted[i] >= 0.0 && predicted[i] <= 1.0)) throw ValidationError("mask probability outside [0, 1]");
    }
  }
};

struct MaskLossResult {
  double value = 0.0;
  std::vector<double> grad;
};

/// Mean binary cross entropy over the grid, written with the leading minus so
/// that the loss is nonnegative.
inline MaskLossResult mask_bce_loss(const MaskPair& pair, double eps = kDefaultEps<double>) {
  pair.validate();
  const double norm = 1.0 / (static_cast<double>(pair.width) * static_cast<double>(pair.height));
  MaskLossResult r;
  r.grad.assign(pair.predicted.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < pair.predicted.size(); ++i) {
    const auto px = cls_log_loss(pair.predicted[i], pair.truth[i], eps);
    sum += px.value;
    r.grad[i] = norm * px.grad;
  }
  r.value = norm * sum;
  return r;
}

struct LossBreakdown {
  double e_cls = 0.0;
  double e_reg = 0.0;
  double e_mask = 0.0;
  double total = 0.0;
};

inline LossBreakdown total_loss(double e_cls, double e_reg, double e_mask) {
  if (!(e_cls >= 0.0 && e_reg >= 0.0 && e_mask >= 0.0)) throw ValidationError("loss components must be nonnegative");
  return {e_cls, e_reg, e_mask, e_cls + e_reg + e_mask};
}

inline constexpr double kGradCheckStep = 1e-6;
inline constexpr double kGradCheckFloor = 1e-8;

/// Scalar loss over a flat parameter vector plus its analytic gradient.
struct Differentiable {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
};

/// Largest |analytic - central difference| / max(|analytic|, |numeric|, 1e-8) over coordinates.
inline double grad_check(const Differentiable& loss, std::span<const double> x, double h = kGradCheckStep) {
  const auto analytic = loss.gradient(x);
  if (analytic.size() != x.size()) throw ValidationError("gradient size does not match the input");
  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = loss.value(probe);
    probe[i] = saved - h;
    const double down = loss.value(probe);
    probe[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    if (!std::isfinite(up) || !std::isfinite(down) || !std::isfinite(analytic[i])) {
      throw NonFiniteLoss("non-finite loss or gradient at coordinate " + std::to_string(i));
    }
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), kGradCheckFloor});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

/// cls_reg_loss as a function of [p_0..p_{n-1}, B_0 (4 values), ..., B_{n-1}].
inline Differentiable cls_reg_objective(ClsRegBatch batch) {
  const auto n = batch.probabilities.size();
  auto unpack = [batch, n](std::span<const double> x) {
    ClsRegBatch b = batch;
    for (std::size_t k = 0; k < n; ++k) {
      b.probabilities[k] = x[k];
      for (std::size_t i = 0; i < 4; ++i) b.predicted_deltas[k][i] = x[n + 4 * k + i];
    }
    return b;
  };
  return {[unpack](std::span<const double> x) { return cls_reg_loss(unpack(x)).value; },
          [unpack, n](std::span<const double> x) {
            const auto r = cls_reg_loss(unpack(x));
            std::vector<double> g(r.grad_probabilities);
            g.resize(5 * n);
            for (std::size_t k = 0; k < n; ++k) {
              for (std::size_t i = 0; i < 4; ++i) g[n + 4 * k + i] = r.grad_deltas[k][i];
            }
            return g;
          }};
}

inline std::vector<double> flatten_inputs(const ClsRegBatch& batch) {
  std::vector<double> x(batch.probabilities);
  for (const auto& d : batch.predicted_deltas) x.insert(x.end(), d.begin(), d.end());
  return x;
}

/// mask_bce_loss as a function of the predicted probabilities.
inline Differentiable mask_objective(MaskPair pair) {
  auto with = [pair](std::span<const double> x) {
    MaskPair p = pair;
    p.predicted.assign(x.begin(), x.end());
    return p;
  };
  return {[with](std::span<const double> x) { return mask_bce_loss(with(x)).value; },
          [with](std::span<const double> x) { return mask_bce_loss(with(x)).grad; }};
}

struct GradCheckReport {
  std::string op;
  int trials = 0;
  double max_rel_err = 0.0;
  bool pass = false;
};

inline constexpr double kGradCheckTolerance = 1e-5;

namespace detail {

// Draw a regression residual bounded away from the |d| = 1 kink. Residuals
// below 0.01 are also skipped: there the gradient is so small that rounding in
// the loss value swamps the central difference.
inline double residual_away_from_kink(Rng& rng, double h) {
  for (;;) {
    const double d = uniform_real(rng, -3.0, 3.0);
    if (std::abs(std::abs(d) - 1.0) >= 100.0 * h && std::abs(d) >= 0.01) return d;
  }
}

inline ClsRegBatch random_batch(Rng& rng, double h) {
  const int n = uniform_int(rng, 1, 16);
  ClsRegBatch b;
  for (int k = 0; k < n; ++k) {
    const int label = static_cast<int>(uniform_below(rng, 2));
    b.labels.push_back(label);
    b.probabilities.push_back(uniform_real(rng, 0.05, 0.95));
    Box4 target{};
    Box4 predicted{};
    for (std::size_t i = 0; i < 4; ++i) {
      target[i] = uniform_real(rng, -1.0, 1.0);
      predicted[i] = target[i] + residual_away_from_kink(rng, h);
    }
    b.target_deltas.push_back(target);
    b.predicted_deltas.push_back(predicted);
  }
  b.n_cls = n;
  b.n_reg = uniform_int(rng, 1, n);
  b.lambda = uniform_real(rng, 0.5, 2.0);
  return b;
}

inline MaskPair random_mask_pair(Rng& rng) {
  MaskPair m;
  m.width = uniform_int(rng, 1, 6);
  m.height = uniform_int(rng, 1, 6);
  const auto n = static_cast<std::size_t>(m.width * m.height);
  for (std::size_t i = 0; i < n; ++i) {
    m.truth.push_back(static_cast<int>(uniform_below(rng, 2)));
    m.predicted.push_back(uniform_real(rng, 0.05, 0.95));
  }
  return m;
}

}  // namespace detail

/// Central-difference verification of every loss over `trials` seeded random points each.
inline std::vector<GradCheckReport> run_gradient_suite(int trials, std::uint64_t seed, double h = kGradCheckStep,
                                                       double tolerance = kGradCheckTolerance) {
  if (trials < 1) throw ValidationError("trials must be at least 1");
  Rng rng(seed);
  std::vector<GradCheckReport> reports;
  auto run = [&](const std::string& op, auto&& one_trial) {
    GradCheckReport r{op, trials, 0.0, false};
    for (int t = 0; t < trials; ++t) r.max_rel_err = std::max(r.max_rel_err, one_trial());
    r.pass = r.max_rel_err <= tolerance;
    reports.push_back(r);
  };

  run("smooth_l1", [&] {
    const double d = detail::residual_away_from_kink(rng, h);
    const Differentiable f{[](std::span<const double> x) { return smooth_l1(x[0]).value; },
                           [](std::span<const double> x) { return std::vector<double>{smooth_l1(x[0]).grad}; }};
    return grad_check(f, std::array{d}, h);
  });
  run("cls_log_loss", [&] {
    const double p = uniform_real(rng, 0.05, 0.95);
    const int label = static_cast<int>(uniform_below(rng, 2));
    const Differentiable f{
        [label](std::span<const double> x) { return cls_log_loss(x[0], label).value; },
        [label](std::span<const double> x) { return std::vector<double>{cls_log_loss(x[0], label).grad}; }};
    return grad_check(f, std::array{p}, h);
  });
  run("cls_reg_loss", [&] {
    const auto batch = detail::random_batch(rng, h);
    return grad_check(cls_reg_objective(batch), flatten_inputs(batch), h);
  });
  run("mask_bce_loss", [&] {
    const auto pair = detail::random_mask_pair(rng);
    return grad_check(mask_objective(pair), pair.predicted, h);
  });
  return reports;
}

}  // namespace mitodet::losses
