#pragma once

// Optical-density conversion, Macenko stain estimation and stain/mean normalization.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "mitodet/errors.hpp"
#include "mitodet/raster.hpp"

namespace mitodet::imaging {

using Vec3 = Eigen::Vector3d;

/// Per-pixel optical densities, 3 channels, all components >= 0.
using OdImage = Raster<double>;

inline constexpr double kWhite = 255.0;

/// Optical density of one channel intensity: -ln(max(I, floor) / 255).
inline double intensity_to_od(int intensity, int floor = 1) {
  return -std::log(static_cast<double>(std::max(intensity, floor)) / kWhite);
}

/// round(255 exp(-od)) clamped to [0, 255].
inline std::uint8_t od_to_intensity(double od) {
  const double v = std::round(kWhite * std::exp(-od));
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, kWhite));
}

inline OdImage rgb_to_od(const RasterImage& image, int floor = 1) {
  if (floor < 1 || floor > 255) throw ValidationError("od floor must lie in [1, 255]");
  std::array<double, 256> lut{};
  for (int i = 0; i < 256; ++i) lut[static_cast<std::size_t>(i)] = intensity_to_od(i, floor);

  OdImage od(image.width(), image.height(), 3);
  auto src = image.values();
  auto dst = od.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = lut[src[i]];
  return od;
}

inline RasterImage od_to_rgb(const OdImage& od) {
  if (od.channels() != 3) throw ValidationError("optical density image must have 3 channels");
  RasterImage out(od.width(), od.height());
  auto src = od.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = od_to_intensity(src[i]);
  return out;
}

/// Linearly interpolated percentile (q in [0, 100]) of an unsorted sample.
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("percentile of empty sample");
  std::sort(values.begin(), values.end());
  const double rank = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double t = rank - static_cast<double>(lo);
  return values[lo] + t * (values[hi] - values[lo]);
}

inline double angle_between(const Vec3& a, const Vec3& b) {
  const double c = a.normalized().dot(b.normalized());
  return std::acos(std::clamp(c, -1.0, 1.0));
}

/// Two unit stain directions in OD space with their robust concentration maxima.
/// The first vector is hematoxylin-like: it has the larger blue-channel component.
class StainProfile {
public:
  static constexpr double kMinSeparation = 1e-3;  // radians

  /// Validates, normalizes and orders the pair. Ceilings travel with their vectors.
  StainProfile(const Vec3& first, const Vec3& second, double first_max, double second_max) {
    std::array<Vec3, 2> v{first, second};
    std::array<double, 2> c{first_max, second_max};
    for (int k = 0; k < 2; ++k) {
      if (!v[k].allFinite() || v[k].norm() <= 0.0) throw ValidationError("stain vector must be finite and nonzero");
      if ((v[k].array() < -1e-12).any()) throw ValidationError("stain vector components must be nonnegative");
      v[k] = v[k].cwiseMax(0.0).normalized();
      if (!std::isfinite(c[k]) || c[k] <= 0.0) throw ValidationError("max concentration must be positive and finite");
    }
    if (angle_between(v[0], v[1]) <= kMinSeparation) {
      throw ValidationError("stain vectors are not linearly independent");
    }
    if (v[1].z() > v[0].z()) {
      std::swap(v[0], v[1]);
      std::swap(c[0], c[1]);
    }
    vectors_ = v;
    max_concentrations_ = c;
  }

  const std::array<Vec3, 2>& stain_vectors() const noexcept { return vectors_; }
  const std::array<double, 2>& max_concentrations() const noexcept { return max_concentrations_; }

  /// 3x2 matrix whose columns are the stain vectors.
  Eigen::Matrix<double, 3, 2> matrix() const {
    Eigen::Matrix<double, 3, 2> m;
    m.col(0) = vectors_[0];
    m.col(1) = vectors_[1];
    return m;
  }

  /// Least-squares solver: concentrations = pseudo_inverse() * od.
  Eigen::Matrix<double, 2, 3> pseudo_inverse() const {
    const auto m = matrix();
    return (m.transpose() * m).inverse() * m.transpose();
  }

  friend bool operator==(const StainProfile&, const StainProfile&) = default;

private:
  std::array<Vec3, 2> vectors_;
  std::array<double, 2> max_concentrations_{};
};

struct StainEstimationOptions {
  double od_threshold = 0.15;
  double angle_percentile = 1.0;
  double concentration_percentile = 99.0;
  std::size_t min_pixels = 100;
  double rank_tolerance = 1e-6;

  void validate() const {
    if (!(od_threshold > 0.0)) throw ValidationError("od_threshold must be positive");
    if (!(angle_percentile > 0.0 && angle_percentile < 50.0)) {
      throw ValidationError("angle_percentile must lie in (0, 50)");
    }
    if (!(concentration_percentile > 0.0 && concentration_percentile <= 100.0)) {
      throw ValidationError("concentration_percentile must lie in (0, 100]");
    }
  }
};

namespace detail {

// Flip to the nonnegative orthant, drop residual negative components, renormalize.
inline Vec3 orient_nonnegative(Vec3 v) {
  if (v.sum() < 0.0) v = -v;
  v = v.cwiseMax(0.0);
  const double n = v.norm();
  return n > 0.0 ? Vec3(v / n) : v;
}

}  // namespace detail

/// Macenko estimation: SVD plane of the tissue OD vectors, extreme angles in
/// that plane as stain directions, and percentile concentration ceilings.
inline StainProfile estimate_stain_profile(const RasterImage& image,
                                           const StainEstimationOptions& options = {}) {
  options.validate();
  if (image.empty()) throw ValidationError("cannot estimate stains of an empty image");

  const OdImage od = rgb_to_od(image);
  const auto values = od.values();
  std::vector<Vec3> tissue;
  tissue.reserve(od.pixel_count());
  for (std::size_t i = 0; i < values.size(); i += 3) {
    const Vec3 v(values[i], values[i + 1], values[i + 2]);
    if (v.norm() >= options.od_threshold) tissue.push_back(v);
  }
  if (tissue.size() < options.min_pixels) {
    throw StainEstimationDegenerate("only " + std::to_string(tissue.size()) +
                                    " pixels exceed the optical density threshold");
  }

  // Right singular vectors of the N x 3 OD matrix = eigenvectors of its Gram matrix.
  Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
  for (const auto& v : tissue) gram.noalias() += v * v.transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(gram);
  if (eig.info() != Eigen::Success) throw StainEstimationDegenerate("eigen decomposition failed");
  const double s1 = std::sqrt(std::max(eig.eigenvalues()(2), 0.0));
  const double s2 = std::sqrt(std::max(eig.eigenvalues()(1), 0.0));
  if (!(s1 > 0.0) || s2 < options.rank_tolerance * s1) {
    throw StainEstimationDegenerate("optical density vectors are rank deficient");
  }
  Vec3 e1 = eig.eigenvectors().col(2);
  Vec3 e2 = eig.eigenvectors().col(1);
  if (e1.sum() < 0.0) e1 = -e1;
  if (e2.sum() < 0.0) e2 = -e2;

  std::vector<double> angles;
  angles.reserve(tissue.size());
  for (const auto& v : tissue) angles.push_back(std::atan2(v.dot(e2), v.dot(e1)));
  const double lo = percentile(angles, options.angle_percentile);
  const double hi = percentile(angles, 100.0 - options.angle_percentile);

  const Vec3 a = detail::orient_nonnegative(std::cos(lo) * e1 + std::sin(lo) * e2);
  const Vec3 b = detail::orient_nonnegative(std::cos(hi) * e1 + std::sin(hi) * e2);
  if (a.norm() == 0.0 || b.norm() == 0.0 || angle_between(a, b) <= StainProfile::kMinSeparation) {
    throw StainEstimationDegenerate("extreme stain angles collapse to one direction");
  }

  Eigen::Matrix<double, 3, 2> stains;
  stains.col(0) = a;
  stains.col(1) = b;
  const Eigen::Matrix<double, 2, 3> solve = (stains.transpose() * stains).inverse() * stains.transpose();
  std::vector<double> c0;
  std::vector<double> c1;
  c0.reserve(tissue.size());
  c1.reserve(tissue.size());
  for (const auto& v : tissue) {
    const Eigen::Vector2d c = solve * v;
    c0.push_back(c(0));
    c1.push_back(c(1));
  }
  const double max0 = percentile(std::move(c0), options.concentration_percentile);
  const double max1 = percentile(std::move(c1), options.concentration_percentile);
  if (!(max0 > 0.0) || !(max1 > 0.0)) {
    throw StainEstimationDegenerate("a stain has no positive concentration");
  }
  return StainProfile(a, b, max0, max1);
}

/// Re-express each pixel in the target stains: clamp-nonnegative least-squares
/// concentrations under `source`, rescaled by the ratio of ceilings.
inline RasterImage normalize_stains(const RasterImage& image, const StainProfile& source,
                                    const StainProfile& target) {
  const Eigen::Matrix<double, 2, 3> solve = source.pseudo_inverse();
  const Eigen::Matrix<double, 3, 2> compose = target.matrix();
  const Eigen::Vector2d scale(target.max_concentrations()[0] / source.max_concentrations()[0],
                              target.max_concentrations()[1] / source.max_concentrations()[1]);

  std::array<double, 256> lut{};
  for (int i = 0; i < 256; ++i) lut[static_cast<std::size_t>(i)] = intensity_to_od(i);

  RasterImage out(image.width(), image.height());
  out.microns_per_pixel = image.microns_per_pixel;
  const auto src = image.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); i += 3) {
    const Vec3 od(lut[src[i]], lut[src[i + 1]], lut[src[i + 2]]);
    const Eigen::Vector2d c = (solve * od).cwiseMax(0.0).cwiseProduct(scale);
    const Vec3 mapped = compose * c;
    for (int k = 0; k < 3; ++k) dst[i + static_cast<std::size_t>(k)] = od_to_intensity(mapped(k));
  }
  return out;
}

/// Per-channel mean subtraction; the result is left in floating point.
inline FloatRaster mean_normalize(const RasterImage& image) {
  if (image.empty()) throw ValidationError("cannot mean-normalize an empty image");
  const auto src = image.values();
  std::array<std::uint64_t, 3> sums{};
  for (std::size_t i = 0; i < src.size(); ++i) sums[i % 3] += src[i];
  const double n = static_cast<double>(image.pixel_count());
  const std::array<double, 3> means{static_cast<double>(sums[0]) / n, static_cast<double>(sums[1]) / n,
                                    static_cast<double>(sums[2]) / n};

  FloatRaster out(image.width(), image.height(), 3);
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<double>(src[i]) - means[i % 3];
  return out;
}

}  // namespace mitodet::imaging
