#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mitodet/errors.hpp"

namespace mitodet {

/// Dense interleaved raster: `channels` values per pixel, rows top to bottom.
template <typename T>
class Raster {
public:
  using value_type = T;

  Raster() = default;

  Raster(int width, int height, int channels, T fill = T{})
      : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || channels <= 0) {
      throw ValidationError("raster dimensions must be nonnegative with at least one channel");
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                     static_cast<std::size_t>(channels),
                 fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::size_t offset(int x, int y, int c = 0) const noexcept {
    assert(contains(x, y) && c >= 0 && c < channels_);
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  T& operator()(int x, int y, int c = 0) noexcept { return data_[offset(x, y, c)]; }
  const T& operator()(int x, int y, int c = 0) const noexcept { return data_[offset(x, y, c)]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  friend bool operator==(const Raster&, const Raster&) = default;

private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

/// 8-bit RGB image with optional physical resolution.
class RasterImage : public Raster<std::uint8_t> {
public:
  static constexpr int kChannels = 3;

  RasterImage() : Raster<std::uint8_t>(0, 0, kChannels) {}
  RasterImage(int width, int height, std::uint8_t fill = 0)
      : Raster<std::uint8_t>(width, height, kChannels, fill) {}

  std::optional<double> microns_per_pixel;

  friend bool operator==(const RasterImage& a, const RasterImage& b) {
    return static_cast<const Raster<std::uint8_t>&>(a) == static_cast<const Raster<std::uint8_t>&>(b);
  }
};

/// Single-channel mask holding 0 or 1.
using BinaryMask = Raster<std::uint8_t>;

/// Real-valued raster (feature maps, mean-normalized images).
using FloatRaster = Raster<double>;

}  // namespace mitodet
