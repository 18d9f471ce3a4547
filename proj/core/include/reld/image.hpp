#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace reld {

/// Raster dimensions. Pixels are stored row-major with interleaved channels.
struct Shape {
  int height = 0;
  int width = 0;
  int channels = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
           static_cast<std::size_t>(channels);
  }
  std::size_t pixels() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }

  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// Throws ShapeError unless height, width > 0 and channels is 1 or 3.
void validate(const Shape& s);

/// Real-valued H x W x C raster with nominal range [0, 1].
class Image {
 public:
  Image() = default;
  explicit Image(Shape shape, double fill = 0.0);
  Image(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  int channels() const { return shape_.channels; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  const std::vector<double>& values() const { return data_; }

  std::size_t index(int y, int x, int c = 0) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(shape_.width) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(shape_.channels) +
           static_cast<std::size_t>(c);
  }
  double& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  double at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }

  /// Single channel as a contiguous H*W plane.
  std::vector<double> plane(int c) const;
  void set_plane(int c, std::span<const double> values);

  friend bool operator==(const Image&, const Image&) = default;

 private:
  Shape shape_{};
  std::vector<double> data_;
};

void require_same_shape(const Image& a, const Image& b, const char* what);

bool all_finite(const Image& x);

/// Values clamped to [0, 1].
Image clip(const Image& x);

/// Mean squared error averaged over every sample of every channel.
double mse(const Image& reference, const Image& test);

/// Peak signal-to-noise ratio in dB with peak 1.0, averaged over all channels
/// (RGB, not luminance). Returns +infinity when the images are identical.
double psnr(const Image& reference, const Image& test);

/// x + eta with eta i.i.d. N(0, sigma^2). Noise comes from std::mt19937_64
/// seeded with `seed` and std::normal_distribution, drawn in storage order, so
/// the result is a pure function of (x, sigma, seed) on a given build. No
/// clipping is applied.
Image awgn_corrupt(const Image& x, double sigma, std::uint64_t seed);

/// Standard normal samples from the same generator as awgn_corrupt.
std::vector<double> standard_normal(std::size_t n, std::uint64_t seed);

/// Zero-order-hold upsampling by an integer factor in both spatial axes.
Image upsample_replicate(const Image& x, int factor);

}  // namespace reld
