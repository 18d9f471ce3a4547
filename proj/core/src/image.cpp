#include "reld/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "reld/errors.hpp"

namespace reld {

std::string to_string(const Shape& s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
         std::to_string(s.channels);
}

void validate(const Shape& s) {
  if (s.height <= 0 || s.width <= 0)
    throw ShapeError("image dimensions must be positive, got " + to_string(s));
  if (s.channels != 1 && s.channels != 3)
    throw ShapeError("image must have 1 or 3 channels, got " + to_string(s));
}

Image::Image(Shape shape, double fill) : shape_(shape) {
  validate(shape_);
  data_.assign(shape_.size(), fill);
}

Image::Image(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  validate(shape_);
  if (data_.size() != shape_.size())
    throw ShapeError("image data length " + std::to_string(data_.size()) +
                     " does not match shape " + to_string(shape_));
}

std::vector<double> Image::plane(int c) const {
  std::vector<double> out(shape_.pixels());
  const auto stride = static_cast<std::size_t>(shape_.channels);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = data_[i * stride + static_cast<std::size_t>(c)];
  return out;
}

void Image::set_plane(int c, std::span<const double> values) {
  if (values.size() != shape_.pixels())
    throw ShapeError("plane length does not match image " + to_string(shape_));
  const auto stride = static_cast<std::size_t>(shape_.channels);
  for (std::size_t i = 0; i < values.size(); ++i)
    data_[i * stride + static_cast<std::size_t>(c)] = values[i];
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
}

bool all_finite(const Image& x) {
  return std::all_of(x.data().begin(), x.data().end(), [](double v) { return std::isfinite(v); });
}

Image clip(const Image& x) {
  Image out = x;
  for (auto& v : out.data()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

double mse(const Image& reference, const Image& test) {
  require_same_shape(reference, test, "mse");
  double s = 0.0;
  const auto a = reference.data();
  const auto b = test.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

double psnr(const Image& reference, const Image& test) {
  const double e = mse(reference, test);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / e);
}

std::vector<double> standard_normal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& v : out) v = dist(gen);
  return out;
}

Image awgn_corrupt(const Image& x, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw ParameterError("noise standard deviation must be >= 0");
  if (sigma == 0.0) return x;
  Image out = x;
  const auto noise = standard_normal(x.size(), seed);
  auto d = out.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += sigma * noise[i];
  return out;
}

Image upsample_replicate(const Image& x, int factor) {
  if (factor < 1) throw ParameterError("upsampling factor must be >= 1");
  if (factor == 1) return x;
  Shape s = x.shape();
  s.height *= factor;
  s.width *= factor;
  Image out(s);
  for (int y = 0; y < s.height; ++y)
    for (int xx = 0; xx < s.width; ++xx)
      for (int c = 0; c < s.channels; ++c) out.at(y, xx, c) = x.at(y / factor, xx / factor, c);
  return out;
}

}  // namespace reld
