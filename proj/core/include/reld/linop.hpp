#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "reld/fft.hpp"
#include "reld/image.hpp"

namespace reld {

/// Odd-sized square convolution kernel, row-major weights.
struct Kernel {
  int size = 1;
  std::vector<double> weights{1.0};

  int center() const { return (size - 1) / 2; }
  double at(int i, int j) const { return weights[static_cast<std::size_t>(i) * size + j]; }

  friend bool operator==(const Kernel&, const Kernel&) = default;
};

/// Validates size (odd, positive), length, and finiteness.
Kernel make_kernel(int size, std::vector<double> weights);

Kernel delta_kernel();

/// Normalized isotropic Gaussian sampled on a size x size grid centered at
/// (size-1)/2. Throws ParameterError for sigma <= 0 or even/nonpositive size.
Kernel gaussian_psf(double sigma, int size);

/// Smallest odd integer >= 6*sigma + 1, reduced to the largest odd value not
/// exceeding `max_size`.
int default_psf_size(double sigma, int max_size);

/// Kernel rotated by 180 degrees.
Kernel flipped(const Kernel& k);

/// Plain-text grid: first line the size, then `size` rows of weights.
std::string kernel_to_text(const Kernel& k);
Kernel kernel_from_text(const std::string& text);
void save_kernel(const Kernel& k, const std::filesystem::path& path);
Kernel load_kernel(const std::filesystem::path& path);

/// A degradation operator A. Immutable; composites share their children.
class LinearOperator {
 public:
  enum class Kind { Identity, PeriodicConv, Decimate, Compose };

  static LinearOperator identity(Shape shape);
  /// Circular convolution; the kernel must fit inside the image.
  static LinearOperator periodic_conv(Shape shape, Kernel kernel);
  /// Keeps rows and columns with index divisible by `factor`.
  static LinearOperator decimate(Shape shape, int factor);
  /// outer(inner(x)); requires inner.output_shape() == outer.input_shape().
  static LinearOperator compose(LinearOperator outer, LinearOperator inner);

  Kind kind() const;
  const Shape& input_shape() const { return input_; }
  const Shape& output_shape() const { return output_; }

  /// Kind-specific accessors; throw UnsupportedOperatorError on the wrong kind.
  const Kernel& kernel() const;
  int factor() const;
  const LinearOperator& outer() const;
  const LinearOperator& inner() const;

  std::string describe() const;

 private:
  struct IdentityOp {};
  struct ConvOp {
    Kernel kernel;
  };
  struct DecimateOp {
    int factor;
  };
  struct ComposeOp {
    std::shared_ptr<const LinearOperator> outer;
    std::shared_ptr<const LinearOperator> inner;
  };

  LinearOperator(Shape in, Shape out, std::variant<IdentityOp, ConvOp, DecimateOp, ComposeOp> op)
      : input_(in), output_(out), op_(std::move(op)) {}

  Shape input_;
  Shape output_;
  std::variant<IdentityOp, ConvOp, DecimateOp, ComposeOp> op_;
};

Image apply(const LinearOperator& op, const Image& x);
Image adjoint(const LinearOperator& op, const Image& y);

/// DFT of the kernel zero-padded to rows x cols with its center moved to
/// (0,0), so that DFT(conv(x)) == transfer_function(k) .* DFT(x).
fft::Grid transfer_function(const Kernel& kernel, int rows, int cols);

}  // namespace reld
