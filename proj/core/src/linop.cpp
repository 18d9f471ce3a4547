#include "reld/linop.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "reld/errors.hpp"

namespace reld {

Kernel make_kernel(int size, std::vector<double> weights) {
  if (size < 1 || size % 2 == 0)
    throw ParameterError("kernel size must be a positive odd integer, got " + std::to_string(size));
  if (weights.size() != static_cast<std::size_t>(size) * size)
    throw ShapeError("kernel weight count does not match size " + std::to_string(size));
  for (double w : weights)
    if (!std::isfinite(w)) throw ParameterError("kernel weights must be finite");
  return Kernel{size, std::move(weights)};
}

Kernel delta_kernel() { return Kernel{}; }

Kernel gaussian_psf(double sigma, int size) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw ParameterError("PSF standard deviation must be > 0");
  if (size < 1 || size % 2 == 0)
    throw ParameterError("PSF size must be a positive odd integer, got " + std::to_string(size));
  const int c = (size - 1) / 2;
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  // Exponents are shifted by the center value (0) so tiny sigma underflows
  // off-center weights to exactly 0 instead of producing 0/0.
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const double r2 = static_cast<double>((i - c) * (i - c) + (j - c) * (j - c));
      const double v = std::exp(-r2 / (2.0 * sigma * sigma));
      w[static_cast<std::size_t>(i) * size + j] = v;
      sum += v;
    }
  }
  for (auto& v : w) v /= sum;
  return Kernel{size, std::move(w)};
}

int default_psf_size(double sigma, int max_size) {
  if (!(sigma > 0.0)) throw ParameterError("PSF standard deviation must be > 0");
  if (max_size < 1) throw ParameterError("maximum PSF size must be >= 1");
  int size = static_cast<int>(std::ceil(6.0 * sigma + 1.0));
  if (size % 2 == 0) ++size;
  int cap = max_size % 2 == 0 ? max_size - 1 : max_size;
  return std::min(size, cap);
}

Kernel flipped(const Kernel& k) {
  Kernel out = k;
  const std::size_t n = k.weights.size();
  for (std::size_t i = 0; i < n; ++i) out.weights[i] = k.weights[n - 1 - i];
  return out;
}

std::string kernel_to_text(const Kernel& k) {
  std::ostringstream os;
  os << k.size << "\n" << std::setprecision(17);
  for (int i = 0; i < k.size; ++i) {
    for (int j = 0; j < k.size; ++j) os << (j ? " " : "") << k.at(i, j);
    os << "\n";
  }
  return os.str();
}

Kernel kernel_from_text(const std::string& text) {
  std::istringstream is(text);
  int size = 0;
  if (!(is >> size)) throw ParameterError("kernel text: missing size line");
  if (size < 1 || size % 2 == 0) throw ParameterError("kernel text: size must be odd and positive");
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  for (auto& v : w)
    if (!(is >> v)) throw ParameterError("kernel text: expected " + std::to_string(w.size()) + " weights");
  return make_kernel(size, std::move(w));
}

void save_kernel(const Kernel& k, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << kernel_to_text(k);
  if (!out) throw IoError(path.string() + ": write failed");
}

Kernel load_kernel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return kernel_from_text(ss.str());
  } catch (const ParameterError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- operators

LinearOperator LinearOperator::identity(Shape shape) {
  validate(shape);
  return LinearOperator(shape, shape, IdentityOp{});
}

LinearOperator LinearOperator::periodic_conv(Shape shape, Kernel kernel) {
  validate(shape);
  kernel = make_kernel(kernel.size, std::move(kernel.weights));
  if (kernel.size > std::min(shape.height, shape.width))
    throw ShapeError("kernel of size " + std::to_string(kernel.size) + " exceeds image " +
                     to_string(shape));
  return LinearOperator(shape, shape, ConvOp{std::move(kernel)});
}

LinearOperator LinearOperator::decimate(Shape shape, int factor) {
  validate(shape);
  if (factor < 1) throw ParameterError("decimation factor must be >= 1");
  if (shape.height % factor != 0 || shape.width % factor != 0)
    throw ShapeError("image " + to_string(shape) + " is not divisible by decimation factor " +
                     std::to_string(factor));
  Shape out{shape.height / factor, shape.width / factor, shape.channels};
  return LinearOperator(shape, out, DecimateOp{factor});
}

LinearOperator LinearOperator::compose(LinearOperator outer, LinearOperator inner) {
  if (inner.output_shape() != outer.input_shape())
    throw ShapeError("composition shape mismatch: inner produces " + to_string(inner.output_shape()) +
                     ", outer expects " + to_string(outer.input_shape()));
  Shape in = inner.input_shape();
  Shape out = outer.output_shape();
  return LinearOperator(in, out,
                        ComposeOp{std::make_shared<const LinearOperator>(std::move(outer)),
                                  std::make_shared<const LinearOperator>(std::move(inner))});
}

LinearOperator::Kind LinearOperator::kind() const { return static_cast<Kind>(op_.index()); }

const Kernel& LinearOperator::kernel() const {
  if (auto* c = std::get_if<ConvOp>(&op_)) return c->kernel;
  throw UnsupportedOperatorError("operator is not a periodic convolution: " + describe());
}

int LinearOperator::factor() const {
  if (auto* d = std::get_if<DecimateOp>(&op_)) return d->factor;
  throw UnsupportedOperatorError("operator is not a decimation: " + describe());
}

const LinearOperator& LinearOperator::outer() const {
  if (auto* c = std::get_if<ComposeOp>(&op_)) return *c->outer;
  throw UnsupportedOperatorError("operator is not a composition: " + describe());
}

const LinearOperator& LinearOperator::inner() const {
  if (auto* c = std::get_if<ComposeOp>(&op_)) return *c->inner;
  throw UnsupportedOperatorError("operator is not a composition: " + describe());
}

std::string LinearOperator::describe() const {
  switch (kind()) {
    case Kind::Identity:
      return "Identity(" + to_string(input_) + ")";
    case Kind::PeriodicConv:
      return "PeriodicConv(k=" + std::to_string(kernel().size) + ", " + to_string(input_) + ")";
    case Kind::Decimate:
      return "Decimate(d=" + std::to_string(factor()) + ", " + to_string(input_) + ")";
    case Kind::Compose:
      return "Compose(" + outer().describe() + ", " + inner().describe() + ")";
  }
  return "?";
}

namespace {

// y[i,j] = sum_{u,v} w[u,v] x[i-(u-c), j-(v-c)] with periodic wrap.
Image circular_convolve(const Kernel& k, const Image& x) {
  const int h = x.height(), w = x.width(), ch = x.channels();
  const int c = k.center();
  Image y(x.shape());
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      for (int u = 0; u < k.size; ++u) {
        const int si = ((i - (u - c)) % h + h) % h;
        for (int v = 0; v < k.size; ++v) {
          const double wt = k.at(u, v);
          if (wt == 0.0) continue;
          const int sj = ((j - (v - c)) % w + w) % w;
          for (int cc = 0; cc < ch; ++cc) y.at(i, j, cc) += wt * x.at(si, sj, cc);
        }
      }
    }
  }
  return y;
}

void require_shape(const Image& x, const Shape& expected, const char* what) {
  if (x.shape() != expected)
    throw ShapeError(std::string(what) + ": expected " + to_string(expected) + ", got " +
                     to_string(x.shape()));
}

}  // namespace

Image apply(const LinearOperator& op, const Image& x) {
  require_shape(x, op.input_shape(), "apply");
  switch (op.kind()) {
    case LinearOperator::Kind::Identity:
      return x;
    case LinearOperator::Kind::PeriodicConv:
      return circular_convolve(op.kernel(), x);
    case LinearOperator::Kind::Decimate: {
      const int d = op.factor();
      Image y(op.output_shape());
      for (int i = 0; i < y.height(); ++i)
        for (int j = 0; j < y.width(); ++j)
          for (int c = 0; c < y.channels(); ++c) y.at(i, j, c) = x.at(i * d, j * d, c);
      return y;
    }
    case LinearOperator::Kind::Compose:
      return apply(op.outer(), apply(op.inner(), x));
  }
  throw UnsupportedOperatorError("unknown operator kind");
}

Image adjoint(const LinearOperator& op, const Image& y) {
  require_shape(y, op.output_shape(), "adjoint");
  switch (op.kind()) {
    case LinearOperator::Kind::Identity:
      return y;
    case LinearOperator::Kind::PeriodicConv:
      return circular_convolve(flipped(op.kernel()), y);
    case LinearOperator::Kind::Decimate: {
      const int d = op.factor();
      Image x(op.input_shape());
      for (int i = 0; i < y.height(); ++i)
        for (int j = 0; j < y.width(); ++j)
          for (int c = 0; c < y.channels(); ++c) x.at(i * d, j * d, c) = y.at(i, j, c);
      return x;
    }
    case LinearOperator::Kind::Compose:
      return adjoint(op.inner(), adjoint(op.outer(), y));
  }
  throw UnsupportedOperatorError("unknown operator kind");
}

fft::Grid transfer_function(const Kernel& kernel, int rows, int cols) {
  if (kernel.size > std::min(rows, cols))
    throw ShapeError("kernel of size " + std::to_string(kernel.size) + " is larger than the " +
                     std::to_string(rows) + "x" + std::to_string(cols) + " grid");
  fft::Grid g(rows, cols);
  const int c = kernel.center();
  for (int u = 0; u < kernel.size; ++u)
    for (int v = 0; v < kernel.size; ++v)
      g(((u - c) % rows + rows) % rows, ((v - c) % cols + cols) % cols) += kernel.at(u, v);
  return fft::forward(g);
}

}  // namespace reld
