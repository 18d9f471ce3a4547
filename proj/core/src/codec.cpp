#include "reld/codec.hpp"

#include <cmath>

#include "reld/errors.hpp"

namespace reld {

IdentityCodec::IdentityCodec(Shape shape) : shape_(shape) { validate(shape_); }

std::vector<double> IdentityCodec::encode(const Image& x) const {
  if (x.shape() != shape_)
    throw ShapeError("codec expects " + to_string(shape_) + ", got " + to_string(x.shape()));
  return x.values();
}

Image IdentityCodec::decode(std::span<const double> z) const {
  if (z.size() != shape_.size())
    throw ShapeError("latent of length " + std::to_string(z.size()) + " does not decode to " +
                     to_string(shape_));
  return Image(shape_, std::vector<double>(z.begin(), z.end()));
}

std::string IdentityCodec::describe() const { return "identity"; }

BlockDctCodec::BlockDctCodec(Shape shape, int block, int keep) : shape_(shape), block_(block), keep_(keep) {
  validate(shape_);
  if (block < 1) throw ParameterError("DCT block size must be >= 1");
  if (keep < 1 || keep > block) throw ParameterError("kept coefficients must lie in [1, block]");
  if (shape.height % block != 0 || shape.width % block != 0)
    throw ShapeError("image " + to_string(shape) + " is not tiled by " + std::to_string(block) + "x" +
                     std::to_string(block) + " blocks");
  basis_.resize(static_cast<std::size_t>(keep) * block);
  for (int u = 0; u < keep; ++u) {
    const double scale = u == 0 ? std::sqrt(1.0 / block) : std::sqrt(2.0 / block);
    for (int x = 0; x < block; ++x)
      basis_[static_cast<std::size_t>(u) * block + x] = scale * std::cos(M_PI * (2 * x + 1) * u / (2.0 * block));
  }
}

std::size_t BlockDctCodec::token_size() const {
  return static_cast<std::size_t>(keep_) * keep_ * shape_.channels;
}

std::size_t BlockDctCodec::latent_size() const {
  const std::size_t tiles =
      static_cast<std::size_t>(shape_.height / block_) * static_cast<std::size_t>(shape_.width / block_);
  return tiles * token_size();
}

std::vector<double> BlockDctCodec::encode(const Image& x) const {
  if (x.shape() != shape_)
    throw ShapeError("codec expects " + to_string(shape_) + ", got " + to_string(x.shape()));
  std::vector<double> z(latent_size());
  std::vector<double> rows(static_cast<std::size_t>(keep_) * block_);
  const int tiles_y = shape_.height / block_, tiles_x = shape_.width / block_;
  std::size_t out = 0;
  for (int by = 0; by < tiles_y; ++by) {
    for (int bx = 0; bx < tiles_x; ++bx) {
      for (int c = 0; c < shape_.channels; ++c) {
        // rows[u][x] = sum_y basis(u, y) * block(y, x)
        for (int u = 0; u < keep_; ++u)
          for (int xx = 0; xx < block_; ++xx) {
            double s = 0.0;
            for (int yy = 0; yy < block_; ++yy) s += basis(u, yy) * x.at(by * block_ + yy, bx * block_ + xx, c);
            rows[static_cast<std::size_t>(u) * block_ + xx] = s;
          }
        for (int u = 0; u < keep_; ++u)
          for (int v = 0; v < keep_; ++v) {
            double s = 0.0;
            for (int xx = 0; xx < block_; ++xx) s += rows[static_cast<std::size_t>(u) * block_ + xx] * basis(v, xx);
            z[out++] = s;
          }
      }
    }
  }
  return z;
}

Image BlockDctCodec::decode(std::span<const double> z) const {
  if (z.size() != latent_size())
    throw ShapeError("latent of length " + std::to_string(z.size()) + " does not decode to " +
                     to_string(shape_) + " (expected " + std::to_string(latent_size()) + ")");
  Image img(shape_);
  std::vector<double> cols(static_cast<std::size_t>(keep_) * block_);
  const int tiles_y = shape_.height / block_, tiles_x = shape_.width / block_;
  std::size_t in = 0;
  for (int by = 0; by < tiles_y; ++by) {
    for (int bx = 0; bx < tiles_x; ++bx) {
      for (int c = 0; c < shape_.channels; ++c) {
        const double* coef = z.data() + in;
        in += static_cast<std::size_t>(keep_) * keep_;
        // cols[u][x] = sum_v coef(u, v) * basis(v, x)
        for (int u = 0; u < keep_; ++u)
          for (int xx = 0; xx < block_; ++xx) {
            double s = 0.0;
            for (int v = 0; v < keep_; ++v) s += coef[u * keep_ + v] * basis(v, xx);
            cols[static_cast<std::size_t>(u) * block_ + xx] = s;
          }
        for (int yy = 0; yy < block_; ++yy)
          for (int xx = 0; xx < block_; ++xx) {
            double s = 0.0;
            for (int u = 0; u < keep_; ++u) s += basis(u, yy) * cols[static_cast<std::size_t>(u) * block_ + xx];
            img.at(by * block_ + yy, bx * block_ + xx, c) = s;
          }
      }
    }
  }
  return img;
}

std::string BlockDctCodec::describe() const {
  return "block_dct(block=" + std::to_string(block_) + ", keep=" + std::to_string(keep_) + ")";
}

}  // namespace reld
