#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "reld/image.hpp"

namespace reld {

/// Linear encoder/decoder pair standing in for a latent autoencoder. For
/// every codec here encode == decode^T, so decode o encode is an orthogonal
/// projection onto the decoder's range.
class Codec {
 public:
  virtual ~Codec() = default;

  virtual const Shape& image_shape() const = 0;
  virtual std::size_t latent_size() const = 0;

  virtual std::vector<double> encode(const Image& x) const = 0;
  virtual Image decode(std::span<const double> z) const = 0;

  /// (d decode / d z)^T w.
  virtual std::vector<double> decode_vjp(const Image& w) const = 0;

  /// Length of the contiguous latent groups (one spatial block each). Token
  /// predictors share weights across groups.
  virtual std::size_t token_size() const = 0;

  virtual std::string describe() const = 0;
};

/// Latent = raster in storage order.
class IdentityCodec final : public Codec {
 public:
  explicit IdentityCodec(Shape shape);

  const Shape& image_shape() const override { return shape_; }
  std::size_t latent_size() const override { return shape_.size(); }
  std::vector<double> encode(const Image& x) const override;
  Image decode(std::span<const double> z) const override;
  std::vector<double> decode_vjp(const Image& w) const override { return encode(w); }
  std::size_t token_size() const override { return shape_.size(); }
  std::string describe() const override;

 private:
  Shape shape_;
};

/// Blockwise orthonormal DCT-II keeping the keep x keep lowest-frequency
/// coefficients of every block x block tile and channel. Latent layout is
/// block-major (row-major over tiles), then channel, then coefficient (u, v)
/// row-major.
class BlockDctCodec final : public Codec {
 public:
  BlockDctCodec(Shape shape, int block, int keep);

  const Shape& image_shape() const override { return shape_; }
  std::size_t latent_size() const override;
  std::vector<double> encode(const Image& x) const override;
  Image decode(std::span<const double> z) const override;
  std::vector<double> decode_vjp(const Image& w) const override { return encode(w); }
  std::size_t token_size() const override;
  std::string describe() const override;

  int block() const { return block_; }
  int keep() const { return keep_; }

 private:
  double basis(int u, int x) const { return basis_[static_cast<std::size_t>(u) * block_ + x]; }

  Shape shape_;
  int block_;
  int keep_;
  std::vector<double> basis_;  // keep x block rows of the orthonormal DCT-II matrix
};

}  // namespace reld
