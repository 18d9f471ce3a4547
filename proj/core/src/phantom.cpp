#include "reld/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace reld {

Image piecewise_smooth_phantom(Shape shape, std::uint64_t seed) {
  Image img(shape);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double h = shape.height;
  const double w = shape.width;

  struct Blob {
    bool ellipse;
    double cy, cx, ry, rx, angle;
    double level[3];
    double slope_y, slope_x;
  };

  double base[3], gy[3], gx[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = 0.3 + 0.3 * unit(gen);
    gy[c] = 0.25 * (unit(gen) - 0.5);
    gx[c] = 0.25 * (unit(gen) - 0.5);
  }

  const int count = 3 + static_cast<int>(unit(gen) * 4.0);
  std::vector<Blob> blobs;
  for (int i = 0; i < count; ++i) {
    Blob b{};
    b.ellipse = unit(gen) < 0.6;
    b.cy = h * (0.15 + 0.7 * unit(gen));
    b.cx = w * (0.15 + 0.7 * unit(gen));
    b.ry = h * (0.08 + 0.25 * unit(gen));
    b.rx = w * (0.08 + 0.25 * unit(gen));
    b.angle = M_PI * unit(gen);
    for (double& l : b.level) l = 0.1 + 0.8 * unit(gen);
    b.slope_y = 0.3 * (unit(gen) - 0.5);
    b.slope_x = 0.3 * (unit(gen) - 0.5);
    blobs.push_back(b);
  }

  for (int y = 0; y < shape.height; ++y) {
    for (int x = 0; x < shape.width; ++x) {
      const double ny = y / h - 0.5;
      const double nx = x / w - 0.5;
      double v[3];
      for (int c = 0; c < 3; ++c) v[c] = base[c] + gy[c] * ny + gx[c] * nx;
      for (const auto& b : blobs) {
        const double dy = y - b.cy;
        const double dx = x - b.cx;
        const double ca = std::cos(b.angle), sa = std::sin(b.angle);
        const double u = (ca * dx + sa * dy) / b.rx;
        const double t = (-sa * dx + ca * dy) / b.ry;
        const bool inside = b.ellipse ? (u * u + t * t <= 1.0) : (std::abs(u) <= 1.0 && std::abs(t) <= 1.0);
        if (!inside) continue;
        for (int c = 0; c < 3; ++c) v[c] = b.level[c] + b.slope_y * t * 0.5 + b.slope_x * u * 0.5;
      }
      for (int c = 0; c < shape.channels; ++c) {
        const double value = shape.channels == 1 ? (v[0] + v[1] + v[2]) / 3.0 : v[c];
        img.at(y, x, c) = std::clamp(value, 0.05, 0.95);
      }
    }
  }
  return img;
}

}  // namespace reld
