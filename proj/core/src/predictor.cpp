#include "reld/predictor.hpp"

#include <cmath>

#include "reld/errors.hpp"

namespace reld {

namespace {

double analytic_gain(double alpha_bar, double tau) {
  if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) throw ParameterError("alpha_bar must lie in (0, 1]");
  if (!(tau >= 0.0)) throw ParameterError("tau must be >= 0");
  const double denom = alpha_bar * tau * tau + 1.0 - alpha_bar;
  if (!(denom > 0.0)) throw ParameterError("analytic predictor is degenerate for tau = 0 at alpha_bar = 1");
  return std::sqrt(1.0 - alpha_bar) / denom;
}

}  // namespace

std::vector<double> analytic_eps(std::span<const double> z_t, double alpha_bar, std::span<const double> mean,
                                 double tau) {
  if (z_t.size() != mean.size()) throw ShapeError("analytic_eps: mean length does not match latent");
  const double gain = analytic_gain(alpha_bar, tau);
  const double sab = std::sqrt(alpha_bar);
  std::vector<double> out(z_t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gain * (z_t[i] - sab * mean[i]);
  return out;
}

std::vector<double> ZeroPredictor::predict(const LatentState& v, const Timestep&) const {
  return std::vector<double>(v.z.size(), 0.0);
}

LatentState ZeroPredictor::vjp(const LatentState& v, const Timestep&, std::span<const double>) const {
  return LatentState{std::vector<double>(v.a.size(), 0.0), std::vector<double>(v.z.size(), 0.0)};
}

AnalyticGaussianPredictor::AnalyticGaussianPredictor(std::vector<double> mean, double tau)
    : mean_(std::move(mean)), tau_(tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ParameterError("tau must be finite and >= 0");
}

std::vector<double> AnalyticGaussianPredictor::predict(const LatentState& v, const Timestep& t) const {
  return analytic_eps(v.z, t.alpha_bar, mean_, tau_);
}

LatentState AnalyticGaussianPredictor::vjp(const LatentState& v, const Timestep& t,
                                           std::span<const double> g) const {
  if (g.size() != v.z.size()) throw ShapeError("vjp cotangent length does not match latent");
  const double gain = analytic_gain(t.alpha_bar, tau_);
  LatentState out{std::vector<double>(v.a.size(), 0.0), std::vector<double>(g.size())};
  for (std::size_t i = 0; i < g.size(); ++i) out.z[i] = gain * g[i];
  return out;
}

}  // namespace reld
