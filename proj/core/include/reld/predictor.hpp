#pragma once

#include <span>
#include <string>
#include <vector>

#include "reld/diffusion.hpp"

namespace reld {

/// E[eps | z_t] for latent data z0 ~ N(m, tau^2 I) under the forward
/// marginal:  sqrt(1 - ab) (z_t - sqrt(ab) m) / (ab tau^2 + 1 - ab).
/// Throws ParameterError when tau == 0 and ab == 1.
std::vector<double> analytic_eps(std::span<const double> z_t, double alpha_bar, std::span<const double> mean,
                                 double tau);

/// Predicts zero noise everywhere.
class ZeroPredictor final : public NoisePredictor {
 public:
  std::vector<double> predict(const LatentState& v, const Timestep& t) const override;
  bool has_gradient() const override { return true; }
  LatentState vjp(const LatentState& v, const Timestep& t, std::span<const double> g) const override;
  std::string name() const override { return "zero"; }
};

/// Bayes-optimal predictor for Gaussian latent data N(mean, tau^2 I). It
/// ignores the conditioning part of the state.
class AnalyticGaussianPredictor final : public NoisePredictor {
 public:
  AnalyticGaussianPredictor(std::vector<double> mean, double tau);

  std::vector<double> predict(const LatentState& v, const Timestep& t) const override;
  bool has_gradient() const override { return true; }
  LatentState vjp(const LatentState& v, const Timestep& t, std::span<const double> g) const override;
  std::string name() const override { return "analytic_gaussian"; }

  const std::vector<double>& mean() const { return mean_; }
  double tau() const { return tau_; }

 private:
  std::vector<double> mean_;
  double tau_;
};

}  // namespace reld
