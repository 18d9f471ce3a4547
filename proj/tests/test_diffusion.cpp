#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "reld/diffusion.hpp"
#include "reld/errors.hpp"
#include "reld/predictor.hpp"

using namespace reld;

namespace {

// eps_hat = c * z, to make run_sp examples nontrivial.
class LinearPredictor final : public NoisePredictor {
 public:
  explicit LinearPredictor(double c) : c_(c) {}
  std::vector<double> predict(const LatentState& v, const Timestep&) const override {
    std::vector<double> out(v.z);
    for (double& x : out) x *= c_;
    return out;
  }
  std::string name() const override { return "linear"; }

 private:
  double c_;
};

}  // namespace

TEST(Schedule, SingleStep) {
  const auto s = build_schedule(1, 0.02, 0.02);
  EXPECT_EQ(s.steps(), 1);
  EXPECT_DOUBLE_EQ(s.beta(1), 0.02);
  EXPECT_DOUBLE_EQ(s.alpha_bar(0), 1.0);
  EXPECT_DOUBLE_EQ(s.alpha_bar(1), 0.98);
}

TEST(Schedule, HandProduct) {
  const auto s = build_schedule(2, 0.1, 0.1);
  EXPECT_DOUBLE_EQ(s.alpha_bar(0), 1.0);
  EXPECT_NEAR(s.alpha_bar(1), 0.9, 1e-15);
  EXPECT_NEAR(s.alpha_bar(2), 0.81, 1e-15);
}

TEST(Schedule, LinearEndpointsAndMonotone) {
  const auto s = default_schedule();
  EXPECT_EQ(s.steps(), 1000);
  EXPECT_DOUBLE_EQ(s.beta(1), 1e-4);
  EXPECT_NEAR(s.beta(1000), 2e-2, 1e-15);
  EXPECT_NEAR(s.beta(2) - s.beta(1), (2e-2 - 1e-4) / 999.0, 1e-15);
  for (int t = 1; t <= 1000; ++t) EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
  EXPECT_DOUBLE_EQ(s.model_fraction(500), 0.5);
}

TEST(Schedule, SqrtAlphaBarIsProductOfSqrtAlpha) {
  const auto s = default_schedule();
  double prod = 1.0;
  for (int t = 1; t <= s.steps(); ++t) {
    prod *= std::sqrt(1.0 - s.beta(t));
    EXPECT_NEAR(std::sqrt(s.alpha_bar(t)), prod, 1e-12);
  }
}

TEST(Schedule, Rejects) {
  EXPECT_THROW(build_schedule(0, 0.1, 0.1), ParameterError);
  EXPECT_THROW(build_schedule(10, 0.2, 0.1), ParameterError);
  EXPECT_THROW(build_schedule(10, 0.0, 0.1), ParameterError);
  EXPECT_THROW(build_schedule(10, 0.1, 1.0), ParameterError);
  EXPECT_THROW(NoiseSchedule::from_betas({0.1, 1.0}), ParameterError);
  EXPECT_THROW(default_schedule().beta(0), ParameterError);
  EXPECT_THROW(default_schedule().alpha_bar(1001), ParameterError);
}

TEST(Schedule, TextAndHash) {
  const auto a = build_schedule(50, 1e-3, 0.05);
  const auto b = NoiseSchedule::from_text(a.to_text());
  EXPECT_EQ(a.hash(), b.hash());
  for (int t = 0; t <= 50; ++t) EXPECT_DOUBLE_EQ(a.alpha_bar(t), b.alpha_bar(t));
  EXPECT_NE(a.hash(), default_schedule().hash());
  const auto c = NoiseSchedule::from_betas({0.1, 0.2, 0.3});
  EXPECT_FALSE(c.is_linear());
  EXPECT_EQ(NoiseSchedule::from_text(c.to_text()).hash(), c.hash());
}

TEST(ForwardStep, Examples) {
  const std::vector<double> z{1.0, -2.0}, eps{0.5, 0.25};
  EXPECT_EQ(forward_step(z, 0.0, eps), z);
  EXPECT_EQ(forward_step(z, 1.0, eps), eps);
  EXPECT_NEAR(forward_step(std::vector<double>{1.0}, 0.19, std::vector<double>{0.5})[0], 1.117945, 1e-5);
  EXPECT_NEAR(forward_step(std::vector<double>{1.0}, 0.19, std::vector<double>{0.5})[0], 0.9 + std::sqrt(0.19) * 0.5,
              1e-15);
  EXPECT_THROW(forward_step(z, 1.5, eps), ParameterError);
  EXPECT_THROW(forward_step(z, 0.1, std::vector<double>{1.0}), ShapeError);
}

TEST(ForwardMarginal, Examples) {
  const std::vector<double> z{1.0, -2.0}, eps{0.5, 0.25};
  EXPECT_EQ(forward_marginal(z, 1.0, eps), z);
  const auto tiny = forward_marginal(z, 1e-300, eps);
  EXPECT_NEAR(tiny[0], eps[0], 1e-12);
  EXPECT_NEAR(tiny[1], eps[1], 1e-12);
  EXPECT_NEAR(forward_marginal(std::vector<double>{1.0}, 0.64, std::vector<double>{0.5})[0], 1.1, 1e-15);
  EXPECT_THROW(forward_marginal(z, 0.0, eps), ParameterError);
}

TEST(ForwardChain, NoiseFreeCoefficientMatchesMarginal) {
  const auto s = default_schedule();
  const std::vector<double> zero{0.0};
  for (int p : {1, 10, 250, 1000}) {
    std::vector<double> z{1.0};
    for (int t = 1; t <= p; ++t) z = forward_step(z, s.beta(t), zero);
    EXPECT_NEAR(z[0], std::sqrt(s.alpha_bar(p)), 1e-12);
  }
}

TEST(ForwardChain, MonteCarloMatchesMarginal) {
  const auto s = default_schedule();
  const int n = 10000, p = 300;
  const double z0 = 0.7;
  std::mt19937_64 rng(123);
  std::normal_distribution<double> g;
  double sum = 0.0, sumsq = 0.0;
  std::vector<double> z(1), e(1);
  for (int k = 0; k < n; ++k) {
    z[0] = z0;
    for (int t = 1; t <= p; ++t) {
      e[0] = g(rng);
      z = forward_step(z, s.beta(t), e);
    }
    sum += z[0];
    sumsq += z[0] * z[0];
  }
  const double mean = sum / n;
  const double var = (sumsq - n * mean * mean) / (n - 1);
  const double target_var = 1.0 - s.alpha_bar(p);
  EXPECT_LE(std::abs(mean - std::sqrt(s.alpha_bar(p)) * z0), 4.0 * std::sqrt(target_var / n));
  // Var of the sample variance of a Gaussian: 2 sigma^4 / (n - 1).
  EXPECT_LE(std::abs(var - target_var), 4.0 * std::sqrt(2.0 / (n - 1)) * target_var);
}

TEST(Ddpm, Examples) {
  const auto s = build_schedule(1, 0.1, 0.1);
  const std::vector<double> z{1.0, -3.0}, zero{0.0, 0.0};
  const auto drift = ddpm_reverse_step(z, zero, s, 1, zero);
  EXPECT_NEAR(drift[0], 1.0 / std::sqrt(0.9), 1e-15);
  EXPECT_NEAR(drift[1], -3.0 / std::sqrt(0.9), 1e-15);

  const auto one = ddpm_reverse_step(std::vector<double>{1.0}, std::vector<double>{0.2}, s, 1, std::vector<double>{0.0});
  EXPECT_NEAR(one[0], (1.0 - 0.1 / std::sqrt(0.1) * 0.2) / std::sqrt(0.9), 1e-15);
  EXPECT_NEAR(one[0], 0.987424, 1e-5);

  const std::vector<double> noise{0.3, -1.1};
  const auto noisy = ddpm_reverse_step(z, zero, s, 1, noise);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(noisy[i] - drift[i], std::sqrt(0.1) * noise[i], 1e-15);
}

TEST(Ddim, Examples) {
  const std::vector<double> z{0.4, -1.3}, zero{0.0, 0.0};
  EXPECT_EQ(ddim_reverse_step(z, zero, 0.7, 0.7).z_prev, z);

  const std::vector<double> eps{0.2, 0.5};
  const auto term = ddim_reverse_step(z, eps, 0.6, 1.0);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(term.z_prev[i], term.z_hat0[i], 1e-15);

  const auto step = ddim_reverse_step(std::vector<double>{1.0}, std::vector<double>{0.1}, 0.5, 0.8);
  const double zhat = (1.0 - std::sqrt(0.5) * 0.1) / std::sqrt(0.5);
  EXPECT_NEAR(step.z_hat0[0], zhat, 1e-15);
  EXPECT_NEAR(step.z_prev[0], std::sqrt(0.8) * zhat + std::sqrt(0.2) * 0.1, 1e-15);
  EXPECT_NEAR(step.z_hat0[0], 1.314214, 1e-5);
  EXPECT_NEAR(step.z_prev[0], 1.220186, 1e-5);
}

TEST(RunSp, OneStepIsSingleDdimToClean) {
  const auto s = default_schedule();
  const LinearPredictor pred(0.3);
  LatentState v{{0.5}, oracle::random_vector(6, 1)};
  const auto out = run_sp(v, 1, pred, s);
  std::vector<double> eps(v.z);
  for (double& x : eps) x *= 0.3;
  const auto ref = ddim_reverse_step(v.z, eps, s.alpha_bar(1), 1.0);
  EXPECT_EQ(out.z, ref.z_prev);
  EXPECT_EQ(out.a, v.a);
}

TEST(RunSp, ZeroPredictorEqualAlphaBarsIsFixedPoint) {
  // Equal alpha_bar needs beta = 0, which schedules reject. With eps = 0 the
  // chain rescales by 1/sqrt(ab_p); equal-ab fixed point is in Ddim.Examples.
  const auto s = build_schedule(20, 1e-3, 1e-3);
  const ZeroPredictor zero;
  LatentState v{{}, oracle::random_vector(5, 2)};
  const auto out = run_sp(v, 20, zero, s);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(out.z[i], v.z[i] / std::sqrt(s.alpha_bar(20)), 1e-12);
  EXPECT_THROW(run_sp(v, 0, zero, s), ParameterError);
}

TEST(RunSp, PointMassPredictorLandsOnMean) {
  const auto s = default_schedule();
  const std::vector<double> m = oracle::random_vector(8, 3);
  const AnalyticGaussianPredictor pred(m, 0.0);
  for (int p : {1, 10, 50, 1000}) {
    LatentState v{{}, oracle::random_vector(8, 100 + p)};
    for (double& x : v.z) x *= 7.0;
    const auto out = run_sp(v, p, pred, s);
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NEAR(out.z[i], m[i], 1e-10) << "p=" << p;
  }
}

TEST(RunSp, DeterministicAndConditioningUntouched) {
  const auto s = default_schedule();
  const LinearPredictor pred(-0.2);
  const LatentState v{oracle::random_vector(4, 4), oracle::random_vector(4, 5)};
  const auto a = run_sp(v, 10, pred, s);
  EXPECT_EQ(a, run_sp(v, 10, pred, s));
  EXPECT_EQ(a.a, v.a);
  const auto traj = run_sp_trajectory(v, 10, pred, s);
  ASSERT_EQ(traj.size(), 11u);
  EXPECT_EQ(traj.front(), v);
  EXPECT_EQ(traj.back(), a);
  for (const auto& st : traj) EXPECT_EQ(st.a, v.a);
  EXPECT_THROW(run_sp(v, 1001, pred, s), ParameterError);
}

TEST(LatentState, FlattenRoundtrip) {
  const LatentState v{{1, 2, 3}, {4, 5}};
  const auto flat = v.flatten();
  EXPECT_EQ(flat, (std::vector<double>{1, 2, 3, 4, 5}));
  EXPECT_EQ(LatentState::unflatten(flat, 3), v);
  EXPECT_THROW(LatentState::unflatten(flat, 6), ShapeError);
}

TEST(NoisePredictor, DefaultVjpThrows) {
  const LinearPredictor pred(1.0);
  EXPECT_FALSE(pred.has_gradient());
  const std::vector<double> g{1.0};
  EXPECT_THROW(pred.vjp(LatentState{{}, {1.0}}, Timestep{}, g), CapabilityError);
}
