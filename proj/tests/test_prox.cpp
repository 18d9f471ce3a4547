#include <gtest/gtest.h>

#include "oracles.hpp"
#include "reld/errors.hpp"
#include "reld/prox.hpp"
#include "reld/vecops.hpp"

using namespace reld;

namespace {

double rel_dist(const Image& a, const Image& b) { return vec::distance(a.data(), b.data()) / vec::norm(b.data()); }

ProxProblem random_deblur(Shape s, std::uint64_t seed, int ksize = 5, double mu = 0.5) {
  const auto op = LinearOperator::periodic_conv(s, oracle::random_kernel(ksize, seed));
  return {op, oracle::random_image(s, seed + 1), oracle::random_image(s, seed + 2), mu};
}

ProxProblem random_sr(Shape s, int d, double sigma, std::uint64_t seed, double mu = 0.3) {
  const auto conv = LinearOperator::periodic_conv(s, gaussian_psf(sigma, default_psf_size(sigma, s.height)));
  const auto op = LinearOperator::compose(LinearOperator::decimate(s, d), conv);
  return {op, oracle::random_image(op.output_shape(), seed), oracle::random_image(s, seed + 1), mu};
}

}  // namespace

TEST(ProxDeblur, DeltaKernelIsScalarFormula) {
  const Shape s{8, 8, 3};
  const ProxProblem pb{LinearOperator::periodic_conv(s, delta_kernel()), oracle::random_image(s, 1),
                       oracle::random_image(s, 2), 0.7};
  const Image t = prox_deblur_fft(pb);
  for (std::size_t i = 0; i < t.size(); ++i)
    EXPECT_NEAR(t.data()[i], (pb.observation.data()[i] + 0.7 * pb.anchor.data()[i]) / 1.7, 1e-14);
}

TEST(ProxDeblur, LargeMuReturnsAnchor) {
  ProxProblem pb = random_deblur({16, 16, 1}, 3);
  pb.mu = 1e12;
  EXPECT_LE(rel_dist(prox_deblur_fft(pb), pb.anchor), 1e-10);
}

TEST(ProxDeblur, MatchesDenseNormalEquations) {
  const Shape s{16, 16, 1};
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const ProxProblem pb = random_deblur(s, seed * 3, 3 + 2 * static_cast<int>(seed % 3), 0.05 * seed);
    const auto ref = oracle::dense_prox(oracle::conv_matrix(s, pb.op.kernel()), oracle::to_eigen(pb.observation),
                                        oracle::to_eigen(pb.anchor), pb.mu);
    EXPECT_LE(oracle::rel_err(oracle::to_eigen(prox_deblur_fft(pb)), ref), 1e-8);
  }
}

TEST(ProxDeblur, ColorAndRectangular) {
  const Shape s{10, 6, 3};
  const ProxProblem pb = random_deblur(s, 21, 5, 0.2);
  const auto ref = oracle::dense_prox(oracle::conv_matrix(s, pb.op.kernel()), oracle::to_eigen(pb.observation),
                                      oracle::to_eigen(pb.anchor), pb.mu);
  EXPECT_LE(oracle::rel_err(oracle::to_eigen(prox_deblur_fft(pb)), ref), 1e-10);
}

TEST(ProxSr, FactorOneIsDeblur) {
  const ProxProblem pb = random_deblur({16, 16, 1}, 31);
  EXPECT_LE(rel_dist(prox_sr_fft(pb, 1), prox_deblur_fft(pb)), 1e-12);
}

TEST(ProxSr, IdentityBlurDecouples) {
  const Shape s{8, 8, 1};
  const double mu = 0.4;
  const auto op = LinearOperator::compose(LinearOperator::decimate(s, 2), LinearOperator::periodic_conv(s, delta_kernel()));
  const ProxProblem pb{op, oracle::random_image({4, 4, 1}, 1), oracle::random_image(s, 2), mu};
  const Image t = prox_sr_fft(pb, 2);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      if (y % 2 == 0 && x % 2 == 0)
        EXPECT_NEAR(t.at(y, x), (pb.observation.at(y / 2, x / 2) + mu * pb.anchor.at(y, x)) / (1 + mu), 1e-14);
      else
        EXPECT_NEAR(t.at(y, x), pb.anchor.at(y, x), 1e-14);
    }
}

TEST(ProxSr, MatchesCgAndDenseOracle) {
  const Shape s{16, 16, 1};
  for (int d : {2, 4}) {
    const ProxProblem pb = random_sr(s, d, 1.2, 40 + d);
    const Image fast = prox_sr_fft(pb, d);
    const CgReport cg = prox_cg(pb, 1e-10, 5000);
    ASSERT_TRUE(cg.converged);
    EXPECT_LE(rel_dist(fast, cg.solution), 1e-6);
    const Eigen::MatrixXd a = oracle::decimate_matrix(s, d) * oracle::conv_matrix(s, pb.op.inner().kernel());
    const auto ref = oracle::dense_prox(a, oracle::to_eigen(pb.observation), oracle::to_eigen(pb.anchor), pb.mu);
    EXPECT_LE(oracle::rel_err(oracle::to_eigen(fast), ref), 1e-10);
  }
}

TEST(ProxSr, BareDecimate) {
  const Shape s{12, 12, 3};
  const auto op = LinearOperator::decimate(s, 3);
  const ProxProblem pb{op, oracle::random_image(op.output_shape(), 5), oracle::random_image(s, 6), 0.9};
  const auto ref = oracle::dense_prox(oracle::decimate_matrix(s, 3), oracle::to_eigen(pb.observation),
                                      oracle::to_eigen(pb.anchor), pb.mu);
  EXPECT_LE(oracle::rel_err(oracle::to_eigen(prox_sr_fft(pb, 3)), ref), 1e-12);
}

TEST(ProxSr, RejectsWrongOperator) {
  const ProxProblem pb = random_deblur({16, 16, 1}, 7);
  EXPECT_THROW(prox_sr_fft(pb, 2), UnsupportedOperatorError);
  const Shape s{8, 8, 1};
  const ProxProblem id{LinearOperator::identity(s), oracle::random_image(s, 1), oracle::random_image(s, 2), 1.0};
  EXPECT_THROW(prox_deblur_fft(id), UnsupportedOperatorError);
}

TEST(ProxCg, IdentityConvergesInOneIteration) {
  const Shape s{8, 8, 1};
  const ProxProblem pb{LinearOperator::identity(s), oracle::random_image(s, 1), oracle::random_image(s, 2), 0.3};
  const CgReport r = prox_cg(pb, 1e-12, 10);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
  for (std::size_t i = 0; i < r.solution.size(); ++i)
    EXPECT_NEAR(r.solution.data()[i], (pb.observation.data()[i] + 0.3 * pb.anchor.data()[i]) / 1.3, 1e-14);
}

TEST(ProxCg, AgreesWithFft) {
  const ProxProblem pb = random_deblur({16, 16, 1}, 50, 7, 0.1);
  const CgReport r = prox_cg(pb, 1e-12, 5000);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(rel_dist(r.solution, prox_deblur_fft(pb)), 1e-9);
}

TEST(ProxCg, UnobservedPixelsKeepAnchor) {
  const Shape s{8, 8, 1};
  const auto op = LinearOperator::decimate(s, 8);  // only pixel (0,0) observed
  const ProxProblem pb{op, oracle::random_image(op.output_shape(), 3), oracle::random_image(s, 4), 1.0};
  const CgReport r = prox_cg(pb, 1e-12, 100);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      if (y || x) EXPECT_NEAR(r.solution.at(y, x), pb.anchor.at(y, x), 1e-14);
  EXPECT_NEAR(r.solution.at(0, 0), (pb.observation.at(0, 0) + pb.anchor.at(0, 0)) / 2.0, 1e-14);
}

TEST(ProxCg, ReportsNonConvergence) {
  const ProxProblem pb = random_deblur({16, 16, 1}, 60, 7, 1e-4);
  const CgReport r = prox_cg(pb, 1e-14, 2);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 2);
  EXPECT_GT(r.relative_residual, 1e-14);
}

TEST(Prox, OptimalityAndMinimizer) {
  const Shape s{16, 16, 1};
  const ProxProblem problems[] = {
      random_deblur(s, 70),
      random_sr(s, 2, 1.0, 71),
      random_sr(s, 4, 0.8, 72),
      {LinearOperator::identity(s), oracle::random_image(s, 73), oracle::random_image(s, 74), 2.0},
  };
  for (const auto& pb : problems) {
    const Image t = solve_prox(pb);
    EXPECT_LE(optimality_residual(pb, t), 1e-8) << pb.op.describe();
    EXPECT_LE(prox_objective(pb, t), prox_objective(pb, pb.anchor));
    EXPECT_LE(prox_objective(pb, t), prox_objective(pb, adjoint(pb.op, pb.observation)));
  }
}

TEST(Prox, CgResidualWithinTolerance) {
  const ProxProblem pb = random_sr({16, 16, 1}, 2, 1.0, 80);
  const CgReport r = prox_cg(pb, 1e-9, 1000);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.relative_residual, 1e-9);
}

TEST(Prox, Deterministic) {
  const ProxProblem pb = random_sr({16, 16, 3}, 2, 1.0, 90);
  EXPECT_EQ(solve_prox(pb), solve_prox(pb));
  const ProxProblem db = random_deblur({16, 16, 3}, 91);
  EXPECT_EQ(prox_deblur_fft(db), prox_deblur_fft(db));
}

TEST(Prox, Validation) {
  ProxProblem pb = random_deblur({8, 8, 1}, 100);
  pb.mu = 0.0;
  EXPECT_THROW(validate(pb), ParameterError);
  pb.mu = 1.0;
  pb.anchor = Image(Shape{4, 4, 1});
  EXPECT_THROW(validate(pb), ShapeError);
}
