#include <cmath>
#include <functional>
#include <iomanip>
#include <memory>
#include <ostream>
#include <random>
#include <string>

#include "experiment.hpp"
#include "reld/codec.hpp"
#include "reld/predictor.hpp"
#include "reld/prox.hpp"
#include "reld/toynet.hpp"
#include "reld/vecops.hpp"

namespace reld::cli {
namespace {

Image random_image(Shape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image x(s);
  for (double& v : x.data()) v = u(rng);
  return x;
}

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

double rel_dist(const Image& a, const Image& b) { return vec::distance(a.data(), b.data()) / vec::norm(b.data()); }

double adjoint_gap() {
  const Shape s{12, 16, 1};
  const auto k = gaussian_psf(1.3, 5);
  const LinearOperator ops[] = {
      LinearOperator::identity(s),
      LinearOperator::periodic_conv(s, k),
      LinearOperator::decimate(s, 4),
      LinearOperator::compose(LinearOperator::decimate(s, 2), LinearOperator::periodic_conv(s, k)),
  };
  double worst = 0.0;
  std::uint64_t seed = 1;
  for (const auto& op : ops) {
    const Image x = random_image(op.input_shape(), seed++);
    const Image y = random_image(op.output_shape(), seed++);
    worst = std::max(worst, rel(vec::dot(apply(op, x).data(), y.data()), vec::dot(x.data(), adjoint(op, y).data())));
  }
  return worst;
}

double deblur_gap() {
  const Shape s{16, 16, 1};
  const ProxProblem pb{LinearOperator::periodic_conv(s, gaussian_psf(1.0, 7)), random_image(s, 3),
                       random_image(s, 4), 0.3};
  return rel_dist(prox_deblur_fft(pb), prox_cg(pb, 1e-13, 2000).solution);
}

double sr_gap() {
  const Shape s{16, 16, 1};
  double worst = 0.0;
  for (int d : {2, 4}) {
    const auto op = LinearOperator::compose(LinearOperator::decimate(s, d),
                                            LinearOperator::periodic_conv(s, gaussian_psf(1.0, 7)));
    const ProxProblem pb{op, random_image(op.output_shape(), 5), random_image(s, 6), 0.2};
    worst = std::max(worst, rel_dist(prox_sr_fft(pb, d), prox_cg(pb, 1e-13, 2000).solution));
  }
  return worst;
}

double ddim_gap() {
  const auto sched = default_schedule();
  const std::vector<double> m{0.3, -1.2, 2.0, 0.0};
  const AnalyticGaussianPredictor pred(m, 0.0);
  double worst = 0.0;
  for (int p : {1, 10, 50}) {
    LatentState v;
    v.z = {5.0, -3.0, 0.25, 1.5};
    const auto out = run_sp(v, p, pred, sched);
    for (std::size_t i = 0; i < m.size(); ++i) worst = std::max(worst, std::abs(out.z[i] - m[i]));
  }
  return worst;
}

double schedule_gap() {
  const auto sched = default_schedule();
  double prod = 1.0;
  double worst = 0.0;
  for (int t = 1; t <= sched.steps(); ++t) {
    prod *= std::sqrt(sched.alpha(t));
    worst = std::max(worst, std::abs(std::sqrt(sched.alpha_bar(t)) - prod));
  }
  return worst;
}

double vjp_gap() {
  const Shape s{8, 8, 1};
  Prior prior;
  prior.codec = std::make_shared<BlockDctCodec>(s, 4, 2);
  ToyNetLayout lay;
  lay.token_size = prior.codec->token_size();
  lay.cond_token_size = lay.token_size;
  lay.hidden = {8};
  prior.predictor = std::make_shared<ToyNet>(lay, 11);
  const GenerativeMap map(prior, 3);

  const std::size_t n = prior.codec->latent_size();
  const auto a = standard_normal(n, 21);
  const auto z = standard_normal(n, 22);
  const LatentState v{a, z};
  const Image w = random_image(s, 23);
  const auto g = map.vjp(v, w).flatten();

  double worst = 0.0;
  const double h = 1e-5;
  for (std::uint64_t dir = 0; dir < 3; ++dir) {
    const auto d = standard_normal(2 * n, 100 + dir);
    auto shifted = [&](double sgn) {
      auto flat = v.flatten();
      vec::axpy(sgn * h, d, flat);
      return vec::dot(map(LatentState::unflatten(flat, n)).data(), w.data());
    };
    const double fd = (shifted(1.0) - shifted(-1.0)) / (2 * h);
    worst = std::max(worst, rel(vec::dot(g, d), fd));
  }
  return worst;
}

}  // namespace

bool cmd_selftest(std::ostream& out) {
  struct Check {
    const char* name;
    std::function<double()> run;
    double tol;
  };
  const Check checks[] = {
      {"operator adjoint dot test", adjoint_gap, 1e-10},
      {"deblur prox fft vs cg", deblur_gap, 1e-8},
      {"sr prox woodbury vs cg", sr_gap, 1e-6},
      {"schedule sqrt(alpha_bar) vs product", schedule_gap, 1e-12},
      {"ddim exactness, tau = 0", ddim_gap, 1e-10},
      {"generative map vjp vs finite differences", vjp_gap, 1e-4},
  };
  bool ok = true;
  for (const auto& c : checks) {
    double err = 0.0;
    bool pass = false;
    std::string note;
    try {
      err = c.run();
      pass = std::isfinite(err) && err <= c.tol;
    } catch (const std::exception& e) {
      note = std::string(" (") + e.what() + ")";
    }
    ok = ok && pass;
    out << (pass ? "PASS " : "FAIL ") << c.name << ": err=" << std::setprecision(3) << std::scientific << err
        << " tol=" << c.tol << std::defaultfloat << note << "\n";
  }
  return ok;
}

}  // namespace reld::cli
