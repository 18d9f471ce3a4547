#include "reld/prox.hpp"

#include <cmath>

#include "reld/errors.hpp"
#include "reld/vecops.hpp"

namespace reld {

void validate(const ProxProblem& problem) {
  if (!(problem.mu > 0.0) || !std::isfinite(problem.mu))
    throw ParameterError("prox penalty mu must be > 0");
  if (problem.observation.shape() != problem.op.output_shape())
    throw ShapeError("observation " + to_string(problem.observation.shape()) +
                     " does not match operator output " + to_string(problem.op.output_shape()));
  if (problem.anchor.shape() != problem.op.input_shape())
    throw ShapeError("anchor " + to_string(problem.anchor.shape()) +
                     " does not match operator input " + to_string(problem.op.input_shape()));
}

double prox_objective(const ProxProblem& problem, const Image& t) {
  const Image at = apply(problem.op, t);
  const double fit = vec::distance(at.data(), problem.observation.data());
  const double pen = vec::distance(t.data(), problem.anchor.data());
  return 0.5 * fit * fit + 0.5 * problem.mu * pen * pen;
}

double optimality_residual(const ProxProblem& problem, const Image& t) {
  Image r = apply(problem.op, t);
  vec::axpy(-1.0, problem.observation.data(), r.data());
  Image g = adjoint(problem.op, r);
  auto gd = g.data();
  const auto td = t.data();
  const auto ad = problem.anchor.data();
  for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += problem.mu * (td[i] - ad[i]);
  const Image atb = adjoint(problem.op, problem.observation);
  const double denom = vec::norm(atb.data()) + problem.mu * vec::norm(problem.anchor.data());
  const double num = vec::norm(g.data());
  return denom > 0.0 ? num / denom : num;
}

Image prox_deblur_fft(const ProxProblem& problem) {
  validate(problem);
  if (problem.op.kind() != LinearOperator::Kind::PeriodicConv)
    throw UnsupportedOperatorError("prox_deblur_fft requires a periodic convolution, got " +
                                   problem.op.describe());
  const Shape s = problem.op.input_shape();
  const fft::Grid tf = transfer_function(problem.op.kernel(), s.height, s.width);
  const double mu = problem.mu;

  Image out(s);
  for (int c = 0; c < s.channels; ++c) {
    fft::Grid fb = fft::forward_real(problem.observation.plane(c), s.height, s.width);
    const fft::Grid fr = fft::forward_real(problem.anchor.plane(c), s.height, s.width);
    for (std::size_t i = 0; i < fb.values.size(); ++i) {
      const auto h = tf.values[i];
      fb.values[i] = (std::conj(h) * fb.values[i] + mu * fr.values[i]) / (std::norm(h) + mu);
    }
    out.set_plane(c, fft::inverse_real(fb));
  }
  return out;
}

namespace {

Image woodbury_sr(const Kernel& kernel, int d, const ProxProblem& problem) {
  const Shape hi = problem.op.input_shape();
  const Shape lo = problem.op.output_shape();
  const int H = hi.height, W = hi.width, h = lo.height, w = lo.width;
  const double mu = problem.mu;
  const double inv_blocks = 1.0 / (static_cast<double>(d) * d);

  const fft::Grid tf = transfer_function(kernel, H, W);

  // Diagonal of S H H^T S^T on the low-resolution grid.
  fft::Grid denom(h, w);
  for (int k = 0; k < H; ++k)
    for (int l = 0; l < W; ++l) denom(k % h, l % w) += std::norm(tf(k, l));
  for (auto& v : denom.values) v = mu + v * inv_blocks;

  Image out(hi);
  for (int c = 0; c < hi.channels; ++c) {
    const fft::Grid fb = fft::forward_real(problem.observation.plane(c), h, w);
    fft::Grid q = fft::forward_real(problem.anchor.plane(c), H, W);

    // q = H^T S^T b + mu r; the spectrum of S^T b tiles the spectrum of b.
    for (int k = 0; k < H; ++k)
      for (int l = 0; l < W; ++l) q(k, l) = std::conj(tf(k, l)) * fb(k % h, l % w) + mu * q(k, l);

    // y = (mu I + S H H^T S^T)^-1 S H q
    fft::Grid y(h, w);
    for (int k = 0; k < H; ++k)
      for (int l = 0; l < W; ++l) y(k % h, l % w) += tf(k, l) * q(k, l);
    for (std::size_t i = 0; i < y.values.size(); ++i) y.values[i] = y.values[i] * inv_blocks / denom.values[i];

    // t = (q - H^T S^T y) / mu
    for (int k = 0; k < H; ++k)
      for (int l = 0; l < W; ++l) q(k, l) = (q(k, l) - std::conj(tf(k, l)) * y(k % h, l % w)) / mu;

    out.set_plane(c, fft::inverse_real(q));
  }
  return out;
}

}  // namespace

Image prox_sr_fft(const ProxProblem& problem, int d) {
  validate(problem);
  if (d < 1) throw ParameterError("decimation factor must be >= 1");
  const Shape hi = problem.op.input_shape();
  if (hi.height % d != 0 || hi.width % d != 0)
    throw ShapeError("image " + to_string(hi) + " is not divisible by decimation factor " +
                     std::to_string(d));

  const auto& op = problem.op;
  if (op.kind() == LinearOperator::Kind::Decimate) {
    if (op.factor() != d) throw ParameterError("decimation factor does not match operator");
    return woodbury_sr(delta_kernel(), d, problem);
  }
  if (op.kind() == LinearOperator::Kind::Compose &&
      op.outer().kind() == LinearOperator::Kind::Decimate &&
      op.inner().kind() == LinearOperator::Kind::PeriodicConv) {
    if (op.outer().factor() != d) throw ParameterError("decimation factor does not match operator");
    return woodbury_sr(op.inner().kernel(), d, problem);
  }
  if (d == 1 && op.kind() == LinearOperator::Kind::PeriodicConv) return woodbury_sr(op.kernel(), 1, problem);
  throw UnsupportedOperatorError("prox_sr_fft requires Decimate o PeriodicConv, got " + op.describe());
}

CgReport prox_cg(const ProxProblem& problem, double tol, int max_iter) {
  validate(problem);
  if (!(tol > 0.0)) throw ParameterError("CG tolerance must be > 0");
  if (max_iter < 0) throw ParameterError("CG iteration limit must be >= 0");
  const double mu = problem.mu;

  auto normal = [&](const Image& x) {
    Image y = adjoint(problem.op, apply(problem.op, x));
    vec::axpy(mu, x.data(), y.data());
    return y;
  };

  Image rhs = adjoint(problem.op, problem.observation);
  vec::axpy(mu, problem.anchor.data(), rhs.data());
  const double rhs_norm = vec::norm(rhs.data());

  CgReport report;
  report.solution = problem.anchor;
  if (rhs_norm == 0.0) {
    report.solution = Image(problem.anchor.shape());
    report.converged = true;
    return report;
  }

  Image& x = report.solution;
  Image r = rhs;
  vec::axpy(-1.0, normal(x).data(), r.data());
  Image p = r;
  double rr = vec::dot(r.data(), r.data());

  int it = 0;
  while (std::sqrt(rr) > tol * rhs_norm && it < max_iter) {
    const Image q = normal(p);
    const double alpha = rr / vec::dot(p.data(), q.data());
    vec::axpy(alpha, p.data(), x.data());
    vec::axpy(-alpha, q.data(), r.data());
    const double rr_new = vec::dot(r.data(), r.data());
    const double beta = rr_new / rr;
    rr = rr_new;
    auto pd = p.data();
    const auto rd = r.data();
    for (std::size_t i = 0; i < pd.size(); ++i) pd[i] = rd[i] + beta * pd[i];
    ++it;
  }

  // Report the true residual rather than the recursively updated one.
  Image res = rhs;
  vec::axpy(-1.0, normal(x).data(), res.data());
  report.iterations = it;
  report.relative_residual = vec::norm(res.data()) / rhs_norm;
  report.converged = report.relative_residual <= tol || std::sqrt(rr) <= tol * rhs_norm;
  return report;
}

Image solve_prox(const ProxProblem& problem) {
  validate(problem);
  const auto& op = problem.op;
  switch (op.kind()) {
    case LinearOperator::Kind::Identity: {
      Image t = problem.observation;
      auto td = t.data();
      const auto rd = problem.anchor.data();
      const double mu = problem.mu;
      for (std::size_t i = 0; i < td.size(); ++i) td[i] = (td[i] + mu * rd[i]) / (1.0 + mu);
      return t;
    }
    case LinearOperator::Kind::PeriodicConv:
      return prox_deblur_fft(problem);
    case LinearOperator::Kind::Decimate:
      return prox_sr_fft(problem, op.factor());
    case LinearOperator::Kind::Compose:
      if (op.outer().kind() == LinearOperator::Kind::Decimate &&
          op.inner().kind() == LinearOperator::Kind::PeriodicConv)
        return prox_sr_fft(problem, op.outer().factor());
      break;
  }
  return prox_cg(problem, 1e-12, 10 * static_cast<int>(problem.anchor.size())).solution;
}

}  // namespace reld
