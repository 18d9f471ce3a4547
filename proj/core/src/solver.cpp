#include "reld/solver.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "reld/errors.hpp"
#include "reld/prox.hpp"
#include "reld/vecops.hpp"

namespace reld {

void validate(const SolverConfig& cfg, int T) {
  if (!(cfg.mu0 > 0.0)) throw ParameterError("mu0 must be > 0");
  if (!(cfg.gamma >= 1.0)) throw ParameterError("gamma must be >= 1");
  if (!(cfg.eta > 0.0)) throw ParameterError("eta must be > 0");
  if (cfg.k_max < 1) throw ParameterError("k_max must be >= 1");
  if (cfg.p < 1 || cfg.p > T)
    throw ParameterError("p=" + std::to_string(cfg.p) + " outside [1, " + std::to_string(T) + "]");
  if (cfg.inner_steps < 1) throw ParameterError("inner_steps must be >= 1");
  if (cfg.rel_tol && !(*cfg.rel_tol > 0.0)) throw ParameterError("rel_tol must be > 0 when set");
}

void SolverTrace::write_csv(std::ostream& out) const {
  out << "k,mu,L,datafit,penalty,relchange\n";
  out << std::setprecision(17);
  for (const auto& r : records)
    out << r.k << "," << r.mu << "," << r.objective << "," << r.datafit << "," << r.penalty << ","
        << r.relchange << "\n";
}

std::string SolverTrace::to_csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

double penalty_at(int k, double mu0, double gamma) {
  if (k < 0) throw ParameterError("penalty index must be >= 0");
  return std::pow(gamma, k) * mu0;
}

std::uint64_t warm_start_seed(std::uint64_t seed) {
  // splitmix64 finalizer
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

LatentState warm_start(const Image& b, const Codec& codec, const Shape& target_shape, std::uint64_t seed) {
  Image lifted = b;
  if (b.shape() != target_shape) {
    const Shape s = b.shape();
    if (s.channels != target_shape.channels || target_shape.height % s.height != 0 ||
        target_shape.width % s.width != 0 || target_shape.height / s.height != target_shape.width / s.width)
      throw ShapeError("cannot lift observation " + to_string(s) + " to " + to_string(target_shape));
    lifted = upsample_replicate(b, target_shape.height / s.height);
  }
  LatentState v;
  v.a = codec.encode(lifted);
  v.z = standard_normal(codec.latent_size(), warm_start_seed(seed));
  return v;
}

ObjectiveTerms objective_terms(const Image& generated, const Image& t, double mu, const Image& b,
                               const LinearOperator& op) {
  require_same_shape(generated, t, "objective");
  const Image at = apply(op, t);
  require_same_shape(at, b, "objective");
  const double fit = vec::distance(at.data(), b.data());
  const double gap = vec::distance(generated.data(), t.data());
  return ObjectiveTerms{0.5 * fit * fit, 0.5 * mu * gap * gap};
}

double objective(const LatentState& v, const Image& t, double mu, const Image& b, const LinearOperator& op,
                 const GenerativeMap& map) {
  return objective_terms(map(v), t, mu, b, op).total();
}

namespace {

LatentState descend(const LatentState& v, const GenerativeMap::Forward& fwd, const Image& t, double mu,
                    double eta, const GenerativeMap& map) {
  Image residual = fwd.image;
  require_same_shape(residual, t, "grad_step");
  vec::axpy(-1.0, t.data(), residual.data());
  const LatentState g = map.backward(fwd, residual);
  LatentState out = v;
  vec::axpy(-eta * mu, g.a, out.a);
  vec::axpy(-eta * mu, g.z, out.z);
  return out;
}

}  // namespace

LatentState grad_step(const LatentState& v, const Image& t, double mu, double eta, const GenerativeMap& map) {
  if (!(mu > 0.0)) throw ParameterError("mu must be > 0");
  if (!(eta > 0.0)) throw ParameterError("eta must be > 0");
  return descend(v, map.forward(v), t, mu, eta, map);
}

SolveResult reld_solve(const Image& b, const LinearOperator& op, const Prior& prior, const SolverConfig& cfg,
                       const SolverObserver* observer) {
  if (!prior.codec || !prior.predictor) throw ParameterError("prior bundle is incomplete");
  validate(cfg, prior.schedule.steps());
  if (b.shape() != op.output_shape())
    throw ShapeError("observation " + to_string(b.shape()) + " does not match operator output " +
                     to_string(op.output_shape()));
  if (prior.codec->image_shape() != op.input_shape())
    throw ShapeError("codec image shape " + to_string(prior.codec->image_shape()) +
                     " does not match operator input " + to_string(op.input_shape()));

  const GenerativeMap map(prior, cfg.p);
  SolveResult result;
  LatentState v = warm_start(b, *prior.codec, op.input_shape(), cfg.seed);
  Image t_prev;

  for (int k = 0; k < cfg.k_max; ++k) {
    const double mu = penalty_at(k, cfg.mu0, cfg.gamma);

    LatentState sampled = map.sample(v);
    if (observer && observer->on_sample) observer->on_sample(k, v, sampled);
    v = std::move(sampled);

    GenerativeMap::Forward fwd = map.forward(v);
    Image t = solve_prox(ProxProblem{op, b, fwd.image, mu});
    if (observer && observer->on_prox) observer->on_prox(k, t, mu);

    const Image& reference = t_prev.empty() ? fwd.image : t_prev;
    const double ref_norm = vec::norm(reference.data());
    const double change = vec::distance(t.data(), reference.data());
    const double relchange = ref_norm > 0.0 ? change / ref_norm : change;

    for (int j = 0; j < cfg.inner_steps; ++j) {
      if (j > 0) fwd = map.forward(v);
      LatentState next = descend(v, fwd, t, mu, cfg.eta, map);
      if (observer && observer->on_gradient) observer->on_gradient(k, v, next);
      v = std::move(next);
    }

    result.x_star = map(v);
    const ObjectiveTerms terms = objective_terms(result.x_star, t, mu, b, op);
    IterationRecord rec{k, mu, terms.total(), terms.datafit, terms.penalty, relchange};
    if (!std::isfinite(rec.objective) || !std::isfinite(rec.relchange) || !all_finite(result.x_star)) {
      throw SolverDivergedError("non-finite objective at iteration " + std::to_string(k), result.trace);
    }
    result.trace.records.push_back(rec);
    t_prev = std::move(t);

    if (cfg.rel_tol && k > 0 && relchange < *cfg.rel_tol) {
      result.converged = true;
      break;
    }
  }
  result.t_last = std::move(t_prev);
  result.v_final = std::move(v);
  return result;
}

}  // namespace reld
