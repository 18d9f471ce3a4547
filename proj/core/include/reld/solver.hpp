#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "reld/diffusion.hpp"
#include "reld/errors.hpp"
#include "reld/image.hpp"
#include "reld/linop.hpp"
#include "reld/prior.hpp"

namespace reld {

struct SolverConfig {
  int p = 10;
  double mu0 = 1.0;
  double gamma = 1.01;
  double eta = 1e-3;
  int k_max = 100;
  /// Stop when ||t^{k+1} - t^k|| / ||t^k|| falls below this; disabled when empty.
  std::optional<double> rel_tol;
  /// Gradient steps on v per outer iteration.
  int inner_steps = 1;
  std::uint64_t seed = 0;
};

/// Throws ParameterError on out-of-range fields; `T` is the schedule length.
void validate(const SolverConfig& cfg, int T);

struct IterationRecord {
  int k = 0;
  double mu = 0.0;
  double objective = 0.0;
  double datafit = 0.0;
  double penalty = 0.0;
  double relchange = 0.0;
};

struct SolverTrace {
  std::vector<IterationRecord> records;

  /// CSV with header k,mu,L,datafit,penalty,relchange.
  void write_csv(std::ostream& out) const;
  std::string to_csv() const;
};

class SolverDivergedError : public NumericalError {
 public:
  SolverDivergedError(const std::string& what, SolverTrace trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const SolverTrace& trace() const noexcept { return trace_; }

 private:
  SolverTrace trace_;
};

/// mu_k = gamma^k mu0.
double penalty_at(int k, double mu0, double gamma);

/// Seed of the warm-start noise stream, decorrelated from the degradation
/// noise drawn with the same user seed.
std::uint64_t warm_start_seed(std::uint64_t seed);

/// v0 = [encode(b'), z0] with b' the observation replicated up to
/// `target_shape` (zero-order hold when it is smaller) and z0 standard normal.
LatentState warm_start(const Image& b, const Codec& codec, const Shape& target_shape, std::uint64_t seed);

struct ObjectiveTerms {
  double datafit = 0.0;  // 1/2 ||A t - b||^2
  double penalty = 0.0;  // mu/2 ||N(v) - t||^2
  double total() const { return datafit + penalty; }
};

ObjectiveTerms objective_terms(const Image& generated, const Image& t, double mu, const Image& b,
                               const LinearOperator& op);

/// L(v, t) = 1/2 ||A t - b||^2 + mu/2 ||N(v) - t||^2.
double objective(const LatentState& v, const Image& t, double mu, const Image& b, const LinearOperator& op,
                 const GenerativeMap& map);

/// v - eta * mu * J_N(v)^T (N(v) - t).
LatentState grad_step(const LatentState& v, const Image& t, double mu, double eta, const GenerativeMap& map);

/// Optional instrumentation of the two places v changes.
struct SolverObserver {
  std::function<void(int k, const LatentState& before, const LatentState& after)> on_sample;
  std::function<void(int k, const LatentState& before, const LatentState& after)> on_gradient;
  std::function<void(int k, const Image& t, double mu)> on_prox;
};

struct SolveResult {
  Image x_star;  // N(v) after the final gradient step
  Image t_last;
  LatentState v_final;
  SolverTrace trace;
  bool converged = false;  // stopped on rel_tol
};

/// Half-quadratic splitting over the latent prior:
///   v <- S^p(v);  t <- prox(A, b, N(v), mu_k);  v <- v - eta grad_v L(v, t)
/// for k = 0 .. k_max-1 with mu_k = gamma^k mu0.
SolveResult reld_solve(const Image& b, const LinearOperator& op, const Prior& prior, const SolverConfig& cfg,
                       const SolverObserver* observer = nullptr);

}  // namespace reld
