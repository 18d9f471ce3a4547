#pragma once

#include "reld/image.hpp"
#include "reld/linop.hpp"

namespace reld {

/// Data subproblem of the splitting scheme:
///   argmin_t  1/2 ||A t - b||^2 + mu/2 ||t - r||^2
struct ProxProblem {
  LinearOperator op;
  Image observation;  // b, in op.output_shape()
  Image anchor;       // r, in op.input_shape()
  double mu = 1.0;
};

/// Throws ParameterError / ShapeError if the problem is malformed.
void validate(const ProxProblem& problem);

/// Value of the subproblem objective at t.
double prox_objective(const ProxProblem& problem, const Image& t);

/// ||A^T(A t - b) + mu (t - r)|| / (||A^T b|| + mu ||r||).
double optimality_residual(const ProxProblem& problem, const Image& t);

/// Closed form for A = PeriodicConv:
///   t = F^-1[(conj(H) F(b) + mu F(r)) / (|H|^2 + mu)].
Image prox_deblur_fft(const ProxProblem& problem);

/// Closed form for A = Decimate(d) o PeriodicConv via the Woodbury identity;
/// the d x d aliasing blocks of |H|^2 are averaged to diagonalize S H H^T S^T.
/// A bare Decimate(d) is accepted and treated as a delta kernel.
Image prox_sr_fft(const ProxProblem& problem, int d);

struct CgReport {
  Image solution;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Conjugate gradients on (A^T A + mu I) t = A^T b + mu r started from t = r.
/// Stops when ||rhs - M t|| <= tol ||rhs|| or after max_iter iterations; on
/// non-convergence the last iterate is returned with converged = false.
CgReport prox_cg(const ProxProblem& problem, double tol, int max_iter);

/// Picks the exact solver for the operator: scalar formula for Identity, FFT
/// for PeriodicConv, Woodbury for (Decimate o PeriodicConv) and bare Decimate,
/// and CG (tol 1e-12) for anything else.
Image solve_prox(const ProxProblem& problem);

}  // namespace reld
