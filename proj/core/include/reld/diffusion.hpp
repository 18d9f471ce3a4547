#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace reld {

/// Discrete DDPM noise schedule. Timesteps are 1-based; alpha_bar(0) == 1
/// stands for clean data.
class NoiseSchedule {
 public:
  /// Linear betas from beta_start to beta_end over T steps.
  /// Requires T >= 1 and 0 < beta_start <= beta_end < 1.
  static NoiseSchedule linear(int T, double beta_start, double beta_end);

  /// Arbitrary betas, each in (0, 1).
  static NoiseSchedule from_betas(std::vector<double> betas);

  int steps() const { return static_cast<int>(betas_.size()); }
  double beta(int t) const;
  double alpha(int t) const { return 1.0 - beta(t); }
  double alpha_bar(int t) const;
  std::span<const double> betas() const { return betas_; }

  /// Timestep fed to noise predictors, normalized to (0, 1].
  double model_fraction(int t) const;

  /// "T beta_start beta_end" for linear schedules; custom schedules write
  /// "custom T" followed by their betas.
  std::string to_text() const;
  static NoiseSchedule from_text(const std::string& text);

  /// FNV-1a over the text form; tags trained predictors with their schedule.
  std::uint64_t hash() const;

  bool is_linear() const { return linear_; }
  double beta_start() const { return beta_start_; }
  double beta_end() const { return beta_end_; }

 private:
  NoiseSchedule() = default;
  void finalize();

  std::vector<double> betas_;
  std::vector<double> alpha_bar_;  // size T + 1
  std::vector<double> fraction_;   // size T + 1
  bool linear_ = false;
  double beta_start_ = 0.0;
  double beta_end_ = 0.0;
};

/// Default DDPM schedule: linear 1e-4 .. 2e-2 over 1000 steps.
NoiseSchedule default_schedule();

/// build_schedule alias matching the linear factory.
inline NoiseSchedule build_schedule(int T, double beta_start, double beta_end) {
  return NoiseSchedule::linear(T, beta_start, beta_end);
}

/// Concatenated latent v = [a, z]: conditioning part a and diffusion part z.
struct LatentState {
  std::vector<double> a;
  std::vector<double> z;

  std::size_t size() const { return a.size() + z.size(); }
  std::vector<double> flatten() const;
  static LatentState unflatten(std::span<const double> v, std::size_t conditioning_size);

  friend bool operator==(const LatentState&, const LatentState&) = default;
};

/// What a noise predictor is told about the current step.
struct Timestep {
  int index = 0;           // step index within the schedule in use
  double alpha_bar = 1.0;  // cumulative product at this step
  double fraction = 0.0;   // model timestep / T of the training schedule
};

/// Time-conditioned noise predictor U(v, t) -> R^{s2}.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;

  virtual std::vector<double> predict(const LatentState& v, const Timestep& t) const = 0;

  virtual bool has_gradient() const { return false; }

  /// J^T g with J the Jacobian of predict() w.r.t. v, split as [d/da, d/dz].
  /// The default throws CapabilityError.
  virtual LatentState vjp(const LatentState& v, const Timestep& t, std::span<const double> g) const;

  virtual std::string name() const = 0;
};

/// sqrt(1 - beta) z_prev + sqrt(beta) eps. Requires beta in [0, 1].
std::vector<double> forward_step(std::span<const double> z_prev, double beta, std::span<const double> eps);

/// sqrt(alpha_bar) z0 + sqrt(1 - alpha_bar) eps. Requires alpha_bar in (0, 1].
std::vector<double> forward_marginal(std::span<const double> z0, double alpha_bar,
                                     std::span<const double> eps);

/// One ancestral DDPM step from timestep t (1 <= t <= T).
std::vector<double> ddpm_reverse_step(std::span<const double> z_t, std::span<const double> eps_hat,
                                      const NoiseSchedule& schedule, int t,
                                      std::span<const double> noise);

struct DdimStep {
  std::vector<double> z_prev;
  std::vector<double> z_hat0;
};

/// Deterministic DDIM step:
///   z_hat0 = (z_i - sqrt(1 - ab_i) eps_hat) / sqrt(ab_i)
///   z_prev = sqrt(ab_prev) z_hat0 + sqrt(1 - ab_prev) eps_hat
DdimStep ddim_reverse_step(std::span<const double> z_i, std::span<const double> eps_hat,
                           double alpha_bar_i, double alpha_bar_prev);

/// The p-step conditioned sampler: DDIM steps i = p..1 on z with the
/// conditioning a re-attached unchanged at every step. The input z is used
/// as z^p as-is; no noise is drawn here.
LatentState run_sp(const LatentState& v, int p, const NoisePredictor& predictor,
                   const NoiseSchedule& schedule);

/// Same as run_sp but returns every intermediate state v^p, ..., v^0
/// (front() is the input, back() the output).
std::vector<LatentState> run_sp_trajectory(const LatentState& v, int p, const NoisePredictor& predictor,
                                           const NoiseSchedule& schedule);

}  // namespace reld
