#include "reld/diffusion.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "reld/errors.hpp"

namespace reld {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size())
    throw ShapeError(std::string(what) + ": length mismatch " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
}

}  // namespace

NoiseSchedule NoiseSchedule::linear(int T, double beta_start, double beta_end) {
  if (T < 1) throw ParameterError("schedule needs at least one step");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
    throw ParameterError("schedule requires 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.betas_.resize(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t)
    s.betas_[t] = T == 1 ? beta_start : beta_start + (beta_end - beta_start) * t / (T - 1);
  s.linear_ = true;
  s.beta_start_ = beta_start;
  s.beta_end_ = beta_end;
  s.finalize();
  for (int t = 0; t <= T; ++t) s.fraction_[t] = static_cast<double>(t) / T;
  return s;
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
  if (betas.empty()) throw ParameterError("schedule needs at least one step");
  for (double b : betas)
    if (!(b > 0.0 && b < 1.0)) throw ParameterError("every beta must lie in (0, 1)");
  NoiseSchedule s;
  s.betas_ = std::move(betas);
  s.finalize();
  const int T = s.steps();
  for (int t = 0; t <= T; ++t) s.fraction_[t] = static_cast<double>(t) / T;
  return s;
}

void NoiseSchedule::finalize() {
  const int T = steps();
  alpha_bar_.assign(static_cast<std::size_t>(T) + 1, 1.0);
  fraction_.assign(static_cast<std::size_t>(T) + 1, 0.0);
  for (int t = 1; t <= T; ++t) alpha_bar_[t] = alpha_bar_[t - 1] * (1.0 - betas_[t - 1]);
}

double NoiseSchedule::beta(int t) const {
  if (t < 1 || t > steps()) throw ParameterError("timestep " + std::to_string(t) + " out of range");
  return betas_[static_cast<std::size_t>(t) - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > steps()) throw ParameterError("timestep " + std::to_string(t) + " out of range");
  return alpha_bar_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::model_fraction(int t) const {
  if (t < 0 || t > steps()) throw ParameterError("timestep " + std::to_string(t) + " out of range");
  return fraction_[static_cast<std::size_t>(t)];
}

std::string NoiseSchedule::to_text() const {
  std::ostringstream os;
  os << std::setprecision(17);
  if (linear_) {
    os << steps() << " " << beta_start_ << " " << beta_end_;
  } else {
    os << "custom " << steps();
    for (double b : betas_) os << " " << b;
  }
  return os.str();
}

NoiseSchedule NoiseSchedule::from_text(const std::string& text) {
  std::istringstream is(text);
  std::string first;
  if (!(is >> first)) throw ParameterError("empty schedule text");
  if (first == "custom") {
    int T = 0;
    if (!(is >> T) || T < 1) throw ParameterError("schedule text: bad step count");
    std::vector<double> betas(static_cast<std::size_t>(T));
    for (auto& b : betas)
      if (!(is >> b)) throw ParameterError("schedule text: missing betas");
    return from_betas(std::move(betas));
  }
  int T = 0;
  double b0 = 0.0, b1 = 0.0;
  try {
    T = std::stoi(first);
  } catch (const std::exception&) {
    throw ParameterError("schedule text: expected 'T beta_start beta_end'");
  }
  if (!(is >> b0 >> b1)) throw ParameterError("schedule text: expected 'T beta_start beta_end'");
  return linear(T, b0, b1);
}

std::uint64_t NoiseSchedule::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : to_text()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

NoiseSchedule default_schedule() { return NoiseSchedule::linear(1000, 1e-4, 2e-2); }

std::vector<double> LatentState::flatten() const {
  std::vector<double> v;
  v.reserve(size());
  v.insert(v.end(), a.begin(), a.end());
  v.insert(v.end(), z.begin(), z.end());
  return v;
}

LatentState LatentState::unflatten(std::span<const double> v, std::size_t conditioning_size) {
  if (conditioning_size > v.size()) throw ShapeError("conditioning size exceeds latent length");
  LatentState s;
  s.a.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(conditioning_size));
  s.z.assign(v.begin() + static_cast<std::ptrdiff_t>(conditioning_size), v.end());
  return s;
}

LatentState NoisePredictor::vjp(const LatentState&, const Timestep&, std::span<const double>) const {
  throw CapabilityError("predictor '" + name() + "' provides no input gradient");
}

std::vector<double> forward_step(std::span<const double> z_prev, double beta, std::span<const double> eps) {
  require_same_length(z_prev, eps, "forward_step");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ParameterError("beta must lie in [0, 1]");
  const double keep = std::sqrt(1.0 - beta);
  const double add = std::sqrt(beta);
  std::vector<double> out(z_prev.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = keep * z_prev[i] + add * eps[i];
  return out;
}

std::vector<double> forward_marginal(std::span<const double> z0, double alpha_bar,
                                     std::span<const double> eps) {
  require_same_length(z0, eps, "forward_marginal");
  if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) throw ParameterError("alpha_bar must lie in (0, 1]");
  const double keep = std::sqrt(alpha_bar);
  const double add = std::sqrt(1.0 - alpha_bar);
  std::vector<double> out(z0.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = keep * z0[i] + add * eps[i];
  return out;
}

std::vector<double> ddpm_reverse_step(std::span<const double> z_t, std::span<const double> eps_hat,
                                      const NoiseSchedule& schedule, int t,
                                      std::span<const double> noise) {
  require_same_length(z_t, eps_hat, "ddpm_reverse_step");
  require_same_length(z_t, noise, "ddpm_reverse_step");
  if (t < 1 || t > schedule.steps())
    throw ParameterError("timestep " + std::to_string(t) + " out of range [1, " +
                         std::to_string(schedule.steps()) + "]");
  const double beta = schedule.beta(t);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(1.0 - beta);
  const double eps_coef = beta / std::sqrt(1.0 - schedule.alpha_bar(t));
  const double noise_coef = std::sqrt(beta);
  std::vector<double> out(z_t.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = inv_sqrt_alpha * (z_t[i] - eps_coef * eps_hat[i]) + noise_coef * noise[i];
  return out;
}

DdimStep ddim_reverse_step(std::span<const double> z_i, std::span<const double> eps_hat,
                           double alpha_bar_i, double alpha_bar_prev) {
  require_same_length(z_i, eps_hat, "ddim_reverse_step");
  if (!(alpha_bar_i > 0.0 && alpha_bar_i <= 1.0) || !(alpha_bar_prev > 0.0 && alpha_bar_prev <= 1.0))
    throw ParameterError("DDIM step requires alpha_bar values in (0, 1]");
  const double inv_sqrt_ab = 1.0 / std::sqrt(alpha_bar_i);
  const double noise_i = std::sqrt(1.0 - alpha_bar_i);
  const double sqrt_prev = std::sqrt(alpha_bar_prev);
  const double noise_prev = std::sqrt(1.0 - alpha_bar_prev);
  DdimStep step{std::vector<double>(z_i.size()), std::vector<double>(z_i.size())};
  for (std::size_t k = 0; k < z_i.size(); ++k) {
    const double z0 = (z_i[k] - noise_i * eps_hat[k]) * inv_sqrt_ab;
    step.z_hat0[k] = z0;
    step.z_prev[k] = sqrt_prev * z0 + noise_prev * eps_hat[k];
  }
  return step;
}

std::vector<LatentState> run_sp_trajectory(const LatentState& v, int p, const NoisePredictor& predictor,
                                           const NoiseSchedule& schedule) {
  if (p < 1 || p > schedule.steps())
    throw ParameterError("diffusion steps p=" + std::to_string(p) + " outside [1, " +
                         std::to_string(schedule.steps()) + "]");
  std::vector<LatentState> states;
  states.reserve(static_cast<std::size_t>(p) + 1);
  states.push_back(v);
  for (int i = p; i >= 1; --i) {
    const LatentState& cur = states.back();
    const Timestep ts{i, schedule.alpha_bar(i), schedule.model_fraction(i)};
    const std::vector<double> eps = predictor.predict(cur, ts);
    if (eps.size() != cur.z.size())
      throw ShapeError("predictor '" + predictor.name() + "' returned " + std::to_string(eps.size()) +
                       " values for a latent of length " + std::to_string(cur.z.size()));
    DdimStep step = ddim_reverse_step(cur.z, eps, schedule.alpha_bar(i), schedule.alpha_bar(i - 1));
    states.push_back(LatentState{v.a, std::move(step.z_prev)});
  }
  return states;
}

LatentState run_sp(const LatentState& v, int p, const NoisePredictor& predictor,
                   const NoiseSchedule& schedule) {
  if (p < 1 || p > schedule.steps())
    throw ParameterError("diffusion steps p=" + std::to_string(p) + " outside [1, " +
                         std::to_string(schedule.steps()) + "]");
  LatentState cur = v;
  for (int i = p; i >= 1; --i) {
    const Timestep ts{i, schedule.alpha_bar(i), schedule.model_fraction(i)};
    const std::vector<double> eps = predictor.predict(cur, ts);
    if (eps.size() != cur.z.size())
      throw ShapeError("predictor '" + predictor.name() + "' returned " + std::to_string(eps.size()) +
                       " values for a latent of length " + std::to_string(cur.z.size()));
    cur.z = ddim_reverse_step(cur.z, eps, schedule.alpha_bar(i), schedule.alpha_bar(i - 1)).z_prev;
  }
  return cur;
}

}  // namespace reld
