#include "reld/prior.hpp"

#include <cmath>

#include "reld/errors.hpp"

namespace reld {

GenerativeMap::GenerativeMap(const Prior& prior, int p)
    : predictor_(prior.predictor), codec_(prior.codec), schedule_(prior.schedule), p_(p) {
  if (!predictor_) throw ParameterError("prior has no noise predictor");
  if (!codec_) throw ParameterError("prior has no codec");
  if (p < 1 || p > schedule_.steps())
    throw ParameterError("diffusion steps p=" + std::to_string(p) + " outside [1, " +
                         std::to_string(schedule_.steps()) + "]");
}

LatentState GenerativeMap::sample(const LatentState& v) const {
  return run_sp(v, p_, *predictor_, schedule_);
}

Image GenerativeMap::operator()(const LatentState& v) const { return codec_->decode(sample(v).z); }

GenerativeMap::Forward GenerativeMap::forward(const LatentState& v) const {
  Forward f;
  f.trajectory = run_sp_trajectory(v, p_, *predictor_, schedule_);
  f.image = codec_->decode(f.trajectory.back().z);
  return f;
}

LatentState GenerativeMap::backward(const Forward& fwd, const Image& w) const {
  if (!predictor_->has_gradient())
    throw CapabilityError("predictor '" + predictor_->name() + "' provides no input gradient");
  if (fwd.trajectory.size() != static_cast<std::size_t>(p_) + 1)
    throw ShapeError("forward trajectory does not match the step count");

  std::vector<double> gz = codec_->decode_vjp(w);
  const LatentState& v = fwd.trajectory.front();
  std::vector<double> ga(v.a.size(), 0.0);

  // z^{i-1} = c1 z^i + c2 U(v^i); walk i = 1..p backwards through the chain.
  for (int i = 1; i <= p_; ++i) {
    const LatentState& state = fwd.trajectory[static_cast<std::size_t>(p_ - i)];  // v^i
    const double ab = schedule_.alpha_bar(i);
    const double ab_prev = schedule_.alpha_bar(i - 1);
    const double c1 = std::sqrt(ab_prev) / std::sqrt(ab);
    const double c2 = std::sqrt(1.0 - ab_prev) - std::sqrt(ab_prev) * std::sqrt(1.0 - ab) / std::sqrt(ab);

    std::vector<double> scaled(gz.size());
    for (std::size_t k = 0; k < gz.size(); ++k) scaled[k] = c2 * gz[k];
    const Timestep ts{i, ab, schedule_.model_fraction(i)};
    const LatentState through = predictor_->vjp(state, ts, scaled);
    for (std::size_t k = 0; k < gz.size(); ++k) gz[k] = c1 * gz[k] + through.z[k];
    for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += through.a[k];
  }
  return LatentState{std::move(ga), std::move(gz)};
}

namespace {

Prior adhoc_prior(const NoisePredictor& predictor, const NoiseSchedule& schedule, const Codec& codec) {
  // Non-owning handles for the free-function API; the caller outlives the call.
  Prior prior;
  prior.schedule = schedule;
  prior.predictor = std::shared_ptr<const NoisePredictor>(&predictor, [](const NoisePredictor*) {});
  prior.codec = std::shared_ptr<const Codec>(&codec, [](const Codec*) {});
  return prior;
}

}  // namespace

Image generative_map(const LatentState& v, int p, const NoisePredictor& predictor,
                     const NoiseSchedule& schedule, const Codec& codec) {
  return GenerativeMap(adhoc_prior(predictor, schedule, codec), p)(v);
}

LatentState vjp_generative_map(const LatentState& v, const Image& w, int p, const NoisePredictor& predictor,
                               const NoiseSchedule& schedule, const Codec& codec) {
  return GenerativeMap(adhoc_prior(predictor, schedule, codec), p).vjp(v, w);
}

}  // namespace reld
