#pragma once

#include <memory>

#include "reld/codec.hpp"
#include "reld/diffusion.hpp"
#include "reld/image.hpp"

namespace reld {

/// Everything that defines the generative map N = decode o project o S^p,
/// except p itself. The sampler walks timesteps p..1 of `schedule` directly.
struct Prior {
  NoiseSchedule schedule = default_schedule();
  std::shared_ptr<const NoisePredictor> predictor;
  std::shared_ptr<const Codec> codec;
};

/// N(v) = decode(project(run_sp(v, p))).
Image generative_map(const LatentState& v, int p, const NoisePredictor& predictor,
                     const NoiseSchedule& schedule, const Codec& codec);

/// J_N(v)^T w, differentiating through every DDIM step and through the
/// conditioning input of the predictor. Throws CapabilityError if the
/// predictor has no gradient rule.
LatentState vjp_generative_map(const LatentState& v, const Image& w, int p, const NoisePredictor& predictor,
                               const NoiseSchedule& schedule, const Codec& codec);

/// Bound generative map for a prior and step count, reusing the forward
/// trajectory for the backward pass.
class GenerativeMap {
 public:
  GenerativeMap(const Prior& prior, int p);

  struct Forward {
    std::vector<LatentState> trajectory;  // v^p .. v^0
    Image image;
  };

  Image operator()(const LatentState& v) const;
  LatentState sample(const LatentState& v) const;  // S^p(v)
  Forward forward(const LatentState& v) const;
  LatentState backward(const Forward& fwd, const Image& w) const;
  LatentState vjp(const LatentState& v, const Image& w) const { return backward(forward(v), w); }

  int steps() const { return p_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const Codec& codec() const { return *codec_; }
  const NoisePredictor& predictor() const { return *predictor_; }

 private:
  std::shared_ptr<const NoisePredictor> predictor_;
  std::shared_ptr<const Codec> codec_;
  NoiseSchedule schedule_;
  int p_;
};

}  // namespace reld
