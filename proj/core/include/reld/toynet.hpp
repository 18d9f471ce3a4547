#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "reld/codec.hpp"
#include "reld/diffusion.hpp"

namespace reld {

/// Shape of a ToyNet. The latent is cut into tokens of `token_size` values
/// (plus `cond_token_size` conditioning values each); every token goes
/// through the same dense tanh network with input [a_tok, z_tok, t/T].
/// Setting token_size to the whole latent gives a plain fully-connected net.
struct ToyNetLayout {
  std::size_t token_size = 0;
  std::size_t cond_token_size = 0;
  std::vector<int> hidden{64, 64};

  std::size_t input_size() const { return cond_token_size + token_size + 1; }
  friend bool operator==(const ToyNetLayout&, const ToyNetLayout&) = default;
};

/// Small time-conditioned noise predictor with exact input and parameter
/// gradients.
class ToyNet final : public NoisePredictor {
 public:
  /// Random LeCun-normal weights and zero biases from `seed`.
  ToyNet(ToyNetLayout layout, std::uint64_t seed);
  ToyNet(ToyNetLayout layout, std::vector<double> parameters, std::uint64_t seed,
         std::uint64_t schedule_hash);

  std::vector<double> predict(const LatentState& v, const Timestep& t) const override;
  bool has_gradient() const override { return true; }
  LatentState vjp(const LatentState& v, const Timestep& t, std::span<const double> g) const override;
  std::string name() const override { return "toynet"; }

  const ToyNetLayout& layout() const { return layout_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t schedule_hash() const { return schedule_hash_; }
  void set_schedule_hash(std::uint64_t h) { schedule_hash_ = h; }

  /// Per-token activations kept for the backward pass.
  struct Cache {
    std::vector<std::vector<double>> activations;  // input, hidden..., output
  };

  void forward_token(std::span<const double> input, Cache& cache, std::span<double> out) const;

  /// Backpropagates d(out)=grad_out. Writes d(input) into grad_input (may be
  /// empty to skip) and accumulates parameter gradients into grad_params
  /// (may be empty to skip).
  void backward_token(const Cache& cache, std::span<const double> grad_out, std::span<double> grad_input,
                      std::span<double> grad_params) const;

 private:
  struct LayerView {
    std::size_t in, out, weight_offset, bias_offset;
  };
  void build_layers();
  std::size_t token_count(const LatentState& v) const;
  void gather_input(const LatentState& v, std::size_t token, double fraction, std::span<double> input) const;

  ToyNetLayout layout_;
  std::vector<LayerView> layers_;
  std::vector<double> params_;
  std::uint64_t seed_ = 0;
  std::uint64_t schedule_hash_ = 0;
};

/// Text format: a header (layer sizes, seed, schedule hash) followed by the
/// flat parameter vector.
void save_toynet(const ToyNet& net, const std::filesystem::path& path);
ToyNet load_toynet(const std::filesystem::path& path);

/// Clean latent with its conditioning vector.
struct TrainingPair {
  std::vector<double> latent;
  std::vector<double> conditioning;
};

struct ToyTrainOptions {
  ToyNetLayout layout;
  int steps = 2000;
  int batch_size = 64;
  double learning_rate = 2e-3;
  /// Learning rate decays linearly to learning_rate * final_lr_fraction.
  double final_lr_fraction = 0.05;
  std::uint64_t seed = 0;
};

struct ToyTrainResult {
  ToyNet net;
  std::vector<double> loss_trace;  // mean per-coordinate batch loss, one per step
};

/// Adam on E ||eps - eps_theta([a, z_t], t)||^2 with t uniform on 1..T, eps
/// standard normal and z_t = sqrt(ab_t) z0 + sqrt(1 - ab_t) eps. Throws
/// TrainingError with the step index if the loss becomes non-finite.
ToyTrainResult train_toy_score(std::span<const TrainingPair> dataset, const NoiseSchedule& schedule,
                               const ToyTrainOptions& options);

/// Denoising pairs (encode(x), encode(x + sigma * n)) with sigma uniform on
/// [0, sigma_max], `copies` noisy versions per image.
std::vector<TrainingPair> make_denoising_dataset(const Codec& codec, std::span<const Image> images,
                                                 double sigma_max, int copies, std::uint64_t seed);

}  // namespace reld
