#include "reld/toynet.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "reld/errors.hpp"

namespace reld {

ToyNet::ToyNet(ToyNetLayout layout, std::uint64_t seed) : layout_(std::move(layout)), seed_(seed) {
  build_layers();
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& l : layers_) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (std::size_t i = 0; i < l.in * l.out; ++i) params_[l.weight_offset + i] = scale * normal(gen);
  }
}

ToyNet::ToyNet(ToyNetLayout layout, std::vector<double> parameters, std::uint64_t seed,
               std::uint64_t schedule_hash)
    : layout_(std::move(layout)), seed_(seed), schedule_hash_(schedule_hash) {
  build_layers();
  if (parameters.size() != params_.size())
    throw ShapeError("ToyNet expects " + std::to_string(params_.size()) + " parameters, got " +
                     std::to_string(parameters.size()));
  params_ = std::move(parameters);
}

void ToyNet::build_layers() {
  if (layout_.token_size == 0) throw ParameterError("ToyNet token size must be positive");
  for (int h : layout_.hidden)
    if (h <= 0) throw ParameterError("ToyNet hidden widths must be positive");
  std::vector<std::size_t> widths{layout_.input_size()};
  for (int h : layout_.hidden) widths.push_back(static_cast<std::size_t>(h));
  widths.push_back(layout_.token_size);
  std::size_t offset = 0;
  layers_.clear();
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    LayerView l{widths[i], widths[i + 1], offset, offset + widths[i] * widths[i + 1]};
    offset = l.bias_offset + l.out;
    layers_.push_back(l);
  }
  params_.assign(offset, 0.0);
}

void ToyNet::forward_token(std::span<const double> input, Cache& cache, std::span<double> out) const {
  cache.activations.resize(layers_.size() + 1);
  cache.activations[0].assign(input.begin(), input.end());
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    const auto& x = cache.activations[li];
    auto& y = cache.activations[li + 1];
    y.resize(l.out);
    const double* w = params_.data() + l.weight_offset;
    const double* b = params_.data() + l.bias_offset;
    const bool last = li + 1 == layers_.size();
    for (std::size_t o = 0; o < l.out; ++o) {
      double s = b[o];
      const double* row = w + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) s += row[i] * x[i];
      y[o] = last ? s : std::tanh(s);
    }
  }
  const auto& result = cache.activations.back();
  std::copy(result.begin(), result.end(), out.begin());
}

void ToyNet::backward_token(const Cache& cache, std::span<const double> grad_out, std::span<double> grad_input,
                            std::span<double> grad_params) const {
  std::vector<double> delta(grad_out.begin(), grad_out.end());
  std::vector<double> upstream;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& l = layers_[li];
    const auto& x = cache.activations[li];
    const double* w = params_.data() + l.weight_offset;
    if (!grad_params.empty()) {
      double* gw = grad_params.data() + l.weight_offset;
      double* gb = grad_params.data() + l.bias_offset;
      for (std::size_t o = 0; o < l.out; ++o) {
        gb[o] += delta[o];
        double* grow = gw + o * l.in;
        for (std::size_t i = 0; i < l.in; ++i) grow[i] += delta[o] * x[i];
      }
    }
    if (li == 0 && grad_input.empty()) break;
    upstream.assign(l.in, 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double* row = w + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) upstream[i] += row[i] * delta[o];
    }
    if (li > 0)
      for (std::size_t i = 0; i < l.in; ++i) upstream[i] *= 1.0 - x[i] * x[i];  // tanh'
    delta.swap(upstream);
  }
  if (!grad_input.empty()) std::copy(delta.begin(), delta.end(), grad_input.begin());
}

std::size_t ToyNet::token_count(const LatentState& v) const {
  if (v.z.size() % layout_.token_size != 0)
    throw ShapeError("latent length " + std::to_string(v.z.size()) + " is not a multiple of the token size " +
                     std::to_string(layout_.token_size));
  const std::size_t n = v.z.size() / layout_.token_size;
  if (v.a.size() != n * layout_.cond_token_size)
    throw ShapeError("conditioning length " + std::to_string(v.a.size()) + " does not match " +
                     std::to_string(n) + " tokens of " + std::to_string(layout_.cond_token_size));
  return n;
}

void ToyNet::gather_input(const LatentState& v, std::size_t token, double fraction,
                          std::span<double> input) const {
  const std::size_t ca = layout_.cond_token_size, q = layout_.token_size;
  std::copy_n(v.a.begin() + static_cast<std::ptrdiff_t>(token * ca), ca, input.begin());
  std::copy_n(v.z.begin() + static_cast<std::ptrdiff_t>(token * q), q,
              input.begin() + static_cast<std::ptrdiff_t>(ca));
  input[ca + q] = fraction;
}

std::vector<double> ToyNet::predict(const LatentState& v, const Timestep& t) const {
  const std::size_t n = token_count(v);
  const std::size_t q = layout_.token_size;
  std::vector<double> out(v.z.size());
  std::vector<double> input(layout_.input_size());
  Cache cache;
  for (std::size_t k = 0; k < n; ++k) {
    gather_input(v, k, t.fraction, input);
    forward_token(input, cache, std::span<double>(out).subspan(k * q, q));
  }
  return out;
}

LatentState ToyNet::vjp(const LatentState& v, const Timestep& t, std::span<const double> g) const {
  if (g.size() != v.z.size()) throw ShapeError("vjp cotangent length does not match latent");
  const std::size_t n = token_count(v);
  const std::size_t q = layout_.token_size, ca = layout_.cond_token_size;
  LatentState grad{std::vector<double>(v.a.size()), std::vector<double>(v.z.size())};
  std::vector<double> input(layout_.input_size()), out(q), gin(layout_.input_size());
  Cache cache;
  for (std::size_t k = 0; k < n; ++k) {
    gather_input(v, k, t.fraction, input);
    forward_token(input, cache, out);
    backward_token(cache, g.subspan(k * q, q), gin, {});
    std::copy_n(gin.begin(), ca, grad.a.begin() + static_cast<std::ptrdiff_t>(k * ca));
    std::copy_n(gin.begin() + static_cast<std::ptrdiff_t>(ca), q, grad.z.begin() + static_cast<std::ptrdiff_t>(k * q));
  }
  return grad;
}

// ---------------------------------------------------------------- file format

void save_toynet(const ToyNet& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  const auto& l = net.layout();
  out << "reld-toynet 1\n";
  out << "token_size " << l.token_size << "\n";
  out << "cond_token_size " << l.cond_token_size << "\n";
  out << "hidden";
  for (int h : l.hidden) out << " " << h;
  out << "\nactivation tanh\n";
  out << "seed " << net.seed() << "\n";
  out << "schedule_hash " << std::hex << std::setw(16) << std::setfill('0') << net.schedule_hash() << std::dec
      << "\n";
  out << "parameters " << net.parameter_count() << "\n" << std::setprecision(17);
  const auto p = net.parameters();
  for (std::size_t i = 0; i < p.size(); ++i) out << p[i] << ((i % 8 == 7 || i + 1 == p.size()) ? "\n" : " ");
  if (!out) throw IoError(path.string() + ": write failed");
}

ToyNet load_toynet(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  auto fail = [&](const std::string& why) -> IoError { return IoError(path.string() + ": " + why); };

  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "reld-toynet" || version != 1) throw fail("not a ToyNet file");

  ToyNetLayout layout;
  layout.hidden.clear();
  std::uint64_t seed = 0, hash = 0;
  std::size_t count = 0;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "token_size") {
      ls >> layout.token_size;
    } else if (key == "cond_token_size") {
      ls >> layout.cond_token_size;
    } else if (key == "hidden") {
      int h;
      while (ls >> h) layout.hidden.push_back(h);
      if (!ls.eof() || layout.hidden.empty()) throw fail("malformed header line '" + line + "'");
      continue;
    } else if (key == "activation") {
      std::string act;
      ls >> act;
      if (act != "tanh") throw fail("unsupported activation '" + act + "'");
    } else if (key == "seed") {
      ls >> seed;
    } else if (key == "schedule_hash") {
      ls >> std::hex >> hash;
    } else if (key == "parameters") {
      ls >> count;
      break;
    } else if (!key.empty()) {
      throw fail("unknown header key '" + key + "'");
    }
    if (ls.fail()) throw fail("malformed header line '" + line + "'");
  }
  std::vector<double> params(count);
  for (auto& p : params)
    if (!(in >> p)) throw fail("truncated parameter vector");
  try {
    return ToyNet(layout, std::move(params), seed, hash);
  } catch (const Error& e) {
    throw fail(e.what());
  }
}

// ---------------------------------------------------------------- training

ToyTrainResult train_toy_score(std::span<const TrainingPair> dataset, const NoiseSchedule& schedule,
                               const ToyTrainOptions& options) {
  if (dataset.empty()) throw ParameterError("training dataset is empty");
  if (options.steps < 1) throw ParameterError("training needs at least one step");
  if (options.batch_size < 1) throw ParameterError("batch size must be >= 1");
  const auto& layout = options.layout;
  const std::size_t q = layout.token_size, ca = layout.cond_token_size;
  for (const auto& pair : dataset) {
    if (q == 0 || pair.latent.size() % q != 0)
      throw ShapeError("training latent length is not a multiple of the token size");
    if (pair.conditioning.size() != (pair.latent.size() / q) * ca)
      throw ShapeError("training conditioning length does not match the token layout");
  }

  ToyTrainResult result{ToyNet(layout, options.seed), {}};
  ToyNet& net = result.net;
  net.set_schedule_hash(schedule.hash());
  const std::size_t np = net.parameter_count();

  std::mt19937_64 gen(options.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_int_distribution<std::size_t> pick_item(0, dataset.size() - 1);
  std::uniform_int_distribution<int> pick_t(1, schedule.steps());
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> grad(np), m(np, 0.0), v2(np, 0.0);
  std::vector<double> input(layout.input_size()), eps(q), out(q), gout(q);
  ToyNet::Cache cache;
  const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  double b1t = 1.0, b2t = 1.0;

  result.loss_trace.reserve(static_cast<std::size_t>(options.steps));
  for (int step = 0; step < options.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (int b = 0; b < options.batch_size; ++b) {
      const auto& pair = dataset[pick_item(gen)];
      const std::size_t tokens = pair.latent.size() / q;
      const std::size_t tok = std::uniform_int_distribution<std::size_t>(0, tokens - 1)(gen);
      const int t = pick_t(gen);
      const double ab = schedule.alpha_bar(t);
      const double keep = std::sqrt(ab), add = std::sqrt(1.0 - ab);
      for (std::size_t i = 0; i < ca; ++i) input[i] = pair.conditioning[tok * ca + i];
      for (std::size_t i = 0; i < q; ++i) {
        eps[i] = normal(gen);
        input[ca + i] = keep * pair.latent[tok * q + i] + add * eps[i];
      }
      input[ca + q] = schedule.model_fraction(t);
      net.forward_token(input, cache, out);
      for (std::size_t i = 0; i < q; ++i) {
        const double r = out[i] - eps[i];
        loss += r * r;
        gout[i] = 2.0 * r;
      }
      net.backward_token(cache, gout, {}, grad);
    }
    const double norm = 1.0 / (static_cast<double>(options.batch_size) * q);
    loss *= norm;
    if (!std::isfinite(loss)) throw TrainingError("toy score training diverged (non-finite loss)", step);
    result.loss_trace.push_back(loss);

    const double progress = options.steps > 1 ? static_cast<double>(step) / (options.steps - 1) : 1.0;
    const double lr = options.learning_rate * (1.0 - (1.0 - options.final_lr_fraction) * progress);
    b1t *= beta1;
    b2t *= beta2;
    auto params = net.parameters();
    for (std::size_t i = 0; i < np; ++i) {
      const double g = grad[i] * norm;
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v2[i] = beta2 * v2[i] + (1.0 - beta2) * g * g;
      const double mhat = m[i] / (1.0 - b1t);
      const double vhat = v2[i] / (1.0 - b2t);
      params[i] -= lr * mhat / (std::sqrt(vhat) + adam_eps);
    }
  }
  return result;
}

std::vector<TrainingPair> make_denoising_dataset(const Codec& codec, std::span<const Image> images,
                                                 double sigma_max, int copies, std::uint64_t seed) {
  if (!(sigma_max >= 0.0)) throw ParameterError("sigma_max must be >= 0");
  if (copies < 1) throw ParameterError("copies must be >= 1");
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> sigma(0.0, sigma_max);
  std::vector<TrainingPair> out;
  out.reserve(images.size() * static_cast<std::size_t>(copies));
  for (const auto& img : images) {
    const auto clean = codec.encode(img);
    for (int c = 0; c < copies; ++c) {
      const double s = sigma(gen);
      const Image noisy = awgn_corrupt(img, s, gen());
      out.push_back(TrainingPair{clean, codec.encode(noisy)});
    }
  }
  return out;
}

}  // namespace reld
