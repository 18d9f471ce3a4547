#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "reld/codec.hpp"
#include "reld/image_io.hpp"
#include "reld/phantom.hpp"
#include "reld/predictor.hpp"
#include "reld/prox.hpp"
#include "reld/toynet.hpp"
#include "reld/vecops.hpp"

namespace reld::cli {
namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(out)) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  const long long x = to_integer(key, v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw ConfigError(key + ": out of range");
  return static_cast<int>(x);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

// Shortest round-trip text for a double.
std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt_short(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

Task parse_task(const std::string& v) {
  if (v == "denoise") return Task::Denoise;
  if (v == "deblur") return Task::Deblur;
  if (v == "sr") return Task::SuperResolution;
  throw ConfigError("task: expected denoise, deblur or sr, got '" + v + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"task", [](auto& c, auto&, auto& v) { c.task = parse_task(v); }},
      {"seed",
       [](auto& c, auto& k, auto& v) {
         const long long s = to_integer(k, v);
         if (s < 0) throw ConfigError("seed: must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"degrade.sigma_A", [](auto& c, auto& k, auto& v) { c.degrade.sigma_A = to_double(k, v); }},
      {"degrade.sigma_eta", [](auto& c, auto& k, auto& v) { c.degrade.sigma_eta = to_double(k, v); }},
      {"degrade.d", [](auto& c, auto& k, auto& v) { c.degrade.d = to_int(k, v); }},
      {"degrade.kernel_size", [](auto& c, auto& k, auto& v) { c.degrade.kernel_size = to_int(k, v); }},
      {"solver.p", [](auto& c, auto& k, auto& v) { c.solver.p = to_int(k, v); }},
      {"solver.mu0", [](auto& c, auto& k, auto& v) { c.solver.mu0 = to_double(k, v); }},
      {"solver.gamma", [](auto& c, auto& k, auto& v) { c.solver.gamma = to_double(k, v); }},
      {"solver.eta", [](auto& c, auto& k, auto& v) { c.solver.eta = to_double(k, v); }},
      {"solver.k_max", [](auto& c, auto& k, auto& v) { c.solver.k_max = to_int(k, v); }},
      {"solver.rel_tol",
       [](auto& c, auto& k, auto& v) {
         if (v == "off" || v == "none") {
           c.solver.rel_tol.reset();
         } else {
           c.solver.rel_tol = to_double(k, v);
         }
       }},
      {"solver.inner_steps", [](auto& c, auto& k, auto& v) { c.solver.inner_steps = to_int(k, v); }},
      {"prior.codec", [](auto& c, auto&, auto& v) { c.prior.codec = v; }},
      {"prior.block", [](auto& c, auto& k, auto& v) { c.prior.block = to_int(k, v); }},
      {"prior.keep", [](auto& c, auto& k, auto& v) { c.prior.keep = to_int(k, v); }},
      {"prior.predictor", [](auto& c, auto&, auto& v) { c.prior.predictor = v; }},
      {"prior.toynet", [](auto& c, auto&, auto& v) { c.prior.toynet = v; }},
      {"prior.gaussian_mean", [](auto& c, auto& k, auto& v) { c.prior.gaussian_mean = to_double(k, v); }},
      {"prior.gaussian_tau", [](auto& c, auto& k, auto& v) { c.prior.gaussian_tau = to_double(k, v); }},
      {"schedule.T", [](auto& c, auto& k, auto& v) { c.prior.T = to_int(k, v); }},
      {"schedule.beta_start", [](auto& c, auto& k, auto& v) { c.prior.beta_start = to_double(k, v); }},
      {"schedule.beta_end", [](auto& c, auto& k, auto& v) { c.prior.beta_end = to_double(k, v); }},
      {"io.input", [](auto& c, auto&, auto& v) { c.io.input = v; }},
      {"io.ground_truth", [](auto& c, auto&, auto& v) { c.io.ground_truth = v; }},
      {"io.observation", [](auto& c, auto&, auto& v) { c.io.observation = v; }},
      {"io.bit_depth", [](auto& c, auto& k, auto& v) { c.io.bit_depth = to_int(k, v); }},
      {"train.images", [](auto& c, auto& k, auto& v) { c.train.images = to_int(k, v); }},
      {"train.size", [](auto& c, auto& k, auto& v) { c.train.size = to_int(k, v); }},
      {"train.channels", [](auto& c, auto& k, auto& v) { c.train.channels = to_int(k, v); }},
      {"train.copies", [](auto& c, auto& k, auto& v) { c.train.copies = to_int(k, v); }},
      {"train.sigma_max", [](auto& c, auto& k, auto& v) { c.train.sigma_max = to_double(k, v); }},
      {"train.steps", [](auto& c, auto& k, auto& v) { c.train.steps = to_int(k, v); }},
      {"train.batch", [](auto& c, auto& k, auto& v) { c.train.batch = to_int(k, v); }},
      {"train.lr", [](auto& c, auto& k, auto& v) { c.train.lr = to_double(k, v); }},
      {"train.hidden",
       [](auto& c, auto& k, auto& v) {
         std::vector<int> h;
         for (const auto& part : split(v, ',')) h.push_back(to_int(k, part));
         c.train.hidden = std::move(h);
       }},
      {"train.output", [](auto& c, auto&, auto& v) { c.train.output = v; }},
  };
  return table;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

std::string to_string(Task t) {
  switch (t) {
    case Task::Denoise:
      return "denoise";
    case Task::Deblur:
      return "deblur";
    case Task::SuperResolution:
      return "sr";
  }
  return "?";
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : setters()) out.push_back(k);
    return out;
  }();
  return keys;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& [k, fn] : setters()) {
    if (k == key) {
      fn(*this, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void ExperimentConfig::validate() const {
  require(degrade.sigma_eta >= 0.0, "degrade.sigma_eta: must be >= 0");
  if (task != Task::Denoise) require(degrade.sigma_A > 0.0, "degrade.sigma_A: must be > 0");
  if (task == Task::SuperResolution) require(degrade.d >= 2, "degrade.d: sr requires d >= 2");
  require(degrade.kernel_size == 0 || (degrade.kernel_size > 0 && degrade.kernel_size % 2 == 1),
          "degrade.kernel_size: must be 0 (auto) or a positive odd number");
  require(prior.codec == "identity" || prior.codec == "block_dct",
          "prior.codec: expected identity or block_dct");
  require(prior.predictor == "zero" || prior.predictor == "gaussian" || prior.predictor == "toynet",
          "prior.predictor: expected zero, gaussian or toynet");
  require(prior.block >= 1 && prior.keep >= 1 && prior.keep <= prior.block,
          "prior.block/prior.keep: need 1 <= keep <= block");
  require(prior.gaussian_tau >= 0.0, "prior.gaussian_tau: must be >= 0");
  require(prior.T >= 1, "schedule.T: must be >= 1");
  require(prior.beta_start > 0.0 && prior.beta_start <= prior.beta_end && prior.beta_end < 1.0,
          "schedule: need 0 < beta_start <= beta_end < 1");
  require(io.bit_depth == 8 || io.bit_depth == 16, "io.bit_depth: expected 8 or 16");
  require(train.images >= 1 && train.size >= 1 && train.copies >= 1 && train.steps >= 1 && train.batch >= 1,
          "train.*: counts must be positive");
  require(train.channels == 1 || train.channels == 3, "train.channels: expected 1 or 3");
  require(train.lr > 0.0 && train.sigma_max >= 0.0, "train.lr/train.sigma_max: out of range");
  for (int h : train.hidden) require(h >= 1, "train.hidden: widths must be positive");
  try {
    reld::validate(solver, prior.T);
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("solver: ") + e.what());
  }
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      cfg.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ------------------------------------------------------------ operators

namespace {

Kernel task_kernel(const ExperimentConfig& cfg, const Shape& clean) {
  const int max_size = std::min(clean.height, clean.width);
  const int size = cfg.degrade.kernel_size > 0 ? cfg.degrade.kernel_size
                                               : default_psf_size(cfg.degrade.sigma_A, max_size);
  return gaussian_psf(cfg.degrade.sigma_A, size);
}

NoiseSchedule config_schedule(const ExperimentConfig& cfg) {
  return NoiseSchedule::linear(cfg.prior.T, cfg.prior.beta_start, cfg.prior.beta_end);
}

}  // namespace

LinearOperator build_operator(const ExperimentConfig& cfg, const Shape& clean_shape) {
  switch (cfg.task) {
    case Task::Denoise:
      return LinearOperator::identity(clean_shape);
    case Task::Deblur:
      return LinearOperator::periodic_conv(clean_shape, task_kernel(cfg, clean_shape));
    case Task::SuperResolution: {
      const int d = cfg.degrade.d;
      if (clean_shape.height % d != 0 || clean_shape.width % d != 0)
        throw ConfigError("sr: image " + to_string(clean_shape) + " is not divisible by d = " + std::to_string(d));
      auto conv = LinearOperator::periodic_conv(clean_shape, task_kernel(cfg, clean_shape));
      return LinearOperator::compose(LinearOperator::decimate(clean_shape, d), conv);
    }
  }
  throw ConfigError("unknown task");
}

Shape reconstruction_shape(const ExperimentConfig& cfg, const Shape& observed) {
  if (cfg.task != Task::SuperResolution) return observed;
  return Shape{observed.height * cfg.degrade.d, observed.width * cfg.degrade.d, observed.channels};
}

Prior build_prior(const ExperimentConfig& cfg, const Shape& shape) {
  Prior prior;
  prior.schedule = config_schedule(cfg);
  if (cfg.prior.codec == "identity") {
    prior.codec = std::make_shared<IdentityCodec>(shape);
  } else {
    prior.codec = std::make_shared<BlockDctCodec>(shape, cfg.prior.block, cfg.prior.keep);
  }
  const std::size_t s = prior.codec->latent_size();
  if (cfg.prior.predictor == "zero") {
    prior.predictor = std::make_shared<ZeroPredictor>();
  } else if (cfg.prior.predictor == "gaussian") {
    // Latent of the constant image `gaussian_mean`.
    const auto mean = prior.codec->encode(Image(shape, cfg.prior.gaussian_mean));
    prior.predictor = std::make_shared<AnalyticGaussianPredictor>(mean, cfg.prior.gaussian_tau);
  } else {
    if (cfg.prior.toynet.empty()) throw ConfigError("prior.toynet: required when prior.predictor = toynet");
    auto net = std::make_shared<ToyNet>(load_toynet(cfg.prior.toynet));
    if (net->schedule_hash() != prior.schedule.hash())
      throw ConfigError("prior.toynet: model was trained on a different noise schedule");
    const auto& lay = net->layout();
    if (lay.token_size != prior.codec->token_size() || lay.cond_token_size != prior.codec->token_size() ||
        s % lay.token_size != 0)
      throw ConfigError("prior.toynet: token size " + std::to_string(lay.token_size) + " does not match codec " +
                        prior.codec->describe());
    prior.predictor = std::move(net);
  }
  return prior;
}

// ------------------------------------------------------------ sidecar

std::string Sidecar::get(const std::string& key) const {
  const auto it = fields.find(key);
  if (it == fields.end()) throw ConfigError("metadata is missing '" + key + "'");
  return it->second;
}

void Sidecar::write(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [k, v] : fields) out << k << " = " << v << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

Sidecar Sidecar::read(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read metadata " + path.string());
  Sidecar sc;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("malformed metadata line in " + path.string());
    sc.fields[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return sc;
}

// ------------------------------------------------------------ commands

namespace {

struct Degraded {
  LinearOperator op;
  Image b;
};

Degraded degrade_image(const ExperimentConfig& cfg, const Image& x) {
  auto op = build_operator(cfg, x.shape());
  Image b = awgn_corrupt(apply(op, x), cfg.noise_sigma(), cfg.seed);
  return {std::move(op), std::move(b)};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

fs::path observation_path(const ExperimentConfig& cfg, const fs::path& out_dir) {
  return cfg.io.observation.empty() ? out_dir / "observation.png" : cfg.io.observation;
}

fs::path sidecar_path(const fs::path& observation) {
  fs::path p = observation;
  p.replace_extension(".meta");
  return p;
}

// Fields that the restore step must agree on.
std::map<std::string, std::string> operator_fields(const ExperimentConfig& cfg, const Shape& clean) {
  std::map<std::string, std::string> f;
  f["task"] = to_string(cfg.task);
  f["sigma_eta"] = fmt(cfg.degrade.sigma_eta);
  if (cfg.task != Task::Denoise) {
    f["sigma_A"] = fmt(cfg.degrade.sigma_A);
    f["kernel_size"] = std::to_string(task_kernel(cfg, clean).size);
  }
  if (cfg.task == Task::SuperResolution) f["d"] = std::to_string(cfg.degrade.d);
  return f;
}

std::string sanitize(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\n' || c == '\r' || c == '"'; }, ';');
  return s;
}

}  // namespace

DegradeOutput cmd_degrade(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  if (cfg.io.input.empty()) throw ConfigError("io.input: required for degrade");
  const Image x = load_image(cfg.io.input);
  log << "sigma_eta " << cfg.degrade.sigma_eta << " (0-255 scale) -> " << fmt_short(cfg.noise_sigma())
      << " on [0,1] pixels\n";
  const Degraded deg = degrade_image(cfg, x);

  ensure_dir(out_dir);
  DegradeOutput out;
  out.observation = out_dir / "observation.png";
  out.ground_truth = out_dir / "ground_truth.png";
  out.sidecar = sidecar_path(out.observation);
  save_image(deg.b, out.observation, cfg.io.bit_depth);
  save_image(x, out.ground_truth, cfg.io.bit_depth);

  Sidecar sc;
  sc.fields = operator_fields(cfg, x.shape());
  sc.fields["seed"] = std::to_string(cfg.seed);
  sc.fields["input"] = cfg.io.input.string();
  sc.fields["input_shape"] = to_string(x.shape());
  sc.fields["observation_shape"] = to_string(deg.b.shape());
  sc.fields["operator"] = deg.op.describe();
  sc.fields["ground_truth"] = out.ground_truth.filename().string();
  if (cfg.task != Task::Denoise) {
    out.kernel = out_dir / "kernel.txt";
    save_kernel(task_kernel(cfg, x.shape()), out.kernel);
    sc.fields["kernel"] = out.kernel.filename().string();
  }
  sc.write(out.sidecar);
  log << "degrade: " << deg.op.describe() << " -> " << out.observation.string() << "\n";
  return out;
}

RestoreOutput cmd_restore(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  const fs::path obs_path = observation_path(cfg, out_dir);
  const Image b = load_image(obs_path);
  const Sidecar sc = Sidecar::read(sidecar_path(obs_path));
  const Shape clean = reconstruction_shape(cfg, b.shape());

  // Refuse to restore with an operator that differs from the one that made b.
  for (const auto& [k, v] : operator_fields(cfg, clean)) {
    const std::string recorded = sc.get(k);
    if (recorded != v)
      throw ConfigError("config/metadata mismatch on '" + k + "': config has " + v + ", observation was made with " +
                        recorded);
  }
  const LinearOperator op = build_operator(cfg, clean);
  if (op.output_shape() != b.shape())
    throw ConfigError("observation shape " + to_string(b.shape()) + " does not match operator output " +
                      to_string(op.output_shape()));

  const Prior prior = build_prior(cfg, clean);
  SolverConfig scfg = cfg.solver;
  scfg.seed = cfg.seed;
  const SolveResult res = reld_solve(b, op, prior, scfg);

  ensure_dir(out_dir);
  RestoreOutput out;
  out.restored = out_dir / "restored.png";
  out.trace = out_dir / "trace.csv";
  save_image(res.x_star, out.restored, cfg.io.bit_depth);
  {
    std::ofstream tf(out.trace);
    if (!tf) throw IoError("cannot write " + out.trace.string());
    res.trace.write_csv(tf);
  }
  out.iterations = static_cast<int>(res.trace.records.size());
  out.final_objective = res.trace.records.empty() ? 0.0 : res.trace.records.back().objective;

  fs::path gt_path = cfg.io.ground_truth;
  if (gt_path.empty()) {
    const auto it = sc.fields.find("ground_truth");
    if (it != sc.fields.end()) gt_path = obs_path.parent_path() / it->second;
  }
  if (!gt_path.empty() && fs::exists(gt_path)) {
    const Image gt = load_image(gt_path);
    if (gt.shape() == res.x_star.shape()) out.psnr = psnr(gt, res.x_star);
  }

  std::ostringstream summary;
  summary << "iterations=" << out.iterations << " final_L=" << fmt_short(out.final_objective)
          << " converged=" << (res.converged ? 1 : 0);
  if (out.psnr) summary << " psnr=" << fmt_short(*out.psnr);
  out.summary = summary.str();
  {
    const fs::path sp = out_dir / "summary.txt";
    std::ofstream sf(sp);
    if (!sf) throw IoError("cannot write " + sp.string());
    sf << out.summary << "\n";
  }
  log << out.summary << "\n";
  return out;
}

// ------------------------------------------------------------ sweep

std::size_t GridSpec::cardinality() const {
  if (axes.empty()) return 0;
  std::size_t n = 1;
  for (const auto& [_, values] : axes) n *= values.size();
  return n;
}

std::vector<std::pair<std::string, std::string>> GridSpec::point(std::size_t index) const {
  std::vector<std::pair<std::string, std::string>> out(axes.size());
  for (std::size_t a = axes.size(); a-- > 0;) {
    const auto& values = axes[a].second;
    out[a] = {axes[a].first, values[index % values.size()]};
    index /= values.size();
  }
  return out;
}

GridSpec parse_grid(const std::string& text) {
  GridSpec grid;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  const auto& keys = config_keys();
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("grid line " + std::to_string(lineno) + ": expected key = values");
    const std::string key = trim(line.substr(0, eq));
    const std::string rhs = trim(line.substr(eq + 1));
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError("grid line " + std::to_string(lineno) + ": unknown config key '" + key + "'");
    for (const auto& [k, _] : grid.axes)
      if (k == key) throw ConfigError("grid line " + std::to_string(lineno) + ": duplicate key '" + key + "'");

    std::vector<std::string> values;
    if (rhs.rfind("linspace(", 0) == 0 && rhs.back() == ')') {
      const auto args = split(rhs.substr(9, rhs.size() - 10), ',');
      if (args.size() != 3) throw ConfigError("grid line " + std::to_string(lineno) + ": linspace(lo, hi, n)");
      const double lo = to_double(key, args[0]);
      const double hi = to_double(key, args[1]);
      const int n = to_int(key, args[2]);
      if (n < 1) throw ConfigError("grid line " + std::to_string(lineno) + ": linspace needs n >= 1");
      for (int i = 0; i < n; ++i) {
        const double v = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        values.push_back(fmt(v));
      }
    } else if (!rhs.empty()) {
      values = split(rhs, ',');
      for (const auto& v : values)
        if (v.empty()) throw ConfigError("grid line " + std::to_string(lineno) + ": empty value");
    }
    grid.axes.emplace_back(key, std::move(values));
  }
  return grid;
}

GridSpec load_grid(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read grid " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_grid(ss.str());
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const GridSpec& grid, int workers) {
  const std::size_t n = grid.cardinality();
  std::vector<SweepRow> rows(n);
  if (n == 0) return rows;
  if (cfg.io.input.empty()) throw ConfigError("io.input: required for sweep");
  const Image gt = load_image(cfg.io.input);

  auto run_point = [&](std::size_t i) {
    SweepRow& row = rows[i];
    const auto point = grid.point(i);
    for (const auto& [_, v] : point) row.values.push_back(v);
    const auto start = std::chrono::steady_clock::now();
    try {
      ExperimentConfig local = cfg;
      for (const auto& [k, v] : point) local.set(k, v);
      local.validate();
      const Degraded deg = degrade_image(local, gt);
      const Prior prior = build_prior(local, gt.shape());
      SolverConfig scfg = local.solver;
      scfg.seed = local.seed;
      const SolveResult res = reld_solve(deg.b, deg.op, prior, scfg);
      row.psnr = psnr(gt, res.x_star);
      if (!res.trace.records.empty()) row.final_objective = res.trace.records.back().objective;
      row.status = "ok";
    } catch (const SolverDivergedError& e) {
      row.status = sanitize(std::string("diverged: ") + e.what());
      if (!e.trace().records.empty()) row.final_objective = e.trace().records.back().objective;
    } catch (const std::exception& e) {
      row.status = sanitize(std::string("error: ") + e.what());
    }
    row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  const std::size_t nthreads = std::clamp<std::size_t>(workers < 1 ? 1 : static_cast<std::size_t>(workers), 1, n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) run_point(i);
  };
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  }
  return rows;
}

void write_sweep_csv(const GridSpec& grid, const std::vector<SweepRow>& rows, std::ostream& out) {
  for (const auto& [k, _] : grid.axes) out << k << ",";
  out << "psnr,final_L,runtime_s,status\n";
  for (const auto& r : rows) {
    for (const auto& v : r.values) out << v << ",";
    out << (r.psnr ? fmt(*r.psnr) : "") << "," << (r.final_objective ? fmt(*r.final_objective) : "") << ","
        << fmt_short(r.runtime_s) << "," << r.status << "\n";
  }
}

// ------------------------------------------------------------ train-toy

TrainOutput cmd_train_toy(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  const Shape shape{cfg.train.size, cfg.train.size, cfg.train.channels};
  ExperimentConfig codec_cfg = cfg;
  codec_cfg.prior.predictor = "zero";
  const Prior prior = build_prior(codec_cfg, shape);

  std::vector<Image> images;
  images.reserve(static_cast<std::size_t>(cfg.train.images));
  for (int i = 0; i < cfg.train.images; ++i)
    images.push_back(piecewise_smooth_phantom(shape, cfg.seed * 1000003ULL + static_cast<std::uint64_t>(i)));
  const auto dataset = make_denoising_dataset(*prior.codec, images, cfg.train.sigma_max, cfg.train.copies,
                                              cfg.seed + 17);

  ToyTrainOptions opt;
  opt.layout.token_size = prior.codec->token_size();
  opt.layout.cond_token_size = prior.codec->token_size();
  opt.layout.hidden = cfg.train.hidden;
  opt.steps = cfg.train.steps;
  opt.batch_size = cfg.train.batch;
  opt.learning_rate = cfg.train.lr;
  opt.seed = cfg.seed;
  log << "train-toy: " << dataset.size() << " pairs, codec " << prior.codec->describe() << ", " << opt.steps
      << " steps\n";
  const ToyTrainResult res = train_toy_score(dataset, prior.schedule, opt);

  ensure_dir(out_dir);
  TrainOutput out;
  out.model = cfg.train.output.empty() ? out_dir / "toynet.txt" : cfg.train.output;
  out.loss_trace = out_dir / "train_loss.csv";
  save_toynet(res.net, out.model);
  {
    std::ofstream lf(out.loss_trace);
    if (!lf) throw IoError("cannot write " + out.loss_trace.string());
    lf << "step,loss\n";
    for (std::size_t i = 0; i < res.loss_trace.size(); ++i) lf << i << "," << fmt(res.loss_trace[i]) << "\n";
  }
  out.initial_loss = res.loss_trace.front();
  out.final_loss = res.loss_trace.back();
  log << "train-toy: loss " << fmt_short(out.initial_loss) << " -> " << fmt_short(out.final_loss) << ", saved "
      << out.model.string() << "\n";
  return out;
}

}  // namespace reld::cli
