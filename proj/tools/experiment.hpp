#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reld/errors.hpp"
#include "reld/image.hpp"
#include "reld/linop.hpp"
#include "reld/prior.hpp"
#include "reld/solver.hpp"

namespace reld::cli {

/// Malformed or inconsistent experiment configuration (exit code 1).
class ConfigError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

enum class Task { Denoise, Deblur, SuperResolution };

std::string to_string(Task t);

struct DegradeSettings {
  double sigma_A = 1.0;
  double sigma_eta = 0.0;  // 0-255 scale
  int d = 2;
  int kernel_size = 0;  // 0 = smallest odd >= 6 sigma_A + 1
};

struct PriorSettings {
  std::string codec = "block_dct";  // identity | block_dct
  int block = 8;
  int keep = 4;
  std::string predictor = "toynet";  // zero | gaussian | toynet
  std::filesystem::path toynet;
  double gaussian_mean = 0.5;
  double gaussian_tau = 0.0;
  int T = 1000;
  double beta_start = 1e-4;
  double beta_end = 2e-2;
};

struct IoSettings {
  std::filesystem::path input;
  std::filesystem::path ground_truth;
  std::filesystem::path observation;
  int bit_depth = 16;
};

struct TrainSettings {
  int images = 200;
  int size = 64;
  int channels = 1;
  int copies = 4;
  double sigma_max = 0.25;
  int steps = 3000;
  int batch = 128;
  double lr = 2e-3;
  std::vector<int> hidden{64, 64};
  std::filesystem::path output;
};

/// Flat `section.key = value` text; '#' starts a comment; unknown keys throw.
struct ExperimentConfig {
  Task task = Task::Denoise;
  std::uint64_t seed = 0;
  DegradeSettings degrade;
  SolverConfig solver;
  PriorSettings prior;
  IoSettings io;
  TrainSettings train;

  /// Sets one key from its textual value. Throws ConfigError.
  void set(const std::string& key, const std::string& value);

  /// Cross-field checks (task-specific fields, numeric ranges).
  void validate() const;

  /// sigma_eta converted to the [0,1] pixel scale.
  double noise_sigma() const { return degrade.sigma_eta / 255.0; }
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key accepted by ExperimentConfig::set, in documentation order.
const std::vector<std::string>& config_keys();

// ------------------------------------------------------------ operators

/// Degradation operator for the task acting on a clean image of `clean_shape`.
LinearOperator build_operator(const ExperimentConfig& cfg, const Shape& clean_shape);

/// Clean-image shape for an observation of `observed` under the task.
Shape reconstruction_shape(const ExperimentConfig& cfg, const Shape& observed);

/// Prior bundle for reconstructions of `shape`. Loads the ToyNet file if the
/// predictor is "toynet" and checks it was trained on the same schedule.
Prior build_prior(const ExperimentConfig& cfg, const Shape& shape);

// ------------------------------------------------------------ sidecar metadata

/// Key-value record written next to a degraded observation.
struct Sidecar {
  std::map<std::string, std::string> fields;

  std::string get(const std::string& key) const;
  void write(const std::filesystem::path& path) const;
  static Sidecar read(const std::filesystem::path& path);
};

// ------------------------------------------------------------ commands

struct DegradeOutput {
  std::filesystem::path observation;
  std::filesystem::path ground_truth;
  std::filesystem::path sidecar;
  std::filesystem::path kernel;  // empty for denoising
};

/// b = A x + eta from io.input; writes observation.png, ground_truth.png,
/// observation.meta (and kernel.txt for blur tasks) into out_dir.
DegradeOutput cmd_degrade(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

struct RestoreOutput {
  std::filesystem::path restored;
  std::filesystem::path trace;
  std::optional<double> psnr;
  int iterations = 0;
  double final_objective = 0.0;
  std::string summary;
};

/// Runs the solver on the observation (io.observation or out_dir/observation.png)
/// and writes restored.png, trace.csv and summary.txt. Refuses (ConfigError)
/// when the sidecar disagrees with the config.
RestoreOutput cmd_restore(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// Cartesian parameter grid. Each axis is a config key and its values.
struct GridSpec {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;

  std::size_t cardinality() const;
  /// Point `index` in row-major order (last axis fastest).
  std::vector<std::pair<std::string, std::string>> point(std::size_t index) const;
};

/// Lines `key = v1, v2, ...` or `key = linspace(lo, hi, n)`.
GridSpec parse_grid(const std::string& text);
GridSpec load_grid(const std::filesystem::path& path);

struct SweepRow {
  std::vector<std::string> values;  // one per grid axis
  std::optional<double> psnr;
  std::optional<double> final_objective;
  double runtime_s = 0.0;
  std::string status;  // "ok" or an error description
};

/// One degrade+restore per grid point on io.input, run on up to `workers`
/// threads. Rows come back in grid order; failures are recorded, not thrown.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const GridSpec& grid, int workers);

/// CSV: grid keys..., psnr, final_L, runtime_s, status.
void write_sweep_csv(const GridSpec& grid, const std::vector<SweepRow>& rows, std::ostream& out);

struct TrainOutput {
  std::filesystem::path model;
  std::filesystem::path loss_trace;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Trains a ToyNet on synthetic phantoms encoded with the configured codec.
TrainOutput cmd_train_toy(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// Built-in consistency checks; prints one PASS/FAIL line each. Returns
/// true when all pass.
bool cmd_selftest(std::ostream& out);

}  // namespace reld::cli
