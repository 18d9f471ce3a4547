#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "experiment.hpp"

namespace {

using namespace reld;
using namespace reld::cli;

enum Exit { kOk = 0, kUsage = 1, kNumerical = 2, kIo = 3 };

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string out_dir = ".";
  std::string grid;
};

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  return cfg;
}

int run(const std::string& cmd, const Flags& f) {
  if (cmd == "selftest") return cmd_selftest(std::cout) ? kOk : kNumerical;
  if (f.config.empty()) throw ConfigError(cmd + ": --config is required");
  const ExperimentConfig cfg = resolve(f);
  if (cmd == "degrade") {
    cmd_degrade(cfg, f.out_dir, std::cerr);
  } else if (cmd == "restore") {
    cmd_restore(cfg, f.out_dir, std::cout);
  } else if (cmd == "sweep") {
    if (f.grid.empty()) throw ConfigError("sweep: --grid is required");
    cfg.validate();
    const GridSpec grid = load_grid(f.grid);
    const auto rows = run_sweep(cfg, grid, f.workers);
    std::filesystem::create_directories(f.out_dir);
    const auto path = std::filesystem::path(f.out_dir) / "sweep.csv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_sweep_csv(grid, rows, out);
    std::size_t failed = 0;
    for (const auto& r : rows) failed += r.status != "ok";
    std::cerr << "sweep: " << rows.size() << " points, " << failed << " failed -> " << path.string() << "\n";
  } else if (cmd == "train-toy") {
    cmd_train_toy(cfg, f.out_dir, std::cerr);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent diffusion prior image restoration"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config, "Experiment config file (key = value)");
  app.add_option("--seed", f.seed, "Override the config seed");
  app.add_option("--workers", f.workers, "Concurrent sweep points")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", f.out_dir, "Output directory");

  std::string chosen;
  auto add = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->callback([&chosen, name] { chosen = name; });
    sub->fallthrough();
    return sub;
  };
  add("degrade", "Apply the configured degradation to io.input");
  add("restore", "Restore an observation written by degrade");
  add("sweep", "Run a parameter grid")->add_option("--grid", f.grid, "Grid file")->required();
  add("train-toy", "Train a ToyNet noise predictor on synthetic phantoms");
  add("selftest", "Run built-in consistency checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    return run(chosen, f);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
}
