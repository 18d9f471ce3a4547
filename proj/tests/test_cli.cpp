#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "experiment.hpp"
#include "reld/image_io.hpp"
#include "reld/phantom.hpp"

using namespace reld;
using namespace reld::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("reld_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    input_ = dir_ / "x.png";
    save_image(piecewise_smooth_phantom({16, 16, 1}, 3), input_, 16);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Cheap identity-prior restoration settings.
  ExperimentConfig base(const std::string& extra = "") const {
    return parse_config("io.input = " + input_.string() +
                        "\nprior.codec = identity\nprior.predictor = zero\n"
                        "solver.p = 1\nsolver.mu0 = 1e-6\nsolver.gamma = 1\nsolver.eta = 1e6\nsolver.k_max = 20\n" +
                        extra);
  }

  fs::path dir_;
  fs::path input_;
  std::ostringstream log_;
};

}  // namespace

TEST(Config, ParsesEveryKey) {
  const auto cfg = parse_config(R"(# comment
task = sr
seed = 12
degrade.sigma_A = 0.7   # trailing comment
degrade.sigma_eta = 35
degrade.d = 4
solver.p = 5
solver.mu0 = 0.5
solver.gamma = 1.05
solver.eta = 2e-3
solver.k_max = 50
solver.rel_tol = 1e-4
solver.inner_steps = 2
prior.codec = identity
prior.predictor = gaussian
prior.gaussian_tau = 0.3
schedule.T = 500
train.hidden = 32, 16
)");
  EXPECT_EQ(cfg.task, Task::SuperResolution);
  EXPECT_EQ(cfg.seed, 12u);
  EXPECT_EQ(cfg.degrade.d, 4);
  EXPECT_DOUBLE_EQ(cfg.noise_sigma(), 35.0 / 255.0);
  EXPECT_EQ(cfg.solver.p, 5);
  EXPECT_EQ(*cfg.solver.rel_tol, 1e-4);
  EXPECT_EQ(cfg.solver.inner_steps, 2);
  EXPECT_EQ(cfg.prior.T, 500);
  EXPECT_EQ(cfg.train.hidden, (std::vector<int>{32, 16}));
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, Defaults) {
  const ExperimentConfig cfg;
  EXPECT_EQ(cfg.solver.p, 10);
  EXPECT_EQ(cfg.solver.mu0, 1.0);
  EXPECT_EQ(cfg.solver.gamma, 1.01);
  EXPECT_EQ(cfg.solver.eta, 1e-3);
  EXPECT_EQ(cfg.solver.k_max, 100);
  EXPECT_EQ(cfg.prior.codec, "block_dct");
}

TEST(Config, RejectsUnknownAndMalformed) {
  EXPECT_THROW(parse_config("solver.mu = 1"), ConfigError);
  EXPECT_THROW(parse_config("solver.p = ten"), ConfigError);
  EXPECT_THROW(parse_config("solver.p = 1.5"), ConfigError);
  EXPECT_THROW(parse_config("task = inpaint"), ConfigError);
  EXPECT_THROW(parse_config("just words"), ConfigError);
  EXPECT_THROW(parse_config("task = sr\ndegrade.d = 1").validate(), ConfigError);
  EXPECT_THROW(parse_config("solver.p = 2000").validate(), ConfigError);
  EXPECT_THROW(parse_config("degrade.kernel_size = 4").validate(), ConfigError);
  try {
    parse_config("\n\nbogus = 1");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Grid, ParsingAndCardinality) {
  const auto g = parse_grid("solver.mu0 = linspace(0.05, 2, 40)\nsolver.gamma = 1, 1.01, 1.05\n");
  EXPECT_EQ(g.cardinality(), 120u);
  EXPECT_EQ(g.axes[0].second.front(), "0.05");
  EXPECT_EQ(g.axes[0].second.back(), "2");
  const auto last = g.point(119);
  EXPECT_EQ(last[0].second, "2");
  EXPECT_EQ(last[1].second, "1.05");
  EXPECT_EQ(g.point(1)[1].second, "1.01");
  EXPECT_EQ(parse_grid("").cardinality(), 0u);
  EXPECT_EQ(parse_grid("solver.p =").cardinality(), 0u);
  EXPECT_THROW(parse_grid("solver.nope = 1"), ConfigError);
  EXPECT_THROW(parse_grid("solver.p = 1\nsolver.p = 2"), ConfigError);
  EXPECT_THROW(parse_grid("solver.p = linspace(1, 2)"), ConfigError);
}

TEST_F(Cli, DegradeDenoiseNoNoiseIsIdentity) {
  const auto cfg = base("task = denoise\ndegrade.sigma_eta = 0\n");
  const auto out = cmd_degrade(cfg, dir_ / "d", log_);
  EXPECT_EQ(load_image(out.observation), load_image(input_));
  EXPECT_EQ(load_image(out.ground_truth), load_image(input_));
  EXPECT_TRUE(out.kernel.empty());
}

TEST_F(Cli, DegradeDeblurSidecarEchoesConfig) {
  const auto cfg = base("task = deblur\ndegrade.sigma_A = 0.7\ndegrade.sigma_eta = 35\nseed = 8\n");
  const auto out = cmd_degrade(cfg, dir_ / "d", log_);
  const auto sc = Sidecar::read(out.sidecar);
  EXPECT_EQ(sc.get("task"), "deblur");
  EXPECT_EQ(sc.get("sigma_A"), "0.7");
  EXPECT_EQ(sc.get("sigma_eta"), "35");
  EXPECT_EQ(sc.get("seed"), "8");
  EXPECT_EQ(sc.get("kernel_size"), "7");
  EXPECT_TRUE(fs::exists(out.kernel));
  EXPECT_NE(log_.str().find("0.137255"), std::string::npos);  // 35/255 logged
}

TEST_F(Cli, DegradeSrDividesDims) {
  const auto cfg = base("task = sr\ndegrade.d = 4\ndegrade.sigma_A = 1\ndegrade.sigma_eta = 5\n");
  const auto out = cmd_degrade(cfg, dir_ / "d", log_);
  EXPECT_EQ(load_image(out.observation).shape(), (Shape{4, 4, 1}));
  EXPECT_EQ(Sidecar::read(out.sidecar).get("d"), "4");
}

TEST_F(Cli, DegradeMissingInputIsIoError) {
  auto cfg = base("task = denoise\n");
  cfg.io.input = dir_ / "nope.png";
  EXPECT_THROW(cmd_degrade(cfg, dir_ / "d", log_), IoError);
}

TEST_F(Cli, RestoreNoiselessIdentity) {
  const auto cfg = base("task = denoise\ndegrade.sigma_eta = 0\n");
  cmd_degrade(cfg, dir_ / "r", log_);
  const auto res = cmd_restore(cfg, dir_ / "r", log_);
  ASSERT_TRUE(res.psnr.has_value());
  EXPECT_GE(*res.psnr, 60.0);
  EXPECT_EQ(lines(slurp(res.trace)).size(), static_cast<std::size_t>(res.iterations) + 1);
  EXPECT_NE(res.summary.find("psnr="), std::string::npos);
}

TEST_F(Cli, RestoreWithoutGroundTruthOmitsPsnr) {
  const auto cfg = base("task = denoise\ndegrade.sigma_eta = 5\n");
  cmd_degrade(cfg, dir_ / "r", log_);
  fs::remove(dir_ / "r" / "ground_truth.png");
  const auto res = cmd_restore(cfg, dir_ / "r", log_);
  EXPECT_FALSE(res.psnr.has_value());
  EXPECT_EQ(res.summary.find("psnr"), std::string::npos);
  EXPECT_EQ(lines(slurp(res.trace)).size(), 21u);
}

TEST_F(Cli, RestoreRefusesMismatchedOperator) {
  const auto made = base("task = deblur\ndegrade.sigma_A = 1.0\n");
  cmd_degrade(made, dir_ / "r", log_);
  const auto other = base("task = deblur\ndegrade.sigma_A = 0.7\n");
  EXPECT_THROW(cmd_restore(other, dir_ / "r", log_), ConfigError);
  const auto wrong_task = base("task = denoise\n");
  EXPECT_THROW(cmd_restore(wrong_task, dir_ / "r", log_), ConfigError);
}

TEST_F(Cli, RestoreSuperResolution) {
  const auto cfg = base("task = sr\ndegrade.d = 2\ndegrade.sigma_eta = 2\nsolver.k_max = 5\n");
  cmd_degrade(cfg, dir_ / "r", log_);
  const auto res = cmd_restore(cfg, dir_ / "r", log_);
  EXPECT_EQ(load_image(res.restored).shape(), (Shape{16, 16, 1}));
  EXPECT_TRUE(res.psnr.has_value());
}

TEST_F(Cli, ArtifactsAreByteReproducible) {
  const auto cfg = base("task = deblur\ndegrade.sigma_eta = 10\nseed = 4\nsolver.k_max = 5\n");
  for (const char* d : {"a", "b"}) {
    cmd_degrade(cfg, dir_ / d, log_);
    cmd_restore(cfg, dir_ / d, log_);
  }
  for (const char* f : {"observation.png", "observation.meta", "ground_truth.png", "kernel.txt", "restored.png",
                        "trace.csv", "summary.txt"})
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
}

TEST_F(Cli, SweepRowsMatchGrid) {
  auto cfg = base("task = deblur\ndegrade.sigma_eta = 10\nsolver.k_max = 2\n");
  const auto grid = parse_grid("solver.mu0 = linspace(0.05, 2, 40)\nsolver.gamma = 1, 1.01, 1.05\n");
  const auto rows = run_sweep(cfg, grid, 2);
  std::ostringstream csv;
  write_sweep_csv(grid, rows, csv);
  const auto ls = lines(csv.str());
  ASSERT_EQ(ls.size(), 121u);
  EXPECT_EQ(ls[0], "solver.mu0,solver.gamma,psnr,final_L,runtime_s,status");
  for (const auto& r : rows) EXPECT_EQ(r.status, "ok");
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto& l = ls[i];
    EXPECT_EQ(std::count(l.begin(), l.end(), ','), 5) << l;
  }
}

TEST_F(Cli, SweepIsDeterministicAcrossWorkerCounts) {
  auto cfg = base("task = deblur\ndegrade.sigma_eta = 10\nsolver.k_max = 3\n");
  const auto grid = parse_grid("solver.p = 1, 5, 10, 15\n");
  const auto a = run_sweep(cfg, grid, 1);
  const auto b = run_sweep(cfg, grid, 3);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(a[i].values, b[i].values);
    EXPECT_EQ(a[i].psnr, b[i].psnr);
    EXPECT_EQ(a[i].final_objective, b[i].final_objective);
  }
}

TEST_F(Cli, SweepRecordsFailures) {
  auto cfg = base("task = denoise\nsolver.k_max = 2\n");
  const auto rows = run_sweep(cfg, parse_grid("solver.mu0 = -1, 1\n"), 1);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NE(rows[0].status, "ok");
  EXPECT_FALSE(rows[0].psnr.has_value());
  EXPECT_EQ(rows[1].status, "ok");
  std::ostringstream csv;
  write_sweep_csv(parse_grid("solver.mu0 = -1, 1\n"), rows, csv);
  EXPECT_EQ(lines(csv.str()).size(), 3u);
}

TEST_F(Cli, EmptyGridIsHeaderOnly) {
  const auto rows = run_sweep(base(), parse_grid("# nothing\n"), 4);
  std::ostringstream csv;
  write_sweep_csv(parse_grid(""), rows, csv);
  EXPECT_EQ(csv.str(), "psnr,final_L,runtime_s,status\n");
}

TEST_F(Cli, TrainToyProducesLoadableModel) {
  auto cfg = parse_config(
      "train.images = 4\ntrain.size = 16\ntrain.steps = 30\ntrain.batch = 8\ntrain.hidden = 8\nprior.block = 8\n"
      "prior.keep = 2\n");
  const auto out = cmd_train_toy(cfg, dir_ / "t", log_);
  EXPECT_TRUE(fs::exists(out.model));
  EXPECT_EQ(lines(slurp(out.loss_trace)).size(), 31u);

  // A prior built from the model works end to end at another image size.
  auto rcfg = base("task = deblur\nprior.codec = block_dct\nprior.block = 8\nprior.keep = 2\n"
                   "prior.predictor = toynet\nsolver.k_max = 3\nsolver.mu0 = 1\nsolver.eta = 1e-3\n");
  rcfg.prior.toynet = out.model;
  cmd_degrade(rcfg, dir_ / "r", log_);
  EXPECT_NO_THROW(cmd_restore(rcfg, dir_ / "r", log_));

  // Wrong schedule or codec is refused.
  auto sched = rcfg;
  sched.prior.T = 500;
  EXPECT_THROW(build_prior(sched, {16, 16, 1}), ConfigError);
  auto codec = rcfg;
  codec.prior.keep = 3;
  EXPECT_THROW(build_prior(codec, {16, 16, 1}), ConfigError);
}

#ifdef RELD_CONFIG_DIR
TEST(Config, ShippedFilesParse) {
  const fs::path dir = RELD_CONFIG_DIR;
  for (const char* f : {"train.cfg", "deblur.cfg", "sr.cfg", "denoise.cfg"}) {
    const auto cfg = load_config(dir / f);
    EXPECT_NO_THROW(cfg.validate()) << f;
  }
  EXPECT_EQ(load_grid(dir / "mu_gamma.grid").cardinality(), 120u);
  EXPECT_EQ(load_grid(dir / "steps.grid").cardinality(), 5u);
}
#endif

TEST(Selftest, Passes) {
  std::ostringstream out;
  EXPECT_TRUE(cmd_selftest(out));
  EXPECT_EQ(out.str().find("FAIL"), std::string::npos) << out.str();
}

#ifdef RELD_CLI_PATH
namespace {
int run_cli(const std::string& args) {
  const std::string cmd = std::string(RELD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}
}  // namespace

TEST_F(Cli, BinaryExitCodes) {
  const auto cfg_path = dir_ / "c.cfg";
  {
    std::ofstream f(cfg_path);
    f << "io.input = " << input_.string() << "\ntask = denoise\nprior.codec = identity\nprior.predictor = zero\n"
      << "solver.k_max = 2\n";
  }
  const std::string out = " --out-dir " + (dir_ / "o").string();
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("degrade"), 1);  // no --config
  EXPECT_EQ(run_cli("degrade --config " + (dir_ / "missing.cfg").string()), 3);
  EXPECT_EQ(run_cli("degrade --config " + cfg_path.string() + out), 0);
  EXPECT_EQ(run_cli("restore --config " + cfg_path.string() + " --seed 5" + out), 0);
  EXPECT_TRUE(fs::exists(dir_ / "o" / "restored.png"));

  const auto grid = dir_ / "g.grid";
  std::ofstream(grid) << "";
  EXPECT_EQ(run_cli("sweep --grid " + grid.string() + " --config " + cfg_path.string() + out), 0);
  EXPECT_EQ(slurp(dir_ / "o" / "sweep.csv"), "psnr,final_L,runtime_s,status\n");

  const auto bad = dir_ / "bad.cfg";
  std::ofstream(bad) << "solver.mu = 1\n";
  EXPECT_EQ(run_cli("restore --config " + bad.string() + out), 1);

  const auto blowup = dir_ / "blowup.cfg";
  std::ofstream(blowup) << slurp(cfg_path) << "solver.p = 1\nsolver.mu0 = 1e100\nsolver.gamma = 1e100\n"
                        << "solver.k_max = 10\n";
  EXPECT_EQ(run_cli("restore --config " + blowup.string() + out), 2);
}
#endif
