#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

const char* cli_path() {
  const char* path = std::getenv("FBMSTM_CLI");
  REQUIRE_MESSAGE(path != nullptr, "FBMSTM_CLI must point at the CLI binary");
  return path;
}

int run(const std::string& args, const fs::path& cwd) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" + cli_path() + "' " + args +
                          " > stdout.txt 2> stderr.txt";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("fbmstm_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static inline int counter = 0;
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("selftest passes") {
  (void)cli_path();
  TempDir dir;
  CHECK(run("selftest", dir.path) == 0);
}

TEST_CASE("special passthrough prints e") {
  TempDir dir;
  REQUIRE(run("special phi 1 1 1", dir.path) == 0);
  const std::string out = slurp(dir.path / "stdout.txt");
  CHECK(out.substr(0, 17) == "2.718281828459045");
}

TEST_CASE("theory remark-p prints both thresholds") {
  TempDir dir;
  REQUIRE(run("theory remark-p 2", dir.path) == 0);
  const std::string out = slurp(dir.path / "stdout.txt");
  CHECK(out.find("m_p=0.1226264803904") != std::string::npos);
  CHECK(out.find("theta_threshold=0.89076822742") != std::string::npos);
}

TEST_CASE("theory brownian prints the dt threshold") {
  TempDir dir;
  REQUIRE(run("theory brownian --lambda 3 --mu2 2 --theta 0 --dt 0.3", dir.path) == 0);
  const std::string out = slurp(dir.path / "stdout.txt");
  CHECK(out.find("dt_threshold=0.4444444444444444") != std::string::npos);
  CHECK(out.find("guaranteed=StableGuaranteed") != std::string::npos);
}

TEST_CASE("missing hurst exits with the validation code") {
  TempDir dir;
  CHECK(run("sample-fbm --ensemble.n_paths 10", dir.path) == 2);
  const std::string err = slurp(dir.path / "stderr.txt");
  CHECK(err.find("fbm.hurst") != std::string::npos);
}

TEST_CASE("unknown config keys exit with the validation code") {
  TempDir dir;
  std::ofstream(dir.path / "bad.cfg") << "[fbm]\nhurst = 0.7\nnot_a_key = 1\n";
  CHECK(run("sample-fbm --config bad.cfg", dir.path) == 2);
}

TEST_CASE("simulate writes byte-identical outputs on reruns") {
  TempDir dir;
  const std::string args =
      "simulate --model.kind linear --model.lambda -9 --model.sign_convention example41 "
      "--model.mu 2 --model.kappa 2H --model.x0 3 --scheme.theta 0.8 --scheme.dt 0.5 "
      "--scheme.n_steps 64 --fbm.hurst 0.7 --ensemble.n_paths 100 --ensemble.master_seed 7 "
      "--ensemble.record_stride 1";
  REQUIRE(run(args + " --output.directory a", dir.path) == 0);
  REQUIRE(run(args + " --output.directory b", dir.path) == 0);
  CHECK(slurp(dir.path / "a" / "mean_square.csv") == slurp(dir.path / "b" / "mean_square.csv"));
  CHECK(slurp(dir.path / "a" / "mean_square.csv").find("step,t,log_mean_square") == 0);
  CHECK(fs::exists(dir.path / "a" / "exact_mean_square.csv"));
  CHECK(fs::exists(dir.path / "a" / "verdict.txt"));
  CHECK(fs::exists(dir.path / "a" / "plot.gp"));
}

TEST_CASE("config file dump round-trips") {
  TempDir dir;
  std::ofstream(dir.path / "run.cfg") << "[model]\nkind = linear\nlambda = -9\n"
                                         "sign_convention = example41\nkappa = 2H\n"
                                         "[scheme]\ntheta = 0.8\ndt = 0.5\nn_steps = 32\n"
                                         "[fbm]\nhurst = 0.7\n"
                                         "[ensemble]\nn_paths = 50\nmaster_seed = 3\n";
  REQUIRE(run("simulate --config run.cfg --dump-config", dir.path) == 0);
  fs::copy_file(dir.path / "stdout.txt", dir.path / "dumped.cfg");
  REQUIRE(run("simulate --config dumped.cfg --dump-config", dir.path) == 0);
  CHECK(slurp(dir.path / "stdout.txt") == slurp(dir.path / "dumped.cfg"));
}

TEST_CASE("scan reports theorem sources per cell") {
  TempDir dir;
  REQUIRE(run("scan --grid.theta 0.55 --grid.kappa 1.4 --grid.hurst 0.7 --grid.dt 0.5 "
              "--scheme.n_steps 64 --ensemble.n_paths 50 --output.directory s1",
              dir.path) == 0);
  CHECK(slurp(dir.path / "s1" / "scan.csv").find("OpenRegion") != std::string::npos);
  REQUIRE(run("scan --grid.theta 0.6,0.8 --grid.kappa 2 --grid.hurst 0.7 --grid.dt 0.5 "
              "--scheme.n_steps 64 --ensemble.n_paths 50 --output.directory s2",
              dir.path) == 0);
  const std::string csv = slurp(dir.path / "s2" / "scan.csv");
  std::size_t count = 0;
  for (std::size_t pos = csv.find("Theorem1_ii"); pos != std::string::npos;
       pos = csv.find("Theorem1_ii", pos + 1))
    ++count;
  CHECK(count == 2);
}

TEST_CASE("numerical failures exit with code 3") {
  TempDir dir;
  // kappa = 1, theta = 1, lambda = -1, dt = 1 zeroes the theta denominator
  const int rc = run("simulate --model.kind linear --model.lambda -1 --model.kappa 1 "
                     "--scheme.theta 1 --scheme.dt 1 --scheme.n_steps 16 --fbm.hurst 0.7 "
                     "--ensemble.n_paths 10",
                     dir.path);
  CHECK(rc == 3);
}

TEST_CASE("sample-fbm reruns are byte-identical and print the summary") {
  TempDir dir;
  const std::string args =
      "sample-fbm --fbm.hurst 0.75 --scheme.dt 0.5 --scheme.n_steps 64 "
      "--ensemble.n_paths 200 --ensemble.master_seed 5";
  REQUIRE(run(args + " --output.directory a", dir.path) == 0);
  const std::string summary = slurp(dir.path / "stdout.txt");
  CHECK(summary.find("empirical_lag1_correlation=") != std::string::npos);
  CHECK(summary.find("analytic_variance=") != std::string::npos);
  REQUIRE(run(args + " --output.directory b", dir.path) == 0);
  CHECK(slurp(dir.path / "a" / "increments.csv") == slurp(dir.path / "b" / "increments.csv"));
  CHECK(slurp(dir.path / "a" / "path.csv") == slurp(dir.path / "b" / "path.csv"));
}

TEST_CASE("simulate exports sample trajectories on request") {
  TempDir dir;
  REQUIRE(run("simulate --model.kind cubic_drift --model.lambda 3 --model.kappa 2 "
              "--model.mu 4 --model.x0 3 --scheme.theta 1 --scheme.dt 0.5 "
              "--scheme.n_steps 32 --fbm.hurst 0.6 --ensemble.n_paths 20 "
              "--output.directory t --output.trajectories 2",
              dir.path) == 0);
  const std::string csv = slurp(dir.path / "t" / "trajectory_0.csv");
  CHECK(csv.find("step,t,sign,log_abs,value_or_inf") == 0);
  CHECK(fs::exists(dir.path / "t" / "trajectory_1.csv"));
}

TEST_CASE("scan reruns are byte-identical") {
  TempDir dir;
  const std::string args =
      "scan --grid.theta 0.6 --grid.kappa 2H --grid.hurst 0.7 --grid.dt 0.5 "
      "--scheme.n_steps 64 --ensemble.n_paths 40 --ensemble.master_seed 9";
  REQUIRE(run(args + " --output.directory a", dir.path) == 0);
  REQUIRE(run(args + " --output.directory b", dir.path) == 0);
  CHECK(slurp(dir.path / "a" / "scan.csv") == slurp(dir.path / "b" / "scan.csv"));
}

TEST_CASE("scan rejects oversized grids") {
  TempDir dir;
  std::ostringstream thetas;
  for (int i = 0; i < 90; ++i) thetas << (i ? "," : "") << 0.01 * i + 0.1;
  const int rc = run("scan --grid.theta " + thetas.str() +
                         " --grid.hurst 0.6,0.7,0.8 --grid.kappa 1.4,2 --grid.dt 0.25,0.5 "
                         "--scheme.n_steps 32 --ensemble.n_paths 10",
                     dir.path);
  CHECK(rc == 2);
}

}  // TEST_SUITE
