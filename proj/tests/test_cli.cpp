// End-to-end tests of the command-line tool, driven through a shell.  The
// binary path is injected by the build as TFE_CLI_PATH.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

namespace {

const std::string kCli = TFE_CLI_PATH;

struct RunOutcome {
  int code = -1;
  std::string out;
  std::string err;
};

RunOutcome run_cli(const std::string& args) {
  const std::string out_path = "/tmp/tfe_cli_stdout.txt";
  const std::string err_path = "/tmp/tfe_cli_stderr.txt";
  const std::string cmd =
      kCli + " " + args + " >" + out_path + " 2>" + err_path;
  const int raw = std::system(cmd.c_str());
  RunOutcome r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  auto slurp = [](const std::string& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

std::string write_config(const char* name, const std::string& text) {
  const std::string path = std::string("/tmp/tfe_cli_") + name + ".ini";
  std::ofstream out(path, std::ios::trunc);
  out << text;
  return path;
}

std::string slurp_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSmallRun = R"(
[mesh]
nx = 12
ny = 12
[model]
type = swe-nonlinear
scheme = midpoint
[physics]
f = 5.0
g = 2.0
[time]
dt = 0.02
steps = 4
[initial]
type = geostrophic-jet
amplitude = 0.02
perturbation = 0.001
)";

struct TempDir {
  std::string path;
  explicit TempDir(const char* name) : path(std::string("/tmp/tfe_cli_") + name) {
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("run: writes the diagnostics table and reports the step count") {
  TempDir dir("run");
  const auto cfg = write_config("run", kSmallRun);
  const auto r = run_cli("run " + cfg + " --output-dir " + dir.path);
  CHECK(r.code == 0);
  CHECK(r.out.find("diagnostics.csv") != std::string::npos);
  CHECK(r.out.find("(4 steps)") != std::string::npos);

  std::ifstream csv(dir.path + "/diagnostics.csv");
  REQUIRE(csv.good());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] ==
        "step,time,energy,enstrophy,mass,total_vorticity,div_l2,newton_iters,"
        "residual_norm");
  CHECK(lines[1].rfind("0,0,", 0) == 0);
  CHECK(lines[5].rfind("4,", 0) == 0);
}

TEST_CASE("run: repeated invocations are byte-identical") {
  TempDir a("det_a"), b("det_b");
  const auto cfg = write_config("det", kSmallRun);
  CHECK(run_cli("run " + cfg + " --output-dir " + a.path).code == 0);
  CHECK(run_cli("run " + cfg + " --output-dir " + b.path).code == 0);
  const auto ca = slurp_file(a.path + "/diagnostics.csv");
  const auto cb = slurp_file(b.path + "/diagnostics.csv");
  CHECK(!ca.empty());
  CHECK(ca == cb);
}

TEST_CASE("run: the environment can supply the output directory") {
  TempDir dir("envdir");
  const auto cfg = write_config("env", kSmallRun);
  const std::string cmd = "TFE_OUTPUT_DIR=" + dir.path + " " + kCli + " run " +
                          cfg + " >/dev/null 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(std::filesystem::exists(dir.path + "/diagnostics.csv"));
}

TEST_CASE("run: config problems exit with the usage code") {
  const auto missing = run_cli("run /nonexistent/experiment.ini");
  CHECK(missing.code == 2);
  CHECK(!missing.err.empty());

  const auto bad = write_config("bad", "[mesh]\nnx = 12\n# ny missing\n");
  const auto r = run_cli("run " + bad);
  CHECK(r.code == 2);
  CHECK(r.err.find("config error") != std::string::npos);

  const auto noargs = run_cli("");
  CHECK(noargs.code == 2);
  const auto nosub = run_cli("frobnicate");
  CHECK(nosub.code == 2);
}

TEST_CASE("verify: clean pass, injected fault fails with a nonzero code") {
  const auto ok = run_cli("verify");
  CHECK(ok.code == 0);
  CHECK(ok.out.find("PASS") != std::string::npos);
  CHECK(ok.out.find("FAIL") == std::string::npos);

  const auto bad = run_cli("verify --inject-div-fault");
  CHECK(bad.code == 1);
  CHECK(bad.out.find("FAIL") != std::string::npos);
}

TEST_CASE("dispersion: stdout table and file output agree") {
  const auto cfg = write_config("disp", R"(
[mesh]
nx = 16
ny = 16
[model]
type = swe-linear
[physics]
f = 3.0
[time]
dt = 0.1
steps = 0
[dispersion]
kx_count = 2
ky_count = 2
kx_min = 0
kx_max = 6.283185307179586
ky_min = 0
ky_max = 6.283185307179586
)");
  const auto r = run_cli("dispersion " + cfg);
  CHECK(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "kx,ky,omega1,omega2,omega3");
  // k = 0 row carries the inertial frequencies -f, 0, +f.
  double kx, ky, w1, w2, w3;
  REQUIRE(std::sscanf(lines[1].c_str(), "%lf,%lf,%lf,%lf,%lf", &kx, &ky, &w1,
                      &w2, &w3) == 5);
  CHECK(w1 == doctest::Approx(-3.0).epsilon(1e-9));
  CHECK(std::abs(w2) <= 1e-9);
  CHECK(w3 == doctest::Approx(3.0).epsilon(1e-9));

  const std::string out_file = "/tmp/tfe_cli_disp_out.csv";
  const auto rf = run_cli("dispersion " + cfg + " -o " + out_file);
  CHECK(rf.code == 0);
  CHECK(slurp_file(out_file) == r.out);
  std::remove(out_file.c_str());
}

TEST_CASE("dump: writes the initial fields of the configured model") {
  TempDir dir("dump");
  const auto cfg = write_config("dump", kSmallRun);
  const auto r = run_cli("dump " + cfg + " --output-dir " + dir.path);
  CHECK(r.code == 0);
  CHECK(std::filesystem::exists(dir.path + "/u_000000.txt"));
  CHECK(std::filesystem::exists(dir.path + "/d_000000.txt"));
  const auto text = slurp_file(dir.path + "/d_000000.txt");
  CHECK(text.rfind("V2 144 12 12 1 1", 0) == 0);
}
