#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "motorld_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args, const std::string& stdout_name = "stdout.txt") {
  const std::string cmd = std::string(MOTORLD_CLI_PATH) + " " + args + " > " +
                          (workdir() / stdout_name).string() + " 2> " +
                          (workdir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("hamiltonian table") {
  const auto out = workdir() / "h.csv";
  REQUIRE(run("hamiltonian --builtin fig2 --grid 128 --x 0 --p-min -2 --p-max 2 --p-steps 41 --out " +
              out.string()) == 0);
  const auto rows = lines(slurp(out));
  REQUIRE(rows.size() == 42);
  CHECK(rows[0] == "x1,p1,H");
  CHECK(rows[21].rfind("0,0,", 0) == 0);
  CHECK(std::abs(std::stod(rows[21].substr(4))) <= 1e-10);

  REQUIRE(run("hamiltonian --builtin free --grid 16 --p-min 1 --p-max 1 --p-steps 1 --format json") == 0);
  CHECK(slurp(workdir() / "stdout.txt").find("\"H\": 0.5") != std::string::npos);
}

TEST_CASE("verify on the free model passes") {
  CHECK(run("verify --builtin free --grid 64") == 0);
  const auto report = slurp(workdir() / "stdout.txt");
  CHECK(report.find("\"passed\": false") == std::string::npos);
  CHECK(report.find("\"passed\": true") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(run("hamiltonian") == 1);
  CHECK(run("hamiltonian --builtin free --model m.json") == 1);
  CHECK(run("hamiltonian --builtin nope") == 1);
  CHECK(run("hamiltonian --builtin free --x a") == 1);
  CHECK(run("hamiltonian --builtin free --grid 2") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("hamiltonian --model /nonexistent/model.json") == 3);
  CHECK(run("hamiltonian --builtin fig2 --grid 8 --p-min 2 --p-max 2 --p-steps 1") == 2);
  CHECK(slurp(workdir() / "stderr.txt").find("points per axis") != std::string::npos);
  CHECK(run("hamiltonian --builtin free --grid 8 --out /proc/nope/h.csv") == 3);
  CHECK(run("--help") == 0);
}

TEST_CASE("velocity and stationary measure") {
  const auto mu = workdir() / "mu.csv";
  REQUIRE(run("velocity --builtin gradient --grid 16 --x 0.5 --out " + mu.string()) == 0);
  const auto out = lines(slurp(workdir() / "stdout.txt"));
  REQUIRE(out.size() == 2);
  CHECK(out[0] == "x1,v1");
  CHECK(out[1] == "0.5,-1");
  const auto rows = lines(slurp(mu));
  CHECK(rows.size() == 17);
  CHECK(rows[0] == "y1,state,weight");
}

TEST_CASE("action from a path file") {
  const auto path = workdir() / "path.csv";
  std::ofstream(path) << "t,x1\n0,0\n0.5,0.25\n1,0.5\n";
  REQUIRE(run("action --builtin free --grid 16 --path " + path.string()) == 0);
  const auto report = slurp(workdir() / "stdout.txt");
  CHECK(report.find("\"rule\": \"midpoint\"") != std::string::npos);
  CHECK(report.find("\"total_action\": 0.125") != std::string::npos);
  std::ofstream(workdir() / "bad.csv") << "t,x1\n0,0\n0,1\n";
  CHECK(run("action --builtin free --path " + (workdir() / "bad.csv").string()) == 1);
}

TEST_CASE("simulate is byte-reproducible") {
  const auto a = workdir() / "sim_a", b = workdir() / "sim_b";
  const std::string common = "simulate --builtin fig2 --epsilon 0.1 --paths 6 --horizon 0.5 --seed 7 --trajectories 2 --out ";
  REQUIRE(run(common + a.string()) == 0);
  REQUIRE(setenv("MOTORLD_THREADS", "3", 1) == 0);
  REQUIRE(run(common + b.string()) == 0);
  unsetenv("MOTORLD_THREADS");
  for (const char* f : {"trajectory_0.csv", "trajectory_1.csv", "summary.json"}) {
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(lines(slurp(a / "trajectory_0.csv"))[0] == "t,y1,state");
  CHECK(slurp(a / "summary.json").find("\"path_count\": 6") != std::string::npos);
  CHECK(run("simulate --builtin fig2 --epsilon 0.1 --paths 2 --horizon 0.5 --reference lln --out " +
            (workdir() / "sim_ref").string()) == 0);
  CHECK(slurp(workdir() / "sim_ref" / "summary.json").find("\"sup_deviation\": [\n") != std::string::npos);
}
