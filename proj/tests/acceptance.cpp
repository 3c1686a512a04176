// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "motorld/action.hpp"
#include "motorld/spectral.hpp"
#include "motorld/verify.hpp"

using namespace motorld;
namespace fs = std::filesystem;
using V = std::vector<double>;

namespace {

struct Outcome {
  bool passed = false;
  std::string summary;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

const std::vector<std::string> kBuiltins{"free", "gradient", "fig2"};
const V kSlow{-2.0, -1.0, 0.0, 1.0, 2.0};

Outcome closed_form() {
  double err = 0.0;
  const auto free = builtin_model("free");
  const auto grad = builtin_model("gradient");
  CellSolver fs_(free, CellGrid::for_model(free, 64));
  CellSolver gs(grad, CellGrid::for_model(grad, 64));
  for (double x : {-1.0, 0.3})
    for (double p : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
      err = std::max(err, std::abs(fs_.hamiltonian(V{x}, V{p}) - 0.5 * p * p));
      err = std::max(err, std::abs(gs.hamiltonian(V{x}, V{p}) - (0.5 * p * p - p)));
    }
  return {err <= 1e-8, "max error " + sci(err)};
}

Outcome zero_momentum() {
  double worst = 0.0;
  for (const auto& name : kBuiltins) {
    const auto m = builtin_model(name);
    CellSolver s(m, CellGrid::for_model(m));
    for (double x : kSlow) worst = std::max(worst, std::abs(s.hamiltonian(V{x}, V{0.0})));
  }
  return {worst <= 1e-10, "max |H(x,0)| " + sci(worst)};
}

Outcome oracle() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double dl = 0.0, dv = 0.0;
  std::size_t largest = 0;
  const std::vector<int> points{128, 256, 64};
  for (std::size_t k = 0; k < kBuiltins.size(); ++k) {
    const auto m = builtin_model(kBuiltins[k]);
    const auto grid = CellGrid::for_model(m, points[k]);
    largest = std::max(largest, grid.size());
    for (int i = 0; i < 20; ++i) {
      const double x = u(rng), p = u(rng);
      const auto op = assemble_cell_operator(m, grid, V{x}, V{p});
      const auto a = principal_eigenpair(op);
      const auto b = dense_eigen_oracle(op);
      dl = std::max(dl, std::abs(a.lambda - b.lambda));
      dv = std::max(dv, (a.right - b.right).lpNorm<Eigen::Infinity>());
      dv = std::max(dv, (a.left / a.left.maxCoeff() - b.left / b.left.maxCoeff()).lpNorm<Eigen::Infinity>());
    }
  }
  return {dl <= 1e-8 && dv <= 1e-6 && largest <= 512,
          "max |dlambda| " + sci(dl) + ", max vector distance " + sci(dv) + ", n <= " +
              std::to_string(largest)};
}

Outcome convexity() {
  const auto m = builtin_model("fig2");
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<std::pair<double, double>> pairs;
  for (int k = 0; k < 100; ++k) pairs.emplace_back(u(rng), u(rng));
  std::vector<double> violation;
  double worst_fine = 0.0;
  for (int n : {32, 64, 128}) {
    CellSolver s(m, CellGrid::for_model(m, n));
    double viol = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const V x{kSlow[k % kSlow.size()]};
      const auto [p1, p2] = pairs[k];
      const double hm = s.hamiltonian(x, V{0.5 * (p1 + p2)});
      const double defect = hm - 0.5 * (s.hamiltonian(x, V{p1}) + s.hamiltonian(x, V{p2}));
      viol = std::max(viol, defect / (1.0 + std::abs(hm)));
      if (n == 128) worst_fine = std::max(worst_fine, defect / (1.0 + std::abs(hm)));
    }
    violation.push_back(viol);
  }
  const bool decreasing = violation[1] <= std::max(violation[0], 1e-12) &&
                          violation[2] <= std::max(violation[1], 1e-12);
  return {worst_fine <= 5e-4 && decreasing,
          "relative defect at N=32/64/128: " + sci(violation[0]) + " / " + sci(violation[1]) + " / " +
              sci(violation[2])};
}

Outcome coercivity() {
  double margin = INFINITY;
  for (const char* name : {"fig2", "gradient"}) {
    const auto m = builtin_model(name);
    CellSolver s(m, CellGrid::for_model(m));
    for (double x : kSlow) {
      const auto op = s.assemble(V{x}, V{0.0});
      const double g = op.drift.cwiseAbs().maxCoeff();
      for (double r : {2.0, 3.0, 4.0})
        for (double p : {-r, r}) margin = std::min(margin, s.hamiltonian(V{x}, V{p}) - (r * r / 4 - g * g));
    }
  }
  return {margin >= -1e-3, "min H - (|p|^2/4 - G^2) = " + sci(margin)};
}

Outcome donsker_varadhan() {
  const auto m = builtin_model("fig2");
  const CellGrid g(1, 16, m.period(), 4);
  double gap = 0.0, excess = -INFINITY, stationary = 0.0;
  for (double p : {-1.0, 0.5, 1.0}) {
    const auto op = assemble_cell_operator(m, g, V{0.0}, V{p});
    const auto pair = principal_eigenpair(op);
    Eigen::VectorXd w = pair.left.cwiseProduct(pair.right);
    w /= w.sum();
    gap = std::max(gap, std::abs(pair.lambda - (w.dot(op.potential) - dv_functional(op, CellMeasure{w}))));
    stationary = std::max(stationary, std::abs(dv_functional(op, generator_stationary_measure(op))));
  }
  std::mt19937_64 rng(6);
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 50; ++k) {
    const auto op = assemble_cell_operator(m, g, V{0.0}, V{u(rng)});
    const double lambda = principal_eigenpair(op, {.compute_left = false}).lambda;
    Eigen::VectorXd w(op.matrix.rows());
    for (Eigen::Index z = 0; z < w.size(); ++z) w[z] = e(rng);
    w /= w.sum();
    excess = std::max(excess, w.dot(op.potential) - dv_functional(op, CellMeasure{w}) - lambda);
  }
  return {gap <= 1e-4 && excess <= 1e-4 && stationary <= 1e-6,
          "optimizer gap " + sci(gap) + ", max bound excess " + sci(excess) + ", I(stationary) " +
              sci(stationary)};
}

Outcome velocity() {
  double diff = 0.0, rel = 0.0;
  for (const auto& name : kBuiltins) {
    const auto m = builtin_model(name);
    CellSolver s(m, CellGrid::for_model(m));
    for (double x : kSlow) {
      diff = std::max(diff, std::abs(s.hamiltonian_grad_p(V{x}, V{0.0})[0] - s.lln_velocity(V{x})[0]));
      for (double p : {-1.0, 0.5, 1.5}) {
        const double fd = (s.hamiltonian(V{x}, V{p + 1e-4}) - s.hamiltonian(V{x}, V{p - 1e-4})) / 2e-4;
        const double hf = s.hamiltonian_grad_p(V{x}, V{p})[0];
        rel = std::max(rel, std::abs(hf - fd) / std::max(1.0, std::abs(fd)));
      }
    }
  }
  return {diff <= 1e-6 && rel <= 1e-4,
          "max |dH/dp(x,0) - v*| " + sci(diff) + ", max HF vs FD relative error " + sci(rel)};
}

Outcome legendre_duality() {
  const auto free = builtin_model("free");
  CellSolver fs_(free, CellGrid::for_model(free, 64));
  double free_err = 0.0;
  for (double v : {-1.5, -0.5, 0.0, 0.7, 2.0})
    free_err = std::max(free_err, std::abs(legendre(fs_, V{0.0}, V{v}).value - 0.5 * v * v));

  const auto fig2 = builtin_model("fig2");
  CellSolver s(fig2, CellGrid::for_model(fig2, 64));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ux(-2, 2), uv(-1, 1), up(-3, 3);
  double fenchel = -INFINITY;
  for (int k = 0; k < 200; ++k) {
    const double x = ux(rng), v = uv(rng), p = up(rng);
    fenchel = std::max(fenchel, p * v - legendre(s, V{x}, V{v}).value - s.hamiltonian(V{x}, V{p}));
  }
  double at_vstar = 0.0;
  for (const auto& name : kBuiltins) {
    const auto m = builtin_model(name);
    CellSolver ms(m, CellGrid::for_model(m, 64));
    for (double x : kSlow) at_vstar = std::max(at_vstar, std::abs(legendre(ms, V{x}, ms.lln_velocity(V{x})).value));
  }
  return {free_err <= 1e-6 && fenchel <= 1e-6 && at_vstar <= 1e-6,
          "free L error " + sci(free_err) + ", max Fenchel excess " + sci(fenchel) + ", max L(x,v*) " +
              sci(at_vstar)};
}

Outcome lln() {
  const auto m = builtin_model("fig2");
  const auto r = lln_experiment(m, CellGrid::for_model(m), {0.1, 0.05, 0.02}, 200, 5.0, 2024);
  std::string s;
  for (const auto& [k, v] : r.report.measured) s += k + "=" + sci(v) + " ";
  return {r.report.passed && r.sign_agreement >= 0.9, s + (r.report.detail.empty() ? "" : r.report.detail)};
}

Outcome containment() {
  bool ok = true;
  double free_sup = 0.0;
  for (const auto& name : kBuiltins) {
    const auto r = check_containment(builtin_model(name));
    ok = ok && r.passed;
    if (name == "free") free_sup = r.measured.front().second;
  }
  return {ok && std::abs(free_sup - 0.125) <= 1e-6, "free-model sup " + sci(free_sup)};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MOTORLD_CLI_PATH) + " " + args;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome reproducibility() {
  const fs::path root = fs::temp_directory_path() / "motorld_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream path(root / "path.csv");
    path << "t,x1\n0,0\n0.5,-0.1\n1,-0.05\n1.5,-0.3\n";
  }
  struct Case {
    std::string name;
    std::string args;  // {dir} is replaced by the run directory
    std::vector<std::string> files;
  };
  const std::vector<Case> cases{
      {"simulate", "simulate --builtin fig2 --epsilon 0.02 --paths 100 --horizon 5 --seed 7 --out {dir}",
       {"trajectory_0.csv", "trajectory_4.csv", "summary.json"}},
      {"hamiltonian",
       "hamiltonian --builtin fig2 --grid 128 --x 0 --p-min -2 --p-max 2 --p-steps 41 --out {dir}/h.csv",
       {"h.csv"}},
      {"velocity", "velocity --builtin fig2 --x 0 --out {dir}/mu.csv > {dir}/v.csv", {"mu.csv", "v.csv"}},
      {"action", "action --builtin fig2 --grid 64 --path " + (root / "path.csv").string() + " --out {dir}/a.json",
       {"a.json"}},
      {"verify", "verify --builtin free --grid 64 --out {dir}/report.json", {"report.json"}},
  };
  std::string summary;
  bool ok = true;
  for (const auto& c : cases) {
    std::vector<fs::path> dirs;
    for (const char* run : {"a", "b"}) {
      const fs::path dir = root / (c.name + "_" + run);
      fs::create_directories(dir);
      std::string args = c.args;
      for (std::size_t at; (at = args.find("{dir}")) != std::string::npos;) args.replace(at, 5, dir.string());
      const int code = run_cli(args + " 2> " + (dir / "stderr.txt").string());
      if (code != 0) {
        ok = false;
        summary += c.name + " exit " + std::to_string(code) + "; ";
      }
      dirs.push_back(dir);
    }
    bool same = true;
    for (const auto& f : c.files)
      same = same && fs::exists(dirs[0] / f) && slurp(dirs[0] / f) == slurp(dirs[1] / f) &&
             !slurp(dirs[0] / f).empty();
    ok = ok && same;
    summary += c.name + (same ? " identical; " : " DIFFERS; ");
  }
  fs::remove_all(root);
  return {ok, summary};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "closed-form Hamiltonians", 1, closed_form},
      {2, "H(x,0) = 0", 1, zero_momentum},
      {3, "power iteration vs dense oracle", 30, oracle},
      {4, "midpoint convexity", 120, convexity},
      {5, "coercivity bound", 60, coercivity},
      {6, "Donsker-Varadhan consistency", 120, donsker_varadhan},
      {7, "velocity consistency", 60, velocity},
      {8, "Legendre duality", 60, legendre_duality},
      {9, "LLN concentration", 600, lln},
      {10, "containment", 10, containment},
      {11, "CLI reproducibility", 300, reproducibility},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.passed && in_time;
    failed += !pass;
    std::cout << "criterion " << c.id << " (" << c.title << "): " << (pass ? "PASS" : "FAIL") << "  "
              << o.summary << " [" << sci(secs) << " s, limit " << c.limit_seconds << " s"
              << (in_time ? "" : ", TOO SLOW") << "]" << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criterion/criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
