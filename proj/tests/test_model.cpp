#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "doctest.h"
#include "motorld/errors.hpp"
#include "motorld/model.hpp"

using namespace motorld;

namespace {

const CheckReport& find(const std::vector<CheckReport>& reports, const std::string& name) {
  auto it = std::find_if(reports.begin(), reports.end(),
                         [&](const CheckReport& r) { return r.name == name; });
  REQUIRE(it != reports.end());
  return *it;
}

std::string two_state(const std::string& r12, const std::string& r21,
                      const std::string& potential = "0") {
  return "{\"name\": \"t\", \"dimension\": 1, \"states\": 2, \"period\": 1, "
         "\"potential\": [\"" + potential + "\", \"0\"], "
         "\"rates\": [[\"0\", \"" + r12 + "\"], [\"" + r21 + "\", \"0\"]]}";
}

}  // namespace

TEST_CASE("builtin models") {
  const auto fig2 = builtin_model("fig2");
  CHECK(fig2.states() == 4);
  CHECK(fig2.dimension() == 1);
  CHECK(fig2.period() == doctest::Approx(2 * std::numbers::pi));
  CHECK_FALSE(fig2.slow_dependent());
  for (const auto& r : validate_model(fig2)) CHECK_MESSAGE(r.passed, r.name << ": " << r.detail);
  // cyclic switching 1->2->3->4->1 at rate 1
  const double x[] = {0.3}, y[] = {1.1};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(fig2.rate(i, j, x, y) == (j == (i + 1) % 4 ? 1.0 : 0.0));
  // fig2 drift is d/dy of the potential; max |g| = 1
  CHECK(fig2.drift_sup_bound() == doctest::Approx(1.05).epsilon(1e-3));

  const auto free = builtin_model("free");
  CHECK(free.drift_sup_bound() == 0.0);
  CHECK(free.rate_sup() == 1.0);

  const auto gradient = builtin_model("gradient", {{"a", 2.5}});
  double g[1];
  gradient.drift(0, x, y, g);
  CHECK(g[0] == doctest::Approx(2.5));
  CHECK(gradient.slow_dependent());

  CHECK_THROWS_AS(builtin_model("bogus"), ModelError);
}

TEST_CASE("load_model rejects broken invariants") {
  CHECK_NOTHROW(load_model(two_state("1", "1")));
  CHECK_THROWS_WITH_AS(load_model(two_state("0", "0")),
                       doctest::Contains("irreducibility"), ModelError);
  CHECK_THROWS_WITH_AS(load_model(two_state("1", "1", "y")),
                       doctest::Contains("periodicity"), ModelError);
  CHECK_THROWS_WITH_AS(load_model(two_state("1", "sin(2*pi*y)")),
                       doctest::Contains("rates_nonnegative"), ModelError);
  CHECK_THROWS_AS(load_model(two_state("1", "1 +")), ParseError);
  CHECK_THROWS_AS(load_model(R"json({"dimension": 1, "states": 1, "potential": ["0"],
                                 "rates": [["1"]]})json"),
                  ModelError);
  CHECK_THROWS_AS(load_model("/nonexistent/model.json"), IoError);
  CHECK_THROWS_AS(load_model("{not json"), ModelError);
}

TEST_CASE("validate_model reports") {
  // r12 = 1, r21 = 0: no edge 2 -> 1
  const auto one_way = builtin_model("free");
  const auto reports = validate_model(ModelDefinition(
      "oneway", 1, 1.0, {Expression(), Expression()},
      {{Expression(), Expression::constant(1.0)}, {Expression(), Expression()}}));
  CHECK_FALSE(find(reports, "irreducibility").passed);
  CHECK(find(reports, "irreducibility").detail.find("2->1") != std::string::npos);

  const auto growth = validate_model(ModelDefinition(
      "exp", 1, 1.0, {parse_expression("exp(x)", 1)}, {{Expression()}}));
  CHECK_FALSE(find(growth, "linear_growth").passed);
  CHECK(find(growth, "periodicity").passed);

  for (const auto& r : validate_model(builtin_model("gradient"))) CHECK(r.passed);
  for (const auto& r : validate_model(one_way)) CHECK(r.passed);
}

TEST_CASE("params are substituted as whole identifiers") {
  CHECK(substitute_params("a*x + ab + exp(a)", {{"a", 2.0}}) == "(2)*x + ab + exp((2))");
  CHECK(substitute_params("1e-3*a", {{"e", 5.0}, {"a", 1.0}}) == "1e-3*(1)");
  const auto m = load_model(R"json({"name": "p", "dimension": 1, "states": 1, "period": 1,
                               "params": {"k": 3}, "potential": ["k*x + sin(2*pi*y)"],
                               "rates": [["0"]]})json");
  const double x[] = {0.0}, y[] = {0.0};
  double g[1];
  m.drift(0, x, y, g);
  CHECK(g[0] == doctest::Approx(3.0 + 2 * std::numbers::pi));
}

TEST_CASE("serialize and load round trip builtins") {
  for (const char* name : {"free", "gradient", "fig2"}) {
    const auto m = builtin_model(name);
    const auto back = load_model(serialize_model(m));
    CHECK(back.name() == m.name());
    CHECK(back.dimension() == m.dimension());
    CHECK(back.states() == m.states());
    CHECK(back.period() == m.period());
    for (int i = 0; i < m.states(); ++i) {
      CHECK(fold(back.potential(i)) == fold(m.potential(i)));
      for (int j = 0; j < m.states(); ++j)
        CHECK(fold(back.rate_expression(i, j)) == fold(m.rate_expression(i, j)));
      for (int k = 0; k < m.dimension(); ++k)
        CHECK(back.drift_expression(i, k) == m.drift_expression(i, k));
    }
  }
}

TEST_CASE("irreducibility does not depend on state labels") {
  std::mt19937_64 rng(7);
  std::bernoulli_distribution edge(0.35);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 5;
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) adj[i][j] = i != j && edge(rng);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<bool>> permuted(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) permuted[perm[i]][perm[j]] = adj[i][j];
    CHECK(strongly_connected(adj) == strongly_connected(permuted));
  }
  CHECK(strongly_connected({{false, true}, {true, false}}));
  CHECK_FALSE(strongly_connected({{false, true}, {false, false}}));
}

TEST_CASE("two-dimensional model") {
  const auto m = load_model(R"json({"name": "two", "dimension": 2, "states": 2, "period": 1,
      "potential": ["0.5*x1^2 + sin(2*pi*y1)*cos(2*pi*y2)", "x2"],
      "rates": [["0", "1 + 0.5*cos(2*pi*y2)"], ["2", "0"]]})json");
  CHECK(m.dimension() == 2);
  const double x[] = {1.0, -1.0}, y[] = {0.0, 0.25};
  double g[2];
  m.drift(1, x, y, g);
  CHECK(g[0] == doctest::Approx(0.0));
  CHECK(g[1] == doctest::Approx(1.0));
  CHECK(m.rate(0, 1, x, y) == doctest::Approx(1.0));
}
