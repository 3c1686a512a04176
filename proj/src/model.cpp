#include "motorld/model.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "motorld/errors.hpp"

namespace motorld {

namespace {

constexpr double kRateThreshold = 1e-12;
constexpr double kPeriodicityTolerance = 1e-9;
constexpr double kDriftSafety = 1.05;

std::string format_point(std::span<const double> v) {
  std::string s = "(";
  for (std::size_t k = 0; k < v.size(); ++k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v[k]);
    if (k) s += ", ";
    s += buf;
  }
  return s + ")";
}

std::string witness(std::span<const double> x, std::span<const double> y, int state) {
  return "x=" + format_point(x) + " y=" + format_point(y) + " state=" + std::to_string(state + 1);
}

// Calls f(x, y) for every pair of the tensor grids.
template <class F>
void for_each_sample(const std::vector<std::vector<double>>& slow,
                     const std::vector<std::vector<double>>& fast, F&& f) {
  for (const auto& x : slow)
    for (const auto& y : fast) f(std::span<const double>(x), std::span<const double>(y));
}

std::vector<std::vector<double>> tensor(const std::vector<double>& axis, int dimension) {
  std::vector<std::vector<double>> out;
  if (dimension == 1) {
    for (double a : axis) out.push_back({a});
  } else {
    for (double b : axis)
      for (double a : axis) out.push_back({a, b});
  }
  return out;
}

std::vector<double> linspace(double lo, double hi, int n, bool include_end) {
  std::vector<double> v(n);
  const double step = (hi - lo) / (include_end ? n - 1 : n);
  for (int k = 0; k < n; ++k) v[k] = lo + step * k;
  return v;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::vector<std::vector<double>> ValidationGrid::slow_samples(int dimension) {
  return tensor(linspace(slow_min, slow_max, slow_points, true), dimension);
}

std::vector<std::vector<double>> ValidationGrid::fast_samples(int dimension, double period) {
  return tensor(linspace(0.0, period, fast_points, false), dimension);
}

ModelDefinition::ModelDefinition(std::string name, int dimension, double period,
                                 std::vector<Expression> potential,
                                 std::vector<std::vector<Expression>> rates)
    : name_(std::move(name)),
      dimension_(dimension),
      period_(period),
      potential_(std::move(potential)),
      rates_(std::move(rates)) {
  if (dimension_ != 1 && dimension_ != 2)
    throw ModelError("dimension must be 1 or 2, got " + std::to_string(dimension_));
  if (!(period_ > 0.0) || !std::isfinite(period_)) throw ModelError("period must be positive");
  const int J = states();
  if (J < 1) throw ModelError("a model needs at least one state");
  if (static_cast<int>(rates_.size()) != J)
    throw ModelError("rates must be a " + std::to_string(J) + "x" + std::to_string(J) + " matrix");
  for (auto& row : rates_) {
    if (static_cast<int>(row.size()) != J)
      throw ModelError("rates must be a " + std::to_string(J) + "x" + std::to_string(J) +
                       " matrix");
  }
  for (int i = 0; i < J; ++i) rates_[i][i] = Expression();

  drift_.resize(J);
  for (int i = 0; i < J; ++i) {
    for (int k = 0; k < dimension_; ++k) {
      Expression dx = differentiate(potential_[i], {Variable::Kind::Slow, k});
      Expression dy = differentiate(potential_[i], {Variable::Kind::Fast, k});
      drift_[i].push_back(fold(Expression::binary(Op::Add, dx, dy)));
    }
  }

  for (int i = 0; i < J; ++i) {
    slow_dependent_ = slow_dependent_ || potential_[i].depends_on(Variable::Kind::Slow);
    for (int j = 0; j < J; ++j)
      slow_dependent_ = slow_dependent_ || rates_[i][j].depends_on(Variable::Kind::Slow);
  }

  const auto slow = ValidationGrid::slow_samples(dimension_);
  const auto fast = ValidationGrid::fast_samples(dimension_, period_);
  std::vector<double> g(dimension_);
  double gmax = 0.0;
  try {
    for_each_sample(slow, fast, [&](auto x, auto y) {
      for (int i = 0; i < J; ++i) {
        drift(i, x, y, g);
        double norm2 = 0.0;
        for (double c : g) norm2 += c * c;
        gmax = std::max(gmax, std::sqrt(norm2));
        for (int j = 0; j < J; ++j)
          if (j != i) rate_sup_ = std::max(rate_sup_, rate(i, j, x, y));
      }
    });
  } catch (const EvaluationError& e) {
    throw ModelError(std::string("model cannot be evaluated on the validation grid: ") + e.what());
  }
  drift_sup_bound_ = kDriftSafety * gmax;
}

void ModelDefinition::drift(int state, std::span<const double> x, std::span<const double> y,
                            std::span<double> out) const {
  const auto& d = drift_[state];
  for (int k = 0; k < dimension_; ++k) out[k] = d[k].evaluate(x, y);
}

double ModelDefinition::rate(int i, int j, std::span<const double> x,
                             std::span<const double> y) const {
  if (i == j) return 0.0;
  return rates_[i][j].evaluate(x, y);
}

bool strongly_connected(const std::vector<std::vector<bool>>& adjacency) {
  const std::size_t n = adjacency.size();
  if (n <= 1) return true;
  auto reaches_all = [&](bool reversed) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        const bool edge = reversed ? adjacency[v][u] : adjacency[u][v];
        if (edge && !seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
  };
  return reaches_all(false) && reaches_all(true);
}

namespace {

std::vector<CheckReport> invariant_checks(const ModelDefinition& m) {
  const int J = m.states();
  const int d = m.dimension();
  const auto slow = ValidationGrid::slow_samples(d);
  const auto fast = ValidationGrid::fast_samples(d, m.period());
  const std::string context = "model=" + m.name() + " grid=" +
                              std::to_string(ValidationGrid::slow_points) + "x" +
                              std::to_string(ValidationGrid::fast_points) + " per axis";
  std::vector<CheckReport> reports;

  {
    auto start = std::chrono::steady_clock::now();
    CheckReport r{.name = "rates_nonnegative", .tolerance = kRateThreshold, .context = context};
    double lowest = 0.0;
    try {
      for_each_sample(slow, fast, [&](auto x, auto y) {
        for (int i = 0; i < J; ++i)
          for (int j = 0; j < J; ++j) {
            const double v = m.rate(i, j, x, y);
            if (v < lowest) {
              lowest = v;
              r.detail = "rate r_" + std::to_string(i + 1) + std::to_string(j + 1) + " = " +
                         std::to_string(v) + " at " + witness(x, y, i);
            }
          }
      });
      r.passed = lowest >= -kRateThreshold;
    } catch (const EvaluationError& e) {
      r.detail = e.what();
    }
    if (r.passed) r.detail.clear();
    r.measured = {{"min_rate", lowest}};
    r.wall_time = seconds_since(start);
    reports.push_back(std::move(r));
  }

  {
    auto start = std::chrono::steady_clock::now();
    CheckReport r{.name = "periodicity", .tolerance = kPeriodicityTolerance, .context = context};
    double worst = 0.0;
    std::vector<double> shifted(d);
    try {
      for_each_sample(slow, fast, [&](auto x, auto y) {
        for (int k = 0; k < d; ++k) {
          std::copy(y.begin(), y.end(), shifted.begin());
          shifted[k] += m.period();
          auto check = [&](const Expression& e, const std::string& what, int state) {
            const double diff = std::abs(e.evaluate(x, shifted) - e.evaluate(x, y));
            if (diff > worst) {
              worst = diff;
              r.detail = what + " is not periodic in the fast variable (difference " +
                         std::to_string(diff) + ") at " + witness(x, y, state);
            }
          };
          for (int i = 0; i < J; ++i) {
            check(m.potential(i), "potential " + std::to_string(i + 1), i);
            for (int j = 0; j < J; ++j)
              if (j != i)
                check(m.rate_expression(i, j),
                      "rate r_" + std::to_string(i + 1) + std::to_string(j + 1), i);
          }
        }
      });
      r.passed = worst <= kPeriodicityTolerance;
    } catch (const EvaluationError& e) {
      r.detail = e.what();
    }
    if (r.passed) r.detail.clear();
    r.measured = {{"max_period_defect", worst}};
    r.wall_time = seconds_since(start);
    reports.push_back(std::move(r));
  }

  {
    auto start = std::chrono::steady_clock::now();
    CheckReport r{.name = "irreducibility", .tolerance = kRateThreshold, .context = context};
    std::vector<std::vector<double>> peak(J, std::vector<double>(J, 0.0));
    try {
      for_each_sample(slow, fast, [&](auto x, auto y) {
        for (int i = 0; i < J; ++i)
          for (int j = 0; j < J; ++j)
            if (i != j) peak[i][j] = std::max(peak[i][j], m.rate(i, j, x, y));
      });
      std::vector<std::vector<bool>> adjacency(J, std::vector<bool>(J, false));
      int edges = 0;
      for (int i = 0; i < J; ++i)
        for (int j = 0; j < J; ++j)
          if (i != j && peak[i][j] > kRateThreshold) {
            adjacency[i][j] = true;
            ++edges;
          }
      r.passed = strongly_connected(adjacency);
      r.measured = {{"edges", static_cast<double>(edges)}};
      if (!r.passed) {
        r.detail = "reducible switching graph; missing edges:";
        for (int i = 0; i < J; ++i)
          for (int j = 0; j < J; ++j)
            if (i != j && !adjacency[i][j])
              r.detail += " " + std::to_string(i + 1) + "->" + std::to_string(j + 1);
      }
    } catch (const EvaluationError& e) {
      r.detail = e.what();
    }
    r.wall_time = seconds_since(start);
    reports.push_back(std::move(r));
  }
  return reports;
}

CheckReport growth_check(const ModelDefinition& m, double growth_bound) {
  const int J = m.states();
  const int d = m.dimension();
  {
    auto start = std::chrono::steady_clock::now();
    constexpr int kGrowthPoints = 64;
    CheckReport r{.name = "linear_growth",
                  .tolerance = growth_bound,
                  .context = "model=" + m.name() + " slow box [-10,10]^d x one cell, 64 per axis"};
    const auto box = tensor(linspace(-10.0, 10.0, kGrowthPoints, true), d);
    const auto cell = tensor(linspace(0.0, m.period(), kGrowthPoints, false), d);
    std::vector<Expression> grads;
    for (int i = 0; i < J; ++i)
      for (int k = 0; k < d; ++k)
        grads.push_back(differentiate(m.potential(i), {Variable::Kind::Slow, k}));
    double worst = 0.0;
    try {
      for_each_sample(box, cell, [&](auto x, auto y) {
        for (int i = 0; i < J; ++i) {
          double norm2 = 0.0;
          for (int k = 0; k < d; ++k) {
            const double v = grads[i * d + k].evaluate(x, y);
            norm2 += v * v;
          }
          const double norm = std::sqrt(norm2);
          if (norm > worst) {
            worst = norm;
            if (norm > growth_bound)
              r.detail = "|grad_x psi| = " + std::to_string(norm) + " exceeds " +
                         std::to_string(growth_bound) + " at " + witness(x, y, i);
          }
        }
      });
      r.passed = worst <= growth_bound;
    } catch (const EvaluationError& e) {
      r.detail = e.what();
    }
    r.measured = {{"max_grad_x", worst}};
    r.wall_time = seconds_since(start);
    return r;
  }
}

}  // namespace

std::vector<CheckReport> validate_model(const ModelDefinition& m, double growth_bound) {
  auto reports = invariant_checks(m);
  reports.push_back(growth_check(m, growth_bound));
  return reports;
}

std::string substitute_params(std::string_view source,
                              const std::map<std::string, double>& params) {
  std::string out;
  std::size_t i = 0;
  while (i < source.size()) {
    const char c = source[i];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < source.size() &&
             (std::isalnum(static_cast<unsigned char>(source[j])) || source[j] == '_'))
        ++j;
      const std::string ident(source.substr(i, j - i));
      if (auto it = params.find(ident); it != params.end()) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "(%.17g)", it->second);
        out += buf;
      } else {
        out += ident;
      }
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      // Keep numeric literals such as 1e5 intact.
      std::size_t j = i;
      while (j < source.size() &&
             (std::isalnum(static_cast<unsigned char>(source[j])) || source[j] == '.'))
        ++j;
      if (j < source.size() && (source[j] == '+' || source[j] == '-') &&
          (source[j - 1] == 'e' || source[j - 1] == 'E')) {
        ++j;
        while (j < source.size() && std::isdigit(static_cast<unsigned char>(source[j]))) ++j;
      }
      out += source.substr(i, j - i);
      i = j;
    } else {
      out += c;
      ++i;
    }
  }
  return out;
}

namespace {

using nlohmann::json;

Expression parse_field(const json& value, const std::map<std::string, double>& params,
                       int dimension, const std::string& where) {
  if (!value.is_string()) throw ModelError(where + " must be an expression string");
  const std::string text = substitute_params(value.get<std::string>(), params);
  try {
    return parse_expression(text, dimension);
  } catch (const ParseError& e) {
    throw ParseError(where + ": " + e.what(), e.position());
  }
}

ModelDefinition model_from_json(const json& doc) {
  if (!doc.is_object()) throw ModelError("model document must be a JSON object");
  auto require = [&](const char* key) -> const json& {
    if (!doc.contains(key)) throw ModelError(std::string("model document lacks \"") + key + "\"");
    return doc.at(key);
  };
  try {
    const std::string name = doc.value("name", std::string("unnamed"));
    const int dimension = require("dimension").get<int>();
    const int J = require("states").get<int>();
    const double period = doc.value("period", 1.0);
    if (dimension != 1 && dimension != 2) throw ModelError("dimension must be 1 or 2");
    if (J < 1) throw ModelError("states must be at least 1");

    std::map<std::string, double> params;
    if (doc.contains("params")) {
      for (const auto& [key, value] : doc.at("params").items()) params[key] = value.get<double>();
    }

    const json& pot = require("potential");
    if (!pot.is_array() || static_cast<int>(pot.size()) != J)
      throw ModelError("potential must list " + std::to_string(J) + " expressions");
    std::vector<Expression> potential;
    for (int i = 0; i < J; ++i)
      potential.push_back(
          parse_field(pot[i], params, dimension, "potential[" + std::to_string(i) + "]"));

    const json& rates_doc = require("rates");
    if (!rates_doc.is_array() || static_cast<int>(rates_doc.size()) != J)
      throw ModelError("rates must be a " + std::to_string(J) + "x" + std::to_string(J) +
                       " array");
    std::vector<std::vector<Expression>> rates(J);
    for (int i = 0; i < J; ++i) {
      const json& row = rates_doc[i];
      if (!row.is_array() || static_cast<int>(row.size()) != J)
        throw ModelError("rates row " + std::to_string(i) + " must have " + std::to_string(J) +
                         " entries");
      for (int j = 0; j < J; ++j) {
        Expression e = parse_field(row[j], params, dimension,
                                   "rates[" + std::to_string(i) + "][" + std::to_string(j) + "]");
        if (i == j && !fold(e).is_constant(0.0))
          throw ModelError("diagonal rate entries must be \"0\" (rates[" + std::to_string(i) +
                           "][" + std::to_string(i) + "])");
        rates[i].push_back(std::move(e));
      }
    }
    return ModelDefinition(name, dimension, period, std::move(potential), std::move(rates));
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed model document: ") + e.what());
  }
}

// The growth heuristic is advisory and never rejects a model.
void check_invariants(const ModelDefinition& m) {
  for (const auto& r : invariant_checks(m)) {
    if (!r.passed) throw ModelError(r.name + " check failed: " + r.detail);
  }
}

}  // namespace

ModelDefinition load_model(std::string_view path_or_text) {
  std::string text;
  const auto first = path_or_text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && path_or_text[first] == '{') {
    text = std::string(path_or_text);
  } else {
    std::ifstream in{std::string(path_or_text)};
    if (!in) throw IoError("cannot open model file '" + std::string(path_or_text) + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelError(std::string("model file is not valid JSON: ") + e.what());
  }
  ModelDefinition m = model_from_json(doc);
  check_invariants(m);
  return m;
}

std::string serialize_model(const ModelDefinition& m) {
  json doc;
  doc["name"] = m.name();
  doc["dimension"] = m.dimension();
  doc["states"] = m.states();
  doc["period"] = m.period();
  json pot = json::array();
  json rates = json::array();
  for (int i = 0; i < m.states(); ++i) {
    pot.push_back(m.potential(i).to_string());
    json row = json::array();
    for (int j = 0; j < m.states(); ++j)
      row.push_back(i == j ? std::string("0") : m.rate_expression(i, j).to_string());
    rates.push_back(std::move(row));
  }
  doc["potential"] = std::move(pot);
  doc["rates"] = std::move(rates);
  return doc.dump(2);
}

ModelDefinition builtin_model(std::string_view name, const std::map<std::string, double>& params) {
  auto parse1 = [&](const std::string& s) { return parse_expression(substitute_params(s, params), 1); };
  if (name == "free") {
    return ModelDefinition("free", 1, 1.0, {parse1("0"), parse1("0")},
                           {{parse1("0"), parse1("1")}, {parse1("1"), parse1("0")}});
  }
  if (name == "gradient") {
    std::map<std::string, double> p{{"a", 1.0}};
    for (const auto& [k, v] : params) p[k] = v;
    return ModelDefinition("gradient", 1, 1.0,
                           {parse_expression(substitute_params("a*x", p), 1)}, {{parse1("0")}});
  }
  if (name == "fig2") {
    const char* pot[] = {"sin(y)", "cos(y)", "-sin(y)", "-cos(y)"};
    std::vector<Expression> potential;
    for (const char* s : pot) potential.push_back(parse1(s));
    std::vector<std::vector<Expression>> rates(4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) rates[i].push_back(parse1(j == (i + 1) % 4 ? "1" : "0"));
    return ModelDefinition("fig2", 1, 2.0 * std::numbers::pi, std::move(potential),
                           std::move(rates));
  }
  throw ModelError("unknown builtin model '" + std::string(name) +
                   "' (expected free, gradient or fig2)");
}

}  // namespace motorld
