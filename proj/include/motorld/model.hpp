#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motorld/expression.hpp"
#include "motorld/report.hpp"

namespace motorld {

/// A switching diffusion: J potentials psi^i(x, y) periodic in the fast
/// variable y with period P, and a J x J matrix of switching rates r_ij(x, y).
///
/// The drift field of state i is the total gradient
///   g^i(x, y) = grad_x psi^i(x, y) + grad_y psi^i(x, y),
/// derived symbolically at construction. States are 0-based here; file
/// formats and the command line use 1-based labels.
///
/// Immutable after construction, so one instance can be shared by any
/// number of threads.
class ModelDefinition {
 public:
  ModelDefinition(std::string name, int dimension, double period,
                  std::vector<Expression> potential,
                  std::vector<std::vector<Expression>> rates);

  const std::string& name() const { return name_; }
  int dimension() const { return dimension_; }
  int states() const { return static_cast<int>(potential_.size()); }
  double period() const { return period_; }

  const Expression& potential(int i) const { return potential_[i]; }
  const Expression& rate_expression(int i, int j) const { return rates_[i][j]; }
  const Expression& drift_expression(int i, int axis) const { return drift_[i][axis]; }

  /// 1.05 times the largest |g^i| seen on the validation grid.
  double drift_sup_bound() const { return drift_sup_bound_; }
  /// Largest off-diagonal rate seen on the validation grid.
  double rate_sup() const { return rate_sup_; }
  /// False when no potential or rate mentions a slow variable; the cell
  /// problem is then the same at every x.
  bool slow_dependent() const { return slow_dependent_; }

  void drift(int state, std::span<const double> x, std::span<const double> y,
             std::span<double> out) const;
  /// r_ij(x, y) for i != j; zero on the diagonal.
  double rate(int i, int j, std::span<const double> x, std::span<const double> y) const;

 private:
  std::string name_;
  int dimension_;
  double period_;
  std::vector<Expression> potential_;
  std::vector<std::vector<Expression>> rates_;
  std::vector<std::vector<Expression>> drift_;
  double drift_sup_bound_ = 0.0;
  double rate_sup_ = 0.0;
  bool slow_dependent_ = false;
};

/// Points used for all sampled model checks: 17 slow points per coordinate
/// over [-2, 2] and 33 fast points per coordinate over [0, P).
struct ValidationGrid {
  static constexpr int slow_points = 17;
  static constexpr int fast_points = 33;
  static constexpr double slow_min = -2.0;
  static constexpr double slow_max = 2.0;

  static std::vector<std::vector<double>> slow_samples(int dimension);
  static std::vector<std::vector<double>> fast_samples(int dimension, double period);
};

/// Parse a model document (JSON text or a path to a JSON file), validate it
/// and derive the drift. Throws ModelError naming the violated invariant
/// and a witness point, IoError when the file cannot be read.
ModelDefinition load_model(std::string_view path_or_text);

/// JSON document that load_model reads back to an equal model.
std::string serialize_model(const ModelDefinition& model);

/// Nonnegativity, periodicity, irreducibility and a linear-growth
/// heuristic (|grad_x psi^i| <= growth_bound on [-10, 10]^d x one cell).
std::vector<CheckReport> validate_model(const ModelDefinition& model,
                                        double growth_bound = 1e3);

/// "free", "gradient" (parameter "a", default 1) or "fig2".
ModelDefinition builtin_model(std::string_view name,
                              const std::map<std::string, double>& params = {});

/// Replace whole identifiers that name a parameter by its parenthesised value.
std::string substitute_params(std::string_view source,
                              const std::map<std::string, double>& params);

/// Strong connectivity of the directed graph given by an adjacency matrix.
bool strongly_connected(const std::vector<std::vector<bool>>& adjacency);

}  // namespace motorld
