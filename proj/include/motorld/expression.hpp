#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace motorld {

enum class Op { Constant, Pi, Variable, Neg, Sin, Cos, Exp, Log, Add, Sub, Mul, Div, Pow };

/// A variable slot: slow (x) or fast (y) coordinate `axis` in [0, d).
struct Variable {
  enum class Kind { Slow, Fast };
  Kind kind = Kind::Slow;
  int axis = 0;

  bool operator==(const Variable&) const = default;
};

/// Name of a variable for a model of dimension d: "x"/"y" when d == 1,
/// "x1".."y2" when d == 2.
std::string variable_name(Variable v, int dimension);

/// Immutable expression tree with shared structure. Copies are cheap.
class Expression {
 public:
  /// The constant 0.
  Expression();

  static Expression constant(double value);
  static Expression pi();
  static Expression variable(Variable v, int dimension);
  static Expression unary(Op op, Expression arg);
  static Expression binary(Op op, Expression lhs, Expression rhs);
  static Expression power(Expression base, int exponent);

  Op op() const;
  /// Literal value for Constant (and pi for Pi).
  double value() const;
  Variable var() const;
  int exponent() const;
  int dimension() const;
  const Expression& lhs() const;
  const Expression& rhs() const;

  bool is_constant() const { return op() == Op::Constant || op() == Op::Pi; }
  bool is_constant(double v) const { return is_constant() && value() == v; }
  bool depends_on(Variable::Kind kind) const;

  /// Throws EvaluationError when any subexpression is non-finite.
  double evaluate(std::span<const double> slow, std::span<const double> fast) const;

  /// Fully parenthesised text that parses back to the same tree.
  std::string to_string() const;

  /// Structural equality; constants compare by exact value.
  bool operator==(const Expression& other) const;

 private:
  struct Node;
  explicit Expression(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

/// Grammar: literals, pi, declared variables, + - * / ^, sin cos exp log,
/// parentheses. Precedence ^ > unary minus > * / > + -, left associative.
/// The exponent of ^ must be an integer literal (optionally signed or
/// parenthesised). Throws ParseError with the 0-based offending position.
Expression parse_expression(std::string_view source, int dimension);

/// Constant folding: c1 op c2, functions of constants, x*0, x*1, x+0,
/// double negation, and products of constant factors.
Expression fold(const Expression& e);

/// Symbolic first derivative, folded.
Expression differentiate(const Expression& e, Variable v);

}  // namespace motorld
