#include "motorld/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <vector>

#include "motorld/errors.hpp"

namespace motorld {

struct Expression::Node {
  Op op = Op::Constant;
  double value = 0.0;
  Variable var{};
  int exponent = 0;
  int dimension = 0;
  Expression a{std::shared_ptr<const Node>()};
  Expression b{std::shared_ptr<const Node>()};
};

namespace {

bool is_unary(Op op) {
  return op == Op::Neg || op == Op::Sin || op == Op::Cos || op == Op::Exp || op == Op::Log;
}


const char* function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    default: return "";
  }
}

char operator_symbol(Op op) {
  switch (op) {
    case Op::Add: return '+';
    case Op::Sub: return '-';
    case Op::Mul: return '*';
    case Op::Div: return '/';
    default: return '?';
  }
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double apply_unary(Op op, double a) {
  switch (op) {
    case Op::Neg: return -a;
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Exp: return std::exp(a);
    case Op::Log: return std::log(a);
    default: return a;
  }
}

double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return a / b;
    default: return a;
  }
}

double integer_power(double base, int n) {
  return std::pow(base, static_cast<double>(n));
}

}  // namespace

std::string variable_name(Variable v, int dimension) {
  std::string name = v.kind == Variable::Kind::Slow ? "x" : "y";
  if (dimension > 1) name += std::to_string(v.axis + 1);
  return name;
}

Expression::Expression() {
  static const auto zero = std::make_shared<const Node>();
  node_ = zero;
}

Expression::Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expression Expression::constant(double value) {
  if (value == 0.0 && !std::signbit(value)) return Expression();
  auto n = std::make_shared<Node>();
  n->op = Op::Constant;
  n->value = value;
  return Expression(std::move(n));
}

Expression Expression::pi() {
  auto n = std::make_shared<Node>();
  n->op = Op::Pi;
  n->value = std::numbers::pi;
  return Expression(std::move(n));
}

Expression Expression::variable(Variable v, int dimension) {
  auto n = std::make_shared<Node>();
  n->op = Op::Variable;
  n->var = v;
  n->dimension = dimension;
  return Expression(std::move(n));
}

Expression Expression::unary(Op op, Expression arg) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(arg);
  return Expression(std::move(n));
}

Expression Expression::binary(Op op, Expression lhs, Expression rhs) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(lhs);
  n->b = std::move(rhs);
  return Expression(std::move(n));
}

Expression Expression::power(Expression base, int exponent) {
  auto n = std::make_shared<Node>();
  n->op = Op::Pow;
  n->a = std::move(base);
  n->exponent = exponent;
  return Expression(std::move(n));
}

Op Expression::op() const { return node_->op; }
double Expression::value() const { return node_->value; }
Variable Expression::var() const { return node_->var; }
int Expression::exponent() const { return node_->exponent; }
int Expression::dimension() const { return node_->dimension; }
const Expression& Expression::lhs() const { return node_->a; }
const Expression& Expression::rhs() const { return node_->b; }

bool Expression::depends_on(Variable::Kind kind) const {
  switch (op()) {
    case Op::Constant:
    case Op::Pi:
      return false;
    case Op::Variable:
      return var().kind == kind;
    case Op::Pow:
      return lhs().depends_on(kind);
    default:
      if (is_unary(op())) return lhs().depends_on(kind);
      return lhs().depends_on(kind) || rhs().depends_on(kind);
  }
}

double Expression::evaluate(std::span<const double> slow, std::span<const double> fast) const {
  double result = 0.0;
  switch (op()) {
    case Op::Constant:
    case Op::Pi:
      return value();
    case Op::Variable: {
      const auto& src = var().kind == Variable::Kind::Slow ? slow : fast;
      if (static_cast<std::size_t>(var().axis) >= src.size())
        throw EvaluationError("variable outside the supplied point", to_string());
      result = src[var().axis];
      break;
    }
    case Op::Pow:
      result = integer_power(lhs().evaluate(slow, fast), exponent());
      break;
    default:
      if (is_unary(op())) {
        result = apply_unary(op(), lhs().evaluate(slow, fast));
      } else {
        const double a = lhs().evaluate(slow, fast);
        const double b = rhs().evaluate(slow, fast);
        result = apply_binary(op(), a, b);
      }
  }
  if (!std::isfinite(result)) throw EvaluationError("non-finite result", to_string());
  return result;
}

std::string Expression::to_string() const {
  switch (op()) {
    case Op::Constant:
      return value() < 0 || std::signbit(value()) ? "(" + format_number(value()) + ")"
                                                  : format_number(value());
    case Op::Pi:
      return "pi";
    case Op::Variable:
      return variable_name(var(), dimension());
    case Op::Neg:
      return "(-" + lhs().to_string() + ")";
    case Op::Pow:
      return "(" + lhs().to_string() + ")^" +
             (exponent() < 0 ? "(" + std::to_string(exponent()) + ")"
                             : std::to_string(exponent()));
    default:
      if (is_unary(op())) return std::string(function_name(op())) + "(" + lhs().to_string() + ")";
      return "(" + lhs().to_string() + " " + operator_symbol(op()) + " " + rhs().to_string() + ")";
  }
}

bool Expression::operator==(const Expression& other) const {
  if (node_ == other.node_) return true;
  if (op() != other.op()) return false;
  switch (op()) {
    case Op::Constant:
      return value() == other.value();
    case Op::Pi:
      return true;
    case Op::Variable:
      return var() == other.var();
    case Op::Pow:
      return exponent() == other.exponent() && lhs() == other.lhs();
    default:
      if (is_unary(op())) return lhs() == other.lhs();
      return lhs() == other.lhs() && rhs() == other.rhs();
  }
}

// ---------------------------------------------------------------------------
// Parser

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok kind = Tok::End;
  std::size_t pos = 0;
  std::string text;
  double number = 0.0;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.pos = i;
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i;
      while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
          j = k;
        }
      }
      t.kind = Tok::Number;
      t.text = std::string(s.substr(i, j - i));
      char* end = nullptr;
      t.number = std::strtod(t.text.c_str(), &end);
      if (end != t.text.c_str() + t.text.size())
        throw ParseError("syntax error: malformed number '" + t.text + "'", i);
      i = j;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      t.kind = Tok::Ident;
      t.text = std::string(s.substr(i, j - i));
      i = j;
    } else {
      switch (c) {
        case '+': t.kind = Tok::Plus; break;
        case '-': t.kind = Tok::Minus; break;
        case '*': t.kind = Tok::Star; break;
        case '/': t.kind = Tok::Slash; break;
        case '^': t.kind = Tok::Caret; break;
        case '(': t.kind = Tok::LParen; break;
        case ')': t.kind = Tok::RParen; break;
        default:
          throw ParseError(std::string("syntax error: unexpected character '") + c + "'", i);
      }
      t.text = std::string(1, c);
      ++i;
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.pos = s.size();
  out.push_back(end);
  return out;
}

class Parser {
 public:
  Parser(std::string_view source, int dimension)
      : tokens_(tokenize(source)), dimension_(dimension) {}

  Expression parse() {
    Expression e = parse_sum();
    if (peek().kind != Tok::End) unexpected();
    return e;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_++]; }

  [[noreturn]] void unexpected() const {
    const Token& t = peek();
    if (t.kind == Tok::End) throw ParseError("syntax error: unexpected end of input", t.pos);
    throw ParseError("syntax error: unexpected '" + t.text + "'", t.pos);
  }

  void expect(Tok kind) {
    if (peek().kind != kind) unexpected();
    ++pos_;
  }

  Expression parse_sum() {
    Expression e = parse_product();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const Op op = next().kind == Tok::Plus ? Op::Add : Op::Sub;
      e = Expression::binary(op, e, parse_product());
    }
    return e;
  }

  Expression parse_product() {
    Expression e = parse_unary();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const Op op = next().kind == Tok::Star ? Op::Mul : Op::Div;
      e = Expression::binary(op, e, parse_unary());
    }
    return e;
  }

  Expression parse_unary() {
    if (peek().kind == Tok::Minus) {
      ++pos_;
      return Expression::unary(Op::Neg, parse_unary());
    }
    if (peek().kind == Tok::Plus) {
      ++pos_;
      return parse_unary();
    }
    return parse_power();
  }

  Expression parse_power() {
    Expression e = parse_primary();
    while (peek().kind == Tok::Caret) {
      ++pos_;
      e = Expression::power(e, parse_exponent());
    }
    return e;
  }

  int parse_exponent() {
    const std::size_t start = peek().pos;
    const bool paren = peek().kind == Tok::LParen;
    if (paren) ++pos_;
    int sign = 1;
    if (peek().kind == Tok::Minus || peek().kind == Tok::Plus) {
      if (next().kind == Tok::Minus) sign = -1;
    }
    if (peek().kind != Tok::Number) throw ParseError("non-integer exponent", start);
    const double v = next().number;
    if (v != std::floor(v) || v > 1024) throw ParseError("non-integer exponent", start);
    if (paren) {
      if (peek().kind != Tok::RParen) throw ParseError("non-integer exponent", start);
      ++pos_;
    }
    return sign * static_cast<int>(v);
  }

  Expression parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number:
        ++pos_;
        return Expression::constant(t.number);
      case Tok::LParen: {
        ++pos_;
        Expression e = parse_sum();
        expect(Tok::RParen);
        return e;
      }
      case Tok::Ident:
        return parse_identifier();
      default:
        unexpected();
    }
  }

  Expression parse_identifier() {
    const Token& t = next();
    static const std::pair<const char*, Op> functions[] = {
        {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp}, {"log", Op::Log}};
    for (const auto& [name, op] : functions) {
      if (t.text == name) {
        expect(Tok::LParen);
        Expression arg = parse_sum();
        expect(Tok::RParen);
        return Expression::unary(op, arg);
      }
    }
    if (t.text == "pi") return Expression::pi();
    if (auto v = lookup_variable(t.text)) return Expression::variable(*v, dimension_);
    throw ParseError("unknown identifier '" + t.text + "'", t.pos);
  }

  std::optional<Variable> lookup_variable(const std::string& name) const {
    for (int axis = 0; axis < dimension_; ++axis) {
      for (auto kind : {Variable::Kind::Slow, Variable::Kind::Fast}) {
        Variable v{kind, axis};
        if (variable_name(v, dimension_) == name) return v;
      }
    }
    return std::nullopt;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int dimension_;
};

}  // namespace

Expression parse_expression(std::string_view source, int dimension) {
  if (dimension != 1 && dimension != 2)
    throw ModelError("dimension must be 1 or 2, got " + std::to_string(dimension));
  return Parser(source, dimension).parse();
}

// ---------------------------------------------------------------------------
// Folding and differentiation

namespace {

// Smart constructors; each assumes its arguments are already folded.

Expression make_const_checked(double v, const Expression& fallback) {
  return std::isfinite(v) ? Expression::constant(v) : fallback;
}

Expression make_neg(const Expression& a) {
  if (a.is_constant()) return Expression::constant(-a.value());
  if (a.op() == Op::Neg) return a.lhs();
  return Expression::unary(Op::Neg, a);
}

Expression make_unary(Op op, const Expression& a) {
  if (op == Op::Neg) return make_neg(a);
  Expression raw = Expression::unary(op, a);
  if (a.is_constant()) return make_const_checked(apply_unary(op, a.value()), raw);
  return raw;
}

Expression make_mul(const Expression& a, const Expression& b);

Expression make_add(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.value() + b.value());
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  if (b.op() == Op::Neg) return Expression::binary(Op::Sub, a, b.lhs());
  return Expression::binary(Op::Add, a, b);
}

Expression make_sub(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.value() - b.value());
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return make_neg(b);
  return Expression::binary(Op::Sub, a, b);
}

Expression make_mul(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.value() * b.value());
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expression();
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (b.is_constant()) return make_mul(b, a);
  if (a.is_constant()) {
    if (a.is_constant(-1.0)) return make_neg(b);
    // c1 * (c2 * e) -> (c1 c2) * e
    if (b.op() == Op::Mul && b.lhs().is_constant())
      return make_mul(Expression::constant(a.value() * b.lhs().value()), b.rhs());
    if (b.op() == Op::Neg) return make_mul(Expression::constant(-a.value()), b.lhs());
  }
  if (a.op() == Op::Neg && b.op() == Op::Neg) return make_mul(a.lhs(), b.lhs());
  if (a.op() == Op::Neg) return make_neg(make_mul(a.lhs(), b));
  if (b.op() == Op::Neg) return make_neg(make_mul(a, b.lhs()));
  return Expression::binary(Op::Mul, a, b);
}

Expression make_div(const Expression& a, const Expression& b) {
  Expression raw = Expression::binary(Op::Div, a, b);
  if (a.is_constant() && b.is_constant()) return make_const_checked(a.value() / b.value(), raw);
  if (a.is_constant(0.0)) return Expression();
  if (b.is_constant(1.0)) return a;
  return raw;
}

Expression make_pow(const Expression& base, int n) {
  if (n == 0) return Expression::constant(1.0);
  if (n == 1) return base;
  Expression raw = Expression::power(base, n);
  if (base.is_constant()) return make_const_checked(integer_power(base.value(), n), raw);
  return raw;
}

Expression make_binary(Op op, const Expression& a, const Expression& b) {
  switch (op) {
    case Op::Add: return make_add(a, b);
    case Op::Sub: return make_sub(a, b);
    case Op::Mul: return make_mul(a, b);
    case Op::Div: return make_div(a, b);
    default: return Expression::binary(op, a, b);
  }
}

}  // namespace

Expression fold(const Expression& e) {
  switch (e.op()) {
    case Op::Constant:
    case Op::Variable:
      return e;
    case Op::Pi:
      return Expression::constant(std::numbers::pi);
    case Op::Pow:
      return make_pow(fold(e.lhs()), e.exponent());
    default:
      if (is_unary(e.op())) return make_unary(e.op(), fold(e.lhs()));
      return make_binary(e.op(), fold(e.lhs()), fold(e.rhs()));
  }
}

namespace {

Expression derive(const Expression& e, Variable v) {
  const Expression& a = e.lhs();
  switch (e.op()) {
    case Op::Constant:
    case Op::Pi:
      return Expression();
    case Op::Variable:
      return e.var() == v ? Expression::constant(1.0) : Expression();
    case Op::Neg:
      return make_neg(derive(a, v));
    case Op::Sin:
      return make_mul(make_unary(Op::Cos, a), derive(a, v));
    case Op::Cos:
      return make_mul(make_neg(make_unary(Op::Sin, a)), derive(a, v));
    case Op::Exp:
      return make_mul(e, derive(a, v));
    case Op::Log:
      return make_div(derive(a, v), a);
    case Op::Add:
      return make_add(derive(a, v), derive(e.rhs(), v));
    case Op::Sub:
      return make_sub(derive(a, v), derive(e.rhs(), v));
    case Op::Mul:
      return make_add(make_mul(derive(a, v), e.rhs()), make_mul(a, derive(e.rhs(), v)));
    case Op::Div: {
      const Expression& b = e.rhs();
      Expression num = make_sub(make_mul(derive(a, v), b), make_mul(a, derive(b, v)));
      return make_div(num, make_pow(b, 2));
    }
    case Op::Pow: {
      const int n = e.exponent();
      return make_mul(Expression::constant(n), make_mul(make_pow(a, n - 1), derive(a, v)));
    }
  }
  return Expression();
}

}  // namespace

Expression differentiate(const Expression& e, Variable v) {
  return derive(fold(e), v);
}

}  // namespace motorld
