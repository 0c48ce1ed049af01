#pragma once

#include <cctype>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gcv/error.hpp"
#include "gcv/linalg.hpp"
#include "gcv/rational.hpp"

namespace gcv {

// ---------------------------------------------------------------------------
// Expression trees
// ---------------------------------------------------------------------------

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable node of a polynomial expression tree. Coefficients are exact
/// rationals; they are converted to the evaluation ring only at evaluation
/// time, so numeric and Puiseux evaluation share one source of truth.
class Expr {
 public:
  enum class Kind { Variable, Constant, Sum, Difference, Product, Negation, Power };

  Kind kind;
  int var = -1;        // Variable
  Rational value;      // Constant
  ExprPtr lhs, rhs;    // binary nodes; Negation uses lhs only
  int exponent = 0;    // Power (>= 0)

  explicit Expr(Kind k) : kind(k) {}
};

inline ExprPtr var_ref(int index) {
  auto e = std::make_shared<Expr>(Expr::Kind::Variable);
  e->var = index;
  return e;
}

inline ExprPtr rational_const(Rational v) {
  auto e = std::make_shared<Expr>(Expr::Kind::Constant);
  e->value = std::move(v);
  return e;
}

inline bool is_zero_const(const ExprPtr& e) {
  return e->kind == Expr::Kind::Constant && e->value == 0;
}

inline bool is_one_const(const ExprPtr& e) {
  return e->kind == Expr::Kind::Constant && e->value == 1;
}

// Builders apply the local simplifications only (0*e -> 0, e+0 -> e,
// e^0 -> 1); no canonical forms. Correctness downstream is by evaluation
// equivalence, not syntax.

inline ExprPtr add(ExprPtr a, ExprPtr b) {
  if (is_zero_const(a)) return b;
  if (is_zero_const(b)) return a;
  auto e = std::make_shared<Expr>(Expr::Kind::Sum);
  e->lhs = std::move(a);
  e->rhs = std::move(b);
  return e;
}

inline ExprPtr neg(ExprPtr a) {
  if (a->kind == Expr::Kind::Constant) return rational_const(-a->value);
  auto e = std::make_shared<Expr>(Expr::Kind::Negation);
  e->lhs = std::move(a);
  return e;
}

inline ExprPtr sub(ExprPtr a, ExprPtr b) {
  if (is_zero_const(b)) return a;
  if (is_zero_const(a)) return neg(std::move(b));
  auto e = std::make_shared<Expr>(Expr::Kind::Difference);
  e->lhs = std::move(a);
  e->rhs = std::move(b);
  return e;
}

inline ExprPtr mul(ExprPtr a, ExprPtr b) {
  if (is_zero_const(a) || is_zero_const(b)) return rational_const(0);
  if (is_one_const(a)) return b;
  if (is_one_const(b)) return a;
  auto e = std::make_shared<Expr>(Expr::Kind::Product);
  e->lhs = std::move(a);
  e->rhs = std::move(b);
  return e;
}

inline ExprPtr pow_int(ExprPtr base, int exponent) {
  if (exponent < 0) throw Error("pow_int: negative exponent");
  if (exponent == 0) return rational_const(1);
  if (exponent == 1) return base;
  if (is_zero_const(base)) return rational_const(0);
  if (is_one_const(base)) return rational_const(1);
  auto e = std::make_shared<Expr>(Expr::Kind::Power);
  e->lhs = std::move(base);
  e->exponent = exponent;
  return e;
}

// ---------------------------------------------------------------------------
// Evaluation over any scalar ring
// ---------------------------------------------------------------------------

/// Ring adapter: how to lift an exact rational coefficient into the scalar
/// type. Specialized for double, Rational and PuiseuxSeries.
template <class S>
struct ScalarRing;

template <>
struct ScalarRing<double> {
  static double from_rational(const Rational& r) { return to_double(r); }
};

template <>
struct ScalarRing<Rational> {
  static const Rational& from_rational(const Rational& r) { return r; }
};

template <class S>
S ring_pow(const S& base, int exponent) {
  // exponent >= 1 at every call site (e^0 simplifies away at build time).
  S result = base;
  int done = 1;
  while (2 * done <= exponent) {
    result = result * result;
    done *= 2;
  }
  for (; done < exponent; ++done) result = result * base;
  return result;
}

template <class S>
S eval_expr(const Expr& e, std::span<const S> point) {
  switch (e.kind) {
    case Expr::Kind::Variable:
      return point[static_cast<std::size_t>(e.var)];
    case Expr::Kind::Constant:
      return ScalarRing<S>::from_rational(e.value);
    case Expr::Kind::Sum:
      return eval_expr(*e.lhs, point) + eval_expr(*e.rhs, point);
    case Expr::Kind::Difference:
      return eval_expr(*e.lhs, point) - eval_expr(*e.rhs, point);
    case Expr::Kind::Product:
      return eval_expr(*e.lhs, point) * eval_expr(*e.rhs, point);
    case Expr::Kind::Negation:
      return -eval_expr(*e.lhs, point);
    case Expr::Kind::Power:
      return ring_pow(eval_expr<S>(*e.lhs, point), e.exponent);
  }
  throw Error("eval_expr: corrupt node");
}

// ---------------------------------------------------------------------------
// Polynomial maps f : R^n -> R^k
// ---------------------------------------------------------------------------

struct PolynomialMap {
  std::vector<std::string> vars;     // length n, evaluation order
  std::vector<ExprPtr> components;   // length k

  std::size_t n() const { return vars.size(); }
  std::size_t k() const { return components.size(); }
};

/// k x n grid of partial derivatives; entry (i, j) = d component_i / d x_j.
struct JacobianMap {
  std::size_t rows = 0, cols = 0;
  std::vector<ExprPtr> entries;  // row-major

  const ExprPtr& entry(std::size_t i, std::size_t j) const {
    return entries[i * cols + j];
  }
};

inline ExprPtr differentiate_expr(const ExprPtr& e, int var) {
  switch (e->kind) {
    case Expr::Kind::Variable:
      return rational_const(e->var == var ? 1 : 0);
    case Expr::Kind::Constant:
      return rational_const(0);
    case Expr::Kind::Sum:
      return add(differentiate_expr(e->lhs, var), differentiate_expr(e->rhs, var));
    case Expr::Kind::Difference:
      return sub(differentiate_expr(e->lhs, var), differentiate_expr(e->rhs, var));
    case Expr::Kind::Product:
      return add(mul(differentiate_expr(e->lhs, var), e->rhs),
                 mul(e->lhs, differentiate_expr(e->rhs, var)));
    case Expr::Kind::Negation:
      return neg(differentiate_expr(e->lhs, var));
    case Expr::Kind::Power:
      return mul(mul(rational_const(e->exponent), pow_int(e->lhs, e->exponent - 1)),
                 differentiate_expr(e->lhs, var));
  }
  throw Error("differentiate_expr: corrupt node");
}

/// Substitutes x_j -> factor * x_j in every component: scale_argument(f, 1/t)
/// builds the rescaled map g_t(x) = f(x/t) by composition.
inline ExprPtr scale_argument_expr(const ExprPtr& e, const Rational& factor) {
  switch (e->kind) {
    case Expr::Kind::Variable:
      return mul(rational_const(factor), var_ref(e->var));
    case Expr::Kind::Constant:
      return e;
    case Expr::Kind::Sum:
      return add(scale_argument_expr(e->lhs, factor), scale_argument_expr(e->rhs, factor));
    case Expr::Kind::Difference:
      return sub(scale_argument_expr(e->lhs, factor), scale_argument_expr(e->rhs, factor));
    case Expr::Kind::Product:
      return mul(scale_argument_expr(e->lhs, factor), scale_argument_expr(e->rhs, factor));
    case Expr::Kind::Negation:
      return neg(scale_argument_expr(e->lhs, factor));
    case Expr::Kind::Power:
      return pow_int(scale_argument_expr(e->lhs, factor), e->exponent);
  }
  throw Error("scale_argument_expr: corrupt node");
}

inline PolynomialMap scale_argument(const PolynomialMap& map, const Rational& factor) {
  PolynomialMap scaled;
  scaled.vars = map.vars;
  scaled.components.reserve(map.components.size());
  for (const auto& c : map.components)
    scaled.components.push_back(scale_argument_expr(c, factor));
  return scaled;
}

inline JacobianMap differentiate(const PolynomialMap& map) {
  JacobianMap jac;
  jac.rows = map.k();
  jac.cols = map.n();
  jac.entries.reserve(jac.rows * jac.cols);
  for (std::size_t i = 0; i < jac.rows; ++i)
    for (std::size_t j = 0; j < jac.cols; ++j)
      jac.entries.push_back(differentiate_expr(map.components[i], static_cast<int>(j)));
  return jac;
}

template <class S>
std::vector<S> eval_map(const PolynomialMap& map, std::span<const S> point) {
  if (point.size() != map.n())
    throw DimensionError("eval_map: point has length " +
                         std::to_string(point.size()) + ", expected " +
                         std::to_string(map.n()));
  std::vector<S> out;
  out.reserve(map.k());
  for (const auto& c : map.components) out.push_back(eval_expr(*c, point));
  return out;
}

template <class S>
std::vector<S> eval_jacobian(const JacobianMap& jac, std::span<const S> point) {
  if (point.size() != jac.cols)
    throw DimensionError("eval_jacobian: point has length " +
                         std::to_string(point.size()) + ", expected " +
                         std::to_string(jac.cols));
  std::vector<S> out;
  out.reserve(jac.entries.size());
  for (const auto& e : jac.entries) out.push_back(eval_expr(*e, point));
  return out;
}

inline Matrix eval_jacobian_matrix(const JacobianMap& jac,
                                   std::span<const double> point) {
  Matrix m(jac.rows, jac.cols);
  auto vals = eval_jacobian(jac, point);
  m.a = std::move(vals);
  return m;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------
//
// Semicolon-separated components over the declared variables, with + - * ^,
// parentheses and rational literals ("2", "0.5", "3/4"). Standard
// precedence: ^ binds tighter than unary minus, which binds tighter than *,
// which binds tighter than + and -. Exponents must be non-negative integer
// literals. There is no division operator; "3/4" is a single literal token.

namespace detail {

struct Token {
  enum class Type { Number, Ident, Plus, Minus, Star, Caret, LParen, RParen, Semicolon, End };
  Type type;
  std::size_t offset;
  Rational number;       // Number
  bool number_is_integer = false;
  std::string ident;     // Ident
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }

  Token take() {
    Token t = current_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    current_ = Token{};
    current_.offset = pos_;
    if (pos_ >= text_.size()) {
      current_.type = Token::Type::End;
      return;
    }
    char c = text_[pos_];
    switch (c) {
      case '+': current_.type = Token::Type::Plus; ++pos_; return;
      case '-': current_.type = Token::Type::Minus; ++pos_; return;
      case '*': current_.type = Token::Type::Star; ++pos_; return;
      case '^': current_.type = Token::Type::Caret; ++pos_; return;
      case '(': current_.type = Token::Type::LParen; ++pos_; return;
      case ')': current_.type = Token::Type::RParen; ++pos_; return;
      case ';': current_.type = Token::Type::Semicolon; ++pos_; return;
      case '/':
        throw ParseError("division is not supported (use a fraction literal like 3/4)", pos_);
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      lex_number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      current_.type = Token::Type::Ident;
      current_.ident = std::string(text_.substr(start, pos_ - start));
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  void lex_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    bool integer = true;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      integer = false;
      ++pos_;
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
        throw ParseError("expected digits after decimal point", pos_);
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    } else if (pos_ + 1 < text_.size() && text_[pos_] == '/' &&
               std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
      integer = false;
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    auto parsed = rational_from_string(text_.substr(start, pos_ - start));
    if (!parsed) throw ParseError("malformed number literal", start);
    current_.type = Token::Type::Number;
    current_.number = *parsed;
    current_.number_is_integer = integer;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Token current_;
};

class MapParser {
 public:
  MapParser(std::string_view text, const std::vector<std::string>& vars)
      : lexer_(text), vars_(vars) {}

  std::vector<ExprPtr> parse_components() {
    std::vector<ExprPtr> components;
    components.push_back(parse_expression());
    while (lexer_.peek().type == detail::Token::Type::Semicolon) {
      lexer_.take();
      components.push_back(parse_expression());
    }
    if (lexer_.peek().type != Token::Type::End)
      throw ParseError("unexpected trailing input", lexer_.peek().offset);
    return components;
  }

 private:
  using TT = Token::Type;

  ExprPtr parse_expression() {
    ExprPtr e = parse_term();
    while (lexer_.peek().type == TT::Plus || lexer_.peek().type == TT::Minus) {
      bool plus = lexer_.take().type == TT::Plus;
      ExprPtr rhs = parse_term();
      e = plus ? add(std::move(e), std::move(rhs)) : sub(std::move(e), std::move(rhs));
    }
    return e;
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_unary();
    while (lexer_.peek().type == TT::Star) {
      lexer_.take();
      e = mul(std::move(e), parse_unary());
    }
    return e;
  }

  ExprPtr parse_unary() {
    if (lexer_.peek().type == TT::Minus) {
      lexer_.take();
      return neg(parse_unary());
    }
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_atom();
    if (lexer_.peek().type != TT::Caret) return base;
    lexer_.take();
    const Token& t = lexer_.peek();
    if (t.type == TT::Minus)
      throw ParseError("negative exponents are not allowed", t.offset);
    if (t.type != TT::Number || !t.number_is_integer)
      throw ParseError("exponent must be a non-negative integer literal", t.offset);
    Token taken = lexer_.take();
    if (denominator(taken.number) != 1 || taken.number < 0)
      throw ParseError("exponent must be a non-negative integer literal", taken.offset);
    if (taken.number > 1024)
      throw ParseError("exponent too large", taken.offset);
    if (lexer_.peek().type == TT::Caret)
      throw ParseError("chained '^' requires parentheses", lexer_.peek().offset);
    return pow_int(std::move(base), static_cast<int>(numerator(taken.number).convert_to<long>()));
  }

  ExprPtr parse_atom() {
    const Token& t = lexer_.peek();
    switch (t.type) {
      case TT::Number: {
        Token taken = lexer_.take();
        return rational_const(taken.number);
      }
      case TT::Ident: {
        Token taken = lexer_.take();
        for (std::size_t j = 0; j < vars_.size(); ++j)
          if (vars_[j] == taken.ident) return var_ref(static_cast<int>(j));
        throw ParseError("undeclared variable '" + taken.ident + "'", taken.offset);
      }
      case TT::LParen: {
        lexer_.take();
        ExprPtr e = parse_expression();
        if (lexer_.peek().type != TT::RParen)
          throw ParseError("expected ')'", lexer_.peek().offset);
        lexer_.take();
        return e;
      }
      case TT::End:
        throw ParseError("unexpected end of input", t.offset);
      default:
        throw ParseError("expected a number, variable or '('", t.offset);
    }
  }

  Lexer lexer_;
  const std::vector<std::string>& vars_;
};

}  // namespace detail

/// Parses a semicolon-separated list of component expressions over `vars`.
inline PolynomialMap parse_map(std::string_view text, std::vector<std::string> vars) {
  if (vars.empty()) throw DimensionError("parse_map: no variables declared");
  for (std::size_t i = 0; i < vars.size(); ++i)
    for (std::size_t j = i + 1; j < vars.size(); ++j)
      if (vars[i] == vars[j]) throw Error("parse_map: duplicate variable '" + vars[i] + "'");
  detail::MapParser parser(text, vars);
  PolynomialMap map;
  map.components = parser.parse_components();
  map.vars = std::move(vars);
  return map;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace detail {

inline int precedence_of(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Sum:
    case Expr::Kind::Difference: return 1;
    case Expr::Kind::Product: return 2;
    case Expr::Kind::Negation: return 3;
    case Expr::Kind::Power: return 4;
    default: return 5;
  }
}

inline void print_expr(std::string& out, const Expr& e,
                       const std::vector<std::string>& vars) {
  auto child = [&](const Expr& c, bool parens) {
    if (parens) out += '(';
    print_expr(out, c, vars);
    if (parens) out += ')';
  };
  const int prec = precedence_of(e);
  switch (e.kind) {
    case Expr::Kind::Variable:
      out += vars[static_cast<std::size_t>(e.var)];
      return;
    case Expr::Kind::Constant: {
      if (e.value < 0) {
        out += '-';
        out += rational_to_string(-e.value);
      } else {
        out += rational_to_string(e.value);
      }
      return;
    }
    case Expr::Kind::Sum:
      child(*e.lhs, precedence_of(*e.lhs) < prec);
      out += " + ";
      child(*e.rhs, precedence_of(*e.rhs) < prec);
      return;
    case Expr::Kind::Difference:
      child(*e.lhs, precedence_of(*e.lhs) < prec);
      out += " - ";
      child(*e.rhs, precedence_of(*e.rhs) <= prec);
      return;
    case Expr::Kind::Product:
      child(*e.lhs, precedence_of(*e.lhs) < prec);
      out += '*';
      child(*e.rhs, precedence_of(*e.rhs) < prec);
      return;
    case Expr::Kind::Negation:
      out += '-';
      child(*e.lhs, precedence_of(*e.lhs) < prec);
      return;
    case Expr::Kind::Power: {
      // A bare negative literal would re-parse as -(c^m).
      bool negative_const =
          e.lhs->kind == Expr::Kind::Constant && e.lhs->value < 0;
      child(*e.lhs, precedence_of(*e.lhs) < 5 || negative_const);
      out += '^';
      out += std::to_string(e.exponent);
      return;
    }
  }
}

}  // namespace detail

inline std::string to_string(const ExprPtr& e, const std::vector<std::string>& vars) {
  std::string out;
  detail::print_expr(out, *e, vars);
  return out;
}

inline std::string to_string(const PolynomialMap& map) {
  std::string out;
  for (std::size_t i = 0; i < map.components.size(); ++i) {
    if (i) out += "; ";
    detail::print_expr(out, *map.components[i], map.vars);
  }
  return out;
}

}  // namespace gcv
