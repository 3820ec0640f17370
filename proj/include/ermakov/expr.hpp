#pragma once

// Scalar expression engine: parsing, evaluation, symbolic differentiation
// and light simplification of the user-supplied functions of a system.
//
// Expressions are immutable trees with shared structure; copying is cheap
// and concurrent evaluation from several threads is safe.

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ermakov::expr {

enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Call, Extern };

enum class Func { Sin, Cos, Tan, Asin, Acos, Atan, Sqrt, Exp, Log };

std::string_view func_name(Func f);

/// Variable name -> value. Small and linear-scan; systems bind at most a
/// handful of variables.
class Bindings {
 public:
  Bindings() = default;
  Bindings(std::initializer_list<std::pair<std::string, double>> init);

  void set(std::string_view name, double value);
  const double* find(std::string_view name) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<std::pair<std::string, double>> entries_;
};

class Expression;
struct ExternFunction;

/// Scalar expression tree.
class Expression {
 public:
  /// The literal 0.
  Expression();

  static Expression constant(double value);
  static Expression variable(std::string name);
  static Expression call(Func f, Expression arg);
  static Expression unary_minus(Expression operand);
  static Expression binary(Op op, Expression lhs, Expression rhs);
  /// Callable-backed node `fn(arg)`. `derivative` is fn' written in the
  /// placeholder variable `extern_placeholder`.
  static Expression external(std::string name, std::function<double(double)> fn,
                             Expression derivative, Expression arg);

  Op op() const;
  double value() const;              // Const
  const std::string& name() const;   // Var, Extern
  Func func() const;                 // Call
  const Expression& lhs() const;     // binary; also the operand of Neg/Call/Extern
  const Expression& rhs() const;     // binary
  const ExternFunction& external_function() const;  // Extern

  /// Same Neg/Call/Extern node applied to a different operand.
  Expression with_operand(Expression operand) const;

  bool is_constant() const { return op() == Op::Const; }
  bool is_zero() const { return is_constant() && value() == 0.0; }
  bool is_one() const { return is_constant() && value() == 1.0; }

  /// Throws EvaluationError on an unbound variable and DomainError on
  /// sqrt/log/asin/acos/pow domain violations, division by zero and any
  /// non-finite intermediate.
  double evaluate(const Bindings& env) const;

  bool depends_on(std::string_view var) const;
  std::set<std::string> free_variables() const;

  friend bool operator==(const Expression& a, const Expression& b);
  friend bool operator!=(const Expression& a, const Expression& b) { return !(a == b); }

 private:
  struct Node;
  explicit Expression(std::shared_ptr<const Node> node);
  explicit Expression(std::nullptr_t) {}
  std::shared_ptr<const Node> node_;
};

inline constexpr std::string_view extern_placeholder = "_x";

struct ExternFunction {
  std::string name;
  std::function<double(double)> fn;
  Expression derivative;  // in extern_placeholder
};

// Raw tree builders; no simplification is applied.
Expression operator+(Expression a, Expression b);
Expression operator-(Expression a, Expression b);
Expression operator*(Expression a, Expression b);
Expression operator/(Expression a, Expression b);
Expression operator-(Expression a);
Expression pow(Expression base, Expression exponent);
Expression num(double v);
Expression var(std::string name);
Expression sin(Expression a);
Expression cos(Expression a);
Expression tan(Expression a);
Expression sqrt(Expression a);
Expression exp(Expression a);
Expression log(Expression a);

/// Recursive-descent parser. Precedence, loosest first: + -, * /, ^
/// (right associative), unary minus, then atoms. Unary minus binds tighter
/// than the base of ^, so `-x^2` is `(-x)^2`. A minus sign written directly
/// before a number literal folds into a negative constant. `pi` parses to
/// its constant. Throws ParseError carrying the byte offset of the problem.
Expression parse(std::string_view src);

/// Text form that parses back to the same tree. Extern nodes print as
/// `name(arg)` and are not re-parseable.
std::string unparse(const Expression& e);

/// Exact derivative; the result is not simplified.
Expression differentiate(const Expression& e, std::string_view var);

/// Constant folding plus x+0, x-0, 0-x, x*1, x*0, x/1, x^1, x^0 and --x.
Expression simplify(const Expression& e);

Expression substitute(const Expression& e, std::string_view var, const Expression& replacement);

/// Replaces each named parameter with its constant value.
Expression bind_parameters(const Expression& e, const std::map<std::string, double>& params);

}  // namespace ermakov::expr
