#include "ermakov/expr.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

#include "ermakov/error.hpp"

namespace ermakov::expr {

struct Expression::Node {
  Op op = Op::Const;
  double value = 0.0;
  std::string name;
  Func func = Func::Sin;
  Expression a{nullptr};
  Expression b{nullptr};
  std::shared_ptr<const ExternFunction> ext;
};

namespace {

constexpr std::pair<std::string_view, Func> kFunctions[] = {
    {"sin", Func::Sin},   {"cos", Func::Cos},   {"tan", Func::Tan},
    {"asin", Func::Asin}, {"acos", Func::Acos}, {"atan", Func::Atan},
    {"sqrt", Func::Sqrt}, {"exp", Func::Exp},   {"log", Func::Log},
};

[[noreturn]] void domain(const std::string& what) { throw DomainError(what); }

double checked(double v, std::string_view what) {
  if (!std::isfinite(v)) domain("non-finite value in " + std::string(what));
  return v;
}

}  // namespace

std::string_view func_name(Func f) {
  for (const auto& [name, fn] : kFunctions)
    if (fn == f) return name;
  return "?";
}

// ---------------------------------------------------------------- Bindings

Bindings::Bindings(std::initializer_list<std::pair<std::string, double>> init)
    : entries_(init) {}

void Bindings::set(std::string_view name, double value) {
  for (auto& [n, v] : entries_) {
    if (n == name) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(std::string(name), value);
}

const double* Bindings::find(std::string_view name) const {
  for (const auto& [n, v] : entries_)
    if (n == name) return &v;
  return nullptr;
}

// ---------------------------------------------------------------- Expression

Expression::Expression() : Expression(constant(0.0)) {}

Expression::Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expression Expression::constant(double value) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = value;
  return Expression(std::move(n));
}

Expression Expression::variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->name = std::move(name);
  return Expression(std::move(n));
}

Expression Expression::call(Func f, Expression arg) {
  auto n = std::make_shared<Node>();
  n->op = Op::Call;
  n->func = f;
  n->a = std::move(arg);
  return Expression(std::move(n));
}

Expression Expression::unary_minus(Expression operand) {
  auto n = std::make_shared<Node>();
  n->op = Op::Neg;
  n->a = std::move(operand);
  return Expression(std::move(n));
}

Expression Expression::binary(Op op, Expression lhs, Expression rhs) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(lhs);
  n->b = std::move(rhs);
  return Expression(std::move(n));
}

Expression Expression::external(std::string name, std::function<double(double)> fn,
                                Expression derivative, Expression arg) {
  auto n = std::make_shared<Node>();
  n->op = Op::Extern;
  n->name = name;
  n->ext = std::make_shared<ExternFunction>(
      ExternFunction{std::move(name), std::move(fn), std::move(derivative)});
  n->a = std::move(arg);
  return Expression(std::move(n));
}

Op Expression::op() const { return node_->op; }
double Expression::value() const { return node_->value; }
const std::string& Expression::name() const { return node_->name; }
Func Expression::func() const { return node_->func; }
const Expression& Expression::lhs() const { return node_->a; }
const Expression& Expression::rhs() const { return node_->b; }
const ExternFunction& Expression::external_function() const { return *node_->ext; }

Expression Expression::with_operand(Expression operand) const {
  auto n = std::make_shared<Node>(*node_);
  n->a = std::move(operand);
  return Expression(std::move(n));
}

double Expression::evaluate(const Bindings& env) const {
  const Node& n = *node_;
  switch (n.op) {
    case Op::Const:
      return n.value;
    case Op::Var: {
      const double* v = env.find(n.name);
      if (v == nullptr) throw EvaluationError("unbound variable '" + n.name + "'");
      return *v;
    }
    case Op::Neg:
      return -n.a.evaluate(env);
    case Op::Add:
      return checked(n.a.evaluate(env) + n.b.evaluate(env), "addition");
    case Op::Sub:
      return checked(n.a.evaluate(env) - n.b.evaluate(env), "subtraction");
    case Op::Mul:
      return checked(n.a.evaluate(env) * n.b.evaluate(env), "multiplication");
    case Op::Div: {
      const double num = n.a.evaluate(env);
      const double den = n.b.evaluate(env);
      if (den == 0.0) domain("division by zero");
      return checked(num / den, "division");
    }
    case Op::Pow: {
      const double base = n.a.evaluate(env);
      const double ex = n.b.evaluate(env);
      if (base < 0.0 && ex != std::trunc(ex)) domain("negative base with non-integer exponent");
      if (base == 0.0 && ex < 0.0) domain("zero raised to a negative power");
      return checked(std::pow(base, ex), "power");
    }
    case Op::Call: {
      const double x = n.a.evaluate(env);
      switch (n.func) {
        case Func::Sin: return std::sin(x);
        case Func::Cos: return std::cos(x);
        case Func::Tan: return checked(std::tan(x), "tan");
        case Func::Asin:
          if (x < -1.0 || x > 1.0) domain("asin argument outside [-1, 1]");
          return std::asin(x);
        case Func::Acos:
          if (x < -1.0 || x > 1.0) domain("acos argument outside [-1, 1]");
          return std::acos(x);
        case Func::Atan: return std::atan(x);
        case Func::Sqrt:
          if (x < 0.0) domain("sqrt of a negative number");
          return std::sqrt(x);
        case Func::Exp: return checked(std::exp(x), "exp");
        case Func::Log:
          if (x <= 0.0) domain("log of a non-positive number");
          return std::log(x);
      }
      break;
    }
    case Op::Extern:
      return checked(n.ext->fn(n.a.evaluate(env)), n.name);
  }
  throw EvaluationError("corrupt expression node");
}

bool Expression::depends_on(std::string_view var) const {
  const Node& n = *node_;
  switch (n.op) {
    case Op::Const: return false;
    case Op::Var: return n.name == var;
    case Op::Neg:
    case Op::Call:
    case Op::Extern: return n.a.depends_on(var);
    default: return n.a.depends_on(var) || n.b.depends_on(var);
  }
}

std::set<std::string> Expression::free_variables() const {
  std::set<std::string> out;
  std::function<void(const Expression&)> walk = [&](const Expression& e) {
    switch (e.op()) {
      case Op::Const: return;
      case Op::Var: out.insert(e.name()); return;
      case Op::Neg:
      case Op::Call:
      case Op::Extern: walk(e.lhs()); return;
      default: walk(e.lhs()); walk(e.rhs()); return;
    }
  };
  walk(*this);
  return out;
}

bool operator==(const Expression& x, const Expression& y) {
  if (x.node_ == y.node_) return true;
  const auto& a = *x.node_;
  const auto& b = *y.node_;
  if (a.op != b.op) return false;
  switch (a.op) {
    case Op::Const: return a.value == b.value;
    case Op::Var: return a.name == b.name;
    case Op::Neg: return a.a == b.a;
    case Op::Call: return a.func == b.func && a.a == b.a;
    case Op::Extern: return a.ext == b.ext && a.a == b.a;
    default: return a.a == b.a && a.b == b.b;
  }
}

// ---------------------------------------------------------------- builders

Expression operator+(Expression a, Expression b) { return Expression::binary(Op::Add, std::move(a), std::move(b)); }
Expression operator-(Expression a, Expression b) { return Expression::binary(Op::Sub, std::move(a), std::move(b)); }
Expression operator*(Expression a, Expression b) { return Expression::binary(Op::Mul, std::move(a), std::move(b)); }
Expression operator/(Expression a, Expression b) { return Expression::binary(Op::Div, std::move(a), std::move(b)); }
Expression operator-(Expression a) { return Expression::unary_minus(std::move(a)); }
Expression pow(Expression base, Expression exponent) {
  return Expression::binary(Op::Pow, std::move(base), std::move(exponent));
}
Expression num(double v) { return Expression::constant(v); }
Expression var(std::string name) { return Expression::variable(std::move(name)); }
Expression sin(Expression a) { return Expression::call(Func::Sin, std::move(a)); }
Expression cos(Expression a) { return Expression::call(Func::Cos, std::move(a)); }
Expression tan(Expression a) { return Expression::call(Func::Tan, std::move(a)); }
Expression sqrt(Expression a) { return Expression::call(Func::Sqrt, std::move(a)); }
Expression exp(Expression a) { return Expression::call(Func::Exp, std::move(a)); }
Expression log(Expression a) { return Expression::call(Func::Log, std::move(a)); }

// ---------------------------------------------------------------- parser

namespace {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expression parse_all() {
    skip_ws();
    if (pos_ == src_.size()) throw ParseError("empty expression", pos_);
    Expression e = parse_sum();
    skip_ws();
    if (pos_ != src_.size())
      throw ParseError("unexpected '" + std::string(1, src_[pos_]) + "'", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' ||
                                  src_[pos_] == '\n' || src_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expression parse_sum() {
    Expression lhs = parse_product();
    for (;;) {
      if (accept('+')) lhs = lhs + parse_product();
      else if (accept('-')) lhs = lhs - parse_product();
      else return lhs;
    }
  }

  Expression parse_product() {
    Expression lhs = parse_power();
    for (;;) {
      if (accept('*')) lhs = lhs * parse_power();
      else if (accept('/')) lhs = lhs / parse_power();
      else return lhs;
    }
  }

  Expression parse_power() {
    Expression base = parse_unary();
    if (accept('^')) return pow(std::move(base), parse_power());
    return base;
  }

  Expression parse_unary() {
    if (accept('-')) {
      skip_ws();
      if (pos_ < src_.size() && (is_digit(src_[pos_]) || src_[pos_] == '.'))
        return num(-parse_number());
      return -parse_unary();
    }
    return parse_atom();
  }

  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

  double parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (is_digit(src_[pos_]) || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && is_digit(src_[p])) {
        pos_ = p;
        while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
      }
    }
    double value = 0.0;
    const auto* first = src_.data() + start;
    const auto* last = src_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) throw ParseError("malformed number", start);
    return value;
  }

  Expression parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expression inner = parse_sum();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if (is_digit(c) || c == '.') return num(parse_number());
    if (is_alpha(c)) {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && (is_alpha(src_[pos_]) || is_digit(src_[pos_]) || src_[pos_] == '_'))
        ++pos_;
      std::string ident(src_.substr(start, pos_ - start));
      skip_ws();
      if (pos_ < src_.size() && src_[pos_] == '(') {
        ++pos_;
        for (const auto& [name, fn] : kFunctions) {
          if (name == ident) {
            Expression arg = parse_sum();
            if (!accept(')')) throw ParseError("expected ')' after function argument", pos_);
            return Expression::call(fn, std::move(arg));
          }
        }
        throw ParseError("unknown function '" + ident + "'", start);
      }
      if (ident == "pi") return num(std::numbers::pi);
      return var(std::move(ident));
    }
    throw ParseError("unexpected '" + std::string(1, c) + "'", pos_);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

bool is_atomic(const Expression& e) {
  switch (e.op()) {
    case Op::Var:
    case Op::Call:
    case Op::Extern: return true;
    case Op::Const: return !std::signbit(e.value());
    default: return false;
  }
}

std::string wrapped(const Expression& e) {
  std::string s = unparse(e);
  return is_atomic(e) ? s : "(" + s + ")";
}

}  // namespace

Expression parse(std::string_view src) { return Parser(src).parse_all(); }

std::string unparse(const Expression& e) {
  switch (e.op()) {
    case Op::Const: return format_double(e.value());
    case Op::Var: return e.name();
    case Op::Neg:
      // "-(2)" keeps Neg(Const) distinct from a negative literal.
      if (e.lhs().is_constant()) return "-(" + unparse(e.lhs()) + ")";
      return "-" + wrapped(e.lhs());
    case Op::Add: return wrapped(e.lhs()) + " + " + wrapped(e.rhs());
    case Op::Sub: return wrapped(e.lhs()) + " - " + wrapped(e.rhs());
    case Op::Mul: return wrapped(e.lhs()) + "*" + wrapped(e.rhs());
    case Op::Div: return wrapped(e.lhs()) + "/" + wrapped(e.rhs());
    case Op::Pow: return wrapped(e.lhs()) + "^" + wrapped(e.rhs());
    case Op::Call: return std::string(func_name(e.func())) + "(" + unparse(e.lhs()) + ")";
    case Op::Extern: return e.name() + "(" + unparse(e.lhs()) + ")";
  }
  return {};
}

// ---------------------------------------------------------------- calculus

Expression substitute(const Expression& e, std::string_view name, const Expression& replacement) {
  if (!e.depends_on(name)) return e;
  switch (e.op()) {
    case Op::Var: return replacement;
    case Op::Neg: return -substitute(e.lhs(), name, replacement);
    case Op::Call: return Expression::call(e.func(), substitute(e.lhs(), name, replacement));
    case Op::Extern: return e.with_operand(substitute(e.lhs(), name, replacement));
    case Op::Const: return e;
    default:
      return Expression::binary(e.op(), substitute(e.lhs(), name, replacement),
                                substitute(e.rhs(), name, replacement));
  }
}

Expression bind_parameters(const Expression& e, const std::map<std::string, double>& params) {
  Expression out = e;
  for (const auto& [name, value] : params) out = substitute(out, name, num(value));
  return out;
}

Expression differentiate(const Expression& e, std::string_view v) {
  const Expression& a = e.lhs();
  const Expression& b = e.rhs();
  switch (e.op()) {
    case Op::Const: return num(0.0);
    case Op::Var: return num(e.name() == v ? 1.0 : 0.0);
    case Op::Neg: return -differentiate(a, v);
    case Op::Add: return differentiate(a, v) + differentiate(b, v);
    case Op::Sub: return differentiate(a, v) - differentiate(b, v);
    case Op::Mul: return differentiate(a, v) * b + a * differentiate(b, v);
    case Op::Div:
      return (differentiate(a, v) * b - a * differentiate(b, v)) / pow(b, num(2.0));
    case Op::Pow:
      if (!b.depends_on(v)) return b * pow(a, b - num(1.0)) * differentiate(a, v);
      return pow(a, b) * (differentiate(b, v) * log(a) + b * differentiate(a, v) / a);
    case Op::Call: {
      const Expression da = differentiate(a, v);
      switch (e.func()) {
        case Func::Sin: return cos(a) * da;
        case Func::Cos: return -sin(a) * da;
        case Func::Tan: return da / pow(cos(a), num(2.0));
        case Func::Asin: return da / sqrt(num(1.0) - pow(a, num(2.0)));
        case Func::Acos: return -da / sqrt(num(1.0) - pow(a, num(2.0)));
        case Func::Atan: return da / (num(1.0) + pow(a, num(2.0)));
        case Func::Sqrt: return da / (num(2.0) * sqrt(a));
        case Func::Exp: return exp(a) * da;
        case Func::Log: return da / a;
      }
      break;
    }
    case Op::Extern: {
      const auto& ext = e.external_function();
      return substitute(ext.derivative, extern_placeholder, a) * differentiate(a, v);
    }
  }
  return num(0.0);
}

Expression simplify(const Expression& e) {
  switch (e.op()) {
    case Op::Const:
    case Op::Var: return e;
    case Op::Extern: return e.with_operand(simplify(e.lhs()));
    case Op::Neg: {
      Expression a = simplify(e.lhs());
      if (a.is_constant()) return num(-a.value());
      if (a.op() == Op::Neg) return a.lhs();
      return -a;
    }
    case Op::Call: {
      Expression a = simplify(e.lhs());
      Expression out = Expression::call(e.func(), a);
      if (a.is_constant()) {
        try {
          return num(out.evaluate({}));
        } catch (const EvaluationError&) {
        }
      }
      return out;
    }
    default: break;
  }

  Expression a = simplify(e.lhs());
  Expression b = simplify(e.rhs());
  Expression out = Expression::binary(e.op(), a, b);
  if (a.is_constant() && b.is_constant()) {
    try {
      return num(out.evaluate({}));
    } catch (const EvaluationError&) {
      return out;
    }
  }
  switch (e.op()) {
    case Op::Add:
      if (a.is_zero()) return b;
      if (b.is_zero()) return a;
      break;
    case Op::Sub:
      if (b.is_zero()) return a;
      if (a.is_zero()) return b.op() == Op::Neg ? b.lhs() : -b;
      break;
    case Op::Mul:
      if (a.is_zero() || b.is_zero()) return num(0.0);
      if (a.is_one()) return b;
      if (b.is_one()) return a;
      break;
    case Op::Div:
      if (b.is_one()) return a;
      break;
    case Op::Pow:
      if (b.is_one()) return a;
      if (b.is_zero()) return num(1.0);
      break;
    default: break;
  }
  return out;
}

}  // namespace ermakov::expr
