#pragma once

// Minimal arithmetic expression language used by scenario files.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?          right associative
//   primary := number | name | name '(' expr ')' | '(' expr ')'
//
// Functions: sin cos exp log sqrt cosh sinh abs. Variables: x1..xn, t, u, s
// (which ones are legal depends on the VarSpace the expression is parsed in),
// plus the constant pi. Expressions are immutable and carry a symbolic
// derivative so scenario potentials get exact gradients.

#include "gpwc/core.hpp"

#include <cctype>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace gpwc {

struct VarRef {
  enum class Kind { X, T, U, S };
  Kind kind = Kind::T;
  int index = 0;  // only meaningful for X, zero based

  friend bool operator==(const VarRef&, const VarRef&) = default;
  static VarRef x(int i) { return {Kind::X, i}; }
  static VarRef t() { return {Kind::T, 0}; }
  static VarRef u() { return {Kind::U, 0}; }
  static VarRef s() { return {Kind::S, 0}; }
};

// Which variables an expression may reference.
struct VarSpace {
  int dim = 0;
  bool t = false;
  bool u = false;
  bool s = false;
};

struct Bindings {
  std::span<const double> x;
  double t = 0.0;
  double u = 0.0;
  double s = 0.0;
};

class Expr {
 public:
  enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
  enum class Fn { Sin, Cos, Exp, Log, Sqrt, Cosh, Sinh, Abs, Sign };

  struct Node {
    Op op = Op::Num;
    double value = 0.0;
    VarRef var{};
    Fn fn = Fn::Sin;
    std::shared_ptr<const Node> a, b;
  };
  using NodePtr = std::shared_ptr<const Node>;

  Expr() : root_(num(0.0)) {}
  static Expr constant(double c) { return Expr(num(c)); }
  static Expr parse(std::string_view text, const VarSpace& vars);

  double eval(const Bindings& b) const { return eval_node(*root_, b); }
  double operator()(const Bindings& b) const { return eval(b); }

  Expr diff(VarRef v) const { return Expr(diff_node(root_, v)); }
  bool depends_on(VarRef v) const { return depends(*root_, v); }
  bool is_constant() const { return root_->op == Op::Num; }
  double constant_value() const { return root_->value; }

 private:
  explicit Expr(NodePtr r) : root_(std::move(r)) {}

  static NodePtr num(double c) {
    auto n = std::make_shared<Node>();
    n->op = Op::Num;
    n->value = c;
    return n;
  }
  static NodePtr var(VarRef v) {
    auto n = std::make_shared<Node>();
    n->op = Op::Var;
    n->var = v;
    return n;
  }
  static bool is_num(const NodePtr& n, double c) { return n->op == Op::Num && n->value == c; }
  static NodePtr binary(Op op, NodePtr a, NodePtr b);
  static NodePtr call(Fn fn, NodePtr a);
  static NodePtr neg(NodePtr a);

  static double eval_node(const Node& n, const Bindings& b);
  static NodePtr diff_node(const NodePtr& n, VarRef v);
  static bool depends(const Node& n, VarRef v);

  friend class ExprParser;
  NodePtr root_;
};

class ExprParser {
 public:
  ExprParser(std::string_view text, const VarSpace& vars) : text_(text), vars_(vars) {}

  Expr::NodePtr parse() {
    auto n = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return n;
  }

 private:
  using NodePtr = Expr::NodePtr;
  using Op = Expr::Op;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("expression \"" + std::string(text_) + "\" column " +
                     std::to_string(pos_ + 1) + ": " + msg);
  }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    auto lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::binary(Op::Add, lhs, term());
      } else if (accept('-')) {
        lhs = Expr::binary(Op::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }
  NodePtr term() {
    auto lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::binary(Op::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = Expr::binary(Op::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }
  NodePtr unary() {
    if (accept('-')) return Expr::neg(unary());
    if (accept('+')) return unary();
    return power();
  }
  NodePtr power() {
    auto base = primary();
    if (accept('^')) return Expr::binary(Op::Pow, base, unary());
    return base;
  }
  NodePtr primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
    if (accept('(')) {
      auto inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }
  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        pos_ = p;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    const std::string lit(text_.substr(start, pos_ - start));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(lit, &used);
    } catch (const std::exception&) {
      pos_ = start;
      fail("malformed number '" + lit + "'");
    }
    if (used != lit.size()) {
      pos_ = start;
      fail("malformed number '" + lit + "'");
    }
    return Expr::num(v);
  }
  NodePtr name() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string id(text_.substr(start, pos_ - start));
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      Expr::Fn fn{};
      if (id == "sin") fn = Expr::Fn::Sin;
      else if (id == "cos") fn = Expr::Fn::Cos;
      else if (id == "exp") fn = Expr::Fn::Exp;
      else if (id == "log") fn = Expr::Fn::Log;
      else if (id == "sqrt") fn = Expr::Fn::Sqrt;
      else if (id == "cosh") fn = Expr::Fn::Cosh;
      else if (id == "sinh") fn = Expr::Fn::Sinh;
      else if (id == "abs") fn = Expr::Fn::Abs;
      else {
        pos_ = start;
        fail("unknown function '" + id + "'");
      }
      auto arg = expr();
      if (!accept(')')) fail("expected ')' after function argument");
      return Expr::call(fn, arg);
    }
    if (id == "pi") return Expr::num(3.14159265358979323846);
    if (id == "t" && vars_.t) return Expr::var(VarRef::t());
    if (id == "u" && vars_.u) return Expr::var(VarRef::u());
    if (id == "s" && vars_.s) return Expr::var(VarRef::s());
    if (id.size() >= 2 && id[0] == 'x') {
      bool digits = true;
      for (std::size_t i = 1; i < id.size(); ++i) digits = digits && std::isdigit(static_cast<unsigned char>(id[i]));
      if (digits) {
        const int k = std::stoi(id.substr(1));
        if (k >= 1 && k <= vars_.dim) return Expr::var(VarRef::x(k - 1));
      }
    }
    pos_ = start;
    fail("unknown variable '" + id + "'");
  }

  std::string_view text_;
  VarSpace vars_;
  std::size_t pos_ = 0;
};

inline Expr Expr::parse(std::string_view text, const VarSpace& vars) {
  return Expr(ExprParser(text, vars).parse());
}

inline Expr::NodePtr Expr::binary(Op op, NodePtr a, NodePtr b) {
  if (a->op == Op::Num && b->op == Op::Num) {
    Node tmp;
    tmp.op = op;
    tmp.a = a;
    tmp.b = b;
    return num(eval_node(tmp, {}));
  }
  switch (op) {
    case Op::Add:
      if (is_num(a, 0.0)) return b;
      if (is_num(b, 0.0)) return a;
      break;
    case Op::Sub:
      if (is_num(b, 0.0)) return a;
      if (is_num(a, 0.0)) return neg(b);
      break;
    case Op::Mul:
      if (is_num(a, 0.0) || is_num(b, 0.0)) return num(0.0);
      if (is_num(a, 1.0)) return b;
      if (is_num(b, 1.0)) return a;
      break;
    case Op::Div:
      if (is_num(a, 0.0)) return num(0.0);
      if (is_num(b, 1.0)) return a;
      break;
    case Op::Pow:
      if (is_num(b, 1.0)) return a;
      if (is_num(b, 0.0)) return num(1.0);
      break;
    default:
      break;
  }
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

inline Expr::NodePtr Expr::call(Fn fn, NodePtr a) {
  auto n = std::make_shared<Node>();
  n->op = Op::Call;
  n->fn = fn;
  n->a = std::move(a);
  if (n->a->op == Op::Num) return num(eval_node(*n, {}));
  return n;
}

inline Expr::NodePtr Expr::neg(NodePtr a) {
  if (a->op == Op::Num) return num(-a->value);
  auto n = std::make_shared<Node>();
  n->op = Op::Neg;
  n->a = std::move(a);
  return n;
}

inline double Expr::eval_node(const Node& n, const Bindings& b) {
  switch (n.op) {
    case Op::Num:
      return n.value;
    case Op::Var:
      switch (n.var.kind) {
        case VarRef::Kind::X:
          return b.x[static_cast<std::size_t>(n.var.index)];
        case VarRef::Kind::T:
          return b.t;
        case VarRef::Kind::U:
          return b.u;
        case VarRef::Kind::S:
          return b.s;
      }
      return 0.0;
    case Op::Neg:
      return -eval_node(*n.a, b);
    case Op::Add:
      return eval_node(*n.a, b) + eval_node(*n.b, b);
    case Op::Sub:
      return eval_node(*n.a, b) - eval_node(*n.b, b);
    case Op::Mul:
      return eval_node(*n.a, b) * eval_node(*n.b, b);
    case Op::Div:
      return eval_node(*n.a, b) / eval_node(*n.b, b);
    case Op::Pow: {
      const double base = eval_node(*n.a, b);
      // integer exponents keep negative bases well defined
      if (n.b->op == Op::Num && n.b->value == std::round(n.b->value) && std::abs(n.b->value) < 64) {
        const int k = static_cast<int>(n.b->value);
        double r = 1.0;
        for (int i = 0; i < std::abs(k); ++i) r *= base;
        return k >= 0 ? r : 1.0 / r;
      }
      return std::pow(base, eval_node(*n.b, b));
    }
    case Op::Call: {
      const double x = eval_node(*n.a, b);
      switch (n.fn) {
        case Fn::Sin: return std::sin(x);
        case Fn::Cos: return std::cos(x);
        case Fn::Exp: return std::exp(x);
        case Fn::Log: return std::log(x);
        case Fn::Sqrt: return std::sqrt(x);
        case Fn::Cosh: return std::cosh(x);
        case Fn::Sinh: return std::sinh(x);
        case Fn::Abs: return std::abs(x);
        case Fn::Sign: return (x > 0.0) - (x < 0.0);
      }
      return 0.0;
    }
  }
  return 0.0;
}

inline bool Expr::depends(const Node& n, VarRef v) {
  switch (n.op) {
    case Op::Num:
      return false;
    case Op::Var:
      return n.var == v;
    case Op::Neg:
    case Op::Call:
      return depends(*n.a, v);
    default:
      return depends(*n.a, v) || depends(*n.b, v);
  }
}

inline Expr::NodePtr Expr::diff_node(const NodePtr& n, VarRef v) {
  switch (n->op) {
    case Op::Num:
      return num(0.0);
    case Op::Var:
      return num(n->var == v ? 1.0 : 0.0);
    case Op::Neg:
      return neg(diff_node(n->a, v));
    case Op::Add:
      return binary(Op::Add, diff_node(n->a, v), diff_node(n->b, v));
    case Op::Sub:
      return binary(Op::Sub, diff_node(n->a, v), diff_node(n->b, v));
    case Op::Mul:
      return binary(Op::Add, binary(Op::Mul, diff_node(n->a, v), n->b),
                    binary(Op::Mul, n->a, diff_node(n->b, v)));
    case Op::Div: {
      // (a'b - ab') / b^2
      auto top = binary(Op::Sub, binary(Op::Mul, diff_node(n->a, v), n->b),
                        binary(Op::Mul, n->a, diff_node(n->b, v)));
      return binary(Op::Div, top, binary(Op::Mul, n->b, n->b));
    }
    case Op::Pow: {
      auto da = diff_node(n->a, v);
      if (!depends(*n->b, v)) {
        auto reduced = binary(Op::Sub, n->b, num(1.0));
        return binary(Op::Mul, binary(Op::Mul, n->b, binary(Op::Pow, n->a, reduced)), da);
      }
      // a^b (b' log a + b a'/a)
      auto db = diff_node(n->b, v);
      auto inner = binary(Op::Add, binary(Op::Mul, db, call(Fn::Log, n->a)),
                          binary(Op::Div, binary(Op::Mul, n->b, da), n->a));
      return binary(Op::Mul, n, inner);
    }
    case Op::Call: {
      auto da = diff_node(n->a, v);
      if (is_num(da, 0.0)) return num(0.0);
      NodePtr outer;
      switch (n->fn) {
        case Fn::Sin: outer = call(Fn::Cos, n->a); break;
        case Fn::Cos: outer = neg(call(Fn::Sin, n->a)); break;
        case Fn::Exp: outer = n; break;
        case Fn::Log: outer = binary(Op::Div, num(1.0), n->a); break;
        case Fn::Sqrt: outer = binary(Op::Div, num(0.5), n); break;
        case Fn::Cosh: outer = call(Fn::Sinh, n->a); break;
        case Fn::Sinh: outer = call(Fn::Cosh, n->a); break;
        case Fn::Abs: outer = call(Fn::Sign, n->a); break;
        case Fn::Sign: return num(0.0);
      }
      return binary(Op::Mul, outer, da);
    }
  }
  return num(0.0);
}

}  // namespace gpwc
