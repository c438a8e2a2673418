#pragma once

// Arithmetic expressions in two variables, `x` (arclength) and `a` (control),
// used to write edge dynamics and running costs in problem files.
//
// Grammar:
//   expr  := term (('+'|'-') term)*
//   term  := unary (('*'|'/') unary)*
//   unary := '-' unary | power
//   power := atom ('^' unary)?
//   atom  := number | 'x' | 'a' | 'pi' | func '(' expr (',' expr)? ')' | '(' expr ')'
//   func  := sin | cos | exp | abs | min | max        (min, max take two arguments)

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "junction_hjb/errors.hpp"

namespace junction_hjb {

enum class Op : std::uint8_t {
  Literal,
  VarX,
  VarA,
  Pi,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Neg,
  Sin,
  Cos,
  Exp,
  Abs,
  Min,
  Max,
};

constexpr int arity(Op op) noexcept {
  switch (op) {
    case Op::Literal:
    case Op::VarX:
    case Op::VarA:
    case Op::Pi:
      return 0;
    case Op::Neg:
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Abs:
      return 1;
    default:
      return 2;
  }
}

/// Immutable expression tree stored as a post-order node array (root last).
/// Literal values are finite and nonnegative; negation is always a `Neg` node.
class Expression {
 public:
  struct Node {
    Op op = Op::Literal;
    double value = 0.0;
    std::int32_t lhs = -1;
    std::int32_t rhs = -1;
  };

  Expression() : nodes_{Node{Op::Literal, 0.0}} {}

  static Expression literal(double value) {
    if (!std::isfinite(value)) throw Error("expression literal must be finite");
    if (value < 0.0 || (value == 0.0 && std::signbit(value))) {
      return unary(Op::Neg, literal(-value));
    }
    Expression e;
    e.nodes_[0] = Node{Op::Literal, value};
    return e;
  }
  static Expression x() { return leaf(Op::VarX); }
  static Expression a() { return leaf(Op::VarA); }
  static Expression pi() { return leaf(Op::Pi); }

  static Expression unary(Op op, const Expression& operand) {
    if (arity(op) != 1) throw Error("operator is not unary");
    Expression e;
    e.nodes_.clear();
    auto root = e.append(operand);
    e.nodes_.push_back(Node{op, 0.0, root, -1});
    return e;
  }

  static Expression binary(Op op, const Expression& lhs, const Expression& rhs) {
    if (arity(op) != 2) throw Error("operator is not binary");
    Expression e;
    e.nodes_.clear();
    auto l = e.append(lhs);
    auto r = e.append(rhs);
    e.nodes_.push_back(Node{op, 0.0, l, r});
    return e;
  }

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::int32_t root() const noexcept { return static_cast<std::int32_t>(nodes_.size()) - 1; }
  const Node& node(std::int32_t i) const { return nodes_.at(static_cast<std::size_t>(i)); }

  /// Evaluates at (x, a). Throws EvalError on division by zero, 0 raised to a
  /// negative power, or any non-finite intermediate result.
  double evaluate(double x, double a) const { return eval(root(), x, a); }
  double operator()(double x, double a) const { return evaluate(x, a); }

  friend bool operator==(const Expression& lhs, const Expression& rhs) {
    return same(lhs, lhs.root(), rhs, rhs.root());
  }

 private:
  friend class ExpressionParser;

  static Expression leaf(Op op) {
    Expression e;
    e.nodes_[0] = Node{op, 0.0};
    return e;
  }

  std::int32_t append(const Expression& other) {
    const auto offset = static_cast<std::int32_t>(nodes_.size());
    for (Node n : other.nodes_) {
      if (n.lhs >= 0) n.lhs += offset;
      if (n.rhs >= 0) n.rhs += offset;
      nodes_.push_back(n);
    }
    return static_cast<std::int32_t>(nodes_.size()) - 1;
  }

  static bool same(const Expression& l, std::int32_t i, const Expression& r, std::int32_t j) {
    const Node& a = l.node(i);
    const Node& b = r.node(j);
    if (a.op != b.op) return false;
    switch (arity(a.op)) {
      case 0:
        return a.op != Op::Literal || a.value == b.value;
      case 1:
        return same(l, a.lhs, r, b.lhs);
      default:
        return same(l, a.lhs, r, b.lhs) && same(l, a.rhs, r, b.rhs);
    }
  }

  static double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw EvalError(std::string("non-finite result in ") + what);
    return v;
  }

  double eval(std::int32_t i, double x, double a) const {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    switch (n.op) {
      case Op::Literal:
        return n.value;
      case Op::VarX:
        return checked(x, "variable x");
      case Op::VarA:
        return checked(a, "variable a");
      case Op::Pi:
        return std::numbers::pi;
      case Op::Neg:
        return -eval(n.lhs, x, a);
      case Op::Sin:
        return checked(std::sin(eval(n.lhs, x, a)), "sin");
      case Op::Cos:
        return checked(std::cos(eval(n.lhs, x, a)), "cos");
      case Op::Exp:
        return checked(std::exp(eval(n.lhs, x, a)), "exp");
      case Op::Abs:
        return std::abs(eval(n.lhs, x, a));
      default:
        break;
    }
    const double l = eval(n.lhs, x, a);
    const double r = eval(n.rhs, x, a);
    switch (n.op) {
      case Op::Add:
        return checked(l + r, "addition");
      case Op::Sub:
        return checked(l - r, "subtraction");
      case Op::Mul:
        return checked(l * r, "multiplication");
      case Op::Div:
        if (r == 0.0) throw EvalError("division by zero");
        return checked(l / r, "division");
      case Op::Pow:
        if (l == 0.0 && r < 0.0) throw EvalError("zero raised to a negative power");
        return checked(std::pow(l, r), "power");
      case Op::Min:
        return std::min(l, r);
      case Op::Max:
        return std::max(l, r);
      default:
        throw EvalError("corrupt expression node");
    }
  }

  std::vector<Node> nodes_;
};

/// Recursive-descent parser for the grammar at the top of this header.
class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view source) : src_(source) {}

  Expression parse() {
    skip_space();
    if (pos_ == src_.size()) throw ParseError(pos_, "empty expression");
    out_.nodes_.clear();
    parse_expr();
    skip_space();
    if (pos_ != src_.size()) fail(std::string("unexpected '") + src_[pos_] + "'");
    return std::move(out_);
  }

 private:
  static constexpr int kMaxDepth = 200;

  struct FuncInfo {
    std::string_view name;
    Op op;
  };
  static constexpr std::array<FuncInfo, 6> kFunctions{{
      {"sin", Op::Sin},
      {"cos", Op::Cos},
      {"exp", Op::Exp},
      {"abs", Op::Abs},
      {"min", Op::Min},
      {"max", Op::Max},
  }};

  [[noreturn]] void fail(const std::string& message) const { throw ParseError(pos_, message); }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ == src_.size()) fail(std::string("expected '") + c + "' before end of input");
      fail(std::string("expected '") + c + "'");
    }
  }

  std::int32_t emit(Op op, std::int32_t lhs = -1, std::int32_t rhs = -1, double value = 0.0) {
    out_.nodes_.push_back(Expression::Node{op, value, lhs, rhs});
    return static_cast<std::int32_t>(out_.nodes_.size()) - 1;
  }

  struct DepthGuard {
    ExpressionParser& p;
    explicit DepthGuard(ExpressionParser& parser) : p(parser) {
      if (++p.depth_ > kMaxDepth) p.fail("expression nested too deeply");
    }
    ~DepthGuard() { --p.depth_; }
  };

  std::int32_t parse_expr() {
    DepthGuard guard(*this);
    auto lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        auto rhs = parse_term();
        lhs = emit(Op::Add, lhs, rhs);
      } else if (accept('-')) {
        auto rhs = parse_term();
        lhs = emit(Op::Sub, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  std::int32_t parse_term() {
    auto lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        auto rhs = parse_unary();
        lhs = emit(Op::Mul, lhs, rhs);
      } else if (accept('/')) {
        auto rhs = parse_unary();
        lhs = emit(Op::Div, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  std::int32_t parse_unary() {
    DepthGuard guard(*this);
    if (accept('-')) return emit(Op::Neg, parse_unary());
    return parse_power();
  }

  std::int32_t parse_power() {
    auto base = parse_atom();
    if (accept('^')) {
      auto exponent = parse_unary();
      return emit(Op::Pow, base, exponent);
    }
    return base;
  }

  std::int32_t parse_atom() {
    skip_space();
    if (pos_ == src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      auto inner = parse_expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail(std::string("unexpected '") + c + "'");
  }

  std::int32_t parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t mantissa = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) {
      pos_ = start;
      fail("malformed number");
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      const std::size_t mark = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) {
        pos_ = mark;
        fail("malformed exponent");
      }
    }
    double value = 0.0;
    const char* first = src_.data() + start;
    const char* last = src_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
      pos_ = start;
      fail("number out of range");
    }
    return emit(Op::Literal, -1, -1, value);
  }

  std::int32_t parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = src_.substr(start, pos_ - start);
    if (name == "x") return emit(Op::VarX);
    if (name == "a") return emit(Op::VarA);
    if (name == "pi") return emit(Op::Pi);
    for (const auto& fn : kFunctions) {
      if (fn.name != name) continue;
      if (!accept('(')) fail("function '" + std::string(name) + "' requires '('");
      const int expected = arity(fn.op);
      auto first = parse_expr();
      std::int32_t second = -1;
      int given = 1;
      while (accept(',')) {
        auto arg = parse_expr();
        if (given == 1) second = arg;
        ++given;
      }
      if (given != expected) {
        pos_ = start;
        fail("function '" + std::string(name) + "' takes " + std::to_string(expected) +
             " argument" + (expected == 1 ? "" : "s") + ", got " + std::to_string(given));
      }
      expect(')');
      return emit(fn.op, first, second);
    }
    pos_ = start;
    fail("unknown identifier '" + std::string(name) + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int depth_ = 0;
  Expression out_;
};

inline Expression parse(std::string_view source) { return ExpressionParser(source).parse(); }

namespace detail {

/// Shortest decimal text that reads back to exactly `value`.
inline std::string shortest(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf.data(), ptr);
}

inline void format_into(const Expression& e, std::int32_t i, std::string& out) {
  const auto& n = e.node(i);
  auto bin = [&](const char* sym) {
    out += '(';
    format_into(e, n.lhs, out);
    out += sym;
    format_into(e, n.rhs, out);
    out += ')';
  };
  auto call = [&](const char* name) {
    out += name;
    out += '(';
    format_into(e, n.lhs, out);
    if (n.rhs >= 0) {
      out += ", ";
      format_into(e, n.rhs, out);
    }
    out += ')';
  };
  switch (n.op) {
    case Op::Literal: out += shortest(n.value); break;
    case Op::VarX: out += 'x'; break;
    case Op::VarA: out += 'a'; break;
    case Op::Pi: out += "pi"; break;
    case Op::Add: bin(" + "); break;
    case Op::Sub: bin(" - "); break;
    case Op::Mul: bin(" * "); break;
    case Op::Div: bin(" / "); break;
    case Op::Pow: bin(" ^ "); break;
    case Op::Neg:
      out += "(-";
      format_into(e, n.lhs, out);
      out += ')';
      break;
    case Op::Sin: call("sin"); break;
    case Op::Cos: call("cos"); break;
    case Op::Exp: call("exp"); break;
    case Op::Abs: call("abs"); break;
    case Op::Min: call("min"); break;
    case Op::Max: call("max"); break;
  }
}

}  // namespace detail

/// Canonical, fully parenthesized text. `parse(format(e)) == e` for every tree.
inline std::string format(const Expression& e) {
  std::string out;
  detail::format_into(e, e.root(), out);
  return out;
}

}  // namespace junction_hjb
