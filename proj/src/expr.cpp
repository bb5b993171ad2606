#include "spi/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace spi::expr {

NodePtr make_number(double value) {
  if (value < 0.0 || (value == 0.0 && std::signbit(value))) return make_neg(make_number(-value));
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Number;
  n->value = value;
  return n;
}

NodePtr make_variable(int slot) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Variable;
  n->slot = slot;
  return n;
}

NodePtr make_parameter(std::string name, double value) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Parameter;
  n->name = std::move(name);
  n->value = value;
  return n;
}

NodePtr make_binary(NodeKind kind, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

NodePtr make_neg(NodePtr arg) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Neg;
  n->lhs = std::move(arg);
  return n;
}

NodePtr make_func(FuncKind func, NodePtr arg) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Func;
  n->func = func;
  n->lhs = std::move(arg);
  return n;
}

namespace {

const char* func_name(FuncKind f) {
  switch (f) {
    case FuncKind::Sin: return "sin";
    case FuncKind::Cos: return "cos";
    case FuncKind::Exp: return "exp";
    case FuncKind::Log: return "log";
    case FuncKind::Sqrt: return "sqrt";
    case FuncKind::Tanh: return "tanh";
  }
  return "?";
}

bool lookup_func(std::string_view name, FuncKind& out) {
  static constexpr std::pair<std::string_view, FuncKind> table[] = {
      {"sin", FuncKind::Sin},   {"cos", FuncKind::Cos},   {"exp", FuncKind::Exp},
      {"log", FuncKind::Log},   {"sqrt", FuncKind::Sqrt}, {"tanh", FuncKind::Tanh}};
  for (const auto& [n, f] : table) {
    if (n == name) {
      out = f;
      return true;
    }
  }
  return false;
}

double checked(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string("non-finite result in ") + what);
  return x;
}

double eval_node(const Node& n, std::span<const double> p) {
  switch (n.kind) {
    case NodeKind::Number:
    case NodeKind::Parameter: return n.value;
    case NodeKind::Variable: return p[n.slot];
    case NodeKind::Add: return eval_node(*n.lhs, p) + eval_node(*n.rhs, p);
    case NodeKind::Sub: return eval_node(*n.lhs, p) - eval_node(*n.rhs, p);
    case NodeKind::Mul: return eval_node(*n.lhs, p) * eval_node(*n.rhs, p);
    case NodeKind::Div: {
      double d = eval_node(*n.rhs, p);
      if (d == 0.0) throw DomainError("division by zero");
      return eval_node(*n.lhs, p) / d;
    }
    case NodeKind::Pow: {
      double a = eval_node(*n.lhs, p);
      double b = eval_node(*n.rhs, p);
      if (a <= 0.0 && b != std::round(b)) throw DomainError("non-integer power of a non-positive base");
      return checked(std::pow(a, b), "power");
    }
    case NodeKind::Neg: return -eval_node(*n.lhs, p);
    case NodeKind::Func: {
      double x = eval_node(*n.lhs, p);
      switch (n.func) {
        case FuncKind::Sin: return std::sin(x);
        case FuncKind::Cos: return std::cos(x);
        case FuncKind::Exp: return checked(std::exp(x), "exp");
        case FuncKind::Log:
          if (x <= 0.0) throw DomainError("log of non-positive value");
          return std::log(x);
        case FuncKind::Sqrt:
          if (x <= 0.0) throw DomainError("sqrt of non-positive value");
          return std::sqrt(x);
        case FuncKind::Tanh: return std::tanh(x);
      }
    }
  }
  return 0.0;
}

bool node_depends_on(const Node& n, int slot) {
  if (n.kind == NodeKind::Variable) return n.slot == slot;
  if (n.lhs && node_depends_on(*n.lhs, slot)) return true;
  if (n.rhs && node_depends_on(*n.rhs, slot)) return true;
  return false;
}

class Parser {
 public:
  Parser(std::string_view src, int dim, const ParameterMap& params)
      : src_(src), dim_(dim), params_(params) {}

  NodePtr run() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("empty expression", pos_);
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ < src_.size()) throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+')) lhs = make_binary(NodeKind::Add, lhs, parse_term());
      else if (accept('-')) lhs = make_binary(NodeKind::Sub, lhs, parse_term());
      else return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    for (;;) {
      if (accept('*')) lhs = make_binary(NodeKind::Mul, lhs, parse_factor());
      else if (accept('/')) lhs = make_binary(NodeKind::Div, lhs, parse_factor());
      else return lhs;
    }
  }

  NodePtr parse_factor() {
    if (accept('-')) return make_neg(parse_factor());
    NodePtr base = parse_atom();
    if (accept('^')) return make_binary(NodeKind::Pow, base, parse_factor());
    return base;
  }

  NodePtr parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  NodePtr parse_number() {
    std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_, ++n;
      return n;
    };
    std::size_t n = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) throw ParseError("malformed number", start);
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;
    }
    std::string text(src_.substr(start, pos_ - start));
    return make_number(std::strtod(text.c_str(), nullptr));
  }

  NodePtr parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    std::string_view id = src_.substr(start, pos_ - start);

    FuncKind f;
    if (lookup_func(id, f)) {
      if (!accept('(')) throw ParseError("expected '(' after " + std::string(id), pos_);
      NodePtr arg = parse_expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return make_func(f, arg);
    }
    VarLayout lay{dim_};
    if (id == "tau") return make_variable(VarLayout::tau());
    if (dim_ == 1 && id == "v") return make_variable(lay.v(0));
    if (dim_ == 1 && id == "q") return make_variable(lay.q(0));
    if ((id[0] == 'v' || id[0] == 'q') && id.size() > 1 &&
        id.find_first_not_of("0123456789", 1) == std::string_view::npos) {
      int k = std::atoi(std::string(id.substr(1)).c_str());
      if (k < 1 || k > dim_)
        throw ParseError("variable " + std::string(id) + " exceeds dimension " + std::to_string(dim_),
                         start);
      return make_variable(id[0] == 'v' ? lay.v(k - 1) : lay.q(k - 1));
    }
    auto it = params_.find(std::string(id));
    if (it != params_.end()) return make_parameter(it->first, it->second);
    throw ParseError("unknown identifier '" + std::string(id) + "'", start);
  }

  std::string_view src_;
  int dim_;
  const ParameterMap& params_;
  std::size_t pos_ = 0;
};

void print_node(const Node& n, int dim, std::string& out) {
  VarLayout lay{dim};
  switch (n.kind) {
    case NodeKind::Number: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      out += buf;
      return;
    }
    case NodeKind::Parameter: out += n.name; return;
    case NodeKind::Variable:
      if (n.slot == VarLayout::tau()) out += "tau";
      else if (n.slot <= dim) out += "v" + std::to_string(n.slot);
      else out += "q" + std::to_string(n.slot - dim);
      (void)lay;
      return;
    case NodeKind::Neg:
      out += "(-";
      print_node(*n.lhs, dim, out);
      out += ")";
      return;
    case NodeKind::Func:
      out += func_name(n.func);
      out += "(";
      print_node(*n.lhs, dim, out);
      out += ")";
      return;
    default: break;
  }
  char op = '+';
  switch (n.kind) {
    case NodeKind::Add: op = '+'; break;
    case NodeKind::Sub: op = '-'; break;
    case NodeKind::Mul: op = '*'; break;
    case NodeKind::Div: op = '/'; break;
    case NodeKind::Pow: op = '^'; break;
    default: break;
  }
  out += "(";
  print_node(*n.lhs, dim, out);
  out += op;
  print_node(*n.rhs, dim, out);
  out += ")";
}

NodePtr diff_node(const NodePtr& np, int slot) {
  const Node& n = *np;
  auto zero = [] { return make_number(0.0); };
  switch (n.kind) {
    case NodeKind::Number:
    case NodeKind::Parameter: return zero();
    case NodeKind::Variable: return make_number(n.slot == slot ? 1.0 : 0.0);
    case NodeKind::Add: return make_binary(NodeKind::Add, diff_node(n.lhs, slot), diff_node(n.rhs, slot));
    case NodeKind::Sub: return make_binary(NodeKind::Sub, diff_node(n.lhs, slot), diff_node(n.rhs, slot));
    case NodeKind::Neg: return make_neg(diff_node(n.lhs, slot));
    case NodeKind::Mul:
      return make_binary(NodeKind::Add, make_binary(NodeKind::Mul, diff_node(n.lhs, slot), n.rhs),
                         make_binary(NodeKind::Mul, n.lhs, diff_node(n.rhs, slot)));
    case NodeKind::Div: {
      // (a/b)' = a'/b - a b' / b^2
      NodePtr t1 = make_binary(NodeKind::Div, diff_node(n.lhs, slot), n.rhs);
      NodePtr t2 = make_binary(NodeKind::Div, make_binary(NodeKind::Mul, n.lhs, diff_node(n.rhs, slot)),
                               make_binary(NodeKind::Pow, n.rhs, make_number(2.0)));
      return make_binary(NodeKind::Sub, t1, t2);
    }
    case NodeKind::Pow: {
      if (!node_depends_on(*n.rhs, slot)) {
        // (a^b)' = b a^(b-1) a'
        NodePtr bm1 = make_binary(NodeKind::Sub, n.rhs, make_number(1.0));
        return make_binary(NodeKind::Mul,
                           make_binary(NodeKind::Mul, n.rhs, make_binary(NodeKind::Pow, n.lhs, bm1)),
                           diff_node(n.lhs, slot));
      }
      // (a^b)' = a^b (b' log a + b a'/a)
      NodePtr t1 = make_binary(NodeKind::Mul, diff_node(n.rhs, slot), make_func(FuncKind::Log, n.lhs));
      NodePtr t2 = make_binary(NodeKind::Div, make_binary(NodeKind::Mul, n.rhs, diff_node(n.lhs, slot)), n.lhs);
      return make_binary(NodeKind::Mul, np, make_binary(NodeKind::Add, t1, t2));
    }
    case NodeKind::Func: {
      NodePtr inner = diff_node(n.lhs, slot);
      NodePtr outer;
      switch (n.func) {
        case FuncKind::Sin: outer = make_func(FuncKind::Cos, n.lhs); break;
        case FuncKind::Cos: outer = make_neg(make_func(FuncKind::Sin, n.lhs)); break;
        case FuncKind::Exp: outer = np; break;
        case FuncKind::Log: outer = make_binary(NodeKind::Div, make_number(1.0), n.lhs); break;
        case FuncKind::Sqrt:
          outer = make_binary(NodeKind::Div, make_number(1.0), make_binary(NodeKind::Mul, make_number(2.0), np));
          break;
        case FuncKind::Tanh:
          outer = make_binary(NodeKind::Sub, make_number(1.0), make_binary(NodeKind::Pow, np, make_number(2.0)));
          break;
      }
      return make_binary(NodeKind::Mul, outer, inner);
    }
  }
  return zero();
}

NodePtr subst_node(const NodePtr& np, std::span<const NodePtr> repl) {
  const Node& n = *np;
  switch (n.kind) {
    case NodeKind::Number:
    case NodeKind::Parameter: return np;
    case NodeKind::Variable: return repl[n.slot];
    case NodeKind::Neg: return make_neg(subst_node(n.lhs, repl));
    case NodeKind::Func: return make_func(n.func, subst_node(n.lhs, repl));
    default: return make_binary(n.kind, subst_node(n.lhs, repl), subst_node(n.rhs, repl));
  }
}

}  // namespace

Expression::Expression(NodePtr root, int dim) : root_(std::move(root)), dim_(dim) {
  if (dim_ < 1) throw std::invalid_argument("dimension must be positive");
}

double Expression::evaluate(std::span<const double> point) const {
  if (static_cast<int>(point.size()) != 2 * dim_ + 1)
    throw std::invalid_argument("evaluation point has wrong size");
  return checked(eval_node(*root_, point), "expression");
}

bool Expression::depends_on(int slot) const { return node_depends_on(*root_, slot); }

Expression parse(std::string_view source, int dimension, const ParameterMap& parameters) {
  if (dimension < 1) throw std::invalid_argument("dimension must be positive");
  Parser p(source, dimension, parameters);
  return Expression(p.run(), dimension);
}

std::string print(const Expression& e) {
  std::string out;
  print_node(e.root(), e.dimension(), out);
  return out;
}

bool structurally_equal(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::Number: return a.value == b.value;
    case NodeKind::Parameter: return a.name == b.name && a.value == b.value;
    case NodeKind::Variable: return a.slot == b.slot;
    case NodeKind::Neg: return structurally_equal(*a.lhs, *b.lhs);
    case NodeKind::Func: return a.func == b.func && structurally_equal(*a.lhs, *b.lhs);
    default: return structurally_equal(*a.lhs, *b.lhs) && structurally_equal(*a.rhs, *b.rhs);
  }
}

namespace {

int degree_node(const Node& n, std::span<const int> slots) {
  switch (n.kind) {
    case NodeKind::Number:
    case NodeKind::Parameter:
      return 0;
    case NodeKind::Variable:
      return std::find(slots.begin(), slots.end(), n.slot) != slots.end() ? 1 : 0;
    case NodeKind::Neg:
      return degree_node(*n.lhs, slots);
    case NodeKind::Add:
    case NodeKind::Sub: {
      int a = degree_node(*n.lhs, slots), b = degree_node(*n.rhs, slots);
      return a < 0 || b < 0 ? -1 : std::max(a, b);
    }
    case NodeKind::Mul: {
      int a = degree_node(*n.lhs, slots), b = degree_node(*n.rhs, slots);
      return a < 0 || b < 0 ? -1 : a + b;
    }
    case NodeKind::Div:
      return degree_node(*n.rhs, slots) == 0 ? degree_node(*n.lhs, slots) : -1;
    case NodeKind::Pow: {
      int a = degree_node(*n.lhs, slots), b = degree_node(*n.rhs, slots);
      if (a == 0 && b == 0) return 0;
      if (a < 0 || b != 0 || n.rhs->kind != NodeKind::Number) return -1;
      double k = n.rhs->value;
      if (k != std::floor(k) || k > 64) return -1;
      return a * static_cast<int>(k);
    }
    case NodeKind::Func:
      return degree_node(*n.lhs, slots) == 0 ? 0 : -1;
  }
  return -1;
}

}  // namespace

int polynomial_degree(const Expression& e, std::span<const int> slots) { return degree_node(e.root(), slots); }

Expression differentiate(const Expression& e, int slot) {
  return Expression(diff_node(e.root_ptr(), slot), e.dimension());
}

Expression substitute(const Expression& e, std::span<const NodePtr> replacements, int dim) {
  if (static_cast<int>(replacements.size()) != e.layout().count())
    throw std::invalid_argument("substitute: one replacement per variable slot required");
  return Expression(subst_node(e.root_ptr(), replacements), dim);
}

}  // namespace spi::expr
