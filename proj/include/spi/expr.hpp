#ifndef SPI_EXPR_HPP
#define SPI_EXPR_HPP

#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spi::expr {

/// Variable slots of a Lagrangian on R^d: slot 0 is tau, slots 1..d are the
/// velocities v1..vd, slots d+1..2d are the positions q1..qd.
struct VarLayout {
  int dim = 1;

  int count() const { return 2 * dim + 1; }
  static constexpr int tau() { return 0; }
  int v(int i) const { return 1 + i; }
  int q(int i) const { return 1 + dim + i; }
};

enum class NodeKind { Number, Variable, Parameter, Add, Sub, Mul, Div, Pow, Neg, Func };
enum class FuncKind { Sin, Cos, Exp, Log, Sqrt, Tanh };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind = NodeKind::Number;
  double value = 0.0;  // Number literal (always >= 0) or bound Parameter value
  int slot = -1;       // Variable
  FuncKind func = FuncKind::Sin;
  std::string name;    // Parameter
  NodePtr lhs;
  NodePtr rhs;
};

// Node factories. make_number folds a negative value into Neg(Number).
NodePtr make_number(double value);
NodePtr make_variable(int slot);
NodePtr make_parameter(std::string name, double value);
NodePtr make_binary(NodeKind kind, NodePtr lhs, NodePtr rhs);
NodePtr make_neg(NodePtr arg);
NodePtr make_func(FuncKind func, NodePtr arg);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Raised when a function is evaluated outside its domain (log/sqrt of a
/// non-positive value, division by zero) or a result is not finite.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An immutable expression in tau, v1..vd, q1..qd and named parameters.
class Expression {
 public:
  Expression() = default;
  Expression(NodePtr root, int dim);

  int dimension() const { return dim_; }
  VarLayout layout() const { return VarLayout{dim_}; }
  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }

  /// Pointwise value; `point` holds the 2d+1 slot values.
  double evaluate(std::span<const double> point) const;

  /// True when some Variable node refers to `slot`.
  bool depends_on(int slot) const;

 private:
  NodePtr root_;
  int dim_ = 1;
};

using ParameterMap = std::map<std::string, double>;

/// Parses the grammar
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := ('-' factor) | power
///   power  := atom ('^' factor)?
///   atom   := number | ident | func '(' expr ')' | '(' expr ')'
/// Identifiers: tau, v1..vd, q1..qd (v, q when d = 1), parameter names.
Expression parse(std::string_view source, int dimension, const ParameterMap& parameters = {});

/// Fully parenthesized text that parses back to a structurally identical tree.
std::string print(const Expression& e);

bool structurally_equal(const Node& a, const Node& b);
inline bool structurally_equal(const Expression& a, const Expression& b) {
  return a.dimension() == b.dimension() && structurally_equal(a.root(), b.root());
}

/// Upper bound on the total polynomial degree of e in the given slots, or -1
/// when e is not structurally a polynomial in them.
int polynomial_degree(const Expression& e, std::span<const int> slots);

/// d e / d x_slot, unsimplified.
Expression differentiate(const Expression& e, int slot);

/// Replaces each variable slot s by replacements[s]. The result lives in
/// dimension `dim`; replacement trees must already use that layout.
Expression substitute(const Expression& e, std::span<const NodePtr> replacements, int dim);

}  // namespace spi::expr

#endif  // SPI_EXPR_HPP
