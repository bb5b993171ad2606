#ifndef SPI_JET_HPP
#define SPI_JET_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "spi/expr.hpp"

namespace spi {

/// Monomial bookkeeping for truncated Taylor series in `nvars` variables up
/// to total degree `order`. Shared between all jets of the same shape.
class JetSpace {
 public:
  JetSpace(int nvars, int order);

  int nvars() const { return nvars_; }
  int order() const { return order_; }
  std::size_t size() const { return degree_.size(); }

  /// Exponent vector of monomial i (length nvars).
  std::span<const std::uint8_t> exponents(std::size_t i) const {
    return {exps_.data() + i * nvars_, static_cast<std::size_t>(nvars_)};
  }
  int degree(std::size_t i) const { return degree_[i]; }

  /// Index of the monomial with the given exponents, or -1 if its degree
  /// exceeds the truncation order.
  long index(std::span<const int> alpha) const;

  /// Product table: for monomial i, pairs (j, k) with x^i x^j = x^k.
  struct Term {
    std::uint32_t j, k;
  };
  std::span<const Term> products(std::size_t i) const {
    return {terms_.data() + term_start_[i], term_start_[i + 1] - term_start_[i]};
  }

 private:
  int nvars_;
  int order_;
  std::vector<std::uint8_t> exps_;
  std::vector<int> degree_;
  std::vector<std::int32_t> lookup_;  // dense over (order+1)^nvars
  std::vector<Term> terms_;
  std::vector<std::size_t> term_start_;
};

/// Cached, thread-safe access to the space for (nvars, order).
std::shared_ptr<const JetSpace> jet_space(int nvars, int order);

/// Truncated multivariate Taylor polynomial. Coefficient of monomial alpha
/// is d^alpha f / alpha!.
class Jet {
 public:
  Jet() = default;
  explicit Jet(std::shared_ptr<const JetSpace> space);
  static Jet constant(std::shared_ptr<const JetSpace> space, double c);
  static Jet variable(std::shared_ptr<const JetSpace> space, int var, double value);

  const JetSpace& space() const { return *space_; }
  const std::shared_ptr<const JetSpace>& space_ptr() const { return space_; }
  int order() const { return space_->order(); }
  double value() const { return c_[0]; }
  std::span<const double> coefficients() const { return c_; }
  std::span<double> coefficients() { return c_; }

  double coefficient(std::span<const int> alpha) const;
  /// The partial derivative d^alpha f.
  double partial(std::span<const int> alpha) const;
  /// Partial derivative with respect to the listed variables (a multiset).
  double partial_wrt(std::initializer_list<int> vars) const;
  double partial_wrt(std::span<const int> vars) const;

  bool is_constant() const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(double s);
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator*(Jet a, double s) { return a *= s; }
  Jet operator-() const;

 private:
  std::shared_ptr<const JetSpace> space_;
  std::vector<double> c_;
};

/// Composition f(u) given the Taylor coefficients f^(k)(u0)/k!, k = 0..N.
Jet compose(const Jet& u, std::span<const double> taylor);

Jet reciprocal(const Jet& u);
Jet jet_pow(const Jet& a, const Jet& b);

/// Jet of the expression at `point` (2d+1 values) over all 2d+1 variables.
Jet jet_eval(const expr::Expression& e, std::span<const double> point, int order);

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VelocityHessian {
  Eigen::MatrixXd a;
  Eigen::MatrixXd a_inv;
  bool positive_definite = false;
};

/// a_ij = d^2 L / dv_i dv_j from a Lagrangian jet over (tau, v, q).
VelocityHessian velocity_hessian(const Jet& jet);

}  // namespace spi

#endif  // SPI_JET_HPP
