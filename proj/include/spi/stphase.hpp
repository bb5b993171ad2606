#ifndef SPI_STPHASE_HPP
#define SPI_STPHASE_HPP

#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace spi::stphase {

/// Fully symmetric tensor of rank r over R^N, one value per sorted
/// multi-index.
class SymTensor {
 public:
  SymTensor() = default;
  SymTensor(int dim, int rank);
  static SymTensor scalar(double v);
  static SymTensor from_matrix(const Eigen::MatrixXd& m);

  int dim() const { return dim_; }
  int rank() const { return rank_; }
  std::size_t size() const { return data_.size(); }

  /// Value at an arbitrary (unsorted) index tuple.
  double operator()(std::span<const int> idx) const;
  double& at(std::span<const int> idx);
  double operator()(std::initializer_list<int> idx) const {
    return (*this)(std::span<const int>(idx.begin(), idx.size()));
  }

  /// Sorted multi-indices in storage order.
  const std::vector<std::vector<int>>& indices() const { return *indices_; }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  double norm() const;
  SymTensor& operator*=(double s);

  /// Rank-2 views.
  Eigen::MatrixXd matrix() const;
  double determinant() const;
  Eigen::MatrixXd inverse() const;
  /// Number of negative eigenvalues.
  int signature() const;

  /// Tensor of the pulled-back function y -> f(T y): every slot contracted
  /// with T.
  SymTensor transformed(const Eigen::MatrixXd& T) const;

 private:
  std::size_t offset(std::span<const int> idx) const;
  int dim_ = 1;
  int rank_ = 0;
  std::shared_ptr<const std::vector<std::vector<int>>> indices_;
  std::vector<double> data_;
};

class GradientNotZero : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class SingularHessian : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class QuadratureFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sum over pairings of b contracted with (a^-1) on every pair.
double gaussian_moment(const SymTensor& b, const SymTensor& a);

/// Convention for the Morse sign factor.
enum class SignConvention { MinusI, MinusOne };

/// (2 pi i hbar)^{N/2} exp(i A(c)/hbar) sign^eta |det A2|^{-1/2}, stored
/// structurally.
struct Prefactor {
  int dimension = 0;  // N, so the hbar power is N/2
  double phase = 0.0;  // A(c)
  int eta = 0;
  double abs_det_hessian = 1.0;

  std::complex<double> sign(SignConvention c = SignConvention::MinusI) const;
  std::complex<double> value(double hbar, SignConvention c = SignConvention::MinusI) const;
};

struct AsymptoticExpansion {
  Prefactor prefactor;
  bool insertion = false;        // true when B was supplied
  std::map<int, double> series;  // loop order m -> coefficient of (i hbar)^m

  /// Numeric value with the series truncated at order M. With an insertion
  /// the factor (i hbar)^{-1} of the integrand is included.
  std::complex<double> evaluate(double hbar, int M, SignConvention c = SignConvention::MinusI) const;
};

/// Derivative tensors of a function at the critical point: entry n is the
/// rank-n tensor of n-th partials (entry 0 is the value).
using Derivatives = std::vector<SymTensor>;

/// Formal integral of exp(-(i hbar)^{-1} A), or of (i hbar)^{-1} B exp(...)
/// when B is given, truncated at loop order M.
AsymptoticExpansion formal_integral(const Derivatives& A, const Derivatives* B, int eta, int M);

/// Region box [lo_i, hi_i] for the numeric oracle.
struct Box {
  std::vector<double> lo, hi;
};

struct OracleConfig {
  int order = 20;           // points per panel
  int initial_panels = 64;  // per dimension
  int max_panels = 1 << 14;
  double rel_tol = 1e-11;
};

using Function = std::function<double(std::span<const double>)>;

/// Direct quadrature of (i hbar)^{-1} B exp(-(i hbar)^{-1} A) (or without B)
/// times a smooth bump that is 1 on the inner 60% of the box.
std::complex<double> numeric_oracle(const Function& A, const Function* B, const Box& region, double hbar,
                                    const OracleConfig& cfg = {});

}  // namespace spi::stphase

#endif  // SPI_STPHASE_HPP
