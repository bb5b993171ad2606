#ifndef SPI_DELTA_POLY_HPP
#define SPI_DELTA_POLY_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace spi {

/// Polynomial in the formal symbol D0 = delta(0). Degrees are structural:
/// a coefficient that happens to vanish numerically is kept.
class DeltaPoly {
 public:
  DeltaPoly() : c_(1, 0.0) {}
  explicit DeltaPoly(double c0) : c_(1, c0) {}
  explicit DeltaPoly(std::vector<double> coeffs) : c_(std::move(coeffs)) {
    if (c_.empty()) c_.push_back(0.0);
  }

  int degree() const { return static_cast<int>(c_.size()) - 1; }
  double operator[](int k) const { return k >= 0 && k <= degree() ? c_[k] : 0.0; }
  const std::vector<double>& coefficients() const { return c_; }
  double finite() const { return c_[0]; }

  void add(int k, double value) {
    if (k > degree()) c_.resize(k + 1, 0.0);
    c_[k] += value;
  }

  DeltaPoly& operator+=(const DeltaPoly& o) {
    for (int k = 0; k <= o.degree(); ++k) add(k, o.c_[k]);
    return *this;
  }
  DeltaPoly& operator*=(double s) {
    for (double& x : c_) x *= s;
    return *this;
  }
  friend DeltaPoly operator+(DeltaPoly a, const DeltaPoly& b) { return a += b; }
  friend DeltaPoly operator*(DeltaPoly a, double s) { return a *= s; }
  friend DeltaPoly operator*(const DeltaPoly& a, const DeltaPoly& b) {
    DeltaPoly r(std::vector<double>(a.c_.size() + b.c_.size() - 1, 0.0));
    for (int i = 0; i <= a.degree(); ++i)
      for (int j = 0; j <= b.degree(); ++j) r.c_[i + j] += a.c_[i] * b.c_[j];
    return r;
  }

  double max_abs() const {
    double m = 0;
    for (double x : c_) m = std::max(m, std::abs(x));
    return m;
  }

 private:
  std::vector<double> c_;
};

}  // namespace spi

#endif  // SPI_DELTA_POLY_HPP
