#ifndef SPI_QUADRATURE_HPP
#define SPI_QUADRATURE_HPP

#include <vector>

namespace spi {

/// Gauss–Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

/// Cached rule with n points; thread-safe.
const GaussRule& gauss_legendre(int n);

/// Integral of f over [a, b] using `panels` equal panels of an n-point rule.
template <class F>
double integrate(F&& f, double a, double b, int n = 16, int panels = 1) {
  const GaussRule& g = gauss_legendre(n);
  double h = (b - a) / panels, s = 0.0;
  for (int p = 0; p < panels; ++p) {
    double mid = a + (p + 0.5) * h, half = 0.5 * h;
    double part = 0.0;
    for (int k = 0; k < n; ++k) part += g.w[k] * f(mid + half * g.x[k]);
    s += part * half;
  }
  return s;
}

}  // namespace spi

#endif  // SPI_QUADRATURE_HPP
