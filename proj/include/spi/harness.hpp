#ifndef SPI_HARNESS_HPP
#define SPI_HARNESS_HPP

#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "spi/amplitude.hpp"
#include "spi/config.hpp"

namespace spi::harness {

/// Input outside the hypotheses of the checked identity.
class DivergentInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateCriticalPoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotVolumePreserving : public std::runtime_error {
 public:
  NotVolumePreserving(const std::string& what, double det) : std::runtime_error(what), det_(det) {}
  double determinant() const { return det_; }

 private:
  double det_;
};

/// One compared quantity; passes when |lhs - rhs| <= atol + rtol * scale,
/// with scale the larger magnitude of the two sides.
struct Row {
  std::string quantity;
  int order = -1;  // loop order for series rows
  DeltaPoly lhs, rhs;
  double rtol = 0.0, atol = 0.0;

  double abs_residual() const;
  double rel_residual() const;
  bool pass() const;
};

struct CheckReport {
  std::string check;
  std::vector<Row> rows;
  std::vector<std::string> notes;
  std::map<std::string, std::string> config;
  double seconds = 0.0;

  bool pass() const;
  std::string to_json(int indent = 2) const;
  std::string to_text() const;
};

/// U over [t0, t1] against the stationary-phase integral over the
/// intermediate point of the product of the two sub-interval propagators.
/// Series orders are compared through min(loop_order, 1).
CheckReport fubini_check(const config::RunConfig& cfg);

/// Problem in new coordinates x with q = f(x): L~(tau, v, x) = L(tau, Df(x) v, f(x)),
/// endpoints f^-1(q0), f^-1(q1).
struct Transformed {
  classical::Problem problem;
  std::vector<expr::Expression> map;
  std::vector<std::vector<expr::Expression>> jacobian;

  Eigen::MatrixXd jacobian_at(const Eigen::VectorXd& x) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
};

Transformed transform_problem(const classical::Problem& p, const std::vector<std::string>& map);

CheckReport coordinate_check(const config::RunConfig& cfg);

struct SweepRow {
  double hbar = 0.0;
  int order = 0;
  std::complex<double> expansion, direct;
  double error = 0.0;  // |expansion / direct - 1|
};

struct SweepReport {
  std::vector<SweepRow> rows;
  /// order M -> observed convergence exponents between consecutive hbar values.
  std::map<int, std::vector<double>> observed_order;
  std::string to_csv() const;
};

/// Truncated expansions of a finite-dimensional oscillatory integral
/// against direct quadrature, critical point at the origin.
SweepReport stphase_sweep(const config::StphaseSettings& s);

struct DivergenceEntry {
  std::string origin;
  amplitude::PropagatorResult result;
  std::map<int, amplitude::OrderDivergence> report;
};

/// divergence_report over a batch of configurations; entries keep input order.
std::vector<DivergenceEntry> divergences(const std::vector<config::RunConfig>& cfgs);
std::string divergences_json(const std::vector<DivergenceEntry>& entries, int indent = 2);

/// Trajectory and Green's function for a configuration.
amplitude::PropagatorResult propagate(const config::RunConfig& cfg);

}  // namespace spi::harness

#endif  // SPI_HARNESS_HPP
