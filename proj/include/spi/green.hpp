#ifndef SPI_GREEN_HPP
#define SPI_GREEN_HPP

#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "spi/classical.hpp"

namespace spi::green {

enum class Mode { VanVleck, VariationOfParameters };

/// A derivative of G split into its bounded part and the coefficient of
/// delta(s - t), present only for the mixed derivative d_s d_t.
struct GreenValue {
  Eigen::MatrixXd smooth;
  std::optional<Eigen::MatrixXd> delta;
};

/// Jacobi-field data at one time, reused across many edge evaluations.
struct Frame {
  double t = 0.0;
  Eigen::MatrixXd p0, dp0, p1, dp1;  // phi^0, phi^0', phi^1, phi^1'
  Eigen::MatrixXd a_inv;
};

class InconsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Green's function of the Jacobi operator along a nonfocal trajectory.
/// G(s, t) = phi1(s) W^-1 phi0(t)^T for s < t and phi0(s) W^-T phi1(t)^T
/// for s > t, with row index attached to s.
class GreenRep {
 public:
  static GreenRep build(const classical::Trajectory& traj, int grid = 201);

  const classical::Trajectory& trajectory() const { return *traj_; }
  int dim() const { return traj_->dim(); }
  double t0() const { return traj_->t0(); }
  double t1() const { return traj_->t1(); }
  const std::vector<double>& grid() const { return grid_; }

  Frame frame(double t) const;

  /// d_s^ds d_t^dt of the branch valid for s < t (branch 0) or s > t
  /// (branch 1), smooth everywhere.
  Eigen::MatrixXd branch(int which, const Frame& s, const Frame& t, int ds, int dt) const;

  /// Bounded part given the ordering of s and t: order = +1 for s < t,
  /// -1 for s > t, 0 on the diagonal (average of both branches).
  Eigen::MatrixXd smooth(const Frame& s, const Frame& t, int ds, int dt, int order) const;

  GreenValue eval(double s, double t, int ds, int dt, Mode mode = Mode::VanVleck) const;

  Eigen::MatrixXd a_inv(double t) const;

  /// D applied in t to G(s, -), by central differences of the branch on the
  /// side of t; ~0 away from the diagonal.
  Eigen::MatrixXd operator_residual(double s, double t, double h = 1e-4) const;

  /// Largest entrywise difference of the two constructions on an n x n grid.
  double mode_discrepancy(int n) const;

 private:
  Eigen::MatrixXd vop(double s, double t, int ds, int dt) const;

  std::shared_ptr<const classical::Trajectory> traj_;
  Eigen::MatrixXd Winv_, WinvT_;
  std::vector<double> grid_;
};

/// Grid dump with columns s, t, then G_ij (row-major), for the requested
/// derivative. The delta part is not included.
std::string dump_csv(const GreenRep& g, int n, int ds = 0, int dt = 0);

}  // namespace spi::green

#endif  // SPI_GREEN_HPP
