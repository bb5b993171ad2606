#ifndef SPI_CLASSICAL_HPP
#define SPI_CLASSICAL_HPP

#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "spi/expr.hpp"
#include "spi/jet.hpp"

namespace spi::classical {

struct SolverConfig {
  double rtol = 1e-12;
  double atol = 1e-13;
  int max_steps = 200000;
  int min_steps = 200;  // the step size never exceeds (t1 - t0) / min_steps
  int max_newton = 60;
  double newton_tol = 1e-12;  // on |q(t1) - q1|, scaled by 1 + |q1|
  double focal_tol = 1e-8;    // on |det dq(t1)/dv0|, scaled by T^d
};

struct Problem {
  int dim = 1;
  expr::Expression lagrangian;
  double t0 = 0.0, t1 = 1.0;
  Eigen::VectorXd q0, q1, v0_guess;
  SolverConfig solver;

  /// Same Lagrangian and solver settings on another interval.
  Problem with_endpoints(double t0, const Eigen::VectorXd& q0, double t1, const Eigen::VectorXd& q1) const;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class FocalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NotConvexError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pointwise data of the flow at one time.
struct FlowSample {
  double t = 0.0;
  Eigen::VectorXd q, v, acc;
  Eigen::MatrixXd phi, dphi;  // d(q,v)/d(q0,v0) and its time derivative, 2d x 2d
};

/// A solved classical path with its variational data.
class Trajectory {
 public:
  const Problem& problem() const { return *problem_; }
  int dim() const { return problem_->dim; }
  double t0() const { return problem_->t0; }
  double t1() const { return problem_->t1; }

  /// Step grid of the integrator.
  std::vector<double> times() const;
  const Eigen::VectorXd& initial_velocity() const { return v0_; }

  Eigen::VectorXd position(double t) const;
  Eigen::VectorXd velocity(double t) const;
  Eigen::VectorXd acceleration(double t) const;

  /// Jacobi fields phi^a = d gamma / d q_a and their first and second
  /// time derivatives (deriv = 0, 1, 2).
  Eigen::MatrixXd jacobi(int a, double t, int deriv = 0) const;

  /// Jet of L at (t, gamma'(t), gamma(t)).
  Jet lagrangian_jet(double t, int order) const;

  /// dq(t1)/dv0.
  const Eigen::MatrixXd& flow_jacobian() const { return dqdv_t1_; }
  bool nonfocal() const { return nonfocal_; }
  double action() const { return action_; }

 private:
  friend Trajectory solve_bvp(const Problem&);

  std::shared_ptr<const Problem> problem_;
  std::vector<FlowSample> nodes_;
  Eigen::VectorXd v0_;
  Eigen::MatrixXd dqdv_t1_, dqdv_t1_inv_, dqdq_t1_;
  bool nonfocal_ = false;
  double action_ = 0.0;
};

Trajectory solve_bvp(const Problem& problem);

/// S = integral of L along the path.
double action(const Trajectory& traj);

/// (dS/dq0, dS/dq1) = (-dL/dv at t0, dL/dv at t1).
std::pair<Eigen::VectorXd, Eigen::VectorXd> s_gradients(const Trajectory& traj);

struct VanVleck {
  Eigen::MatrixXd W;  // W(l, m) = d^2(-S) / dq0^l dq1^m
  double abs_det = 0.0;
};
VanVleck van_vleck(const Trajectory& traj);

/// Same matrix from the other endpoint; agrees with van_vleck up to
/// integration error.
Eigen::MatrixXd van_vleck_from_start(const Trajectory& traj);

/// Second derivatives d^2 S / dq_a dq_a for a = 0, 1.
Eigen::MatrixXd s_hessian(const Trajectory& traj, int a);

bool nonfocal_check(const Trajectory& traj);

struct MorseConfig {
  int initial_elements = 8;
  int max_elements = 512;
  int quad_points = 4;
  double negative_tol = 1e-10;    // relative to the largest |eigenvalue|
  double degenerate_tol = 1e-4;   // extrapolated smallest |eigenvalue| vs. max|a|/T^2
};

class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Number of negative eigenvalues of the second variation on based loops,
/// from a refined piecewise-linear Galerkin discretization.
int morse_index(const Trajectory& traj, const MorseConfig& cfg = {});

}  // namespace spi::classical

#endif  // SPI_CLASSICAL_HPP
