#include "spi/classical.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "spi/quadrature.hpp"

namespace spi::classical {

namespace {

struct Dynamics {
  Eigen::VectorXd acc;
  Eigen::MatrixXd jac_q, jac_v;  // d acc / d q, d acc / d v
};

std::vector<double> slot_point(int d, double t, const Eigen::VectorXd& q, const Eigen::VectorXd& v) {
  std::vector<double> p(2 * d + 1);
  p[0] = t;
  for (int i = 0; i < d; ++i) {
    p[1 + i] = v(i);
    p[1 + d + i] = q(i);
  }
  return p;
}

double pd(const Jet& j, std::initializer_list<int> vars) { return j.partial_wrt(vars); }

/// a q'' = L_q - L_{v tau} - L_{vq} v and the Jacobian of q'' in (q, v).
Dynamics dynamics(const expr::Expression& L, int d, double t, const Eigen::VectorXd& q, const Eigen::VectorXd& v) {
  expr::VarLayout lay{d};
  auto point = slot_point(d, t, q, v);
  Jet jet = jet_eval(L, point, 3);
  VelocityHessian vh = velocity_hessian(jet);
  const int tau = expr::VarLayout::tau();

  Eigen::VectorXd F(d);
  Eigen::MatrixXd dFq(d, d), dFv(d, d);
  for (int i = 0; i < d; ++i) {
    double f = pd(jet, {lay.q(i)}) - pd(jet, {lay.v(i), tau});
    for (int j = 0; j < d; ++j) f -= pd(jet, {lay.v(i), lay.q(j)}) * v(j);
    F(i) = f;
    for (int k = 0; k < d; ++k) {
      double gq = pd(jet, {lay.q(i), lay.q(k)}) - pd(jet, {lay.v(i), tau, lay.q(k)});
      double gv = pd(jet, {lay.q(i), lay.v(k)}) - pd(jet, {lay.v(i), tau, lay.v(k)}) - pd(jet, {lay.v(i), lay.q(k)});
      for (int j = 0; j < d; ++j) {
        gq -= pd(jet, {lay.v(i), lay.q(j), lay.q(k)}) * v(j);
        gv -= pd(jet, {lay.v(i), lay.q(j), lay.v(k)}) * v(j);
      }
      dFq(i, k) = gq;
      dFv(i, k) = gv;
    }
  }
  Dynamics out;
  out.acc = vh.a_inv * F;
  out.jac_q.resize(d, d);
  out.jac_v.resize(d, d);
  for (int k = 0; k < d; ++k) {
    Eigen::VectorXd rq = dFq.col(k), rv = dFv.col(k);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        rq(i) -= pd(jet, {lay.v(i), lay.v(j), lay.q(k)}) * out.acc(j);
        rv(i) -= pd(jet, {lay.v(i), lay.v(j), lay.v(k)}) * out.acc(j);
      }
    out.jac_q.col(k) = vh.a_inv * rq;
    out.jac_v.col(k) = vh.a_inv * rv;
  }
  return out;
}

// State layout: q (d), v (d), Phi (2d x 2d, column-major).
struct Flow {
  const expr::Expression& L;
  int d;

  int size() const { return 2 * d + 4 * d * d; }

  FlowSample unpack(double t, const Eigen::VectorXd& y) const {
    FlowSample s;
    s.t = t;
    s.q = y.segment(0, d);
    s.v = y.segment(d, d);
    s.phi = Eigen::Map<const Eigen::MatrixXd>(y.data() + 2 * d, 2 * d, 2 * d);
    return s;
  }

  /// Fills acc and dphi of `s` and returns dy/dt.
  Eigen::VectorXd rhs(FlowSample& s) const {
    Dynamics dyn = dynamics(L, d, s.t, s.q, s.v);
    s.acc = dyn.acc;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * d, 2 * d);
    J.block(0, d, d, d).setIdentity();
    J.block(d, 0, d, d) = dyn.jac_q;
    J.block(d, d, d, d) = dyn.jac_v;
    s.dphi = J * s.phi;
    Eigen::VectorXd dy(size());
    dy.segment(0, d) = s.v;
    dy.segment(d, d) = s.acc;
    Eigen::Map<Eigen::MatrixXd>(dy.data() + 2 * d, 2 * d, 2 * d) = s.dphi;
    return dy;
  }
};

/// Dormand-Prince 5(4) from t0 to t1 with identity initial variational data.
std::vector<FlowSample> integrate(const Problem& p, const Eigen::VectorXd& v0) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  const int d = p.dim;
  Flow flow{p.lagrangian, d};
  const SolverConfig& cfg = p.solver;
  const double T = p.t1 - p.t0;
  const double hmax = T / cfg.min_steps;

  Eigen::VectorXd y(flow.size());
  y.segment(0, d) = p.q0;
  y.segment(d, d) = v0;
  Eigen::Map<Eigen::MatrixXd>(y.data() + 2 * d, 2 * d, 2 * d).setIdentity();

  double t = p.t0;
  FlowSample cur = flow.unpack(t, y);
  Eigen::VectorXd k1 = flow.rhs(cur);
  std::vector<FlowSample> nodes{cur};

  double h = hmax;
  int steps = 0;
  while (t < p.t1) {
    if (++steps > cfg.max_steps) throw ConvergenceError("integrator: step limit exceeded");
    bool last = t + h >= p.t1 - 1e-14 * std::abs(T);
    if (last) h = p.t1 - t;
    auto eval = [&](double tt, const Eigen::VectorXd& yy) {
      FlowSample s = flow.unpack(tt, yy);
      return flow.rhs(s);
    };
    Eigen::VectorXd k2 = eval(t + c2 * h, y + h * a21 * k1);
    Eigen::VectorXd k3 = eval(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    Eigen::VectorXd k4 = eval(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    Eigen::VectorXd k5 = eval(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    Eigen::VectorXd k6 = eval(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Eigen::VectorXd ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    double tnew = last ? p.t1 : t + h;
    FlowSample next = flow.unpack(tnew, ynew);
    Eigen::VectorXd k7 = flow.rhs(next);
    Eigen::VectorXd err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double acc = 0;
    for (int i = 0; i < y.size(); ++i) {
      double sc = cfg.atol + cfg.rtol * std::max(std::abs(y(i)), std::abs(ynew(i)));
      acc += (err(i) / sc) * (err(i) / sc);
    }
    double enorm = std::sqrt(acc / y.size());
    if (!std::isfinite(enorm)) throw expr::DomainError("integrator: non-finite state");
    double factor = enorm == 0 ? 5.0 : std::clamp(0.9 * std::pow(enorm, -0.2), 0.2, 5.0);
    if (enorm <= 1.0) {
      t = tnew;
      y = ynew;
      k1 = k7;
      nodes.push_back(next);
      h = std::min(hmax, h * factor);
    } else {
      h *= factor;
      if (h < 1e-14 * std::abs(T)) throw ConvergenceError("integrator: step size underflow");
    }
  }
  return nodes;
}

// Quintic Hermite basis on [0, 1]: coefficients of s^0..s^5 for the value,
// first and second derivative data at both ends.
constexpr std::array<std::array<double, 6>, 6> kHermite{{
    {1, 0, 0, -10, 15, -6},
    {0, 1, 0, -6, 8, -3},
    {0, 0, 0.5, -1.5, 1.5, -0.5},
    {0, 0, 0, 10, -15, 6},
    {0, 0, 0, -4, 7, -3},
    {0, 0, 0, 0.5, -1, 0.5},
}};

/// k-th derivative in s of each basis polynomial.
std::array<double, 6> hermite_basis(double s, int k) {
  std::array<double, 6> out{};
  for (int b = 0; b < 6; ++b) {
    double acc = 0;
    for (int p = 5; p >= k; --p) {
      double c = kHermite[b][p];
      for (int r = 0; r < k; ++r) c *= p - r;
      acc = acc * s + c;
    }
    out[b] = acc;
  }
  return out;
}

}  // namespace

Problem Problem::with_endpoints(double t0_, const Eigen::VectorXd& q0_, double t1_, const Eigen::VectorXd& q1_) const {
  Problem p = *this;
  p.t0 = t0_;
  p.t1 = t1_;
  p.q0 = q0_;
  p.q1 = q1_;
  p.v0_guess = Eigen::VectorXd();
  return p;
}

std::vector<double> Trajectory::times() const {
  std::vector<double> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back(n.t);
  return out;
}

namespace {

struct TopInterp {
  Eigen::VectorXd q;
  Eigen::MatrixXd phi_top;  // d x 2d
};

TopInterp interp_top(const std::vector<FlowSample>& nodes, int d, double t, int deriv) {
  if (t < nodes.front().t - 1e-12 || t > nodes.back().t + 1e-12)
    throw std::out_of_range("trajectory: time outside the interval");
  t = std::clamp(t, nodes.front().t, nodes.back().t);
  auto it = std::upper_bound(nodes.begin(), nodes.end(), t, [](double x, const FlowSample& n) { return x < n.t; });
  std::size_t i = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
  if (i + 1 >= nodes.size()) i = nodes.size() - 2;
  const FlowSample& A = nodes[i];
  const FlowSample& B = nodes[i + 1];
  double h = B.t - A.t;
  double s = (t - A.t) / h;
  auto w = hermite_basis(s, deriv);
  double scale = std::pow(h, -deriv);
  TopInterp out;
  out.q = scale * (w[0] * A.q + h * w[1] * A.v + h * h * w[2] * A.acc + w[3] * B.q + h * w[4] * B.v +
                   h * h * w[5] * B.acc);
  auto top = [d](const Eigen::MatrixXd& m) { return m.topRows(d); };
  auto bot = [d](const Eigen::MatrixXd& m) { return m.bottomRows(d); };
  out.phi_top = scale * (w[0] * top(A.phi) + h * w[1] * bot(A.phi) + h * h * w[2] * bot(A.dphi) + w[3] * top(B.phi) +
                         h * w[4] * bot(B.phi) + h * h * w[5] * bot(B.dphi));
  return out;
}

}  // namespace

Eigen::VectorXd Trajectory::position(double t) const { return interp_top(nodes_, dim(), t, 0).q; }
Eigen::VectorXd Trajectory::velocity(double t) const { return interp_top(nodes_, dim(), t, 1).q; }
Eigen::VectorXd Trajectory::acceleration(double t) const { return interp_top(nodes_, dim(), t, 2).q; }

Eigen::MatrixXd Trajectory::jacobi(int a, double t, int deriv) const {
  if (a != 0 && a != 1) throw std::invalid_argument("jacobi: endpoint index must be 0 or 1");
  if (deriv < 0 || deriv > 2) throw std::invalid_argument("jacobi: derivative order must be 0, 1 or 2");
  if (!nonfocal_) throw FocalError("jacobi: endpoints are conjugate");
  const int d = dim();
  Eigen::MatrixXd top = interp_top(nodes_, d, t, deriv).phi_top;
  Eigen::MatrixXd pq = top.leftCols(d), pv = top.rightCols(d);
  if (a == 1) return pv * dqdv_t1_inv_;
  return pq - pv * dqdv_t1_inv_ * dqdq_t1_;
}

Jet Trajectory::lagrangian_jet(double t, int order) const {
  auto p = slot_point(dim(), t, position(t), velocity(t));
  return jet_eval(problem_->lagrangian, p, order);
}

Trajectory solve_bvp(const Problem& problem) {
  const int d = problem.dim;
  if (d < 1) throw std::invalid_argument("solve_bvp: dimension must be positive");
  if (problem.lagrangian.dimension() != d) throw std::invalid_argument("solve_bvp: Lagrangian dimension mismatch");
  if (!(problem.t1 > problem.t0)) throw std::invalid_argument("solve_bvp: require t1 > t0");
  if (problem.q0.size() != d || problem.q1.size() != d) throw std::invalid_argument("solve_bvp: endpoint size mismatch");
  const double T = problem.t1 - problem.t0;
  const SolverConfig& cfg = problem.solver;

  Eigen::VectorXd v0 = problem.v0_guess.size() == d ? problem.v0_guess : Eigen::VectorXd((problem.q1 - problem.q0) / T);
  double tol = cfg.newton_tol * (1.0 + problem.q1.cwiseAbs().maxCoeff());

  auto residual = [&](const std::vector<FlowSample>& nodes) { return Eigen::VectorXd(nodes.back().q - problem.q1); };
  std::vector<FlowSample> nodes = integrate(problem, v0);
  Eigen::VectorXd r = residual(nodes);
  int iter = 0;
  while (r.cwiseAbs().maxCoeff() > tol) {
    if (++iter > cfg.max_newton) throw ConvergenceError("solve_bvp: Newton iteration did not converge");
    Eigen::MatrixXd J = nodes.back().phi.block(0, d, d, d);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible() || std::abs(J.determinant()) < cfg.focal_tol * std::pow(T, d))
      throw FocalError("solve_bvp: flow Jacobian is singular during shooting");
    Eigen::VectorXd step = -lu.solve(r);
    double lambda = 1.0, rn = r.norm();
    bool accepted = false;
    for (int k = 0; k < 30 && !accepted; ++k, lambda *= 0.5) {
      try {
        auto trial = integrate(problem, v0 + lambda * step);
        Eigen::VectorXd rt = residual(trial);
        if (rt.norm() < rn || rt.cwiseAbs().maxCoeff() <= tol) {
          v0 += lambda * step;
          nodes = std::move(trial);
          r = rt;
          accepted = true;
        }
      } catch (const expr::DomainError&) {
      } catch (const SingularMatrixError&) {
      } catch (const ConvergenceError&) {
      }
    }
    if (!accepted) throw ConvergenceError("solve_bvp: line search failed");
  }

  for (const auto& n : nodes) {
    auto vh = velocity_hessian(jet_eval(problem.lagrangian, slot_point(d, n.t, n.q, n.v), 2));
    if (!vh.positive_definite) throw NotConvexError("solve_bvp: velocity Hessian is not positive definite on the path");
  }

  Trajectory tr;
  tr.problem_ = std::make_shared<const Problem>(problem);
  tr.v0_ = v0;
  tr.dqdv_t1_ = nodes.back().phi.block(0, d, d, d);
  tr.dqdq_t1_ = nodes.back().phi.block(0, 0, d, d);
  tr.nonfocal_ = std::abs(tr.dqdv_t1_.determinant()) >= cfg.focal_tol * std::pow(T, d);
  if (tr.nonfocal_) tr.dqdv_t1_inv_ = tr.dqdv_t1_.inverse();
  tr.nodes_ = std::move(nodes);

  const GaussRule& g = gauss_legendre(10);
  double S = 0;
  for (std::size_t i = 0; i + 1 < tr.nodes_.size(); ++i) {
    double a = tr.nodes_[i].t, b = tr.nodes_[i + 1].t;
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t k = 0; k < g.x.size(); ++k) {
      double t = mid + half * g.x[k];
      auto p = slot_point(d, t, tr.position(t), tr.velocity(t));
      S += half * g.w[k] * problem.lagrangian.evaluate(p);
    }
  }
  tr.action_ = S;
  return tr;
}

double action(const Trajectory& traj) { return traj.action(); }

std::pair<Eigen::VectorXd, Eigen::VectorXd> s_gradients(const Trajectory& traj) {
  const int d = traj.dim();
  expr::VarLayout lay{d};
  auto momentum = [&](double t) {
    Jet j = traj.lagrangian_jet(t, 1);
    Eigen::VectorXd p(d);
    for (int i = 0; i < d; ++i) p(i) = j.partial_wrt({lay.v(i)});
    return p;
  };
  return {-momentum(traj.t0()), momentum(traj.t1())};
}

namespace {

struct EndData {
  Eigen::MatrixXd a, lvq;  // lvq(i, j) = L_{v_i q_j}
};

EndData end_data(const Trajectory& traj, double t) {
  const int d = traj.dim();
  expr::VarLayout lay{d};
  Jet j = traj.lagrangian_jet(t, 2);
  EndData e{Eigen::MatrixXd(d, d), Eigen::MatrixXd(d, d)};
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) {
      e.a(i, k) = j.partial_wrt({lay.v(i), lay.v(k)});
      e.lvq(i, k) = j.partial_wrt({lay.v(i), lay.q(k)});
    }
  return e;
}

}  // namespace

VanVleck van_vleck(const Trajectory& traj) {
  if (!traj.nonfocal()) throw FocalError("van_vleck: endpoints are conjugate");
  EndData e = end_data(traj, traj.t1());
  VanVleck out;
  out.W = -(e.a * traj.jacobi(0, traj.t1(), 1)).transpose();
  out.abs_det = std::abs(out.W.determinant());
  return out;
}

Eigen::MatrixXd van_vleck_from_start(const Trajectory& traj) {
  if (!traj.nonfocal()) throw FocalError("van_vleck: endpoints are conjugate");
  EndData e = end_data(traj, traj.t0());
  return e.a * traj.jacobi(1, traj.t0(), 1);
}

Eigen::MatrixXd s_hessian(const Trajectory& traj, int a) {
  if (!traj.nonfocal()) throw FocalError("s_hessian: endpoints are conjugate");
  if (a == 1) {
    EndData e = end_data(traj, traj.t1());
    return e.a * traj.jacobi(1, traj.t1(), 1) + e.lvq;
  }
  if (a == 0) {
    EndData e = end_data(traj, traj.t0());
    return -(e.a * traj.jacobi(0, traj.t0(), 1) + e.lvq);
  }
  throw std::invalid_argument("s_hessian: endpoint index must be 0 or 1");
}

bool nonfocal_check(const Trajectory& traj) { return traj.nonfocal(); }

namespace {

struct Spectrum {
  int negative = 0;
  double nearest_zero = 0.0;
};

Spectrum galerkin_spectrum(const Trajectory& traj, int n, const MorseConfig& cfg, double& a_scale) {
  const int d = traj.dim();
  expr::VarLayout lay{d};
  const double t0 = traj.t0(), h = (traj.t1() - t0) / n;
  const int size = (n - 1) * d;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(size, size), M = Eigen::MatrixXd::Zero(size, size);
  const GaussRule& g = gauss_legendre(cfg.quad_points);
  for (int e = 0; e < n; ++e) {
    for (std::size_t k = 0; k < g.x.size(); ++k) {
      double s = 0.5 * (1 + g.x[k]);
      double w = 0.5 * h * g.w[k];
      Jet j = traj.lagrangian_jet(t0 + (e + s) * h, 2);
      Eigen::MatrixXd a(d, d), lqv(d, d), lvq(d, d), lqq(d, d);
      for (int i = 0; i < d; ++i)
        for (int c = 0; c < d; ++c) {
          a(i, c) = j.partial_wrt({lay.v(i), lay.v(c)});
          lqv(i, c) = j.partial_wrt({lay.q(i), lay.v(c)});
          lvq(i, c) = j.partial_wrt({lay.v(i), lay.q(c)});
          lqq(i, c) = j.partial_wrt({lay.q(i), lay.q(c)});
        }
      a_scale = std::max(a_scale, a.cwiseAbs().maxCoeff());
      const double val[2] = {1 - s, s};
      const double der[2] = {-1 / h, 1 / h};
      for (int li = 0; li < 2; ++li) {
        int ni = e + li;  // global node, interior when 1..n-1
        if (ni == 0 || ni == n) continue;
        for (int lj = 0; lj < 2; ++lj) {
          int nj = e + lj;
          if (nj == 0 || nj == n) continue;
          for (int c = 0; c < d; ++c)
            for (int c2 = 0; c2 < d; ++c2) {
              double kij = der[li] * a(c, c2) * der[lj] + val[li] * lqv(c, c2) * der[lj] +
                           der[li] * lvq(c, c2) * val[lj] + val[li] * lqq(c, c2) * val[lj];
              K((ni - 1) * d + c, (nj - 1) * d + c2) += w * kij;
            }
          for (int c = 0; c < d; ++c) M((ni - 1) * d + c, (nj - 1) * d + c) += w * val[li] * val[lj];
        }
      }
    }
  }
  K = 0.5 * (K + K.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("morse_index: eigensolver failed");
  const auto& ev = es.eigenvalues();
  double big = ev.cwiseAbs().maxCoeff();
  Spectrum sp;
  sp.nearest_zero = ev(0);
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) < -cfg.negative_tol * big) ++sp.negative;
    if (std::abs(ev(i)) < std::abs(sp.nearest_zero)) sp.nearest_zero = ev(i);
  }
  return sp;
}

}  // namespace

int morse_index(const Trajectory& traj, const MorseConfig& cfg) {
  if (cfg.initial_elements < 2) throw std::invalid_argument("morse_index: need at least two elements");
  const double T = traj.t1() - traj.t0();
  double a_scale = 0;
  std::vector<Spectrum> hist;
  for (int n = cfg.initial_elements; n <= cfg.max_elements; n *= 2) {
    hist.push_back(galerkin_spectrum(traj, n, cfg, a_scale));
    std::size_t k = hist.size();
    if (k >= 3 && hist[k - 1].negative == hist[k - 2].negative && hist[k - 2].negative == hist[k - 3].negative) {
      // Linear elements converge at second order in h; extrapolate the
      // eigenvalue closest to zero.
      double lam = (4 * hist[k - 1].nearest_zero - hist[k - 2].nearest_zero) / 3;
      if (std::abs(lam) < cfg.degenerate_tol * a_scale / (T * T))
        throw DegenerateError("morse_index: second variation has a (near-)zero eigenvalue");
      return hist[k - 1].negative;
    }
  }
  throw ConvergenceError("morse_index: negative eigenvalue count did not stabilize");
}

}  // namespace spi::classical
