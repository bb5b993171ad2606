#include "spi/green.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace spi::green {

namespace {

using classical::Trajectory;

struct VelocityData {
  Eigen::MatrixXd a, a_dot;
};

/// a = L_vv along the path and its total time derivative.
VelocityData velocity_data(const Trajectory& traj, double t) {
  const int d = traj.dim();
  expr::VarLayout lay{d};
  Jet j = traj.lagrangian_jet(t, 3);
  Eigen::VectorXd v = traj.velocity(t), acc = traj.acceleration(t);
  VelocityData out{Eigen::MatrixXd(d, d), Eigen::MatrixXd(d, d)};
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) {
      out.a(i, k) = j.partial_wrt({lay.v(i), lay.v(k)});
      double r = j.partial_wrt({lay.v(i), lay.v(k), expr::VarLayout::tau()});
      for (int m = 0; m < d; ++m)
        r += j.partial_wrt({lay.v(i), lay.v(k), lay.q(m)}) * v(m) + j.partial_wrt({lay.v(i), lay.v(k), lay.v(m)}) * acc(m);
      out.a_dot(i, k) = r;
    }
  return out;
}

void check_time(const GreenRep& g, double t) {
  double tol = 1e-12 * (1 + std::abs(g.t1() - g.t0()));
  if (!(t >= g.t0() - tol && t <= g.t1() + tol)) throw std::out_of_range("green: time outside the interval");
}

}  // namespace

GreenRep GreenRep::build(const classical::Trajectory& traj, int grid) {
  if (!traj.nonfocal()) throw classical::FocalError("green: trajectory is focal");
  if (grid < 2) throw std::invalid_argument("green: grid needs at least two points");
  GreenRep g;
  g.traj_ = std::make_shared<const Trajectory>(traj);
  Eigen::MatrixXd W = classical::van_vleck(traj).W;
  g.Winv_ = W.inverse();
  g.WinvT_ = g.Winv_.transpose();
  for (int k = 0; k < grid; ++k) g.grid_.push_back(traj.t0() + (traj.t1() - traj.t0()) * k / (grid - 1));
  // The Wronskian-type matrix must be invertible at every grid point.
  for (double t : g.grid_) {
    Frame f = g.frame(t);
    const int d = traj.dim();
    Eigen::MatrixXd M(2 * d, 2 * d);
    M << f.p0, f.p1, f.dp0, f.dp1;
    if (std::abs(M.determinant()) < 1e-14 * std::pow(M.norm(), 2 * d))
      throw InconsistencyError("green: fundamental matrix is singular on a nonfocal path");
  }
  return g;
}

Frame GreenRep::frame(double t) const {
  check_time(*this, t);
  Frame f;
  f.t = t;
  f.p0 = traj_->jacobi(0, t, 0);
  f.dp0 = traj_->jacobi(0, t, 1);
  f.p1 = traj_->jacobi(1, t, 0);
  f.dp1 = traj_->jacobi(1, t, 1);
  f.a_inv = a_inv(t);
  return f;
}

Eigen::MatrixXd GreenRep::a_inv(double t) const {
  return velocity_hessian(traj_->lagrangian_jet(t, 2)).a_inv;
}

Eigen::MatrixXd GreenRep::branch(int which, const Frame& s, const Frame& t, int ds, int dt) const {
  if (which == 0) return (ds ? s.dp1 : s.p1) * Winv_ * (dt ? t.dp0 : t.p0).transpose();
  return (ds ? s.dp0 : s.p0) * WinvT_ * (dt ? t.dp1 : t.p1).transpose();
}

Eigen::MatrixXd GreenRep::smooth(const Frame& s, const Frame& t, int ds, int dt, int order) const {
  if (order > 0) return branch(0, s, t, ds, dt);
  if (order < 0) return branch(1, s, t, ds, dt);
  return 0.5 * (branch(0, s, t, ds, dt) + branch(1, s, t, ds, dt));
}

GreenValue GreenRep::eval(double s, double t, int ds, int dt, Mode mode) const {
  if (ds < 0 || ds > 1 || dt < 0 || dt > 1) throw std::invalid_argument("green: derivative orders must be 0 or 1");
  check_time(*this, s);
  check_time(*this, t);
  GreenValue out;
  if (mode == Mode::VariationOfParameters) {
    out.smooth = vop(s, t, ds, dt);
  } else {
    Frame fs = frame(s), ft = s == t ? fs : frame(t);
    int order = s < t ? 1 : (s > t ? -1 : 0);
    out.smooth = smooth(fs, ft, ds, dt, order);
  }
  if (ds == 1 && dt == 1) out.delta = a_inv(t);
  return out;
}

// G(s, t) = -(g(s, t) a(s)^-1)^T with g(s, t) = Th(t - s) phi0(t) psi0(s)
// - Th(s - t) phi1(t) psi1(s) and psi the right half of M(s)^-1.
Eigen::MatrixXd GreenRep::vop(double s, double t, int ds, int dt) const {
  const int d = dim();
  const Trajectory& tr = *traj_;
  Eigen::MatrixXd M(2 * d, 2 * d), Mdot(2 * d, 2 * d);
  M << tr.jacobi(0, s, 0), tr.jacobi(1, s, 0), tr.jacobi(0, s, 1), tr.jacobi(1, s, 1);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  Eigen::MatrixXd Minv = lu.inverse();
  VelocityData vd = velocity_data(tr, s);
  Eigen::MatrixXd ainv = vd.a.inverse();
  Eigen::MatrixXd psi = Minv.rightCols(d);
  // Psi_b = psi_b a^-1, differentiated when ds = 1.
  Eigen::MatrixXd Psi = psi * ainv;
  if (ds == 1) {
    Mdot << tr.jacobi(0, s, 1), tr.jacobi(1, s, 1), tr.jacobi(0, s, 2), tr.jacobi(1, s, 2);
    Eigen::MatrixXd psi_dot = -(Minv * Mdot * Minv).rightCols(d);
    Psi = psi_dot * ainv - psi * ainv * vd.a_dot * ainv;
  }
  Eigen::MatrixXd psi0 = Psi.topRows(d), psi1 = Psi.bottomRows(d);
  auto g_upper = [&] { return Eigen::MatrixXd(tr.jacobi(0, t, dt) * psi0); };
  auto g_lower = [&] { return Eigen::MatrixXd(-tr.jacobi(1, t, dt) * psi1); };
  Eigen::MatrixXd g;
  if (t > s) g = g_upper();
  else if (t < s) g = g_lower();
  else g = 0.5 * (g_upper() + g_lower());
  return -g.transpose();
}

Eigen::MatrixXd GreenRep::operator_residual(double s, double t, double h) const {
  check_time(*this, s);
  check_time(*this, t);
  if (std::abs(s - t) <= 2 * h) throw std::invalid_argument("operator_residual: point within the stencil of the diagonal");
  if (t - 2 * h < t0() || t + 2 * h > t1()) throw std::invalid_argument("operator_residual: stencil leaves the interval");
  const int d = dim();
  expr::VarLayout lay{d};
  const int which = s < t ? 0 : 1;
  Frame fs = frame(s);
  auto Gt = [&](double tau) { return branch(which, fs, frame(tau), 0, 0); };
  Eigen::MatrixXd G0 = Gt(t), Gp = Gt(t + h), Gm = Gt(t - h);
  Eigen::MatrixXd G1 = (Gp - Gm) / (2 * h);
  Eigen::MatrixXd G2 = (Gp - 2 * G0 + Gm) / (h * h);

  auto second = [&](double tau) {
    Jet j = traj_->lagrangian_jet(tau, 2);
    Eigen::MatrixXd a(d, d), qv(d, d), vq(d, d), qq(d, d);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) {
        a(i, k) = j.partial_wrt({lay.v(i), lay.v(k)});
        qv(i, k) = j.partial_wrt({lay.q(i), lay.v(k)});
        vq(i, k) = j.partial_wrt({lay.v(i), lay.q(k)});
        qq(i, k) = j.partial_wrt({lay.q(i), lay.q(k)});
      }
    return std::array<Eigen::MatrixXd, 4>{a, qv, vq, qq};
  };
  auto c = second(t), cp = second(t + h), cm = second(t - h);
  Eigen::MatrixXd a_dot = (cp[0] - cm[0]) / (2 * h);
  Eigen::MatrixXd qv_dot = (cp[1] - cm[1]) / (2 * h);
  // Row k of G(s, .) is the path xi^i = G^{ki}; D[xi]_j with matrices indexed (i, j).
  Eigen::MatrixXd P = -a_dot - c[1] + c[2];
  Eigen::MatrixXd Q = -qv_dot + c[3];
  return -G2 * c[0] + G1 * P + G0 * Q;
}

double GreenRep::mode_discrepancy(int n) const {
  double worst = 0;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      double s = t0() + (t1() - t0()) * i / (n - 1);
      double t = t0() + (t1() - t0()) * k / (n - 1);
      for (int ds = 0; ds <= 1; ++ds)
        for (int dt = 0; dt <= 1; ++dt) {
          if ((ds || dt) && i == k) continue;
          Eigen::MatrixXd diff = eval(s, t, ds, dt, Mode::VanVleck).smooth - eval(s, t, ds, dt, Mode::VariationOfParameters).smooth;
          worst = std::max(worst, diff.cwiseAbs().maxCoeff());
        }
    }
  return worst;
}

std::string dump_csv(const GreenRep& g, int n, int ds, int dt) {
  if (n < 2) throw std::invalid_argument("dump_csv: need at least two points per axis");
  const int d = g.dim();
  std::ostringstream os;
  os << "s,t";
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) os << ",G" << i + 1 << j + 1;
  os << "\n";
  char buf[64];
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      double s = g.t0() + (g.t1() - g.t0()) * i / (n - 1);
      double t = g.t0() + (g.t1() - g.t0()) * k / (n - 1);
      Eigen::MatrixXd m = g.eval(s, t, ds, dt).smooth;
      std::snprintf(buf, sizeof buf, "%.17g,%.17g", s, t);
      os << buf;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          std::snprintf(buf, sizeof buf, ",%.17g", m(a, b));
          os << buf;
        }
      os << "\n";
    }
  return os.str();
}

}  // namespace spi::green
