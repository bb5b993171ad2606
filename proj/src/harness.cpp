#include "spi/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <json.hpp>
#include <sstream>

#include "spi/jet.hpp"
#include "spi/stphase.hpp"

namespace spi::harness {

namespace {

using classical::Problem;
using classical::Trajectory;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

Row scalar_row(std::string name, double lhs, double rhs, double rtol, double atol) {
  Row r;
  r.quantity = std::move(name);
  r.lhs = DeltaPoly(lhs);
  r.rhs = DeltaPoly(rhs);
  r.rtol = rtol;
  r.atol = atol;
  return r;
}

amplitude::PropagatorResult run_assemble(const Trajectory& tr, const config::RunConfig& cfg, int max_order) {
  return amplitude::assemble(green::GreenRep::build(tr, cfg.grid), max_order, cfg.quad);
}

void require_divergence_free(const amplitude::PropagatorResult& r, const std::string& which) {
  for (const auto& [m, od] : amplitude::divergence_report(r))
    if (!od.divergence_free)
      throw DivergentInput("composition law requires a divergence-free theory; " + which + " has D0 terms at order " +
                           std::to_string(m));
}

/// Richardson combination of O(h^2) estimates taken at steps h1 > h2.
template <class T>
T richardson(const T& d1, double h1, const T& d2, double h2) {
  double a = h1 * h1, b = h2 * h2;
  return (a * d2 - b * d1) / (a - b);
}

template <class T, class Estimate>
T extrapolated(const std::vector<double>& steps, Estimate est) {
  if (steps.size() == 1) return est(steps[0]);
  return richardson<T>(est(steps[0]), steps[0], est(steps[1]), steps[1]);
}

stphase::SymTensor vector_tensor(const Eigen::VectorXd& v) {
  stphase::SymTensor t(static_cast<int>(v.size()), 1);
  for (int i = 0; i < v.size(); ++i) t.data()[i] = v(i);
  return t;
}

}  // namespace

double Row::abs_residual() const {
  double m = 0;
  for (int k = 0; k <= std::max(lhs.degree(), rhs.degree()); ++k) m = std::max(m, std::abs(lhs[k] - rhs[k]));
  return m;
}

double Row::rel_residual() const {
  double scale = std::max(lhs.max_abs(), rhs.max_abs());
  double a = abs_residual();
  return scale > 0 ? a / scale : a;
}

bool Row::pass() const { return abs_residual() <= atol + rtol * std::max(lhs.max_abs(), rhs.max_abs()); }

bool CheckReport::pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const Row& r) { return r.pass(); });
}

std::string CheckReport::to_json(int indent) const {
  using nlohmann::ordered_json;
  auto poly = [](const DeltaPoly& p) {
    ordered_json a = ordered_json::array();
    for (double c : p.coefficients()) a.push_back(c == 0.0 ? 0.0 : c);
    return a;
  };
  ordered_json j;
  j["check"] = check;
  j["pass"] = pass();
  j["rows"] = ordered_json::array();
  for (const Row& r : rows) {
    ordered_json o;
    o["quantity"] = r.quantity;
    if (r.order >= 0) o["order"] = r.order;
    o["lhs"] = poly(r.lhs);
    o["rhs"] = poly(r.rhs);
    o["abs_residual"] = r.abs_residual();
    o["rel_residual"] = r.rel_residual();
    o["rtol"] = r.rtol;
    o["atol"] = r.atol;
    o["pass"] = r.pass();
    j["rows"].push_back(o);
  }
  j["notes"] = notes;
  j["config"] = config;
  return j.dump(indent);
}

std::string CheckReport::to_text() const {
  std::ostringstream os;
  char buf[256];
  os << check << ": " << (pass() ? "PASS" : "FAIL") << "\n";
  for (const Row& r : rows) {
    std::string name = r.quantity + (r.order >= 0 ? "[" + std::to_string(r.order) + "]" : "");
    std::snprintf(buf, sizeof buf, "  %-22s lhs=%-22.15g rhs=%-22.15g abs=%.3e rel=%.3e %s\n", name.c_str(), r.lhs.finite(),
                  r.rhs.finite(), r.abs_residual(), r.rel_residual(), r.pass() ? "ok" : "FAIL");
    os << buf;
  }
  for (const auto& n : notes) os << "  note: " << n << "\n";
  return os.str();
}

CheckReport fubini_check(const config::RunConfig& cfg) {
  auto start = Clock::now();
  if (!cfg.split_time) throw std::invalid_argument("fubini_check: [fubini] split_time is required");
  const double t = *cfg.split_time;
  const Problem P = cfg.problem();
  const Trajectory tr = classical::solve_bvp(P);
  const Eigen::VectorXd qc = tr.position(t);
  const int d = P.dim;

  auto first = [&](const Eigen::VectorXd& q) {
    Problem p = P.with_endpoints(P.t0, P.q0, t, q);
    p.v0_guess = tr.velocity(P.t0);
    return classical::solve_bvp(p);
  };
  auto second = [&](const Eigen::VectorXd& q) {
    Problem p = P.with_endpoints(t, q, P.t1, P.q1);
    p.v0_guess = tr.velocity(t);
    return classical::solve_bvp(p);
  };
  const Trajectory tr0 = first(qc), tr1 = second(qc);
  for (const Trajectory* x : {&tr, &tr0, &tr1})
    if (!x->nonfocal()) throw classical::FocalError("fubini_check: a path is focal");

  const int M = std::min(cfg.loop_order, 1);
  auto r = run_assemble(tr, cfg, M), r0 = run_assemble(tr0, cfg, M), r1 = run_assemble(tr1, cfg, M);
  require_divergence_free(r, "the full path");
  require_divergence_free(r0, "the first piece");
  require_divergence_free(r1, "the second piece");

  CheckReport rep;
  rep.check = "fubini";
  rep.config = cfg.snapshot;

  // A(q) = S0(q0, q) + S1(q, q1) and its Hessian.
  auto hessian = [&](const Eigen::VectorXd& q) {
    return Eigen::MatrixXd(classical::s_hessian(first(q), 1) + classical::s_hessian(second(q), 0));
  };
  const Eigen::MatrixXd H = classical::s_hessian(tr0, 1) + classical::s_hessian(tr1, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  const double big = es.eigenvalues().cwiseAbs().maxCoeff();
  if (big == 0.0 || es.eigenvalues().cwiseAbs().minCoeff() <= 1e-10 * big)
    throw DegenerateCriticalPoint("fubini_check: Hessian in the intermediate point is degenerate");
  int eta_cp = 0;
  for (int i = 0; i < d; ++i) eta_cp += es.eigenvalues()(i) < 0;

  Eigen::VectorXd grad = classical::s_gradients(tr0).second + classical::s_gradients(tr1).first;
  rep.rows.push_back(scalar_row("stationarity", grad.norm(), 0.0, 0.0, 1e-6));
  rep.rows.push_back(scalar_row("phase", r.S, r0.S + r1.S, 1e-8, 1e-10));
  double det_rhs = r0.abs_det_W * r1.abs_det_W / std::abs(H.determinant());
  rep.rows.push_back(scalar_row("abs_det_W", r.abs_det_W, det_rhs, 1e-8, 0.0));
  rep.rows.push_back(scalar_row("morse_index", r.morse_index, r0.morse_index + eta_cp + r1.morse_index, 0.0, 0.0));
  rep.rows.push_back(scalar_row("hbar_exponent", r.hbar_exponent, r0.hbar_exponent + r1.hbar_exponent + 0.5 * d, 0.0, 0.0));

  Row s0;
  s0.quantity = "series";
  s0.order = 0;
  s0.lhs = r.series.at(0);
  s0.rhs = DeltaPoly(1.0);
  rep.rows.push_back(s0);

  if (M >= 1) {
    const auto& steps = cfg.fd_steps;
    auto B = [&](const Eigen::VectorXd& q) {
      return std::sqrt(classical::van_vleck(first(q)).abs_det * classical::van_vleck(second(q)).abs_det);
    };
    auto unit = [&](int i) { return Eigen::VectorXd(Eigen::VectorXd::Unit(d, i)); };

    const double Bc = std::sqrt(r0.abs_det_W * r1.abs_det_W);
    Eigen::VectorXd dB = extrapolated<Eigen::VectorXd>(steps, [&](double h) {
      Eigen::VectorXd g(d);
      for (int i = 0; i < d; ++i) g(i) = (B(qc + h * unit(i)) - B(qc - h * unit(i))) / (2 * h);
      return g;
    });
    Eigen::MatrixXd d2B = extrapolated<Eigen::MatrixXd>(steps, [&](double h) {
      Eigen::MatrixXd m(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
          if (i == j) {
            m(i, i) = (B(qc + h * unit(i)) - 2 * Bc + B(qc - h * unit(i))) / (h * h);
          } else {
            Eigen::VectorXd a = h * unit(i), b = h * unit(j);
            m(i, j) = m(j, i) = (B(qc + a + b) - B(qc + a - b) - B(qc - a + b) + B(qc - a - b)) / (4 * h * h);
          }
        }
      return m;
    });

    stphase::SymTensor A3(d, 3), A4(d, 4);
    Eigen::VectorXd a3 = extrapolated<Eigen::VectorXd>(steps, [&](double h) {
      std::vector<double> out;
      for (const auto& idx : A3.indices()) {
        Eigen::VectorXd e = h * unit(idx[2]);
        out.push_back((hessian(qc + e)(idx[0], idx[1]) - hessian(qc - e)(idx[0], idx[1])) / (2 * h));
      }
      return Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(out.data(), out.size()));
    });
    Eigen::VectorXd a4 = extrapolated<Eigen::VectorXd>(steps, [&](double h) {
      std::vector<double> out;
      for (const auto& idx : A4.indices()) {
        Eigen::VectorXd a = h * unit(idx[2]), b = h * unit(idx[3]);
        int i = idx[0], j = idx[1];
        if (idx[2] == idx[3])
          out.push_back((hessian(qc + a)(i, j) - 2 * H(i, j) + hessian(qc - a)(i, j)) / (h * h));
        else
          out.push_back((hessian(qc + a + b)(i, j) - hessian(qc + a - b)(i, j) - hessian(qc - a + b)(i, j) +
                         hessian(qc - a - b)(i, j)) /
                        (4 * h * h));
      }
      return Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(out.data(), out.size()));
    });
    std::copy(a3.data(), a3.data() + a3.size(), A3.data().begin());
    std::copy(a4.data(), a4.data() + a4.size(), A4.data().begin());

    // The gradient is checked separately; the expansion is taken at the exact critical point.
    stphase::Derivatives A{stphase::SymTensor::scalar(r0.S + r1.S), vector_tensor(Eigen::VectorXd::Zero(d)),
                           stphase::SymTensor::from_matrix(H), A3, A4};
    stphase::Derivatives Bd{stphase::SymTensor::scalar(Bc), vector_tensor(dB), stphase::SymTensor::from_matrix(d2B)};
    auto fi = stphase::formal_integral(A, &Bd, eta_cp, 1);
    double rhs1 = fi.series.at(1) / Bc + r0.series.at(1).finite() + r1.series.at(1).finite();

    Row s1;
    s1.quantity = "series";
    s1.order = 1;
    s1.lhs = r.series.at(1);
    s1.rhs = DeltaPoly(rhs1);
    s1.rtol = 1e-3;
    s1.atol = 1e-7;
    rep.rows.push_back(s1);
    if (cfg.loop_order > 1) rep.notes.push_back("series compared through order 1; higher orders need derivatives of A beyond fourth order");
  }
  rep.seconds = seconds_since(start);
  return rep;
}

Eigen::MatrixXd Transformed::jacobian_at(const Eigen::VectorXd& x) const {
  const int d = problem.dim;
  std::vector<double> pt(2 * d + 1, 0.0);
  for (int i = 0; i < d; ++i) pt[1 + d + i] = x(i);
  Eigen::MatrixXd J(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) J(i, j) = jacobian[i][j].evaluate(pt);
  return J;
}

Eigen::VectorXd Transformed::apply(const Eigen::VectorXd& x) const {
  const int d = problem.dim;
  std::vector<double> pt(2 * d + 1, 0.0);
  for (int i = 0; i < d; ++i) pt[1 + d + i] = x(i);
  Eigen::VectorXd out(d);
  for (int i = 0; i < d; ++i) out(i) = map[i].evaluate(pt);
  return out;
}

Transformed transform_problem(const Problem& p, const std::vector<std::string>& map_src) {
  const int d = p.dim;
  if (static_cast<int>(map_src.size()) != d) throw std::invalid_argument("transform_problem: map has the wrong number of components");
  expr::VarLayout lay{d};
  Transformed out;
  for (const auto& s : map_src) {
    expr::Expression e = expr::parse(s, d);
    for (int i = 0; i < d; ++i)
      if (e.depends_on(lay.v(i)) || e.depends_on(expr::VarLayout::tau()))
        throw std::invalid_argument("transform_problem: map may depend on positions only");
    out.map.push_back(e);
  }
  out.jacobian.resize(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out.jacobian[i].push_back(expr::differentiate(out.map[i], lay.q(j)));

  // Velocity slots become Df(x) v, dropping terms whose coefficient is literally 0.
  auto literal = [](const expr::Node& n, double v) { return n.kind == expr::NodeKind::Number && n.value == v; };
  std::vector<expr::NodePtr> repl(lay.count());
  repl[expr::VarLayout::tau()] = expr::make_variable(expr::VarLayout::tau());
  for (int i = 0; i < d; ++i) {
    expr::NodePtr sum;
    for (int j = 0; j < d; ++j) {
      const auto& c = out.jacobian[i][j];
      if (literal(c.root(), 0.0)) continue;
      expr::NodePtr term = literal(c.root(), 1.0) ? expr::make_variable(lay.v(j))
                                                  : expr::make_binary(expr::NodeKind::Mul, c.root_ptr(), expr::make_variable(lay.v(j)));
      sum = sum ? expr::make_binary(expr::NodeKind::Add, sum, term) : term;
    }
    repl[lay.v(i)] = sum ? sum : expr::make_number(0.0);
    repl[lay.q(i)] = out.map[i].root_ptr();
  }
  out.problem = p;
  out.problem.lagrangian = expr::substitute(p.lagrangian, repl, d);

  // Endpoints in the new coordinates by Newton on f(x) = q.
  auto invert = [&](const Eigen::VectorXd& q) {
    Eigen::VectorXd x = q;
    for (int it = 0; it < 100; ++it) {
      Eigen::VectorXd r = out.apply(x) - q;
      if (r.norm() <= 1e-15 * (1 + q.norm())) return x;
      x -= out.jacobian_at(x).lu().solve(r);
    }
    if ((out.apply(x) - q).norm() > 1e-12 * (1 + q.norm())) throw std::runtime_error("transform_problem: cannot invert the map at an endpoint");
    return x;
  };
  out.problem.q0 = invert(p.q0);
  out.problem.q1 = invert(p.q1);
  out.problem.v0_guess = Eigen::VectorXd();
  return out;
}

CheckReport coordinate_check(const config::RunConfig& cfg) {
  auto start = Clock::now();
  if (cfg.coords_map.empty()) throw std::invalid_argument("coordinate_check: [coords] map is required");
  const Problem P = cfg.problem();
  Transformed T = transform_problem(P, cfg.coords_map);

  auto check_det = [&](const Eigen::VectorXd& x) {
    double det = T.jacobian_at(x).determinant();
    if (std::abs(std::abs(det) - 1.0) > 1e-10)
      throw NotVolumePreserving("coordinate map is not volume-preserving: det Df = " + std::to_string(det), det);
  };
  check_det(T.problem.q0);
  check_det(T.problem.q1);

  const Trajectory tr = classical::solve_bvp(P);
  const Trajectory trx = classical::solve_bvp(T.problem);
  for (int k = 0; k <= 20; ++k) check_det(trx.position(P.t0 + (P.t1 - P.t0) * k / 20));

  auto r = run_assemble(tr, cfg, cfg.loop_order);
  auto rx = run_assemble(trx, cfg, cfg.loop_order);

  CheckReport rep;
  rep.check = "coords";
  rep.config = cfg.snapshot;
  double path_gap = 0;
  for (int k = 0; k <= 20; ++k) {
    double s = P.t0 + (P.t1 - P.t0) * k / 20;
    path_gap = std::max(path_gap, (T.apply(trx.position(s)) - tr.position(s)).norm());
  }
  rep.rows.push_back(scalar_row("image_path", path_gap, 0.0, 0.0, 1e-8));
  rep.rows.push_back(scalar_row("phase", r.S, rx.S, 1e-8, 1e-10));
  rep.rows.push_back(scalar_row("abs_det_W", r.abs_det_W, rx.abs_det_W, 1e-8, 0.0));
  rep.rows.push_back(scalar_row("morse_index", r.morse_index, rx.morse_index, 0.0, 0.0));
  for (const auto& [m, p] : r.series) {
    Row row;
    row.quantity = "series";
    row.order = m;
    row.lhs = p;
    row.rhs = rx.series.at(m);
    row.rtol = m == 0 ? 0.0 : 1e-4;
    row.atol = m == 0 ? 0.0 : 1e-10;
    rep.rows.push_back(row);
  }
  rep.seconds = seconds_since(start);
  return rep;
}

std::string SweepReport::to_csv() const {
  std::ostringstream os;
  os << "hbar,order,expansion_re,expansion_im,direct_re,direct_im,rel_error\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.hbar, r.order, r.expansion.real(), r.expansion.imag(),
                  r.direct.real(), r.direct.imag(), r.error);
    os << buf;
  }
  return os.str();
}

SweepReport stphase_sweep(const config::StphaseSettings& s) {
  const int N = s.dimension;
  expr::Expression A = expr::parse(s.action, N);
  expr::VarLayout lay{N};
  const int top = 2 * s.max_order + 2;
  std::vector<double> origin(lay.count(), 0.0);
  Jet jet = jet_eval(A, origin, top);
  stphase::Derivatives D;
  for (int n = 0; n <= top; ++n) {
    stphase::SymTensor t = n == 0 ? stphase::SymTensor::scalar(0.0) : stphase::SymTensor(N, n);
    if (n == 0) {
      t.data()[0] = jet.value();
    } else {
      for (std::size_t k = 0; k < t.indices().size(); ++k) {
        std::vector<int> slots;
        for (int i : t.indices()[k]) slots.push_back(lay.q(i));
        t.data()[k] = jet.partial_wrt(std::span<const int>(slots));
      }
    }
    D.push_back(std::move(t));
  }
  const int eta = D[2].signature();
  stphase::Function f = [&](std::span<const double> x) {
    std::vector<double> pt(lay.count(), 0.0);
    for (int i = 0; i < N; ++i) pt[lay.q(i)] = x[i];
    return A.evaluate(pt);
  };
  stphase::Box box{std::vector<double>(N, -s.half_width), std::vector<double>(N, s.half_width)};
  auto expansion = stphase::formal_integral(D, nullptr, eta, s.max_order);

  SweepReport rep;
  std::map<int, std::vector<double>> err;
  for (double h : s.hbars) {
    std::complex<double> direct = stphase::numeric_oracle(f, nullptr, box, h);
    for (int m = 0; m <= s.max_order; ++m) {
      SweepRow row;
      row.hbar = h;
      row.order = m;
      row.expansion = expansion.evaluate(h, m);
      row.direct = direct;
      row.error = std::abs(row.expansion / direct - 1.0);
      err[m].push_back(row.error);
      rep.rows.push_back(row);
    }
  }
  for (const auto& [m, e] : err)
    for (std::size_t k = 1; k < e.size(); ++k)
      rep.observed_order[m].push_back(std::log(e[k - 1] / e[k]) / std::log(s.hbars[k - 1] / s.hbars[k]));
  return rep;
}

amplitude::PropagatorResult propagate(const config::RunConfig& cfg) {
  return run_assemble(classical::solve_bvp(cfg.problem()), cfg, cfg.loop_order);
}

std::vector<DivergenceEntry> divergences(const std::vector<config::RunConfig>& cfgs) {
  std::vector<DivergenceEntry> out(cfgs.size());
  std::vector<std::exception_ptr> errors(cfgs.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < static_cast<int>(cfgs.size()); ++i) {
    try {
      config::RunConfig c = cfgs[i];
      c.quad.parallel = false;
      out[i].origin = c.origin;
      out[i].result = propagate(c);
      out[i].report = amplitude::divergence_report(out[i].result);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::string divergences_json(const std::vector<DivergenceEntry>& entries, int indent) {
  using nlohmann::ordered_json;
  ordered_json j = ordered_json::array();
  for (const auto& e : entries) {
    ordered_json o;
    o["config"] = e.origin;
    o["orders"] = ordered_json::array();
    for (const auto& [m, od] : e.report) {
      ordered_json row;
      row["order"] = m;
      row["divergence_free"] = od.divergence_free;
      row["coefficients"] = ordered_json::array();
      for (const auto& [k, c] : od.coefficients)
        row["coefficients"].push_back({{"degree", k}, {"sum", c == 0.0 ? 0.0 : c}, {"magnitude", od.magnitude.at(k)}});
      o["orders"].push_back(row);
    }
    o["diagrams"] = ordered_json::array();
    for (const auto& dc : e.result.diagrams) {
      ordered_json a = ordered_json::array();
      for (double c : dc.contribution.coefficients()) a.push_back(c == 0.0 ? 0.0 : c);
      o["diagrams"].push_back({{"canonical", dc.canonical}, {"order", dc.order}, {"aut", dc.aut}, {"contribution", a}});
    }
    j.push_back(o);
  }
  return j.dump(indent);
}

}  // namespace spi::harness
