// Acceptance run: one PASS/FAIL line per criterion.
//
//   test_acceptance                  exit 1 if any criterion fails
//   test_acceptance --known 7,8      exit 1 only if a criterion outside the
//                                    listed ones fails (listed failures are
//                                    still printed as FAIL)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "diagram_oracle.hpp"
#include "graph_oracles.hpp"
#include "spi/amplitude.hpp"
#include "spi/harness.hpp"

using namespace spi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

classical::Problem problem(const std::string& L, int d, double T, Eigen::VectorXd q0, Eigen::VectorXd q1) {
  classical::Problem p;
  p.dim = d;
  p.lagrangian = expr::parse(L, d);
  p.t0 = 0;
  p.t1 = T;
  p.q0 = std::move(q0);
  p.q1 = std::move(q1);
  return p;
}

double seconds(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

const char* kQuartic = "v^2/2 - 0.1*q^4";
const char* kLogMetric = "v^2/(2*q^2)";
const char* kUnitDet = "0.5*(exp(0.3*q1)*v1^2 + exp(-0.3*q1)*v2^2)";
const char* kCoupled = "0.5*(v1^2+v2^2) + 0.3*v1*v2 - 0.5*q1^2 - 0.25*q2^2 - 0.1*q1^3 + 0.2*tau*q2*v1";

const std::string kUnitDetConfig =
    "[problem]\ndimension = 2\nlagrangian = 0.5*(exp(0.3*q1)*v1^2 + exp(-0.3*q1)*v2^2)\nt0 = 0\nt1 = 1\n"
    "q0 = 0.2, -0.1\nq1 = 0.5, 0.4\n";

Outcome green_closed_form() {
  auto start = std::chrono::steady_clock::now();
  const double T = 1, q0 = 1, q1 = M_E;
  auto g = green::GreenRep::build(classical::solve_bvp(problem(kLogMetric, 1, T, vec({q0}), vec({q1}))));
  auto gam = [&](double t) { return q0 * std::exp(std::log(q1 / q0) * t / T); };
  double worst = 0;
  for (int i = 0; i < 50; ++i)
    for (int k = 0; k < 50; ++k) {
      double s = T * i / 49, t = T * k / 49;
      double want = gam(s) * gam(t) * (0.5 * (s + t) - s * t / T - 0.5 * std::abs(t - s));
      worst = std::max(worst, std::abs(g.eval(s, t, 0, 0).smooth(0, 0) - want));
    }
  double secs = seconds(start);
  return {worst <= 1e-8 && secs < 5, fmt("max abs error %.2e on 50x50, %.2f s", worst, secs)};
}

Outcome barbell() {
  bool ok = true;
  std::string detail;
  std::vector<double> values;
  for (double qe : {M_E, 1.0}) {
    auto g = green::GreenRep::build(classical::solve_bvp(problem(kLogMetric, 1, 1.0, vec({1.0}), vec({qe}))));
    auto r = amplitude::assemble(g, 1);
    double d2 = r.series.at(1)[2];
    double rel = std::abs(d2 / (1.0 / 24) - 1);
    ok = ok && rel <= 1e-6;
    values.push_back(d2);
    detail += fmt("(1,%.4f): D0^2 = %.12f rel %.1e; ", qe, d2, rel);
  }
  detail += fmt("q-dependence %.1e", std::abs(values[0] - values[1]));
  return {ok, detail};
}

Outcome census() {
  auto o0 = graphs::enumerate(0, 0);
  auto o1 = graphs::enumerate(1, 0);
  std::multiset<std::uint64_t> auts, brute;
  bool ok = o0.empty() && o1.size() == 3;
  for (const auto& d : o1) {
    auts.insert(d.automorphism_order());
    brute.insert(oracle::half_edge_automorphisms(d));
    ok = ok && d.automorphism_order() == oracle::half_edge_automorphisms(d);
  }
  ok = ok && auts == std::multiset<std::uint64_t>{8, 8, 12};
  std::size_t n1 = oracle::naive_class_count(1);
  std::size_t ours2 = graphs::enumerate(2, 0).size(), naive2 = oracle::naive_class_count(2);
  ok = ok && n1 == o1.size() && ours2 == naive2;
  std::ostringstream os;
  os << "order 0: " << o0.size() << " classes, order 1: " << o1.size() << " with |Aut| {";
  for (auto a : auts) os << a << " ";
  os << "}, brute force agrees; -chi<=2: " << ours2 << " vs naive " << naive2;
  return {ok, os.str()};
}

Outcome harmonic() {
  bool ok = true;
  std::ostringstream os;
  const double x0 = 0.5, x1 = 1.1;
  for (double T : {1.0, 2.5, 4.0}) {
    auto g = green::GreenRep::build(classical::solve_bvp(problem("v^2/2 - q^2/2", 1, T, vec({x0}), vec({x1}))));
    auto r = amplitude::assemble(g, 2);
    double s = std::sin(T), c = std::cos(T);
    double S = (x0 * x0 + x1 * x1) * c / (2 * s) - x0 * x1 / s;
    double maxs = 0;
    for (const auto& [m, p] : r.series)
      if (m > 0) maxs = std::max(maxs, p.max_abs());
    bool zero = maxs == 0.0;
    double eS = std::abs(r.S - S) / std::max(1.0, std::abs(S)), eW = std::abs(r.abs_det_W / std::abs(1 / s) - 1);
    int want_eta = T < M_PI ? 0 : 1;
    bool here = zero && eS <= 1e-8 && eW <= 1e-8 && r.morse_index == want_eta;
    ok = ok && here;
    os << fmt("T=%.1f: max|series m>0| %.1e, S err %.1e, |det W| rel %.1e, ", T, maxs, eS, eW) << "eta " << r.morse_index << "; ";
  }
  return {ok, os.str()};
}

Outcome unit_det() {
  auto start = std::chrono::steady_clock::now();
  kernels::QuadConfig q;
  q.order = 32;
  auto g = green::GreenRep::build(classical::solve_bvp(problem(kUnitDet, 2, 1.0, vec({0.2, -0.1}), vec({0.5, 0.4}))));
  auto rep = amplitude::divergence_report(amplitude::assemble(g, 1, q));
  const auto& od = rep.at(1);
  double sum = od.coefficients.count(1) ? od.coefficients.at(1) : 0.0;
  double mag = od.magnitude.count(1) ? od.magnitude.at(1) : 0.0;
  double secs = seconds(start);
  return {mag > 0 && std::abs(sum) <= 1e-6 * mag && secs < 120,
          fmt("D0^1 sum %.2e, sum|contrib| %.3e, ratio %.1e, %.1f s", sum, mag, mag > 0 ? std::abs(sum) / mag : 0.0, secs)};
}

const harness::Row* row(const harness::CheckReport& r, const std::string& q, int order = -1) {
  for (const auto& x : r.rows)
    if (x.quantity == q && x.order == order) return &x;
  throw std::runtime_error("missing row " + q);
}

Outcome fubini() {
  bool ok = true;
  std::ostringstream os;
  auto prefactor = [&](const std::string& name, const std::string& text) {
    auto rep = harness::fubini_check(config::parse_config(text));
    double det = row(rep, "abs_det_W")->rel_residual();
    double eta = row(rep, "morse_index")->abs_residual();
    ok = ok && rep.pass() && det <= 1e-8 && eta == 0.0;
    os << name << fmt(": |det W| rel %.1e, eta ", det) << row(rep, "morse_index")->lhs[0] << "="
       << row(rep, "morse_index")->rhs[0] << "; ";
  };
  prefactor("free", "[problem]\ndimension = 1\nlagrangian = v^2/2\nt0 = 0\nt1 = 1.5\nq0 = 0.3\nq1 = -0.7\n"
                    "[compute]\nloop_order = 1\n[fubini]\nsplit_time = 0.4\n");
  prefactor("harmonic T=1", "[problem]\ndimension = 1\nlagrangian = v^2/2 - q^2/2\nt0 = 0\nt1 = 1\nq0 = 0.5\nq1 = 1.1\n"
                            "[compute]\nloop_order = 1\n[fubini]\nsplit_time = 0.5\n");
  prefactor("harmonic T=4", "[problem]\ndimension = 1\nlagrangian = v^2/2 - q^2/2\nt0 = 0\nt1 = 4\nq0 = 0.5\nq1 = 1.1\n"
                            "[compute]\nloop_order = 1\n[fubini]\nsplit_time = 2\n");
  auto rep = harness::fubini_check(config::parse_config(
      "[problem]\ndimension = 1\nlagrangian = v^2/2 - 0.1*q^4\nt0 = 0\nt1 = 1\nq0 = 0.5\nq1 = 1.2\n"
      "[compute]\nloop_order = 1\n[fubini]\nsplit_time = 0.45\n"));
  const auto* s1 = row(rep, "series", 1);
  ok = ok && rep.pass() && s1->rel_residual() <= 1e-3;
  os << fmt("quartic order 1: lhs %.10f rhs %.10f rel %.1e", s1->lhs[0], s1->rhs[0], s1->rel_residual());
  return {ok, os.str()};
}

Outcome coordinates() {
  auto rep = harness::coordinate_check(
      config::parse_config(kUnitDetConfig + "[compute]\nloop_order = 1\nquad_order = 24\n[coords]\nmap = q1 + 0.2*sin(q2), q2\n"));
  double e0 = std::max({row(rep, "phase")->rel_residual(), row(rep, "abs_det_W")->rel_residual(),
                        row(rep, "series", 0)->abs_residual(), row(rep, "morse_index")->abs_residual()});
  const auto* s1 = row(rep, "series", 1);
  double e1 = std::abs(s1->lhs[0] - s1->rhs[0]) / std::abs(s1->lhs[0]);
  return {e0 <= 1e-8 && e1 <= 1e-4,
          fmt("order 0 max rel %.1e; order 1 finite %.8f vs %.8f, rel %.2e", e0, s1->lhs[0], s1->rhs[0], e1)};
}

Outcome stationary_phase() {
  config::StphaseSettings s;
  s.action = "q^2/2 + q^4/24";
  s.max_order = 2;
  auto rep = harness::stphase_sweep(s);
  bool ok = true;
  std::ostringstream os;
  for (int m : {1, 2}) {
    os << "M=" << m << " observed orders";
    for (double p : rep.observed_order.at(m)) {
      os << fmt(" %.4f", p);
      ok = ok && p >= m + 1;
    }
    os << "; ";
  }
  return {ok, os.str()};
}

Outcome classical_identities() {
  std::vector<classical::Problem> ps{
      problem("v^2/2", 1, 1.5, vec({0.3}), vec({-0.7})),
      problem("v^2/2 - q^2/2", 1, 2.5, vec({0.5}), vec({1.1})),
      problem(kQuartic, 1, 1.0, vec({0.5}), vec({1.2})),
      problem(kLogMetric, 1, 1.0, vec({1.0}), vec({M_E})),
      problem(kUnitDet, 2, 1.0, vec({0.2, -0.1}), vec({0.5, 0.4})),
      problem(kCoupled, 2, 1.3, vec({0.2, -0.1}), vec({0.4, 0.3})),
  };
  double worst = 0;
  const double h = 1e-4;
  for (const auto& p : ps) {
    auto tr = classical::solve_bvp(p);
    auto [g0, g1] = classical::s_gradients(tr);
    auto S = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
      auto q = p.with_endpoints(p.t0, a, p.t1, b);
      q.v0_guess = tr.initial_velocity();
      return classical::action(classical::solve_bvp(q));
    };
    for (int i = 0; i < p.dim; ++i) {
      Eigen::VectorXd e = Eigen::VectorXd::Unit(p.dim, i) * h;
      double d0 = (S(p.q0 + e, p.q1) - S(p.q0 - e, p.q1)) / (2 * h);
      double d1 = (S(p.q0, p.q1 + e) - S(p.q0, p.q1 - e)) / (2 * h);
      worst = std::max({worst, std::abs(g0(i) - d0) / (1 + std::abs(d0)), std::abs(g1(i) - d1) / (1 + std::abs(d1))});
    }
  }
  // Glued paths: the split pieces of a classical path are stationary in the intermediate point.
  double glued = 0;
  for (const auto& p : {ps[2], ps[4], ps[5]}) {
    auto tr = classical::solve_bvp(p);
    double t = p.t0 + 0.45 * (p.t1 - p.t0);
    auto a = p.with_endpoints(p.t0, p.q0, t, tr.position(t));
    auto b = p.with_endpoints(t, tr.position(t), p.t1, p.q1);
    a.v0_guess = tr.velocity(p.t0);
    b.v0_guess = tr.velocity(t);
    Eigen::VectorXd g = classical::s_gradients(classical::solve_bvp(a)).second + classical::s_gradients(classical::solve_bvp(b)).first;
    glued = std::max(glued, g.norm());
  }
  return {worst <= 1e-6 && glued <= 1e-6,
          fmt("endpoint momenta vs FD of S: max err %.1e over 6 problems; glued stationarity %.1e", worst, glued)};
}

Outcome small_oracle() {
  auto g = green::GreenRep::build(classical::solve_bvp(problem(kQuartic, 1, 1.0, vec({0.5}), vec({1.2}))));
  double worst = 0;
  int count = 0;
  for (const auto& d : graphs::enumerate(2, 0)) {
    if (d.edge_count() > 3) continue;
    DeltaPoly a = amplitude::evaluate_diagram(d, g);
    DeltaPoly b = oracle::evaluate(kernels::from_diagram(d), g);
    double scale = std::max(1.0, b.max_abs());
    for (int k = 0; k <= std::max(a.degree(), b.degree()); ++k) worst = std::max(worst, std::abs(a[k] - b[k]) / scale);
    ++count;
  }
  return {count == 4 && worst <= 1e-8, fmt("%.0f diagrams with E <= 3, max difference %.1e", count, worst)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> known;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--known") {
      std::stringstream ss(argv[i + 1]);
      std::string tok;
      while (std::getline(ss, tok, ',')) known.insert(std::stoi(tok));
    }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Green's function closed form", green_closed_form},
      {"barbell divergence T^3/24", barbell},
      {"diagram census", census},
      {"harmonic oscillator exactness", harmonic},
      {"divergence cancellation, unit-determinant metric", unit_det},
      {"composition law", fubini},
      {"coordinate invariance", coordinates},
      {"stationary-phase convergence orders", stationary_phase},
      {"classical identities", classical_identities},
      {"small-instance oracle equivalence", small_oracle},
  };
  int unexpected = 0, failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) {
      ++failed;
      if (!known.count(id)) ++unexpected;
    }
    std::printf("[%s] %2d %s (%.1f s): %s%s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), seconds(start),
                o.detail.c_str(), !o.pass && known.count(id) ? " [known deviation]" : "");
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d passed, %d failed (%d unexpected)\n", criteria.size(), static_cast<int>(criteria.size()) - failed,
              failed, unexpected);
  return unexpected == 0 ? 0 : 1;
}
