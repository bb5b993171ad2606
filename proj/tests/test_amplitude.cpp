#include <doctest.h>
#include <json.hpp>
#include <omp.h>

#include <cmath>
#include <functional>

#include "diagram_oracle.hpp"
#include "spi/amplitude.hpp"

using namespace spi;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

classical::Trajectory solve(const std::string& L, int d, double T, Eigen::VectorXd q0, Eigen::VectorXd q1) {
  classical::Problem p;
  p.dim = d;
  p.lagrangian = expr::parse(L, d);
  p.t0 = 0;
  p.t1 = T;
  p.q0 = std::move(q0);
  p.q1 = std::move(q1);
  return classical::solve_bvp(p);
}

const char* kQuartic = "v^2/2 - 0.1*q^4";
const char* kLogMetric = "v^2/(2*q^2)";
const char* kUnitDet = "0.5*(exp(0.3*q1)*v1^2 + exp(-0.3*q1)*v2^2)";
const char* kCoupled = "0.5*(v1^2+v2^2) + 0.3*v1*v2 - 0.5*q1^2 - 0.25*q2^2 - 0.1*q1^3 + 0.2*tau*q2*v1";
// Same with a position-dependent velocity metric, so delta parts contribute.
const char* kCoupledMetric = "0.5*(v1^2+v2^2) + 0.3*v1*v2 - 0.5*q1^2 - 0.25*q2^2 - 0.1*q1^3 + 0.2*tau*q2*v1 + 0.05*q1*v2^2";

const kernels::Network kEight{1, {{0, 0}, {0, 0}}, {}};
const kernels::Network kTheta{2, {{0, 1}, {0, 1}, {0, 1}}, {}};
const kernels::Network kBarbell{2, {{0, 0}, {0, 1}, {1, 1}}, {}};

}  // namespace

TEST_CASE("DeltaPoly arithmetic") {
  DeltaPoly a({1.0, 2.0}), b({0.5, 0.0, 3.0});
  DeltaPoly s = a + b;
  CHECK(s.degree() == 2);
  CHECK(s[0] == 1.5);
  CHECK(s[2] == 3.0);
  DeltaPoly p = a * b;
  CHECK(p.degree() == 3);
  CHECK(p[1] == 1.0);
  CHECK(p[3] == 6.0);
  CHECK(p[7] == 0.0);
  CHECK((a * 2.0)[1] == 4.0);
}

TEST_CASE("barbell divergence of the logarithmic metric") {
  for (double T : {1.0, 2.0}) {
    for (double q1 : {M_E, 1.0}) {
      auto g = green::GreenRep::build(solve(kLogMetric, 1, T, vec({1.0}), vec({q1})));
      auto r = amplitude::assemble(g, 1);
      CHECK(r.series.at(1)[2] == doctest::Approx(T * T * T / 24).epsilon(1e-9));
      for (const auto& dc : r.diagrams)
        if (dc.contribution.degree() >= 2 && std::abs(dc.contribution[2]) > 0) CHECK(dc.aut == 8);
      double sum = 0;
      for (const auto& dc : r.diagrams) sum += dc.contribution[0];
      CHECK(sum == doctest::Approx(r.series.at(1)[0]).epsilon(1e-14));
    }
  }
}

TEST_CASE("quadratic Lagrangians have no corrections") {
  for (double T : {1.0, 2.5}) {
    auto tr = solve("v^2/2 - q^2/2", 1, T, vec({0.3}), vec({-0.4}));
    auto g = green::GreenRep::build(tr);
    kernels::QuadConfig q;
    q.order = 8;
    q.order_high = 4;
    auto r = amplitude::assemble(g, 2, q);
    for (int m = 1; m <= 2; ++m)
      for (double c : r.series.at(m).coefficients()) CHECK(c == 0.0);
    CHECK(r.series.at(0)[0] == 1.0);
    CHECK(r.sqrt_abs_det_W() == doctest::Approx(std::sqrt(1 / std::sin(T))).epsilon(1e-8));
    CHECK(r.morse_index == 0);
  }
  auto free = amplitude::assemble(green::GreenRep::build(solve("v^2/2", 1, 2.0, vec({0.0}), vec({1.0}))), 1);
  CHECK(free.S == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(free.abs_det_W == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(free.series.at(1).max_abs() == 0.0);
}

TEST_CASE("flat quartic diagrams match the nested-quadrature oracle") {
  auto g = green::GreenRep::build(solve(kQuartic, 1, 1.0, vec({0.5}), vec({1.2})));
  for (const auto& net : {kEight, kTheta, kBarbell}) {
    DeltaPoly k = kernels::evaluate({net}, g).values[0];
    DeltaPoly o = oracle::evaluate(net, g);
    CHECK(k.finite() == doctest::Approx(o.finite()).epsilon(1e-9));
    for (int j = 1; j <= k.degree(); ++j) CHECK(k[j] == 0.0);
  }
  // Figure eight by hand: 2.4 times the integral of G(t, t)^2.
  double direct = spi::integrate(
      [&](double t) {
        double G = g.eval(t, t, 0, 0).smooth(0, 0);
        return 2.4 * G * G;
      },
      0.0, 1.0, 24, 4);
  CHECK(kernels::evaluate({kEight}, g).values[0].finite() == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("kernel agrees with the reference evaluator") {
  auto g = green::GreenRep::build(solve(kCoupledMetric, 2, 1.0, vec({0.1, 0.2}), vec({-0.3, 0.5})));
  kernels::QuadConfig q;
  q.order = 5;
  q.order_high = 3;
  std::vector<kernels::Network> nets{kEight, kTheta, kBarbell,
                                     kernels::Network{2, {{0, 1}}, {{0, 0, 1}, {0, 1, 0}, {1, 1, 1}, {1, 0, 0}}},
                                     kernels::Network{1, {{0, 0}}, {{0, 1, 1}}}};
  auto ev = kernels::evaluate(nets, g, q);
  for (std::size_t i = 0; i < nets.size(); ++i) {
    DeltaPoly ref = kernels::evaluate_reference(nets[i], g, q);
    CHECK(ev.values[i].degree() <= ref.degree());
    for (int j = 0; j <= ref.degree(); ++j) CHECK(ev.values[i][j] == doctest::Approx(ref[j]).epsilon(1e-11).scale(1.0));
  }
}

TEST_CASE("result does not depend on the thread count") {
  auto g = green::GreenRep::build(solve(kUnitDet, 2, 1.0, vec({0.2, -0.1}), vec({0.5, 0.4})));
  kernels::QuadConfig q;
  q.order = 12;
  int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  auto a = kernels::evaluate({kEight, kTheta, kBarbell}, g, q).values;
  omp_set_num_threads(3);
  auto b = kernels::evaluate({kEight, kTheta, kBarbell}, g, q).values;
  q.parallel = false;
  auto c = kernels::evaluate({kEight, kTheta, kBarbell}, g, q).values;
  omp_set_num_threads(saved);
  for (int i = 0; i < 3; ++i) {
    CHECK(a[i].coefficients() == b[i].coefficients());
    CHECK(a[i].coefficients() == c[i].coefficients());
  }
}

TEST_CASE("leaf-labelled trees") {
  CHECK(amplitude::leaf_labelled_trees(3).size() == 1);
  CHECK(amplitude::leaf_labelled_trees(4).size() == 4);
  CHECK(amplitude::leaf_labelled_trees(5).size() == 26);
  CHECK(amplitude::leaf_labelled_trees(6).size() == 236);
  for (const auto& t : amplitude::leaf_labelled_trees(5)) {
    int vertices = 0;
    for (auto [a, b] : t) vertices = std::max(vertices, b + 1);
    CHECK(static_cast<int>(t.size()) == vertices - 1);
  }
}

TEST_CASE("S-derivative trees against finite differences") {
  auto free = green::GreenRep::build(solve("v^2/2", 1, 1.0, vec({0.0}), vec({1.0})));
  CHECK(amplitude::s_derivative_trees(free, 3).norm() == 0.0);
  CHECK_THROWS_AS(amplitude::s_derivative_trees(free, 2), std::invalid_argument);
  CHECK_THROWS_AS(amplitude::s_derivative_trees(free, 7), std::invalid_argument);

  const double a0 = 0.5, b0 = 1.2, h = 1e-3;
  auto g = green::GreenRep::build(solve(kQuartic, 1, 1.0, vec({a0}), vec({b0})));
  auto t3 = amplitude::s_derivative_trees(g, 3);
  auto minus_s = [&](double a, double b) { return -classical::action(solve(kQuartic, 1, 1.0, vec({a}), vec({b}))); };
  std::function<double(std::vector<int>, double, double)> fd = [&](std::vector<int> idx, double a, double b) -> double {
    if (idx.empty()) return minus_s(a, b);
    int c = idx.back();
    idx.pop_back();
    return c == 0 ? (fd(idx, a + h, b) - fd(idx, a - h, b)) / (2 * h) : (fd(idx, a, b + h) - fd(idx, a, b - h)) / (2 * h);
  };
  for (const auto& idx : t3.indices()) CHECK(std::abs(t3(idx) - fd(idx, a0, b0)) < 1e-4);
}

TEST_CASE("tadpole and the logarithmic derivative of the van Vleck determinant") {
  auto free = amplitude::tadpole_logdet_check(green::GreenRep::build(solve("v^2/2", 1, 1.0, vec({0.0}), vec({1.0}))));
  CHECK_FALSE(free.divergent);
  for (double r : free.residual) CHECK(r < 1e-8);

  auto quartic = amplitude::tadpole_logdet_check(green::GreenRep::build(solve(kQuartic, 1, 1.0, vec({0.5}), vec({1.2}))));
  CHECK_FALSE(quartic.divergent);
  REQUIRE(quartic.residual.size() == 2);
  for (double r : quartic.residual) CHECK(r < 1e-4);

  auto coupled = amplitude::tadpole_logdet_check(green::GreenRep::build(solve(kCoupled, 2, 1.0, vec({0.1, 0.2}), vec({-0.3, 0.5}))));
  CHECK_FALSE(coupled.divergent);
  for (double r : coupled.residual) CHECK(r < 1e-4);

  auto log_metric = amplitude::tadpole_logdet_check(green::GreenRep::build(solve(kLogMetric, 1, 1.0, vec({1.0}), vec({M_E}))));
  CHECK(log_metric.divergent);
  CHECK(log_metric.residual.empty());
}

TEST_CASE("divergence report") {
  auto harmonic = amplitude::assemble(green::GreenRep::build(solve("v^2/2 - q^2/2", 1, 1.0, vec({0.3}), vec({0.1}))), 1);
  for (const auto& [m, od] : amplitude::divergence_report(harmonic)) CHECK(od.divergence_free);

  kernels::QuadConfig q;
  q.order = 16;
  auto unit = amplitude::assemble(green::GreenRep::build(solve(kUnitDet, 2, 1.0, vec({0.2, -0.1}), vec({0.5, 0.4}))), 1, q);
  auto rep = amplitude::divergence_report(unit);
  CHECK(rep.at(1).magnitude.at(1) > 0.0);
  CHECK(std::abs(rep.at(1).coefficients.at(1)) <= 1e-6 * rep.at(1).magnitude.at(1));

  auto log_metric = amplitude::assemble(green::GreenRep::build(solve(kLogMetric, 1, 1.0, vec({1.0}), vec({M_E}))), 1);
  auto lrep = amplitude::divergence_report(log_metric);
  CHECK_FALSE(lrep.at(1).divergence_free);
  CHECK(lrep.at(1).coefficients.at(2) == doctest::Approx(1.0 / 24).epsilon(1e-9));
}

TEST_CASE("delta expansion agrees with Gaussian regularization") {
  // A self-loop sees the peak 1/(eps sqrt(2 pi)); a cycle closed by two
  // regularized deltas sees their overlap 1/(2 eps sqrt(pi)) instead.
  auto g = green::GreenRep::build(solve(kLogMetric, 1, 1.0, vec({1.0}), vec({M_E})));
  const std::vector<double> eps{0.02, 0.01, 0.005};
  struct Case {
    kernels::Network net;
    std::function<double(double)> proxy;
  };
  std::vector<Case> cases{{kBarbell, [](double e) { return 1 / (e * std::sqrt(2 * M_PI)); }},
                          {kTheta, [](double e) { return 1 / (2 * e * std::sqrt(M_PI)); }}};
  for (const auto& c : cases) {
    DeltaPoly exact = kernels::evaluate({c.net}, g).values[0];
    Eigen::Matrix3d A;
    Eigen::Vector3d b;
    for (int i = 0; i < 3; ++i) {
      double p = c.proxy(eps[i]);
      A.row(i) << 1, p, p * p;
      b(i) = oracle::regularized(c.net, g, eps[i]);
    }
    Eigen::Vector3d fit = A.colPivHouseholderQr().solve(b);
    for (int j = 1; j <= exact.degree(); ++j)
      if (std::abs(exact[j]) > 1e-12) CHECK(fit(j) == doctest::Approx(exact[j]).epsilon(0.05));
    if (exact.degree() < 2) CHECK(std::abs(fit(2)) * c.proxy(eps[2]) < 0.05 * std::abs(fit(1)));
  }
}

TEST_CASE("serialization and contract checks") {
  auto g = green::GreenRep::build(solve(kQuartic, 1, 1.0, vec({0.5}), vec({1.2})));
  auto r = amplitude::assemble(g, 1);
  std::string a = amplitude::to_json(r), b = amplitude::to_json(amplitude::assemble(g, 1));
  CHECK(a == b);
  auto j = nlohmann::json::parse(a);
  for (const char* key : {"d", "t0", "t1", "q0", "q1", "S", "log_abs_det_W", "morse_index", "series", "diagrams"})
    CHECK(j.contains(key));
  CHECK(j["series"][0]["delta_poly"][0] == 1.0);
  CHECK(j["diagrams"].size() == 3);

  graphs::Diagram marked({0, -1}, {{0, 1}, {1, 1}});
  CHECK_THROWS_AS(amplitude::evaluate_diagram(marked, g), std::invalid_argument);
  kernels::QuadConfig low;
  low.jet_order = 3;
  CHECK_THROWS_AS(kernels::evaluate({kEight}, g, low), kernels::JetOrderError);
  kernels::QuadConfig verify;
  verify.verify_tol = 1e-8;
  auto checked = kernels::evaluate({kTheta}, g, verify);
  CHECK(checked.error_estimate[0] < 1e-8);
}
