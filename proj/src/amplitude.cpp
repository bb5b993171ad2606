#include "spi/amplitude.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <json.hpp>

#include "spi/classical.hpp"

namespace spi::amplitude {

namespace {

graphs::Diagram component_diagram(const graphs::Diagram& d, const std::vector<int>& verts) {
  std::vector<int> index(d.vertex_count(), -1);
  for (std::size_t i = 0; i < verts.size(); ++i) index[verts[i]] = static_cast<int>(i);
  std::vector<graphs::Edge> edges;
  for (auto [a, b] : d.edges())
    if (index[a] >= 0) edges.emplace_back(std::min(index[a], index[b]), std::max(index[a], index[b]));
  return graphs::Diagram(std::vector<int>(verts.size(), -1), edges);
}

void check_unmarked(const graphs::Diagram& d) {
  if (d.marked_count() > 0) throw std::invalid_argument("evaluate_diagram: diagram has marked vertices");
  for (int v = 0; v < d.vertex_count(); ++v)
    if (d.degree(v) < 3) throw std::invalid_argument("evaluate_diagram: vertex of degree below 3");
}

double clean(double x) { return x == 0.0 ? 0.0 : x; }

}  // namespace

DeltaPoly evaluate_diagram(const graphs::Diagram& d, const green::GreenRep& g, const QuadConfig& quad) {
  check_unmarked(d);
  return kernels::evaluate({kernels::from_diagram(d)}, g, quad).values[0];
}

double PropagatorResult::sqrt_abs_det_W() const { return std::sqrt(abs_det_W); }
double PropagatorResult::log_abs_det_W() const { return std::log(abs_det_W); }

PropagatorResult assemble(const green::GreenRep& g, int max_order, const QuadConfig& quad, std::optional<int> morse) {
  if (max_order < 0 || max_order > graphs::kMaxOrder) throw std::invalid_argument("assemble: loop cap out of range");
  auto start = std::chrono::steady_clock::now();
  const classical::Trajectory& tr = g.trajectory();
  PropagatorResult r;
  r.d = tr.dim();
  r.t0 = tr.t0();
  r.t1 = tr.t1();
  r.q0 = tr.problem().q0;
  r.q1 = tr.problem().q1;
  r.S = tr.action();
  r.abs_det_W = classical::van_vleck(tr).abs_det;
  r.morse_index = morse ? *morse : classical::morse_index(tr);
  r.hbar_exponent = -0.5 * r.d;
  r.max_order = max_order;
  r.quad = quad;
  r.series[0] = DeltaPoly(1.0);
  for (int m = 1; m <= max_order; ++m) r.series[m] = DeltaPoly(0.0);

  const auto diagrams = max_order > 0 ? graphs::enumerate(max_order, 0) : std::vector<graphs::Diagram>{};
  // Distinct connected pieces, evaluated in one batch.
  std::map<std::string, int> slot;
  std::vector<kernels::Network> nets;
  std::vector<std::vector<int>> parts(diagrams.size());
  for (std::size_t i = 0; i < diagrams.size(); ++i) {
    for (const auto& comp : diagrams[i].components()) {
      graphs::Diagram c = component_diagram(diagrams[i], comp);
      auto [it, fresh] = slot.emplace(c.canonical_label(), static_cast<int>(nets.size()));
      if (fresh) nets.push_back(kernels::from_diagram(c));
      parts[i].push_back(it->second);
    }
  }
  kernels::Evaluation ev = kernels::evaluate(nets, g, quad);

  for (std::size_t i = 0; i < diagrams.size(); ++i) {
    DiagramContribution dc;
    dc.canonical = diagrams[i].canonical_label();
    dc.order = diagrams[i].loop_order();
    dc.aut = diagrams[i].automorphism_order();
    dc.value = DeltaPoly(1.0);
    for (int p : parts[i]) {
      dc.value = dc.value * ev.values[p];
      dc.terms += ev.terms[p];
      dc.error_estimate = std::max(dc.error_estimate, ev.error_estimate[p]);
    }
    dc.contribution = dc.value * (1.0 / static_cast<double>(dc.aut));
    r.series[dc.order] += dc.contribution;
    r.diagrams.push_back(std::move(dc));
  }
  for (auto& [m, p] : r.series) {
    std::vector<double> c = p.coefficients();
    for (double& x : c) x = clean(x);
    p = DeltaPoly(c);
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<std::vector<graphs::Edge>> leaf_labelled_trees(int n) {
  if (n < 3) throw std::invalid_argument("leaf_labelled_trees: need at least three leaves");
  // Internal vertices get ids from kInner upwards while leaves are added.
  constexpr int kInner = 1 << 20;
  std::vector<std::vector<graphs::Edge>> trees{{{0, kInner}, {1, kInner}, {2, kInner}}};
  for (int leaf = 3; leaf < n; ++leaf) {
    std::vector<std::vector<graphs::Edge>> next;
    for (const auto& t : trees) {
      int inner = 0;
      for (auto [a, b] : t) inner = std::max(inner, b - kInner + 1);
      for (int v = 0; v < inner; ++v) {
        auto u = t;
        u.emplace_back(leaf, kInner + v);
        next.push_back(std::move(u));
      }
      for (std::size_t e = 0; e < t.size(); ++e) {
        auto u = t;
        int x = kInner + inner;
        auto [a, b] = t[e];
        u[e] = {a, x};
        u.emplace_back(std::min(b, x), std::max(b, x));
        u.emplace_back(leaf, x);
        next.push_back(std::move(u));
      }
    }
    trees = std::move(next);
  }
  for (auto& t : trees) {
    for (auto& [a, b] : t) {
      if (a >= kInner) a = a - kInner + n;
      if (b >= kInner) b = b - kInner + n;
      if (a > b) std::swap(a, b);
    }
    std::sort(t.begin(), t.end());
  }
  return trees;
}

stphase::SymTensor s_derivative_trees(const green::GreenRep& g, int n, const QuadConfig& quad) {
  if (n == 2) throw std::invalid_argument("s_derivative_trees: rank 2 is the van Vleck block, not a tree sum");
  if (n < 3 || n > 6) throw std::invalid_argument("s_derivative_trees: rank must be between 3 and 6");
  const int d = g.dim();
  const auto trees = leaf_labelled_trees(n);
  stphase::SymTensor out(2 * d, n);
  std::vector<kernels::Network> nets;
  std::vector<std::size_t> owner;
  const auto& idx = out.indices();
  for (std::size_t c = 0; c < idx.size(); ++c) {
    for (const auto& t : trees) {
      kernels::Network net;
      for (auto [a, b] : t) {
        if (a < n) {
          int coord = idx[c][a];
          net.legs.push_back({b - n, coord / d, coord % d});
        } else {
          net.edges.emplace_back(a - n, b - n);
        }
        net.vertices = std::max(net.vertices, b - n + 1);
      }
      nets.push_back(std::move(net));
      owner.push_back(c);
    }
  }
  auto ev = kernels::evaluate(nets, g, quad);
  std::vector<double> acc(idx.size(), 0.0);
  for (std::size_t i = 0; i < nets.size(); ++i) acc[owner[i]] += ev.values[i].finite();
  for (std::size_t c = 0; c < idx.size(); ++c) out.data()[c] = acc[c];
  return out;
}

TadpoleCheck tadpole_logdet_check(const green::GreenRep& g, const QuadConfig& quad, double fd_step) {
  const classical::Trajectory& tr = g.trajectory();
  const int d = g.dim();
  std::vector<kernels::Network> nets;
  for (int c = 0; c < 2 * d; ++c) nets.push_back(kernels::Network{1, {{0, 0}}, {{0, c / d, c % d}}});
  TadpoleCheck out;
  out.tadpole = kernels::evaluate(nets, g, quad).values;
  for (const DeltaPoly& p : out.tadpole)
    for (int k = 1; k <= p.degree(); ++k)
      if (std::abs(p[k]) > 1e-9 * (1.0 + std::abs(p.finite()))) out.divergent = true;

  const classical::Problem& base = tr.problem();
  auto logdet = [&](int c, double h) {
    Eigen::VectorXd q0 = base.q0, q1 = base.q1;
    (c < d ? q0(c) : q1(c - d)) += h;
    auto t = classical::solve_bvp(base.with_endpoints(base.t0, q0, base.t1, q1));
    return std::log(classical::van_vleck(t).abs_det);
  };
  for (int c = 0; c < 2 * d; ++c) {
    out.fd.push_back((logdet(c, fd_step) - logdet(c, -fd_step)) / (2 * fd_step));
    if (!out.divergent) out.residual.push_back(std::abs(out.fd.back() - out.tadpole[c].finite()));
  }
  return out;
}

std::map<int, OrderDivergence> divergence_report(const PropagatorResult& r, double tol) {
  std::map<int, OrderDivergence> out;
  for (const auto& [m, p] : r.series) {
    OrderDivergence od;
    for (int k = 1; k <= p.degree(); ++k) {
      od.coefficients[k] = p[k];
      od.magnitude[k] = 0.0;
    }
    for (const auto& dc : r.diagrams)
      if (dc.order == m)
        for (int k = 1; k <= dc.contribution.degree(); ++k) od.magnitude[k] += std::abs(dc.contribution[k]);
    for (const auto& [k, c] : od.coefficients)
      if (std::abs(c) > tol * od.magnitude[k]) od.divergence_free = false;
    out[m] = od;
  }
  return out;
}

std::string to_json(const PropagatorResult& r, int indent) {
  using nlohmann::ordered_json;
  auto vec = [](const Eigen::VectorXd& v) {
    ordered_json a = ordered_json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
  };
  auto poly = [](const DeltaPoly& p) {
    ordered_json a = ordered_json::array();
    for (double c : p.coefficients()) a.push_back(clean(c));
    return a;
  };
  ordered_json j;
  j["d"] = r.d;
  j["t0"] = r.t0;
  j["t1"] = r.t1;
  j["q0"] = vec(r.q0);
  j["q1"] = vec(r.q1);
  j["S"] = r.S;
  j["log_abs_det_W"] = r.log_abs_det_W();
  j["morse_index"] = r.morse_index;
  j["hbar_exponent"] = r.hbar_exponent;
  j["max_order"] = r.max_order;
  j["series"] = ordered_json::array();
  for (const auto& [m, p] : r.series) j["series"].push_back({{"order", m}, {"delta_poly", poly(p)}});
  j["diagrams"] = ordered_json::array();
  for (const auto& dc : r.diagrams)
    j["diagrams"].push_back({{"canonical", dc.canonical},
                             {"order", dc.order},
                             {"aut", dc.aut},
                             {"value", poly(dc.value)},
                             {"contribution", poly(dc.contribution)}});
  j["quadrature"] = {{"order", r.quad.order}, {"order_high", r.quad.order_high}};
  return j.dump(indent);
}

}  // namespace spi::amplitude
