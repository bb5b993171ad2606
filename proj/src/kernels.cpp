#include "spi/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <tuple>

#include "spi/jet.hpp"
#include "spi/quadrature.hpp"

namespace spi::kernels {

int Network::valence(int v) const {
  int n = 0;
  for (auto [a, b] : edges) n += (a == v) + (b == v);
  for (const Leg& l : legs) n += l.vertex == v;
  return n;
}

Network from_diagram(const graphs::Diagram& d) {
  if (d.marked_count() > 0) throw std::invalid_argument("from_diagram: marked vertices are not evaluated here");
  Network n;
  n.vertices = d.vertex_count();
  n.edges = d.edges();
  return n;
}

namespace {

using Index = std::uint32_t;

/// Positions of the jet monomials behind a dense vertex tensor of given rank,
/// with the factor alpha! and the vertex sign folded in.
struct TensorTable {
  std::vector<Index> mono;
  std::vector<double> factor;
};

const TensorTable& tensor_table(int d, int rank, int order) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int>, TensorTable> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(d, rank, order);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  if (rank > order) throw JetOrderError("jet order " + std::to_string(order) + " is below vertex valence " + std::to_string(rank));
  auto space = jet_space(2 * d + 1, order);
  const int D = 2 * d;
  std::size_t size = 1;
  for (int r = 0; r < rank; ++r) size *= D;
  TensorTable t;
  t.mono.resize(size);
  t.factor.resize(size);
  std::vector<int> alpha(2 * d + 1);
  for (std::size_t flat = 0; flat < size; ++flat) {
    std::fill(alpha.begin(), alpha.end(), 0);
    std::size_t rest = flat;
    for (int r = 0; r < rank; ++r) {
      alpha[1 + rest % D]++;
      rest /= D;
    }
    long idx = space->index(alpha);
    if (idx < 0) throw JetOrderError("jet order insufficient for vertex valence");
    double f = -1.0;
    for (int e : alpha)
      for (int k = 2; k <= e; ++k) f *= k;
    t.mono[flat] = static_cast<Index>(idx);
    t.factor[flat] = f;
  }
  return cache.emplace(key, std::move(t)).first->second;
}

enum class SrcKind { Vertex, Edge, Leg, Temp };

struct Src {
  SrcKind kind;
  int index;
};

/// out[io[n]] += x[ix[n]] * y[iy[n]] over all n.
struct Op {
  Src x, y;
  int out = 0;
  std::vector<Index> ix, iy, io;
};

struct Plan {
  std::vector<Op> ops;
  std::vector<std::size_t> temp_size;
  Src result{SrcKind::Temp, 0};
};

std::size_t ipow(int D, std::size_t r) {
  std::size_t s = 1;
  for (std::size_t k = 0; k < r; ++k) s *= D;
  return s;
}

Src add_op(Plan& plan, int D, Src x, const std::vector<int>& lx, Src y, const std::vector<int>& ly, std::vector<int>& lout) {
  std::vector<int> shared, out;
  for (int l : lx) (std::find(ly.begin(), ly.end(), l) != ly.end() ? shared : out).push_back(l);
  for (int l : ly)
    if (std::find(lx.begin(), lx.end(), l) == lx.end()) out.push_back(l);
  std::vector<int> all = out;
  all.insert(all.end(), shared.begin(), shared.end());
  auto strides = [&](const std::vector<int>& labels) {
    std::vector<std::size_t> s(all.size(), 0);
    for (std::size_t p = 0; p < labels.size(); ++p) {
      auto pos = std::find(all.begin(), all.end(), labels[p]) - all.begin();
      s[pos] = ipow(D, labels.size() - 1 - p);
    }
    return s;
  };
  auto sx = strides(lx), sy = strides(ly), so = strides(out);
  Op op{x, y, static_cast<int>(plan.temp_size.size()), {}, {}, {}};
  std::size_t total = ipow(D, all.size());
  op.ix.resize(total);
  op.iy.resize(total);
  op.io.resize(total);
  std::vector<int> digit(all.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    std::size_t a = 0, b = 0, c = 0;
    for (std::size_t p = 0; p < all.size(); ++p) {
      a += digit[p] * sx[p];
      b += digit[p] * sy[p];
      c += digit[p] * so[p];
    }
    op.ix[n] = static_cast<Index>(a);
    op.iy[n] = static_cast<Index>(b);
    op.io[n] = static_cast<Index>(c);
    for (int p = static_cast<int>(all.size()) - 1; p >= 0; --p) {
      if (++digit[p] < D) break;
      digit[p] = 0;
    }
  }
  plan.temp_size.push_back(ipow(D, out.size()));
  plan.ops.push_back(std::move(op));
  lout = out;
  return Src{SrcKind::Temp, static_cast<int>(plan.temp_size.size()) - 1};
}

/// Vertex-by-vertex contraction: each vertex absorbs its legs, self-loops
/// and outgoing edges, then joins the running product.
Plan compile(const Network& net, int D) {
  Plan plan;
  const int E = static_cast<int>(net.edges.size());
  Src acc{SrcKind::Temp, -1};
  std::vector<int> lacc;
  for (int v = 0; v < net.vertices; ++v) {
    std::vector<int> lv;
    for (int e = 0; e < E; ++e) {
      if (net.edges[e].first == v) lv.push_back(2 * e);
      if (net.edges[e].second == v) lv.push_back(2 * e + 1);
    }
    for (std::size_t l = 0; l < net.legs.size(); ++l)
      if (net.legs[l].vertex == v) lv.push_back(2 * E + static_cast<int>(l));
    Src cur{SrcKind::Vertex, v};
    for (std::size_t l = 0; l < net.legs.size(); ++l)
      if (net.legs[l].vertex == v)
        cur = add_op(plan, D, cur, lv, Src{SrcKind::Leg, static_cast<int>(l)}, {2 * E + static_cast<int>(l)}, lv);
    for (int e = 0; e < E; ++e)
      if (net.edges[e].first == v && net.edges[e].second == v)
        cur = add_op(plan, D, cur, lv, Src{SrcKind::Edge, e}, {2 * e, 2 * e + 1}, lv);
    for (int e = 0; e < E; ++e)
      if (net.edges[e].first == v && net.edges[e].second != v)
        cur = add_op(plan, D, cur, lv, Src{SrcKind::Edge, e}, {2 * e, 2 * e + 1}, lv);
    if (v == 0) {
      acc = cur;
      lacc = lv;
    } else {
      acc = add_op(plan, D, acc, lacc, cur, lv, lacc);
    }
  }
  if (!lacc.empty()) throw std::logic_error("compile: open labels after contraction");
  plan.result = acc;
  return plan;
}

struct Term {
  int net = 0;
  std::uint32_t mask = 0;  // edges taking the delta part
  int k = 0;               // surviving time variables
  int power = 0;           // D0 degree
  std::vector<int> cls;    // class of each vertex, 0..k-1
};

int find(std::vector<int>& p, int x) {
  while (p[x] != x) x = p[x] = p[p[x]];
  return x;
}

/// Class labels by first appearance and the D0 power of a delta subset.
void merge(const Network& net, std::uint32_t mask, Term& t) {
  std::vector<int> parent(net.vertices);
  std::iota(parent.begin(), parent.end(), 0);
  int power = 0;
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    if (!(mask >> e & 1u)) continue;
    int a = find(parent, net.edges[e].first), b = find(parent, net.edges[e].second);
    if (a == b) ++power;
    else parent[a] = b;
  }
  std::vector<int> label(net.vertices, -1);
  t.cls.assign(net.vertices, 0);
  int k = 0;
  for (int v = 0; v < net.vertices; ++v) {
    int r = find(parent, v);
    if (label[r] < 0) label[r] = k++;
    t.cls[v] = label[r];
  }
  t.k = k;
  t.power = power;
  t.mask = mask;
}

int velocity_degree(const green::GreenRep& g) {
  const int d = g.dim();
  expr::VarLayout lay{d};
  std::vector<int> slots;
  for (int i = 0; i < d; ++i) slots.push_back(lay.v(i));
  return expr::polynomial_degree(g.trajectory().problem().lagrangian, slots);
}

std::vector<Term> split_terms(const Network& net, int net_index, int vdeg) {
  const int E = static_cast<int>(net.edges.size());
  if (E > 24) throw std::invalid_argument("network has too many edges");
  std::vector<Term> out;
  for (std::uint32_t mask = 0; mask < (1u << E); ++mask) {
    if (vdeg >= 0) {
      std::vector<int> halves(net.vertices, 0);
      for (int e = 0; e < E; ++e)
        if (mask >> e & 1u) {
          halves[net.edges[e].first]++;
          halves[net.edges[e].second]++;
        }
      if (*std::max_element(halves.begin(), halves.end()) > vdeg) continue;
    }
    Term t;
    t.net = net_index;
    merge(net, mask, t);
    out.push_back(std::move(t));
  }
  return out;
}

struct Site {
  green::Frame frame;
  std::vector<std::vector<double>> tensor;  // by rank
  std::vector<std::vector<double>> leg;     // endpoint * d + component
  std::vector<double> delta;                // D x D, a^-1 in the velocity block
};

struct Needs {
  int d = 1;
  int jet_order = 2;
  std::vector<int> ranks;
  bool legs = false;
};

void fill_site(Site& s, double t, const green::GreenRep& g, const Needs& nd) {
  const int d = nd.d, D = 2 * d;
  s.frame = g.frame(t);
  Jet jet = g.trajectory().lagrangian_jet(t, nd.jet_order);
  auto c = jet.coefficients();
  int top = nd.ranks.empty() ? 0 : *std::max_element(nd.ranks.begin(), nd.ranks.end());
  s.tensor.resize(top + 1);
  for (int r : nd.ranks) {
    const TensorTable& tab = tensor_table(d, r, nd.jet_order);
    auto& out = s.tensor[r];
    out.resize(tab.mono.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = tab.factor[i] * c[tab.mono[i]];
  }
  if (nd.legs) {
    s.leg.assign(2 * d, std::vector<double>(D, 0.0));
    for (int a = 0; a < 2; ++a) {
      const Eigen::MatrixXd& p = a == 0 ? s.frame.p0 : s.frame.p1;
      const Eigen::MatrixXd& dp = a == 0 ? s.frame.dp0 : s.frame.dp1;
      for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i) {
          s.leg[a * d + k][i] = dp(i, k);
          s.leg[a * d + k][d + i] = p(i, k);
        }
    }
  }
  s.delta.assign(D * D, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) s.delta[i * D + j] = s.frame.a_inv(i, j);
}

/// Smooth edge matrix over extended indices: rows at s, columns at t, the
/// velocity slot carrying a time derivative.
void fill_smooth(const green::GreenRep& g, const green::Frame& s, const green::Frame& t, int order, int d, double* out) {
  const int D = 2 * d;
  for (int ds = 0; ds <= 1; ++ds)
    for (int dt = 0; dt <= 1; ++dt) {
      Eigen::MatrixXd m = g.smooth(s, t, ds, dt, order);
      int ro = ds ? 0 : d, co = dt ? 0 : d;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out[(ro + i) * D + co + j] = m(i, j);
    }
}

struct Workspace {
  std::vector<std::vector<double>> temps;
  std::vector<const double*> vertex, edge, leg;
};

double run(const Plan& plan, Workspace& ws) {
  auto ptr = [&](Src s) -> const double* {
    switch (s.kind) {
      case SrcKind::Vertex: return ws.vertex[s.index];
      case SrcKind::Edge: return ws.edge[s.index];
      case SrcKind::Leg: return ws.leg[s.index];
      case SrcKind::Temp: return ws.temps[s.index].data();
    }
    return nullptr;
  };
  for (const Op& op : plan.ops) {
    const double* x = ptr(op.x);
    const double* y = ptr(op.y);
    std::vector<double>& out = ws.temps[op.out];
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t n = op.ix.size();
    for (std::size_t i = 0; i < n; ++i) out[op.io[i]] += x[op.ix[i]] * y[op.iy[i]];
  }
  return ptr(plan.result)[0];
}

std::vector<std::vector<int>> permutations(int k) {
  std::vector<int> p(k);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

Needs needs_for(const std::vector<Network>& nets, const green::GreenRep& g, const QuadConfig& cfg) {
  Needs nd;
  nd.d = g.dim();
  int maxval = 0;
  for (const Network& n : nets) {
    for (int v = 0; v < n.vertices; ++v) {
      int val = n.valence(v);
      if (val < 1) throw std::invalid_argument("network vertex without legs");
      maxval = std::max(maxval, val);
      if (std::find(nd.ranks.begin(), nd.ranks.end(), val) == nd.ranks.end()) nd.ranks.push_back(val);
    }
    for (auto [a, b] : n.edges)
      if (a > b || a < 0 || b >= n.vertices) throw std::invalid_argument("network edge out of order or range");
    for (const Leg& l : n.legs) {
      if (l.vertex < 0 || l.vertex >= n.vertices || l.endpoint < 0 || l.endpoint > 1 || l.component < 0 || l.component >= nd.d)
        throw std::invalid_argument("network leg out of range");
      nd.legs = true;
    }
  }
  nd.jet_order = cfg.jet_order > 0 ? cfg.jet_order : maxval + 2;
  if (nd.jet_order < maxval) throw JetOrderError("jet order " + std::to_string(nd.jet_order) + " is below max valence " + std::to_string(maxval));
  return nd;
}

std::vector<DeltaPoly> evaluate_core(const std::vector<Network>& nets, const green::GreenRep& g, const QuadConfig& cfg,
                                     std::vector<int>& term_count) {
  const Needs nd = needs_for(nets, g, cfg);
  const int d = nd.d, D = 2 * d;
  const int vdeg = velocity_degree(g);
  std::vector<Plan> plans;
  std::vector<Term> terms;
  term_count.assign(nets.size(), 0);
  for (std::size_t i = 0; i < nets.size(); ++i) {
    plans.push_back(compile(nets[i], D));
    auto t = split_terms(nets[i], static_cast<int>(i), vdeg);
    term_count[i] = static_cast<int>(t.size());
    for (auto& x : t) terms.push_back(std::move(x));
  }
  std::vector<double> term_value(terms.size(), 0.0);
  const double t0 = g.t0(), T = g.t1() - g.t0();

  int kmax = 0;
  for (const Term& t : terms) kmax = std::max(kmax, t.k);
  for (int k = 1; k <= kmax; ++k) {
    std::vector<int> group;
    for (std::size_t i = 0; i < terms.size(); ++i)
      if (terms[i].k == k) group.push_back(static_cast<int>(i));
    if (group.empty()) continue;
    const int n = cfg.nodes(k);
    if (n < 1) throw std::invalid_argument("quadrature order must be positive");
    const GaussRule& rule = gauss_legendre(n);
    std::vector<double> u(n), w(n);
    for (int i = 0; i < n; ++i) {
      u[i] = 0.5 * (1 + rule.x[i]);
      w[i] = 0.5 * rule.w[i];
    }
    const auto perms = permutations(k);
    std::size_t inner = 1;
    for (int j = 1; j < k; ++j) inner *= n;

    // partial[b * group + i]: block b holds all points whose outermost node is b.
    std::vector<double> partial(static_cast<std::size_t>(n) * group.size(), 0.0);
    std::vector<std::exception_ptr> errors(n);

#pragma omp parallel for schedule(dynamic) if (cfg.parallel)
    for (int b = 0; b < n; ++b) {
      try {
        Workspace ws;
        std::vector<Site> sites(k);
        std::vector<double> smooth(static_cast<std::size_t>(k) * k * D * D);
        std::vector<int> idx(k, 0);
        std::vector<double> x(k);
        double* acc = partial.data() + static_cast<std::size_t>(b) * group.size();
        for (std::size_t m = 0; m < inner; ++m) {
          std::size_t rest = m;
          for (int j = 0; j < k - 1; ++j) {
            idx[j] = static_cast<int>(rest % n);
            rest /= n;
          }
          idx[k - 1] = b;
          x[k - 1] = t0 + T * u[b];
          double weight = T * w[b];
          for (int j = k - 2; j >= 0; --j) {
            weight *= w[idx[j]] * (x[j + 1] - t0);
            x[j] = t0 + (x[j + 1] - t0) * u[idx[j]];
          }
          for (int j = 0; j < k; ++j) fill_site(sites[j], x[j], g, nd);
          for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
              fill_smooth(g, sites[i].frame, sites[j].frame, i < j ? 1 : (i > j ? -1 : 0), d,
                          smooth.data() + (static_cast<std::size_t>(i) * k + j) * D * D);
          for (std::size_t gi = 0; gi < group.size(); ++gi) {
            const Term& term = terms[group[gi]];
            const Network& net = nets[term.net];
            const Plan& plan = plans[term.net];
            ws.temps.resize(plan.temp_size.size());
            for (std::size_t q = 0; q < plan.temp_size.size(); ++q) ws.temps[q].resize(plan.temp_size[q]);
            ws.vertex.resize(net.vertices);
            ws.edge.resize(net.edges.size());
            ws.leg.resize(net.legs.size());
            double sum = 0.0;
            for (const auto& pos : perms) {
              for (int v = 0; v < net.vertices; ++v)
                ws.vertex[v] = sites[pos[term.cls[v]]].tensor[net.valence(v)].data();
              for (std::size_t e = 0; e < net.edges.size(); ++e) {
                int sa = pos[term.cls[net.edges[e].first]], sb = pos[term.cls[net.edges[e].second]];
                ws.edge[e] = (term.mask >> e & 1u) ? sites[sa].delta.data()
                                                   : smooth.data() + (static_cast<std::size_t>(sa) * k + sb) * D * D;
              }
              for (std::size_t l = 0; l < net.legs.size(); ++l) {
                const Leg& leg = net.legs[l];
                ws.leg[l] = sites[pos[term.cls[leg.vertex]]].leg[leg.endpoint * d + leg.component].data();
              }
              sum += run(plan, ws);
            }
            acc[gi] += weight * sum;
          }
        }
      } catch (...) {
        errors[b] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (std::size_t gi = 0; gi < group.size(); ++gi) {
      double s = 0.0;
      for (int b = 0; b < n; ++b) s += partial[static_cast<std::size_t>(b) * group.size() + gi];
      term_value[group[gi]] = s;
    }
  }

  std::vector<DeltaPoly> out(nets.size());
  for (std::size_t i = 0; i < terms.size(); ++i) out[terms[i].net].add(terms[i].power, term_value[i]);
  return out;
}

}  // namespace

Evaluation evaluate(const std::vector<Network>& nets, const green::GreenRep& g, const QuadConfig& cfg) {
  Evaluation ev;
  ev.values = evaluate_core(nets, g, cfg, ev.terms);
  ev.error_estimate.assign(nets.size(), 0.0);
  if (cfg.verify_tol > 0) {
    QuadConfig coarse = cfg;
    coarse.order = std::max(2, cfg.order - 8);
    coarse.order_high = std::max(2, cfg.order_high - 4);
    std::vector<int> unused;
    auto check = evaluate_core(nets, g, coarse, unused);
    for (std::size_t i = 0; i < nets.size(); ++i) {
      double diff = 0;
      for (int k = 0; k <= std::max(check[i].degree(), ev.values[i].degree()); ++k)
        diff = std::max(diff, std::abs(check[i][k] - ev.values[i][k]));
      ev.error_estimate[i] = diff;
      if (diff > cfg.verify_tol * std::max(1.0, ev.values[i].max_abs()))
        throw QuadratureError("chamber quadrature did not converge (difference " + std::to_string(diff) + ")");
    }
  }
  return ev;
}

DeltaPoly evaluate_reference(const Network& net, const green::GreenRep& g, const QuadConfig& cfg) {
  const Needs nd = needs_for({net}, g, cfg);
  const int d = nd.d, D = 2 * d;
  const int E = static_cast<int>(net.edges.size());
  const int L = static_cast<int>(net.legs.size());
  const int labels = 2 * E + L;
  const double t0 = g.t0(), T = g.t1() - g.t0();

  // Label list per vertex.
  std::vector<std::vector<int>> vlabels(net.vertices);
  for (int e = 0; e < E; ++e) {
    vlabels[net.edges[e].first].push_back(2 * e);
    vlabels[net.edges[e].second].push_back(2 * e + 1);
  }
  for (int l = 0; l < L; ++l) vlabels[net.legs[l].vertex].push_back(2 * E + l);

  DeltaPoly out;
  for (std::uint32_t mask = 0; mask < (1u << E); ++mask) {
    Term term;
    merge(net, mask, term);
    const int k = term.k, n = cfg.nodes(k);
    const GaussRule& rule = gauss_legendre(n);
    double total = 0.0;
    for (const auto& pos : permutations(k)) {
      std::vector<int> idx(k, 0);
      std::size_t count = 1;
      for (int j = 0; j < k; ++j) count *= n;
      for (std::size_t m = 0; m < count; ++m) {
        std::size_t rest = m;
        for (int j = 0; j < k; ++j) {
          idx[j] = static_cast<int>(rest % n);
          rest /= n;
        }
        std::vector<double> x(k);
        double weight = T;
        x[k - 1] = t0 + T * 0.5 * (1 + rule.x[idx[k - 1]]);
        weight *= 0.5 * rule.w[idx[k - 1]];
        for (int j = k - 2; j >= 0; --j) {
          x[j] = t0 + (x[j + 1] - t0) * 0.5 * (1 + rule.x[idx[j]]);
          weight *= 0.5 * rule.w[idx[j]] * (x[j + 1] - t0);
        }
        auto time_of = [&](int v) { return x[pos[term.cls[v]]]; };
        std::vector<Jet> jets;
        for (int v = 0; v < net.vertices; ++v) jets.push_back(g.trajectory().lagrangian_jet(time_of(v), nd.jet_order));
        std::vector<Eigen::MatrixXd> edge(E, Eigen::MatrixXd::Zero(D, D));
        for (int e = 0; e < E; ++e) {
          double s = time_of(net.edges[e].first), t = time_of(net.edges[e].second);
          for (int ds = 0; ds <= 1; ++ds)
            for (int dt = 0; dt <= 1; ++dt) {
              green::GreenValue gv = g.eval(s, t, ds, dt);
              int ro = ds ? 0 : d, co = dt ? 0 : d;
              if (mask >> e & 1u) {
                if (ds && dt) edge[e].block(0, 0, d, d) = *gv.delta;
              } else {
                edge[e].block(ro, co, d, d) = gv.smooth;
              }
            }
        }
        std::vector<Eigen::VectorXd> leg(L, Eigen::VectorXd::Zero(D));
        for (int l = 0; l < L; ++l) {
          double t = time_of(net.legs[l].vertex);
          const auto& lg = net.legs[l];
          leg[l].head(d) = g.trajectory().jacobi(lg.endpoint, t, 1).col(lg.component);
          leg[l].tail(d) = g.trajectory().jacobi(lg.endpoint, t, 0).col(lg.component);
        }
        // Explicit sum over every assignment of extended indices to labels.
        std::vector<int> a(labels, 0);
        double value = 0.0;
        std::vector<int> slots;
        while (true) {
          double prod = 1.0;
          for (int e = 0; e < E && prod != 0.0; ++e) prod *= edge[e](a[2 * e], a[2 * e + 1]);
          for (int l = 0; l < L && prod != 0.0; ++l) prod *= leg[l](a[2 * E + l]);
          for (int v = 0; v < net.vertices && prod != 0.0; ++v) {
            slots.clear();
            for (int lab : vlabels[v]) slots.push_back(1 + a[lab]);
            prod *= -jets[v].partial_wrt(std::span<const int>(slots));
          }
          value += prod;
          int p = labels - 1;
          while (p >= 0 && ++a[p] == D) a[p--] = 0;
          if (p < 0) break;
        }
        total += weight * value;
      }
    }
    out.add(term.power, total);
  }
  return out;
}

}  // namespace spi::kernels
