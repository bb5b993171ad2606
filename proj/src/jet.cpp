#include "spi/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace spi {

JetSpace::JetSpace(int nvars, int order) : nvars_(nvars), order_(order) {
  if (nvars < 1 || order < 0) throw std::invalid_argument("jet space: bad shape");
  double dense = std::pow(order + 1.0, nvars);
  if (dense > 5e7) throw std::invalid_argument("jet space too large");

  std::vector<std::vector<std::uint8_t>> all;
  std::vector<std::uint8_t> cur(nvars, 0);
  auto rec = [&](auto&& self, int var, int left) -> void {
    if (var == nvars) {
      all.push_back(cur);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      cur[var] = static_cast<std::uint8_t>(e);
      self(self, var + 1, left - e);
    }
    cur[var] = 0;
  };
  rec(rec, 0, order);
  auto deg = [](const std::vector<std::uint8_t>& a) {
    int s = 0;
    for (auto x : a) s += x;
    return s;
  };
  std::stable_sort(all.begin(), all.end(), [&](const auto& a, const auto& b) {
    int da = deg(a), db = deg(b);
    if (da != db) return da < db;
    return a > b;
  });

  lookup_.assign(static_cast<std::size_t>(dense), -1);
  exps_.reserve(all.size() * nvars);
  for (std::size_t i = 0; i < all.size(); ++i) {
    exps_.insert(exps_.end(), all[i].begin(), all[i].end());
    degree_.push_back(deg(all[i]));
    std::size_t key = 0;
    for (int v = 0; v < nvars; ++v) key = key * (order + 1) + all[i][v];
    lookup_[key] = static_cast<std::int32_t>(i);
  }

  term_start_.push_back(0);
  std::vector<int> sum(nvars);
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = 0; j < all.size(); ++j) {
      if (degree_[i] + degree_[j] > order) continue;
      for (int v = 0; v < nvars; ++v) sum[v] = all[i][v] + all[j][v];
      terms_.push_back({static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(index(sum))});
    }
    term_start_.push_back(terms_.size());
  }
}

long JetSpace::index(std::span<const int> alpha) const {
  if (static_cast<int>(alpha.size()) != nvars_) throw std::invalid_argument("jet: multi-index size");
  int total = 0;
  std::size_t key = 0;
  for (int v = 0; v < nvars_; ++v) {
    if (alpha[v] < 0) throw std::invalid_argument("jet: negative exponent");
    total += alpha[v];
    if (total > order_) return -1;
    key = key * (order_ + 1) + alpha[v];
  }
  return lookup_[key];
}

std::shared_ptr<const JetSpace> jet_space(int nvars, int order) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const JetSpace>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{nvars, order}];
  if (!slot) slot = std::make_shared<const JetSpace>(nvars, order);
  return slot;
}

Jet::Jet(std::shared_ptr<const JetSpace> space) : space_(std::move(space)), c_(space_->size(), 0.0) {}

Jet Jet::constant(std::shared_ptr<const JetSpace> space, double c) {
  Jet j(std::move(space));
  j.c_[0] = c;
  return j;
}

Jet Jet::variable(std::shared_ptr<const JetSpace> space, int var, double value) {
  Jet j(std::move(space));
  j.c_[0] = value;
  if (j.order() >= 1) {
    std::vector<int> alpha(j.space().nvars(), 0);
    alpha[var] = 1;
    j.c_[j.space().index(alpha)] = 1.0;
  }
  return j;
}

double Jet::coefficient(std::span<const int> alpha) const {
  long i = space_->index(alpha);
  if (i < 0) throw std::out_of_range("jet: derivative order exceeds truncation");
  return c_[i];
}

double Jet::partial(std::span<const int> alpha) const {
  double f = 1.0;
  for (int a : alpha)
    for (int k = 2; k <= a; ++k) f *= k;
  return coefficient(alpha) * f;
}

double Jet::partial_wrt(std::span<const int> vars) const {
  std::vector<int> alpha(space_->nvars(), 0);
  for (int v : vars) ++alpha.at(v);
  return partial(alpha);
}

double Jet::partial_wrt(std::initializer_list<int> vars) const {
  return partial_wrt(std::span<const int>(vars.begin(), vars.size()));
}

bool Jet::is_constant() const {
  return std::all_of(c_.begin() + 1, c_.end(), [](double x) { return x == 0.0; });
}

Jet& Jet::operator+=(const Jet& o) {
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

Jet& Jet::operator*=(double s) {
  for (double& x : c_) x *= s;
  return *this;
}

Jet Jet::operator-() const {
  Jet r = *this;
  for (double& x : r.c_) x = -x;
  return r;
}

Jet operator*(const Jet& a, const Jet& b) {
  Jet r(a.space_);
  const JetSpace& sp = *a.space_;
  for (std::size_t i = 0; i < a.c_.size(); ++i) {
    double ai = a.c_[i];
    if (ai == 0.0) continue;
    for (const auto& t : sp.products(i)) r.c_[t.k] += ai * b.c_[t.j];
  }
  return r;
}

Jet compose(const Jet& u, std::span<const double> taylor) {
  Jet du = u;
  du.coefficients()[0] = 0.0;
  int n = std::min<int>(u.order(), static_cast<int>(taylor.size()) - 1);
  Jet r = Jet::constant(u.space_ptr(), taylor[n]);
  for (int k = n - 1; k >= 0; --k) {
    r = r * du;
    r.coefficients()[0] += taylor[k];
  }
  return r;
}

namespace {

using expr::DomainError;
using expr::FuncKind;
using expr::Node;
using expr::NodeKind;

double finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string("non-finite jet value in ") + what);
  return x;
}

// Taylor coefficients of x -> x^p about x0 (generalized binomial).
std::vector<double> power_series(double x0, double p, int n) {
  std::vector<double> t(n + 1);
  double binom = 1.0;
  for (int k = 0; k <= n; ++k) {
    t[k] = binom * std::pow(x0, p - k);
    binom *= (p - k) / (k + 1.0);
  }
  return t;
}

std::vector<double> func_series(FuncKind f, double x0, int n) {
  std::vector<double> t(n + 1);
  double fact = 1.0;
  switch (f) {
    case FuncKind::Exp: {
      double e = finite(std::exp(x0), "exp");
      for (int k = 0; k <= n; ++k) {
        if (k > 0) fact *= k;
        t[k] = e / fact;
      }
      return t;
    }
    case FuncKind::Sin:
    case FuncKind::Cos: {
      double shift = f == FuncKind::Sin ? 0.0 : M_PI / 2;
      for (int k = 0; k <= n; ++k) {
        if (k > 0) fact *= k;
        t[k] = std::sin(x0 + shift + k * M_PI / 2) / fact;
      }
      return t;
    }
    case FuncKind::Log: {
      if (x0 <= 0.0) throw DomainError("log of non-positive value");
      t[0] = std::log(x0);
      double p = 1.0;
      for (int k = 1; k <= n; ++k) {
        p *= x0;
        t[k] = ((k % 2) ? 1.0 : -1.0) / (k * p);
      }
      return t;
    }
    case FuncKind::Sqrt:
      if (x0 <= 0.0) throw DomainError("sqrt of non-positive value");
      return power_series(x0, 0.5, n);
    case FuncKind::Tanh: {
      // d/dx P(tanh x) = P'(t)(1 - t^2); track P as a coefficient vector in t.
      double th = std::tanh(x0);
      std::vector<double> poly{0.0, 1.0};
      for (int k = 0; k <= n; ++k) {
        if (k > 0) fact *= k;
        double v = 0.0;
        for (std::size_t i = poly.size(); i-- > 0;) v = v * th + poly[i];
        t[k] = v / fact;
        std::vector<double> next(poly.size() + 1, 0.0);
        for (std::size_t i = 1; i < poly.size(); ++i) {
          next[i - 1] += i * poly[i];
          next[i + 1] -= i * poly[i];
        }
        poly = std::move(next);
      }
      return t;
    }
  }
  return t;
}

Jet integer_power(const Jet& a, long n) {
  if (n < 0) return integer_power(reciprocal(a), -n);
  Jet r = Jet::constant(a.space_ptr(), 1.0);
  Jet base = a;
  while (n > 0) {
    if (n & 1) r = r * base;
    n >>= 1;
    if (n) base = base * base;
  }
  return r;
}

Jet eval_jet(const Node& n, const std::vector<Jet>& vars, const std::shared_ptr<const JetSpace>& sp) {
  switch (n.kind) {
    case NodeKind::Number:
    case NodeKind::Parameter: return Jet::constant(sp, n.value);
    case NodeKind::Variable: return vars[n.slot];
    case NodeKind::Add: return eval_jet(*n.lhs, vars, sp) + eval_jet(*n.rhs, vars, sp);
    case NodeKind::Sub: return eval_jet(*n.lhs, vars, sp) - eval_jet(*n.rhs, vars, sp);
    case NodeKind::Mul: return eval_jet(*n.lhs, vars, sp) * eval_jet(*n.rhs, vars, sp);
    case NodeKind::Div: return eval_jet(*n.lhs, vars, sp) * reciprocal(eval_jet(*n.rhs, vars, sp));
    case NodeKind::Neg: return -eval_jet(*n.lhs, vars, sp);
    case NodeKind::Pow: return jet_pow(eval_jet(*n.lhs, vars, sp), eval_jet(*n.rhs, vars, sp));
    case NodeKind::Func: {
      Jet u = eval_jet(*n.lhs, vars, sp);
      return compose(u, func_series(n.func, u.value(), u.order()));
    }
  }
  return Jet(sp);
}

}  // namespace

Jet reciprocal(const Jet& u) {
  if (u.value() == 0.0) throw DomainError("division by zero");
  return compose(u, power_series(u.value(), -1.0, u.order()));
}

Jet jet_pow(const Jet& a, const Jet& b) {
  if (b.is_constant()) {
    double p = b.value();
    if (p == std::round(p) && std::abs(p) < 1e6) return integer_power(a, static_cast<long>(p));
    if (a.value() <= 0.0) throw DomainError("non-integer power of a non-positive base");
    return compose(a, power_series(a.value(), p, a.order()));
  }
  if (a.value() <= 0.0) throw DomainError("variable exponent requires a positive base");
  Jet l = compose(a, func_series(FuncKind::Log, a.value(), a.order()));
  Jet e = b * l;
  return compose(e, func_series(FuncKind::Exp, e.value(), e.order()));
}

Jet jet_eval(const expr::Expression& e, std::span<const double> point, int order) {
  int nv = e.layout().count();
  if (static_cast<int>(point.size()) != nv) throw std::invalid_argument("jet_eval: point has wrong size");
  if (order < 0) throw std::invalid_argument("jet_eval: negative order");
  for (double x : point)
    if (!std::isfinite(x)) throw DomainError("jet_eval: non-finite expansion point");
  auto sp = jet_space(nv, order);
  std::vector<Jet> vars;
  vars.reserve(nv);
  for (int i = 0; i < nv; ++i) vars.push_back(Jet::variable(sp, i, point[i]));
  Jet r = eval_jet(e.root(), vars, sp);
  for (double c : r.coefficients()) finite(c, "expression");
  return r;
}

VelocityHessian velocity_hessian(const Jet& jet) {
  if (jet.order() < 2) throw std::invalid_argument("velocity_hessian: jet order must be >= 2");
  int d = (jet.space().nvars() - 1) / 2;
  expr::VarLayout lay{d};
  VelocityHessian h;
  h.a.resize(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) h.a(i, j) = jet.partial_wrt({lay.v(i), lay.v(j)});
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.a);
  const auto& ev = es.eigenvalues();
  double big = ev.cwiseAbs().maxCoeff();
  double small = ev.cwiseAbs().minCoeff();
  if (big == 0.0 || small <= 1e-12 * big)
    throw SingularMatrixError("velocity Hessian is singular (non-regular Lagrangian point)");
  h.positive_definite = ev.minCoeff() > 0.0;
  h.a_inv = h.a.inverse();
  return h;
}

}  // namespace spi
