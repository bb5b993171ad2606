#include "spi/stphase.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "spi/graphs.hpp"
#include "spi/quadrature.hpp"

namespace spi::stphase {

namespace {

struct Layout {
  std::shared_ptr<const std::vector<std::vector<int>>> sorted;
  std::vector<std::uint32_t> dense;  // full index (base dim) -> storage offset
};

const Layout& layout(int dim, int rank) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<Layout>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{dim, rank}];
  if (slot) return *slot;
  double full = std::pow(dim, rank);
  if (full > 2e7) throw std::invalid_argument("SymTensor: dimension^rank too large");
  auto lay = std::make_unique<Layout>();
  auto sorted = std::make_shared<std::vector<std::vector<int>>>();
  std::map<std::vector<int>, std::uint32_t> where;
  std::vector<int> cur(rank, 0);
  auto rec = [&](auto&& self, int k, int from) -> void {
    if (k == rank) {
      where[cur] = static_cast<std::uint32_t>(sorted->size());
      sorted->push_back(cur);
      return;
    }
    for (int i = from; i < dim; ++i) {
      cur[k] = i;
      self(self, k + 1, i);
    }
  };
  rec(rec, 0, 0);
  lay->dense.resize(static_cast<std::size_t>(full));
  std::vector<int> idx(rank, 0);
  for (std::size_t f = 0; f < lay->dense.size(); ++f) {
    std::size_t r = f;
    for (int k = 0; k < rank; ++k) {
      idx[k] = static_cast<int>(r % dim);
      r /= dim;
    }
    auto s = idx;
    std::sort(s.begin(), s.end());
    lay->dense[f] = where.at(s);
  }
  lay->sorted = std::move(sorted);
  slot = std::move(lay);
  return *slot;
}

}  // namespace

SymTensor::SymTensor(int dim, int rank) : dim_(dim), rank_(rank) {
  if (dim < 1 || rank < 0) throw std::invalid_argument("SymTensor: bad shape");
  indices_ = layout(dim, rank).sorted;
  data_.assign(indices_->size(), 0.0);
}

SymTensor SymTensor::scalar(double v) {
  SymTensor t(1, 0);
  t.data_[0] = v;
  return t;
}

SymTensor SymTensor::from_matrix(const Eigen::MatrixXd& m) {
  SymTensor t(static_cast<int>(m.rows()), 2);
  for (std::size_t k = 0; k < t.size(); ++k) {
    const auto& ix = t.indices()[k];
    t.data_[k] = 0.5 * (m(ix[0], ix[1]) + m(ix[1], ix[0]));
  }
  return t;
}

std::size_t SymTensor::offset(std::span<const int> idx) const {
  if (static_cast<int>(idx.size()) != rank_) throw std::invalid_argument("SymTensor: index rank mismatch");
  std::size_t f = 0;
  for (int k = rank_ - 1; k >= 0; --k) f = f * dim_ + idx[k];
  return layout(dim_, rank_).dense[f];
}

double SymTensor::operator()(std::span<const int> idx) const { return data_[offset(idx)]; }
double& SymTensor::at(std::span<const int> idx) { return data_[offset(idx)]; }

double SymTensor::norm() const {
  // Frobenius norm over all (unsorted) index tuples.
  double s = 0.0;
  for (std::size_t k = 0; k < data_.size(); ++k) {
    const auto& ix = (*indices_)[k];
    double mult = std::tgamma(rank_ + 1.0);
    for (int i = 0, run = 1; i < rank_; ++i) {
      if (i + 1 < rank_ && ix[i + 1] == ix[i]) {
        ++run;
      } else {
        mult /= std::tgamma(run + 1.0);
        run = 1;
      }
    }
    s += mult * data_[k] * data_[k];
  }
  return std::sqrt(s);
}

SymTensor& SymTensor::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Eigen::MatrixXd SymTensor::matrix() const {
  if (rank_ != 2) throw std::logic_error("SymTensor: matrix view needs rank 2");
  Eigen::MatrixXd m(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) m(i, j) = (*this)({i, j});
  return m;
}

double SymTensor::determinant() const { return matrix().determinant(); }
Eigen::MatrixXd SymTensor::inverse() const { return matrix().inverse(); }

int SymTensor::signature() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix());
  return static_cast<int>((es.eigenvalues().array() < 0.0).count());
}

SymTensor SymTensor::transformed(const Eigen::MatrixXd& T) const {
  if (T.rows() != dim_) throw std::invalid_argument("SymTensor: transform size mismatch");
  const int n2 = static_cast<int>(T.cols());
  SymTensor out(n2, rank_);
  const std::size_t full = static_cast<std::size_t>(std::pow(dim_, rank_));
  std::vector<int> in(rank_);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto& j = out.indices()[k];
    double s = 0.0;
    for (std::size_t f = 0; f < full; ++f) {
      std::size_t r = f;
      double w = 1.0;
      for (int p = 0; p < rank_; ++p) {
        in[p] = static_cast<int>(r % dim_);
        r /= dim_;
        w *= T(in[p], j[p]);
      }
      s += w * (*this)(in);
    }
    out.data_[k] = s;
  }
  return out;
}

double gaussian_moment(const SymTensor& b, const SymTensor& a) {
  if (a.rank() != 2 || a.dim() != b.dim()) throw std::invalid_argument("gaussian_moment: shape mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.matrix());
  if (es.eigenvalues().minCoeff() <= 0.0) throw NotPositiveDefinite("gaussian_moment: a must be positive-definite");
  const int r = b.rank();
  if (r % 2) return 0.0;
  if (r == 0) return b.data()[0];
  Eigen::MatrixXd g = a.inverse();
  // For symmetric b every pairing gives the same sum, so one pairing times
  // the (r-1)!! pairings suffices.
  double pairings = 1.0;
  for (int k = r - 1; k > 1; k -= 2) pairings *= k;
  const int N = b.dim();
  std::vector<int> idx(r, 0);
  double s = 0.0;
  for (;;) {
    double w = 1.0;
    for (int k = 0; k < r; k += 2) w *= g(idx[k], idx[k + 1]);
    s += w * b(idx);
    int p = 0;
    while (p < r && ++idx[p] == N) idx[p++] = 0;
    if (p == r) break;
  }
  return pairings * s;
}

std::complex<double> Prefactor::sign(SignConvention c) const {
  std::complex<double> base = c == SignConvention::MinusI ? std::complex<double>(0, -1) : -1.0;
  return std::pow(base, eta);
}

std::complex<double> Prefactor::value(double hbar, SignConvention c) const {
  using namespace std::complex_literals;
  std::complex<double> p = std::pow(2 * M_PI * hbar, 0.5 * dimension) * std::exp(1i * (M_PI * dimension / 4.0));
  return p * std::exp(1i * (phase / hbar)) * sign(c) / std::sqrt(abs_det_hessian);
}

std::complex<double> AsymptoticExpansion::evaluate(double hbar, int M, SignConvention c) const {
  std::complex<double> ih(0.0, hbar), s = 0.0, pw = 1.0;
  for (int m = 0; m <= M; ++m) {
    auto it = series.find(m);
    if (it != series.end()) s += it->second * pw;
    pw *= ih;
  }
  std::complex<double> v = prefactor.value(hbar, c) * s;
  return insertion ? v / ih : v;
}

namespace {

// Contraction of a diagram with vertex tensors and edge matrix g.
double contract(const graphs::Diagram& d, const std::vector<const SymTensor*>& vt, const Eigen::MatrixXd& g) {
  const int E = d.edge_count(), V = d.vertex_count(), N = static_cast<int>(g.rows());
  std::vector<std::vector<int>> halves(V);  // half-edge ids per vertex
  for (int e = 0; e < E; ++e) {
    halves[d.edges()[e].first].push_back(2 * e);
    halves[d.edges()[e].second].push_back(2 * e + 1);
  }
  std::vector<int> idx(2 * E, 0), vidx;
  double total = 0.0;
  for (;;) {
    double w = 1.0;
    for (int e = 0; e < E && w != 0.0; ++e) w *= g(idx[2 * e], idx[2 * e + 1]);
    for (int v = 0; v < V && w != 0.0; ++v) {
      vidx.clear();
      for (int h : halves[v]) vidx.push_back(idx[h]);
      w *= (*vt[v])(vidx);
    }
    total += w;
    int p = 0;
    while (p < 2 * E && ++idx[p] == N) idx[p++] = 0;
    if (p >= 2 * E) break;
  }
  return total;
}

}  // namespace

AsymptoticExpansion formal_integral(const Derivatives& A, const Derivatives* B, int eta, int M) {
  if (M < 0) throw std::invalid_argument("formal_integral: negative loop cap");
  if (A.size() < 3) throw std::invalid_argument("formal_integral: need derivatives of A through order 2");
  const int N = A[2].dim();
  const SymTensor& a2 = A[2];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a2.matrix());
  double big = es.eigenvalues().cwiseAbs().maxCoeff();
  if (big == 0.0 || es.eigenvalues().cwiseAbs().minCoeff() <= 1e-12 * big)
    throw SingularHessian("formal_integral: A'' is degenerate at the critical point");
  if (A[1].norm() > 1e-9 * (1.0 + a2.norm()))
    throw GradientNotZero("formal_integral: gradient of A does not vanish at the point");
  if (eta != a2.signature())
    throw std::invalid_argument("formal_integral: eta inconsistent with the signature of A''");

  AsymptoticExpansion out;
  out.prefactor.dimension = N;
  out.prefactor.phase = A[0].data()[0];
  out.prefactor.eta = eta;
  out.prefactor.abs_det_hessian = std::abs(a2.determinant());
  out.insertion = B != nullptr;
  for (int m = 0; m <= M; ++m) out.series[m] = 0.0;
  if (!B) out.series[0] = 1.0;

  Eigen::MatrixXd g = a2.inverse();
  std::map<int, SymTensor> negA;
  for (const auto& d : graphs::enumerate(M, B ? 1 : 0)) {
    std::vector<const SymTensor*> vt(d.vertex_count());
    for (int v = 0; v < d.vertex_count(); ++v) {
      int n = d.degree(v);
      if (d.marks()[v] >= 0) {
        if (static_cast<int>(B->size()) <= n)
          throw std::invalid_argument("formal_integral: B derivatives of order " + std::to_string(n) + " required");
        vt[v] = &(*B)[n];
      } else {
        if (static_cast<int>(A.size()) <= n)
          throw std::invalid_argument("formal_integral: A derivatives of order " + std::to_string(n) + " required");
        auto it = negA.find(n);
        if (it == negA.end()) {
          SymTensor t = A[n];
          t *= -1.0;
          it = negA.emplace(n, std::move(t)).first;
        }
        vt[v] = &it->second;
      }
    }
    out.series[d.loop_order()] += contract(d, vt, g) / static_cast<double>(d.automorphism_order());
  }
  return out;
}

namespace {

double smooth_step(double u) {
  // 1 for u <= 0, 0 for u >= 1, C-infinity in between.
  if (u <= 0.0) return 1.0;
  if (u >= 1.0) return 0.0;
  auto f = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
  double a = f(1.0 - u), b = f(u);
  return a / (a + b);
}

double bump(std::span<const double> x, const Box& box) {
  double w = 1.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    double c = 0.5 * (box.lo[k] + box.hi[k]), h = 0.5 * (box.hi[k] - box.lo[k]);
    double s = std::abs(x[k] - c) / h;
    w *= smooth_step((s - 0.6) / 0.4);
  }
  return w;
}

std::complex<double> oracle_sum(const Function& A, const Function* B, const Box& box, double hbar, int order,
                                int panels) {
  const GaussRule& g = gauss_legendre(order);
  const int N = static_cast<int>(box.lo.size());
  std::vector<double> h(N);
  for (int k = 0; k < N; ++k) h[k] = (box.hi[k] - box.lo[k]) / panels;
  const long per_dim = static_cast<long>(panels) * order;
  long total = 1;
  for (int k = 0; k < N; ++k) total *= per_dim;
  std::complex<double> sum = 0.0;
  std::vector<double> x(N);
  for (long f = 0; f < total; ++f) {
    long r = f;
    double w = 1.0;
    for (int k = 0; k < N; ++k) {
      long i = r % per_dim;
      r /= per_dim;
      long p = i / order, q = i % order;
      x[k] = box.lo[k] + (p + 0.5 * (1.0 + g.x[q])) * h[k];
      w *= 0.5 * h[k] * g.w[q];
    }
    double b = bump(x, box);
    if (b == 0.0) continue;
    double amp = w * b * (B ? (*B)(x) : 1.0);
    double ph = A(x) / hbar;
    sum += amp * std::complex<double>(std::cos(ph), std::sin(ph));
  }
  if (B) sum /= std::complex<double>(0.0, hbar);
  return sum;
}

}  // namespace

std::complex<double> numeric_oracle(const Function& A, const Function* B, const Box& region, double hbar,
                                    const OracleConfig& cfg) {
  const std::size_t N = region.lo.size();
  if (N == 0 || N > 2 || region.hi.size() != N)
    throw std::invalid_argument("numeric_oracle: supports boxes in one or two dimensions");
  if (hbar <= 0.0) throw std::invalid_argument("numeric_oracle: hbar must be positive");
  int panels = cfg.initial_panels;
  std::complex<double> prev = oracle_sum(A, B, region, hbar, cfg.order, panels);
  while (panels * 2 <= cfg.max_panels) {
    panels *= 2;
    std::complex<double> cur = oracle_sum(A, B, region, hbar, cfg.order, panels);
    if (std::abs(cur - prev) <= cfg.rel_tol * std::abs(cur)) return cur;
    prev = cur;
  }
  throw QuadratureFailure("numeric_oracle: quadrature did not converge");
}

}  // namespace spi::stphase
