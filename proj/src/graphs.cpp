#include "spi/graphs.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace spi::graphs {

namespace {

std::uint64_t factorial(int n) {
  std::uint64_t f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

struct Canon {
  std::vector<int> order;       // order[new] = old vertex
  std::uint64_t vertex_aut = 0;  // number of minimizing permutations
};

// Minimizes the adjacency key over vertex orders that keep the invariant
// colors in sorted order. Counts the minimizers, which form one coset of the
// vertex automorphism group.
Canon canonicalize(int n, const std::vector<int>& adj, std::vector<long> color) {
  // Color refinement by neighbor color multisets; isomorphism-invariant, so
  // it only shrinks the search.
  for (int round = 0; round < n; ++round) {
    std::vector<std::vector<long>> sig(n);
    for (int v = 0; v < n; ++v) {
      sig[v].push_back(color[v]);
      std::vector<long> nb;
      for (int w = 0; w < n; ++w)
        if (adj[v * n + w] && w != v) nb.push_back(color[w] * 64 + adj[v * n + w]);
      std::sort(nb.begin(), nb.end());
      sig[v].insert(sig[v].end(), nb.begin(), nb.end());
    }
    std::vector<std::vector<long>> sorted = sig;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<long> next(n);
    for (int v = 0; v < n; ++v)
      next[v] = std::lower_bound(sorted.begin(), sorted.end(), sig[v]) - sorted.begin();
    bool stable = std::set<long>(next.begin(), next.end()).size() == std::set<long>(color.begin(), color.end()).size();
    color = std::move(next);
    if (stable) break;
  }

  std::vector<int> base(n);
  std::iota(base.begin(), base.end(), 0);
  std::stable_sort(base.begin(), base.end(), [&](int a, int b) { return color[a] < color[b]; });

  Canon out;
  std::vector<int> best_key, key, cur(n);
  std::vector<char> used(n, 0);
  bool have_best = false;

  auto rec = [&](auto&& self, int pos) -> void {
    if (pos == n) {
      if (!have_best || key < best_key) {
        best_key = key;
        out.order = cur;
        out.vertex_aut = 1;
        have_best = true;
      } else if (key == best_key) {
        ++out.vertex_aut;
      }
      return;
    }
    long want = color[base[pos]];
    for (int v = 0; v < n; ++v) {
      if (used[v] || color[v] != want) continue;
      cur[pos] = v;
      std::size_t mark = key.size();
      for (int j = 0; j <= pos; ++j) key.push_back(adj[cur[j] * n + v]);
      bool prune = false;
      if (have_best) {
        auto cmp = std::lexicographical_compare_three_way(key.begin(), key.end(), best_key.begin(),
                                                          best_key.begin() + key.size());
        prune = cmp > 0;
      }
      if (!prune) {
        used[v] = 1;
        self(self, pos + 1);
        used[v] = 0;
      }
      key.resize(mark);
    }
  };
  rec(rec, 0);
  return out;
}

}  // namespace

Diagram::Diagram(std::vector<int> marks, std::vector<Edge> edges) {
  const int n = static_cast<int>(marks.size());
  std::set<int> seen;
  for (int m : marks) {
    if (m < -1 || m > 1) throw std::invalid_argument("diagram: mark id must be -1, 0 or 1");
    if (m >= 0 && !seen.insert(m).second) throw std::invalid_argument("diagram: duplicate mark id");
  }
  std::vector<int> adj(n * n, 0);
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw std::invalid_argument("diagram: edge endpoint out of range");
    ++adj[a * n + b];
    if (a != b) ++adj[b * n + a];
  }
  std::vector<long> color(n);
  for (int v = 0; v < n; ++v) {
    int deg = 0;
    for (int w = 0; w < n; ++w) deg += adj[v * n + w] * (v == w ? 2 : 1);
    color[v] = (static_cast<long>(marks[v] + 1) << 40) | (static_cast<long>(deg) << 20) | adj[v * n + v];
  }
  Canon c = canonicalize(n, adj, color);

  marks_.resize(n);
  adj_.assign(n * n, 0);
  for (int i = 0; i < n; ++i) {
    marks_[i] = marks[c.order[i]];
    for (int j = 0; j < n; ++j) adj_[i * n + j] = adj[c.order[i] * n + c.order[j]];
  }
  degree_.assign(n, 0);
  aut_ = c.vertex_aut;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      int m = adj_[i * n + j];
      for (int k = 0; k < m; ++k) edges_.emplace_back(i, j);
      if (i == j) {
        degree_[i] += 2 * m;
        aut_ *= factorial(m) << m;
      } else {
        degree_[i] += m;
        degree_[j] += m;
        aut_ *= factorial(m);
      }
    }
  }

  std::ostringstream os;
  os << "m:";
  for (int i = 0; i < n; ++i) os << (i ? "," : "") << (marks_[i] < 0 ? "." : std::to_string(marks_[i]));
  os << ";e:";
  for (std::size_t k = 0; k < edges_.size(); ++k)
    os << (k ? "," : "") << edges_[k].first << "-" << edges_[k].second;
  label_ = os.str();
}

int Diagram::marked_count() const {
  return static_cast<int>(std::count_if(marks_.begin(), marks_.end(), [](int m) { return m >= 0; }));
}

int Diagram::marked_vertex(int mark_id) const {
  for (int v = 0; v < vertex_count(); ++v)
    if (marks_[v] == mark_id) return v;
  return -1;
}

std::vector<std::vector<int>> Diagram::components() const {
  const int n = vertex_count();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (auto [a, b] : edges_) parent[find(a)] = find(b);
  std::vector<std::vector<int>> out;
  std::vector<int> slot(n, -1);
  for (int v = 0; v < n; ++v) {
    int r = find(v);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(out.size());
      out.emplace_back();
    }
    out[slot[r]].push_back(v);
  }
  return out;
}

std::string Diagram::dump() const {
  std::ostringstream os;
  os << "V=" << vertex_count() << " marks=";
  bool any = false;
  for (int id = 0; id < 2; ++id) {
    int v = marked_vertex(id);
    if (v < 0) continue;
    os << (any ? "," : "") << id << "@" << v;
    any = true;
  }
  if (!any) os << "none";
  os << " edges=";
  for (std::size_t k = 0; k < edges_.size(); ++k)
    os << (k ? "," : "") << "(" << edges_[k].first << "," << edges_[k].second << ")";
  os << " chi=" << euler_characteristic() << " aut=" << aut_;
  return os.str();
}

std::uint64_t automorphism_order(const Diagram& d) { return d.automorphism_order(); }

std::vector<Diagram> enumerate(int max_order, int marked_vertices) {
  if (max_order < 0) throw std::invalid_argument("enumerate: negative order");
  if (max_order > kMaxOrder)
    throw LimitExceeded("enumerate: order " + std::to_string(max_order) + " exceeds ceiling " +
                        std::to_string(kMaxOrder));
  if (marked_vertices < 0 || marked_vertices > 2)
    throw std::invalid_argument("enumerate: marked_vertices must be 0, 1 or 2");

  const int K = marked_vertices;
  std::set<Diagram> found;

  for (int m = 0; m <= max_order; ++m) {
    for (int U = 0; U <= 2 * m; ++U) {
      const int E = U + m;
      const int n = U + K;
      if (n == 0) continue;
      std::vector<int> marks(n, -1);
      for (int k = 0; k < K; ++k) marks[U + k] = k;

      // Degree sequences: unmarked nonincreasing and >= 3, marked >= 0.
      std::vector<int> deg(n, 0);
      auto fill_edges = [&]() {
        std::vector<int> rem = deg;
        std::vector<Edge> edges;
        auto rec = [&](auto&& self, int i, int j) -> void {
          if (i == n) {
            found.insert(Diagram(marks, edges));
            return;
          }
          if (j == n) {
            if (rem[i] == 0) self(self, i + 1, i + 1);
            return;
          }
          int cap = (i == j) ? rem[i] / 2 : std::min(rem[i], rem[j]);
          for (int k = 0; k <= cap; ++k) {
            if (i == j) rem[i] -= 2 * k;
            else rem[i] -= k, rem[j] -= k;
            for (int t = 0; t < k; ++t) edges.emplace_back(i, j);
            self(self, i, j + 1);
            for (int t = 0; t < k; ++t) edges.pop_back();
            if (i == j) rem[i] += 2 * k;
            else rem[i] += k, rem[j] += k;
          }
        };
        rec(rec, 0, 0);
      };
      auto rec_deg = [&](auto&& self, int v, int left) -> void {
        if (v == n) {
          if (left == 0) fill_edges();
          return;
        }
        int lo = v < U ? 3 : 0;
        int hi = (v < U && v > 0) ? std::min(deg[v - 1], left) : left;
        for (int x = lo; x <= hi; ++x) {
          deg[v] = x;
          self(self, v + 1, left - x);
        }
      };
      rec_deg(rec_deg, 0, 2 * E);
    }
  }

  std::vector<Diagram> out(found.begin(), found.end());
  std::stable_sort(out.begin(), out.end(), [](const Diagram& a, const Diagram& b) {
    if (a.loop_order() != b.loop_order()) return a.loop_order() < b.loop_order();
    if (a.vertex_count() != b.vertex_count()) return a.vertex_count() < b.vertex_count();
    return a.canonical_label() < b.canonical_label();
  });
  return out;
}

std::vector<std::vector<std::pair<int, int>>> pairings(int n) {
  std::vector<std::vector<std::pair<int, int>>> out;
  if (n < 0 || n % 2) return out;
  std::vector<char> used(n + 1, 0);
  std::vector<std::pair<int, int>> cur;
  auto rec = [&](auto&& self) -> void {
    int first = 1;
    while (first <= n && used[first]) ++first;
    if (first > n) {
      out.push_back(cur);
      return;
    }
    used[first] = 1;
    for (int j = first + 1; j <= n; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      cur.emplace_back(first, j);
      self(self);
      cur.pop_back();
      used[j] = 0;
    }
    used[first] = 0;
  };
  rec(rec);
  return out;
}

}  // namespace spi::graphs
