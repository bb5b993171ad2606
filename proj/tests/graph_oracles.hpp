// Independent combinatorial oracles for the diagram enumerator. Nothing here
// uses the canonical-label machinery under test.
#ifndef SPI_TESTS_GRAPH_ORACLES_HPP
#define SPI_TESTS_GRAPH_ORACLES_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "spi/graphs.hpp"

namespace oracle {

/// Counts half-edge permutations that respect edge pairing and induce a
/// mark-preserving vertex bijection.
inline std::uint64_t half_edge_automorphisms(const spi::graphs::Diagram& d) {
  std::vector<int> vert, partner;
  for (auto [a, b] : d.edges()) {
    int h = static_cast<int>(vert.size());
    vert.push_back(a);
    vert.push_back(b);
    partner.push_back(h + 1);
    partner.push_back(h);
  }
  const int H = static_cast<int>(vert.size());
  const int V = d.vertex_count();
  std::vector<int> perm(H);
  std::iota(perm.begin(), perm.end(), 0);
  std::uint64_t count = 0;
  do {
    bool ok = true;
    for (int h = 0; h < H && ok; ++h) ok = perm[partner[h]] == partner[perm[h]];
    std::vector<int> vmap(V, -1);
    for (int h = 0; h < H && ok; ++h) {
      int& m = vmap[vert[h]];
      if (m < 0) m = vert[perm[h]];
      else ok = m == vert[perm[h]];
    }
    if (!ok) continue;
    std::vector<int> hit(V, 0);
    for (int v = 0; v < V && ok; ++v) {
      int m = vmap[v] < 0 ? v : vmap[v];  // isolated vertices stay put
      ok = d.marks()[m] == d.marks()[v] && !hit[m]++;
    }
    if (ok) ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return count;
}

namespace detail {

inline bool isomorphic(int n, const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  do {
    bool same = true;
    for (int i = 0; i < n && same; ++i)
      for (int j = 0; j < n && same; ++j) same = a[i * n + j] == b[p[i] * n + p[j]];
    if (same) return true;
  } while (std::next_permutation(p.begin(), p.end()));
  return false;
}

}  // namespace detail

/// Number of unmarked isomorphism classes with 1 <= -chi <= max_minus_chi,
/// found by listing every edge multiset over V <= 2*max_minus_chi vertices.
inline std::size_t naive_class_count(int max_minus_chi) {
  std::size_t total = 0;
  for (int V = 1; V <= 2 * max_minus_chi; ++V) {
    for (int E = V + 1; E <= V + max_minus_chi; ++E) {
      std::vector<std::pair<int, int>> slots;
      for (int i = 0; i < V; ++i)
        for (int j = i; j < V; ++j) slots.emplace_back(i, j);
      std::vector<std::vector<int>> classes;
      std::vector<int> choice(E, 0);
      // Non-decreasing slot indices enumerate multisets of size E.
      auto rec = [&](auto&& self, int k, int from) -> void {
        if (k == E) {
          std::vector<int> adj(V * V, 0), deg(V, 0);
          for (int c : choice) {
            auto [a, b] = slots[c];
            ++adj[a * V + b];
            if (a != b) ++adj[b * V + a];
            deg[a] += 1;
            deg[b] += 1;
          }
          for (int v = 0; v < V; ++v)
            if (deg[v] < 3) return;
          for (const auto& c : classes)
            if (detail::isomorphic(V, c, adj)) return;
          classes.push_back(adj);
          return;
        }
        for (int s = from; s < static_cast<int>(slots.size()); ++s) {
          choice[k] = s;
          self(self, k + 1, s);
        }
      };
      rec(rec, 0, 0);
      total += classes.size();
    }
  }
  return total;
}

}  // namespace oracle

#endif
