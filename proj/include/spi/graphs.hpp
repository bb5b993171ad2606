#ifndef SPI_GRAPHS_HPP
#define SPI_GRAPHS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spi::graphs {

using Edge = std::pair<int, int>;  // first <= second; first == second is a self-loop

/// A finite multigraph with optional marked vertices. marks[v] is -1 for an
/// ordinary vertex and the mark id (0 or 1) otherwise. Stored in canonical
/// vertex order, so equal diagrams compare equal member-wise.
class Diagram {
 public:
  Diagram() = default;
  Diagram(std::vector<int> marks, std::vector<Edge> edges);

  int vertex_count() const { return static_cast<int>(marks_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<int>& marks() const { return marks_; }
  int marked_count() const;
  /// Vertex carrying the given mark id, or -1.
  int marked_vertex(int mark_id) const;
  const std::vector<Edge>& edges() const { return edges_; }
  int degree(int v) const { return degree_[v]; }
  int multiplicity(int a, int b) const { return adj_[a * vertex_count() + b]; }

  int euler_characteristic() const { return vertex_count() - edge_count(); }
  /// Power of (i hbar) carried by the diagram: -chi + (number of marks).
  int loop_order() const { return edge_count() - vertex_count() + marked_count(); }
  std::uint64_t automorphism_order() const { return aut_; }
  const std::string& canonical_label() const { return label_; }

  /// Connected components as vertex lists.
  std::vector<std::vector<int>> components() const;

  /// `V=<n> marks=<ids> edges=<(a,b),...> chi=<chi> aut=<|Aut|>`
  std::string dump() const;

  friend bool operator==(const Diagram& a, const Diagram& b) { return a.label_ == b.label_; }
  friend bool operator<(const Diagram& a, const Diagram& b) { return a.label_ < b.label_; }

 private:
  std::vector<int> marks_;
  std::vector<Edge> edges_;
  std::vector<int> degree_;
  std::vector<int> adj_;
  std::uint64_t aut_ = 1;
  std::string label_;
};

class LimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxOrder = 4;

/// One representative per isomorphism class with loop order
/// (-chi + marked_vertices) <= max_order. Unmarked vertices have degree >= 3,
/// marked ones any degree. Disconnected diagrams are included; the empty
/// diagram is not. Sorted by (loop order, canonical label).
std::vector<Diagram> enumerate(int max_order, int marked_vertices);

/// Order of the half-edge symmetry group.
std::uint64_t automorphism_order(const Diagram& d);

/// Perfect matchings of {1..n}, each as sorted pairs; empty for odd n.
std::vector<std::vector<std::pair<int, int>>> pairings(int n);

}  // namespace spi::graphs

#endif  // SPI_GRAPHS_HPP
