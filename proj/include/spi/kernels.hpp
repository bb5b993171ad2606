#ifndef SPI_KERNELS_HPP
#define SPI_KERNELS_HPP

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "spi/delta_poly.hpp"
#include "spi/graphs.hpp"
#include "spi/green.hpp"

namespace spi::kernels {

/// External leg: column `component` of the Jacobi field phi^endpoint and its
/// time derivative, attached to a vertex.
struct Leg {
  int vertex = 0;
  int endpoint = 0;
  int component = 0;
};

/// Contraction pattern: vertex tensors -d^n L, edges carrying G and its
/// derivatives, external legs carrying Jacobi fields. Edges have first <= second.
struct Network {
  int vertices = 0;
  std::vector<graphs::Edge> edges;
  std::vector<Leg> legs;

  int valence(int v) const;
};

Network from_diagram(const graphs::Diagram& d);

struct QuadConfig {
  int order = 32;       // Gauss–Legendre points per axis with at most two time variables
  int order_high = 12;  // points per axis with three or more time variables
  int jet_order = 0;    // 0 selects max valence + 2
  bool parallel = true;
  double verify_tol = 0;  // > 0: re-run with fewer points and require agreement

  int nodes(int time_variables) const { return time_variables <= 2 ? order : order_high; }
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class JetOrderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Evaluation {
  std::vector<DeltaPoly> values;       // one per network
  std::vector<int> terms;              // surviving smooth/delta splittings per network
  std::vector<double> error_estimate;  // per network; 0 unless verify_tol > 0
};

/// Chamber quadrature of a batch of networks sharing one Green's function.
/// Splits every doubly differentiated edge into smooth and delta parts,
/// merges time variables joined by delta parts and integrates the rest over
/// order chambers with collapsed-coordinate Gauss–Legendre rules. The sum is
/// independent of the thread count.
Evaluation evaluate(const std::vector<Network>& nets, const green::GreenRep& g, const QuadConfig& cfg = {});

/// Straightforward single-threaded evaluation of one network: explicit sums
/// over all index assignments at every quadrature point, no caching.
DeltaPoly evaluate_reference(const Network& net, const green::GreenRep& g, const QuadConfig& cfg = {});

}  // namespace spi::kernels

#endif  // SPI_KERNELS_HPP
