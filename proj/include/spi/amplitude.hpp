#ifndef SPI_AMPLITUDE_HPP
#define SPI_AMPLITUDE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spi/delta_poly.hpp"
#include "spi/graphs.hpp"
#include "spi/green.hpp"
#include "spi/kernels.hpp"
#include "spi/stphase.hpp"

namespace spi::amplitude {

using kernels::QuadConfig;

/// Value of an unmarked diagram under the Feynman rules, before 1/|Aut|.
DeltaPoly evaluate_diagram(const graphs::Diagram& d, const green::GreenRep& g, const QuadConfig& quad = {});

struct DiagramContribution {
  std::string canonical;
  int order = 0;
  std::uint64_t aut = 1;
  DeltaPoly value;         // ev(diagram)
  DeltaPoly contribution;  // value / aut
  int terms = 0;
  double error_estimate = 0.0;
};

/// U = (2 pi i hbar)^{-d/2} e^{iS/hbar} (-i)^eta |det W|^{1/2} sum_m (i hbar)^m series[m].
struct PropagatorResult {
  int d = 1;
  double t0 = 0.0, t1 = 0.0;
  Eigen::VectorXd q0, q1;
  double S = 0.0;
  double abs_det_W = 1.0;
  int morse_index = 0;
  double hbar_exponent = -0.5;  // power of (2 pi i hbar)
  int max_order = 0;
  std::map<int, DeltaPoly> series;
  std::vector<DiagramContribution> diagrams;
  QuadConfig quad;
  double seconds = 0.0;

  double sqrt_abs_det_W() const;
  double log_abs_det_W() const;
};

/// Diagrams of loop order 1..M evaluated and summed with 1/|Aut|.
/// Disconnected diagrams are evaluated as products of their components.
PropagatorResult assemble(const green::GreenRep& g, int max_order, const QuadConfig& quad = {},
                          std::optional<int> morse_index = std::nullopt);

/// d^n(-S) with respect to the combined boundary data (q0, q1), as a sum
/// over trees whose leaves carry the Jacobi fields. Index a*d + i stands for
/// the component i of q_a. Requires 3 <= n <= 6.
stphase::SymTensor s_derivative_trees(const green::GreenRep& g, int n, const QuadConfig& quad = {});

/// Leaf-labelled trees with n leaves and internal vertices of degree >= 3.
/// Vertices 0..n-1 are leaves; each edge is (smaller, larger).
std::vector<std::vector<graphs::Edge>> leaf_labelled_trees(int n);

struct TadpoleCheck {
  std::vector<DeltaPoly> tadpole;    // per boundary coordinate a*d + i
  std::vector<double> fd;            // finite difference of log|det W|
  std::vector<double> residual;      // |fd - tadpole finite part|, empty when divergent
  bool divergent = false;
};

/// Compares the one-vertex self-loop diagram with an external Jacobi leg
/// against the derivative of log|det W| in the boundary coordinates.
TadpoleCheck tadpole_logdet_check(const green::GreenRep& g, const QuadConfig& quad = {}, double fd_step = 1e-4);

struct OrderDivergence {
  std::map<int, double> coefficients;  // D0 degree >= 1 -> summed coefficient
  std::map<int, double> magnitude;     // D0 degree -> sum of |individual contributions|
  bool divergence_free = true;
};

std::map<int, OrderDivergence> divergence_report(const PropagatorResult& r, double tol = 1e-6);

/// JSON document of the result; `diagrams` lists every evaluated diagram.
std::string to_json(const PropagatorResult& r, int indent = 2);

}  // namespace spi::amplitude

#endif  // SPI_AMPLITUDE_HPP
