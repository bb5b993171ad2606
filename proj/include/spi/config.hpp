#ifndef SPI_CONFIG_HPP
#define SPI_CONFIG_HPP

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spi/classical.hpp"
#include "spi/kernels.hpp"

namespace spi::config {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& origin, int line, const std::string& what)
      : std::runtime_error(origin + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct StphaseSettings {
  std::string action;                  // in q1..qN (q when N = 1)
  int dimension = 1;
  int max_order = 2;
  std::vector<double> hbars{0.2, 0.1, 0.05};
  double half_width = 6.0;
};

/// Validated run configuration. Sections and keys:
///   [problem]  dimension, lagrangian, t0, t1, q0, q1, v0_guess
///   [compute]  loop_order, quad_order, quad_order_high, grid
///   [fubini]   split_time, fd_steps
///   [coords]   map
///   [stphase]  action, dimension, max_order, hbars, half_width
/// Vectors are comma- or space-separated numbers; `map` lists one
/// expression per component separated by commas.
struct RunConfig {
  std::string origin = "<string>";
  bool has_problem = false;
  int dimension = 1;
  std::string lagrangian;
  double t0 = 0.0, t1 = 1.0;
  Eigen::VectorXd q0, q1;
  std::optional<Eigen::VectorXd> v0_guess;

  int loop_order = 2;
  kernels::QuadConfig quad;
  int grid = 201;

  std::optional<double> split_time;
  std::vector<double> fd_steps{1e-2, 5e-3};

  std::vector<std::string> coords_map;

  std::optional<StphaseSettings> stphase;

  /// Every key = value pair as read, for provenance.
  std::map<std::string, std::string> snapshot;

  classical::Problem problem() const;
};

RunConfig parse_config(std::string_view text, const std::string& origin = "<string>");
RunConfig load_config(const std::string& path);

}  // namespace spi::config

#endif  // SPI_CONFIG_HPP
