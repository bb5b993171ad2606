#include <doctest.h>

#include <string>

#include "spi/config.hpp"

using namespace spi;

namespace {

const std::string kGood =
    "# harmonic oscillator\n"
    "[problem]\n"
    "dimension = 1\n"
    "lagrangian = \"v^2/2 - q^2/2\"\n"
    "t0 = 0\n"
    "t1 = 1\n"
    "q0 = 0.5\n"
    "q1 = 1.1\n"
    "\n"
    "[compute]\n"
    "loop_order = 1  ; inline comment\n"
    "quad_order = 20\n";

std::string error_of(const std::string& text) {
  try {
    config::parse_config(text, "cfg");
  } catch (const config::ConfigError& e) {
    return e.what();
  }
  return "";
}

int line_of(const std::string& text) {
  try {
    config::parse_config(text, "cfg");
  } catch (const config::ConfigError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("valid configuration") {
  auto c = config::parse_config(kGood, "h.ini");
  CHECK(c.has_problem);
  CHECK(c.dimension == 1);
  CHECK(c.lagrangian == "v^2/2 - q^2/2");
  CHECK(c.q1(0) == 1.1);
  CHECK(c.loop_order == 1);
  CHECK(c.quad.order == 20);
  CHECK(c.quad.order_high == kernels::QuadConfig{}.order_high);
  CHECK(c.snapshot.at("compute.loop_order") == "1");
  auto p = c.problem();
  CHECK(p.t1 == 1.0);
  CHECK(p.v0_guess.size() == 0);
}

TEST_CASE("vectors and maps") {
  auto c = config::parse_config(
      "[problem]\ndimension = 2\nlagrangian = 0.5*(v1^2+v2^2)\nt0 = 0\nt1 = 1\nq0 = 0.1, 0.2\nq1 = 0.3 0.4\n"
      "v0_guess = 1, 1\n[coords]\nmap = q1 + 0.2*exp(sin(q2) * cos(q1)), q2\n[fubini]\nsplit_time = 0.3\nfd_steps = 0.02, 0.01\n");
  CHECK(c.q1(1) == 0.4);
  REQUIRE(c.v0_guess);
  CHECK((*c.v0_guess)(0) == 1.0);
  REQUIRE(c.coords_map.size() == 2);
  CHECK(c.coords_map[0] == "q1 + 0.2*exp(sin(q2) * cos(q1))");
  CHECK(c.split_time == 0.3);
  CHECK(c.fd_steps.size() == 2);
}

TEST_CASE("stphase-only configuration") {
  auto c = config::parse_config("[stphase]\naction = q^2/2 + q^4/24\nmax_order = 2\nhbars = 0.2, 0.1\n");
  CHECK_FALSE(c.has_problem);
  REQUIRE(c.stphase);
  CHECK(c.stphase->hbars.size() == 2);
  CHECK_THROWS_AS(c.problem(), config::ConfigError);
}

TEST_CASE("validation errors name the key and line") {
  std::string missing = "[problem]\ndimension = 1\nt0 = 0\nt1 = 1\nq0 = 0\nq1 = 1\n";
  CHECK(error_of(missing).find("missing required key 'lagrangian'") != std::string::npos);

  std::string bad_number = "[problem]\ndimension = 1\nlagrangian = v^2/2\nt0 = zero\nt1 = 1\nq0 = 0\nq1 = 1\n";
  CHECK(line_of(bad_number) == 4);
  CHECK(error_of(bad_number).find("cfg:4") == 0);

  CHECK(line_of("[problem]\ndimension = 1\nlagrangian = v^2/(2\n") == 3);
  CHECK(line_of("[problem]\nfoo = 1\n") == 2);
  CHECK(line_of("[nosuch]\n") == 1);
  CHECK(line_of("[problem]\ndimension = 1\ndimension = 2\n") == 3);
  CHECK(line_of("dimension = 1\n") == 1);
  CHECK(line_of("[problem]\ndimension = 2\nlagrangian = v1^2\nt0 = 0\nt1 = 1\nq0 = 0\nq1 = 1, 2\n") == 6);
  CHECK(line_of("[problem]\ndimension = 1\nlagrangian = v^2\nt0 = 1\nt1 = 0\nq0 = 0\nq1 = 1\n") == 5);
  CHECK(line_of(kGood + "[fubini]\nsplit_time = 2\n") == 14);
  CHECK(line_of(kGood + "[coords]\nmap = q, q\n") == 14);
  CHECK(error_of("").find("missing section [problem]") != std::string::npos);
}

TEST_CASE("load_config reports unreadable files") {
  CHECK_THROWS_AS(config::load_config("/nonexistent/x.ini"), config::ConfigError);
}
