#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "spi/amplitude.hpp"
#include "spi/config.hpp"
#include "spi/graphs.hpp"
#include "spi/harness.hpp"

using namespace spi;

namespace {

constexpr int kPass = 0, kCheckFailed = 1, kError = 2;

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write '" + out + "'");
  f << text;
  if (!text.empty() && text.back() != '\n') f << "\n";
}

config::RunConfig load(const std::string& path, int max_order) {
  config::RunConfig c = config::load_config(path);
  if (max_order >= 0) c.loop_order = max_order;
  return c;
}

std::string diagram_table(int max_order, int marked) {
  std::string s;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-6s %-4s %-4s %-6s %s\n", "order", "V", "E", "|Aut|", "canonical");
  s += buf;
  for (const auto& d : graphs::enumerate(max_order, marked)) {
    std::snprintf(buf, sizeof buf, "%-6d %-4d %-4d %-6llu %s\n", d.loop_order(), d.vertex_count(), d.edge_count(),
                  static_cast<unsigned long long>(d.automorphism_order()), d.canonical_label().c_str());
    s += buf;
  }
  return s;
}

/// Runs a subcommand body and maps failures to exit codes with the module that raised them.
template <class F>
int guarded(F body) {
  auto fail = [](const char* module, const std::exception& e) {
    std::cerr << "spi: error [" << module << "]: " << e.what() << "\n";
    return kError;
  };
  try {
    return body();
  } catch (const config::ConfigError& e) {
    return fail("config", e);
  } catch (const expr::ParseError& e) {
    return fail("expr", e);
  } catch (const expr::DomainError& e) {
    return fail("expr", e);
  } catch (const graphs::LimitExceeded& e) {
    return fail("graphs", e);
  } catch (const classical::ConvergenceError& e) {
    return fail("classical", e);
  } catch (const classical::FocalError& e) {
    return fail("classical", e);
  } catch (const classical::NotConvexError& e) {
    return fail("classical", e);
  } catch (const classical::DegenerateError& e) {
    return fail("classical", e);
  } catch (const green::InconsistencyError& e) {
    return fail("green", e);
  } catch (const kernels::QuadratureError& e) {
    return fail("amplitude", e);
  } catch (const kernels::JetOrderError& e) {
    return fail("amplitude", e);
  } catch (const stphase::GradientNotZero& e) {
    return fail("stphase", e);
  } catch (const stphase::SingularHessian& e) {
    return fail("stphase", e);
  } catch (const stphase::QuadratureFailure& e) {
    return fail("stphase", e);
  } catch (const harness::DivergentInput& e) {
    return fail("harness", e);
  } catch (const harness::DegenerateCriticalPoint& e) {
    return fail("harness", e);
  } catch (const harness::NotVolumePreserving& e) {
    return fail("harness", e);
  } catch (const std::exception& e) {
    return fail("spi", e);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semiclassical path-integral expansions: diagrams, propagators and consistency checks"};
  app.require_subcommand(1);

  std::string cfg_path, out;
  std::vector<std::string> cfg_paths;
  int max_order = -1, marked = 0, n = 50, ds = 0, dt = 0;
  bool json = false;

  auto* diagrams = app.add_subcommand("diagrams", "Table of vacuum diagram classes up to a loop order");
  diagrams->add_option("--max-order", max_order, "Largest loop order")->required()->check(CLI::Range(0, graphs::kMaxOrder));
  diagrams->add_option("--marked", marked, "Number of marked vertices")->check(CLI::Range(0, 2));
  diagrams->add_option("--out", out, "Output file");

  auto* propagate = app.add_subcommand("propagate", "Assemble the propagator series and write it as JSON");
  auto* green_cmd = app.add_subcommand("green", "Green's function grid as CSV");
  auto* fubini = app.add_subcommand("fubini", "Composition-law check at the configured split time");
  auto* coords = app.add_subcommand("coords", "Coordinate-invariance check under the configured map");
  auto* stph = app.add_subcommand("stphase-oracle", "hbar sweep of truncated expansions against direct quadrature (CSV)");
  for (auto* sc : {propagate, green_cmd, fubini, coords, stph}) {
    sc->add_option("--config", cfg_path, "Configuration file")->required()->check(CLI::ExistingFile);
    sc->add_option("--out", out, "Output file");
  }
  for (auto* sc : {propagate, fubini, coords})
    sc->add_option("--max-order", max_order, "Override the loop order")->check(CLI::Range(0, graphs::kMaxOrder));
  green_cmd->add_option("--n", n, "Grid points per axis")->check(CLI::Range(2, 2000));
  green_cmd->add_option("--ds", ds, "Derivatives in the first argument")->check(CLI::Range(0, 1));
  green_cmd->add_option("--dt", dt, "Derivatives in the second argument")->check(CLI::Range(0, 1));
  for (auto* sc : {fubini, coords}) sc->add_flag("--json", json, "Write the report as JSON");

  auto* div = app.add_subcommand("divergences", "Divergence reports for a batch of configurations (JSON)");
  div->add_option("--config", cfg_paths, "Configuration files")->required()->check(CLI::ExistingFile);
  div->add_option("--max-order", max_order, "Override the loop order")->check(CLI::Range(0, graphs::kMaxOrder));
  div->add_option("--out", out, "Output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kPass : kError;
  }

  if (*diagrams) return guarded([&] {
      emit(diagram_table(max_order, marked), out);
      return kPass;
    });
  if (*propagate) return guarded([&] {
      emit(amplitude::to_json(harness::propagate(load(cfg_path, max_order))), out);
      return kPass;
    });
  if (*green_cmd) return guarded([&] {
      config::RunConfig c = load(cfg_path, -1);
      auto g = green::GreenRep::build(classical::solve_bvp(c.problem()), c.grid);
      emit(green::dump_csv(g, n, ds, dt), out);
      return kPass;
    });
  if (*fubini || *coords) return guarded([&] {
      config::RunConfig c = load(cfg_path, max_order);
      harness::CheckReport rep = *fubini ? harness::fubini_check(c) : harness::coordinate_check(c);
      emit(json ? rep.to_json() : rep.to_text(), out);
      return rep.pass() ? kPass : kCheckFailed;
    });
  if (*stph) return guarded([&] {
      config::RunConfig c = config::load_config(cfg_path);
      if (!c.stphase) throw config::ConfigError(cfg_path, 0, "missing section [stphase]");
      emit(harness::stphase_sweep(*c.stphase).to_csv(), out);
      return kPass;
    });
  if (*div) return guarded([&] {
      std::vector<config::RunConfig> cfgs;
      for (const auto& p : cfg_paths) cfgs.push_back(load(p, max_order));
      auto entries = harness::divergences(cfgs);
      emit(harness::divergences_json(entries), out);
      return kPass;
    });
  return kError;
}
