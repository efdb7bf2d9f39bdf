// io.hpp
// Config parsing, scenario/driver plumbing, CSV snapshots, manifests, and
// the verification / convergence entry points used by the CLI.
#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "kpbox/core.hpp"
#include "kpbox/diagnostics.hpp"
#include "kpbox/reduced45.hpp"
#include "kpbox/solutions.hpp"

namespace kpbox {

enum class SchemeKind { preissman, reduced45 };

// Flat run configuration. Defaults reproduce the reference line-soliton
// setup: domain [0,40]x[0,2], dx=0.2, dy=0.1, dt=0.01, t_end=10.
struct RunConfig {
  ScenarioKind scenario = ScenarioKind::line_soliton;
  SchemeKind scheme = SchemeKind::reduced45;
  double dx = 0.2, dy = 0.1, dt = 0.01;
  double t_end = 10.0;
  double x0 = 0.0, x1 = 40.0, y0 = 0.0, y1 = 2.0;
  double sigma = -3.0;
  int time_factor = 0;  // 0 = auto-select via the residual oracle; else 1 or 2
  int snapshot_every = 100;
  double tol = 1e-10;
  int max_iters = 50;
  unsigned long long seed = 1;
  std::string out_dir = "out";

  void validate() const;          // throws std::invalid_argument naming the key
  GridSpec grid() const;          // derives counts; steps must tile the domain
  Scenario make_scenario() const; // reference instance of the chosen scenario
};

// Parses the flat key=value grammar ('#' comments, one pair per line).
// Unknown keys and malformed values are errors carrying the line number;
// constraint violations name the offending key.
RunConfig parse_config(const std::string& text);

// Ordered key=value document; doubles rendered with 17 significant digits.
struct Manifest {
  std::vector<std::pair<std::string, std::string>> entries;
  void set(const std::string& key, const std::string& value);
  void set_num(const std::string& key, double value);
  void set_int(const std::string& key, long long value);
  // Last value stored under key, or the empty string.
  std::string get(const std::string& key) const;
  double get_num(const std::string& key) const;  // NaN when absent
  std::string text() const;
  void write(const std::string& path) const;
};

// One snapshot plane: header "x,y,u", rows y-major then x, every value
// printed with 17 significant digits so a read-back is bit-exact.
void write_snapshot(const std::string& path, const Plane2D& u,
                    const GridSpec& grid);
struct Snapshot {
  std::vector<double> x, y, u;  // parallel row lists in file order
};
Snapshot read_snapshot(const std::string& path);

// Marches the configured scenario with the reduced scheme (exact data on
// the first two levels and on the boundary band) and returns u on the full
// grid as a single-component field. Shared by run/equivalence/convergence.
Field march_reduced45(const Scenario& sc, const GridSpec& grid,
                      const EquationParams& params, const SolverOptions& opts);

struct VerifyResult {
  Manifest manifest;
  bool ok = false;
};

// Full run: convention oracle, startup, time loop, snapshots every
// snapshot_every steps plus the final level, per-snapshot diagnostics,
// manifest.txt in out_dir. Throws SolveError (with step context) on solver
// failure.
Manifest run(const RunConfig& config);

// Conservation verification on a small fixed grid (8x4 spatial points, 4
// time levels around the soliton crest): global box-scheme solve, two
// seeded tangent solves, the discrete conservation residual (absolute and
// relative to the tangent magnitudes), the identical-tangent zero check,
// and a two-level refinement of the continuous check. perturb_base is a
// negative-control hook that damages one interior value of the solved base
// before the residual evaluations.
VerifyResult verify_conservation(const RunConfig& config,
                                 bool perturb_base = false);

// Scheme-equivalence verification on a small grid (12x6 spatial points, 4
// time levels): one global box-scheme solve, then the reduced march fed
// with the box solution's first two planes and the same boundary band;
// reports max |u_reduced - u_box| over the remaining levels against a
// 1e-8 threshold. band_bias is a negative-control hook adding a constant
// to the reduced march's boundary data.
VerifyResult verify_equivalence(const RunConfig& config,
                                double band_bias = 0.0);

// Signature of a pluggable u-solver for convergence studies: returns u on
// the given grid for the scenario. The default (empty) hook is the real
// reduced-scheme march.
using USolver = std::function<Field(const Scenario&, const GridSpec&,
                                    const EquationParams&,
                                    const SolverOptions&)>;

// Runs the configured scenario at `levels` successive halvings of
// (dx, dy, dt), starting from the config's steps, and reports per-level
// errors plus pairwise orders. A level with zero error reports the order
// sentinel "nan". levels < 2 is a usage error.
Manifest convergence_study(const RunConfig& config, int levels,
                           const USolver& solver = {});

}  // namespace kpbox
