// reduced45.hpp
// The reduced scheme in the single variable u: a three-time-level implicit
// stepper on a 45-point stencil (5 in x, 3 in y, 3 in t), obtained by
// eliminating the nine auxiliary components from the box scheme. The
// coefficient table can be rederived numerically (derive_reduced_scheme)
// by a Schur-style elimination of the box operator; the closed-form table
// must match it, and production code uses the closed form.
#pragma once

#include <array>
#include <vector>

#include "kpbox/core.hpp"
#include "kpbox/solutions.hpp"

namespace kpbox {

// The five elementary stencil operators of the reduced scheme.
namespace stencil {
// u^{k+1} - u^{k-1}
inline double Delta_t0(double u_next, double u_prev) { return u_next - u_prev; }
// u_{j-1} + 2 u_j + u_{j+1}
inline double delta_y2(double um, double u0, double up) {
  return um + 2.0 * u0 + up;
}
// u^{k-1} + 2 u^k + u^{k+1}
inline double delta_t2(double u_prev, double u_curr, double u_next) {
  return u_prev + 2.0 * u_curr + u_next;
}
// u_{j-1} - 2 u_j + u_{j+1}
inline double Delta_y2(double um, double u0, double up) {
  return um - 2.0 * u0 + up;
}
// f_{i+3/2} - f_{i+1/2} - f_{i-1/2} + f_{i-3/2}
inline double delta_bar_f(double f_p32, double f_p12, double f_m12,
                          double f_m32) {
  return f_p32 - f_p12 - f_m12 + f_m32;
}
}  // namespace stencil

// 2D scalar plane, x fastest.
struct Plane2D {
  int nx = 0, ny = 0;
  std::vector<double> v;
  Plane2D() = default;
  Plane2D(int nx_, int ny_)
      : nx(nx_), ny(ny_), v(static_cast<std::size_t>(nx_) * ny_, 0.0) {}
  double& at(int i, int j) { return v[static_cast<std::size_t>(j) * nx + i]; }
  double at(int i, int j) const {
    return v[static_cast<std::size_t>(j) * nx + i];
  }
};

// Two known planes of a three-level march; u_curr sits at time level
// k_index, u_prev one level below.
struct ThreeLevelState {
  Plane2D u_prev, u_curr;
  int k_index = 1;
};

// Stencil weights of the reduced residual centered at (i, j, level k).
//   u_w[di+2][dj+1][dk+1] multiplies u_{i+di, j+dj}^{k+dk};
//   f_w[b][djb+1][dkb+1]  multiplies the box-averaged nonlinearity
//     f = c * (8-corner mean of u)^2 of the box with lower corner
//     (i+dib, j+djb, k+dkb), dib = b-2 in {-2..1}, djb,dkb in {-1,0}.
struct ReducedTable {
  std::array<std::array<std::array<double, 3>, 3>, 5> u_w{};
  std::array<std::array<std::array<double, 2>, 2>, 4> f_w{};
};

// Closed-form table: three separable linear groups
//   tf/(4 dx dt) * [-1,-2,0,2,1]_x (x) [1,2,1]_y (x) [-1,0,1]_t
//   1/dx^4       * [1,-4,6,-4,1]_x (x) [1,2,1]_y (x) [1,2,1]_t
//   sigma/(4dy^2)* [1,4,6,4,1]_x  (x) [1,-2,1]_y (x) [1,2,1]_t
// plus the nonlinear group (2/dx^2) * delta_bar over box-averaged f,
// summed over the four boxes adjacent in (y,t).
ReducedTable closed_form_reduced_table(double dx, double dy, double dt,
                                       const EquationParams& params);

// Rederives the table by numeric elimination: assembles the linear part of
// the box operator on a 5x4x3 block (nonlinearity kept as per-box symbols),
// finds the one-dimensional left null space of the auxiliary columns, and
// maps the resulting u-only identity back through the y-averaging it
// carries. Throws std::runtime_error("elimination singular") when the null
// space is not one-dimensional, which signals an inconsistent sign
// convention in the box operator.
ReducedTable derive_reduced_scheme(double dx, double dy, double dt,
                                   const EquationParams& params);

// Residual of the reduced scheme at interior points (i in 2..nx-3,
// j in 1..ny-2), centered at the time level of u_curr. Points outside that
// range are zero. Pass a table to override the closed form.
Plane2D residual_45(const Plane2D& u_prev, const Plane2D& u_curr,
                    const Plane2D& u_next, double dx, double dy, double dt,
                    const EquationParams& params,
                    const ReducedTable* table = nullptr);

// Advances one level: solves for interior u^{k+1} by sparse Newton with the
// analytic stencil Jacobian. band_next must hold u^{k+1} on the boundary
// band (2 columns each side in x, 1 row each side in y); its interior
// values are ignored. Throws SolveError on non-convergence.
Plane2D step(const ThreeLevelState& state, const Plane2D& band_next,
             double dx, double dy, double dt, const EquationParams& params,
             const SolverOptions& opts, const ReducedTable* table = nullptr);

enum class StartupMode { exact_two_planes, preissman_one_step };

// Builds the two starting planes at grid levels 0 and 1, either sampling
// the scenario exactly or computing level 1 with one full box-scheme step
// from the exact level 0.
ThreeLevelState startup(const Scenario& sc, const GridSpec& grid,
                        StartupMode mode, const EquationParams& params,
                        const SolverOptions& opts);

}  // namespace kpbox
