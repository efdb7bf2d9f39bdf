// core.hpp
// Equation conventions, the 10-component first-order state, the constant
// skew operators, the Hamiltonian-like density S, the potential lift, and
// the continuous residual of the first-order system
//
//     (tf/2) M Z_t + K Z_x + L Z_y = grad S(Z)
//
// where tf is the coefficient on u_t in the scalar form
// (tf u_t + f(u)_x + u_xxx)_x + sigma u_yy = 0, f(u) = c u^2.
#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpbox {

// Component order, fixed once for every matrix, residual and field in the
// library: (phi, v, u, w, p, p^x, p^xx, p^xy, p^xt, p^xxx).
namespace comp {
constexpr int phi = 0, v = 1, u = 2, w = 3, p = 4;
constexpr int px = 5, pxx = 6, pxy = 7, pxt = 8, pxxx = 9;
}  // namespace comp
constexpr int kNumComp = 10;

struct EquationParams {
  double sigma = -3.0;        // transverse dispersion coefficient
  double time_factor = 1.0;   // coefficient on u_t in the scalar form; 1 or 2
  double nonlin_coeff = 3.0;  // c in f(u) = c u^2

  void validate() const;
};

// One state point. Named members plus index access in component order.
struct StateZ {
  double phi = 0, v = 0, u = 0, w = 0, p = 0;
  double px = 0, pxx = 0, pxy = 0, pxt = 0, pxxx = 0;

  double& operator[](int i);
  double operator[](int i) const;
};

using Mat10 = std::array<std::array<double, 10>, 10>;

// The constant skew-symmetric operators of the first-order system.
struct MsymOperators {
  Mat10 M{}, K{}, L{};
};

// M couples (v, p^xt); K couples (phi, p^x), (v, p^xx), (u, p^xxx);
// L couples (v, p^xy). Entries are +-1.
MsymOperators build_matrices();

// S(Z) = u p + (1/2)(p^xxx)^2 + (sigma/2) w^2 + (c/3) u^3
//        - p^x v - p^xx u - p^xt p - p^xy w
double hamiltonian_S(const StateZ& z, const EquationParams& params);

// Exact componentwise gradient of S.
StateZ grad_S(const StateZ& z, const EquationParams& params);

// Exact Hessian of S. Constant except d2S/du2 = 2 c u.
Mat10 hess_S(const StateZ& z, const EquationParams& params);

// Partial derivatives of a scalar potential at one point, everything the
// Legendre lift consumes.
struct PotentialJet {
  double phi = 0;
  double x = 0, xx = 0, xxx = 0, xxxx = 0, xxxxx = 0;
  double xy = 0, xyy = 0;
  double xt = 0, xxt = 0;
};

using PotentialSampler = std::function<PotentialJet(double x, double y, double t)>;

// Covariant Legendre lift of a potential jet:
//   v = phi_x, u = phi_xx, w = phi_xy, p = (tf/2) phi_xt,
//   p^x  = -(tf phi_xxt + 2c phi_xx phi_xxx + sigma phi_xyy + phi_xxxxx),
//   p^xx = (tf/2) phi_xt + c phi_xx^2 + phi_xxxx,
//   p^xy = sigma phi_xy, p^xt = phi_xx, p^xxx = -phi_xxx.
// With this lift the second row of the system closes to the scalar equation;
// the last row fixes the sign convention u_x = -p^xxx.
StateZ lift_state(const PotentialJet& jet, const EquationParams& params);

// Samples the lift over (x,y,t).
std::function<StateZ(double, double, double)> lift_from_potential(
    PotentialSampler phi_derivs, const EquationParams& params);

struct GridSpec {
  double x0 = 0, y0 = 0, t0 = 0;
  double dx = 1, dy = 1, dt = 1;
  int nx = 2, ny = 2, nt = 2;

  double x(int i) const { return x0 + i * dx; }
  double y(int j) const { return y0 + j * dy; }
  double t(int k) const { return t0 + k * dt; }
  std::size_t num_points() const {
    return static_cast<std::size_t>(nx) * ny * nt;
  }
  bool interior(int i, int j, int k) const {
    return i > 0 && i < nx - 1 && j > 0 && j < ny - 1 && k > 0 && k < nt - 1;
  }
  void validate() const;  // positive steps, at least 2 points per axis
};

// Uniform-grid sampled field with component_count values per point.
// Linearization: x fastest, then y, then t, one full (i,j,k) block per
// component: index = ((c*nt + k)*ny + j)*nx + i.
struct Field {
  GridSpec grid;
  int component_count = 1;
  std::vector<double> values;

  Field() = default;
  Field(const GridSpec& g, int ncomp)
      : grid(g), component_count(ncomp),
        values(static_cast<std::size_t>(ncomp) * g.num_points(), 0.0) {}

  std::size_t index(int c, int i, int j, int k) const {
    return ((static_cast<std::size_t>(c) * grid.nt + k) * grid.ny + j) * grid.nx + i;
  }
  double& at(int c, int i, int j, int k) { return values[index(c, i, j, k)]; }
  double at(int c, int i, int j, int k) const { return values[index(c, i, j, k)]; }
  double& at(int i, int j, int k) { return values[index(0, i, j, k)]; }
  double at(int i, int j, int k) const { return values[index(0, i, j, k)]; }

  StateZ state(int i, int j, int k) const;
  void set_state(int i, int j, int k, const StateZ& z);
  bool all_finite() const;
};

// Pointwise residual of (tf/2) M Z_t + K Z_x + L Z_y - grad S(Z) with
// 2nd-order centered differences. Boundary points are left at zero; use
// grid.interior to distinguish them.
Field continuous_residual(const Field& zfield, const EquationParams& params);

// Options shared by the implicit solvers (full box scheme and reduced
// stepper). fixed_point reuses the first factorized Jacobian (chord
// iteration); newton refactorizes every iteration.
struct SolverOptions {
  double tol_residual = 1e-10;  // max-norm stopping threshold (the implicit
                                // step also accepts a correction this small)
  int max_iters = 50;
  enum class Method { newton, fixed_point } method = Method::newton;
  double fd_jacobian_step = 1e-7;  // for finite-difference Jacobian checks

  void validate() const {
    if (!(tol_residual > 0.0))
      throw std::invalid_argument("SolverOptions: tol_residual must be > 0");
    if (max_iters < 1)
      throw std::invalid_argument("SolverOptions: max_iters must be >= 1");
  }
};

// Thrown when an implicit solve stops without meeting its tolerance.
// Carries the residual actually achieved so callers can report it.
struct SolveError : std::runtime_error {
  SolveError(const std::string& what, double res, int iters)
      : std::runtime_error(what), residual(res), iterations(iters) {}
  double residual;
  int iterations;
};

// Centered finite-difference formulas on uniformly spaced samples. Each
// takes a window centered at the evaluation point (3, 5 or 7 values) and
// the spacing h. Suffix gives window size; accuracy order is noted.
namespace fd {
double d1_3pt(const double* f, double h);  // order 2
double d2_3pt(const double* f, double h);  // order 2
double d1_5pt(const double* f, double h);  // order 4
double d2_5pt(const double* f, double h);  // order 4
double d3_5pt(const double* f, double h);  // order 2
double d4_5pt(const double* f, double h);  // order 2
double d4_7pt(const double* f, double h);  // order 4
double d5_7pt(const double* f, double h);  // order 2
}  // namespace fd

}  // namespace kpbox
