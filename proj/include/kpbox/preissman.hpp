// preissman.hpp
// The implicit box scheme for the full 10-component system: residual on
// box midpoints, a slab-by-slab constrained nonlinear solver, its exact
// tangent (linearized) solver, and the per-box verifier of the discrete
// conservation law that pairs of tangent solutions satisfy.
#pragma once

#include <cstdint>

#include "kpbox/core.hpp"

namespace kpbox {

// Axis subset for box_average.
struct Axes {
  bool x = false, y = false, t = false;
};

// Mean over the 2^|axes| adjacent corners along the selected axes. The
// result grid loses one point per averaged axis and its origin moves by a
// half step, so coordinate lookups stay correct.
Field box_average(const Field& f, Axes axes);

// Per-box residual of the box scheme,
//   (1/dt) M D_t<Z>_xy + (1/dx) K D_x<Z>_yt + (1/dy) L D_y<Z>_xt
//     - grad S(<Z>_xyt),
// indexed by the box's lower corner; the grid of the result is the box
// grid (one point fewer per axis, origin at the first box center).
using BoxResidual = Field;
BoxResidual scheme_residual(const Field& zfield, const EquationParams& params);

// Solves the box scheme one time slab at a time. `reference` is a full
// 10-component field supplying (a) the complete initial plane k=0, (b) u
// on the boundary band (two columns each side in x, one row each side in
// y) at every level, both imposed exactly, and (c) the target the
// remaining boundary components are kept closest to, in least-squares
// sense, which closes the boundary without overdetermining the scheme.
// Interior planes also satisfy the reduced 45-point identity centered on
// the previous level (rows j=1), which pins the alternating-in-(j,k)
// component the box equations cannot see; without it two discretely equal
// solutions could differ by a checkerboard in u.
// Postcondition: every box residual is <= opts.tol_residual in max norm.
// Throws SolveError on non-convergence, carrying the achieved residual.
Field solve_global(const Field& reference, const EquationParams& params,
                   const SolverOptions& opts);

// A solution of the box scheme linearized about `base` (which must satisfy
// the scheme to solver tolerance). Same closure as solve_global: plane 0
// and the boundary u band are copied from tangent_reference, the rest
// stays least-squares-closest to it. No reduced-identity rows are imposed;
// the conservation law below holds per box for any linearized solution
// regardless of how that null direction is fixed. Each slab is one linear
// KKT solve.
using TangentField = Field;
TangentField solve_tangent(const Field& base, const Field& tangent_reference,
                           const EquationParams& params,
                           const SolverOptions& opts);

// Per-box discrete divergence of the conservation law for two tangent
// fields U, V about the same base:
//   (1/dt) D_t[ (tf/2)(v ^ pxt) ] + (1/dy) D_y[ v ^ pxy ]
//     + (1/dx) D_x[ phi ^ px + v ^ pxx + u ^ pxxx ]
// where (a ^ b) = <U_a><V_b> - <V_a><U_b> with face averages over the two
// axes transverse to the difference. Zero to rounding when U and V solve
// the linearized scheme on that box; exactly zero when U = V.
Field discrete_msym_residual(const Field& U, const Field& V,
                             const EquationParams& params);

// Smooth deterministic tangent data: per component, a quadratic polynomial
// in the normalized grid indices with coefficients drawn uniformly from
// [-1, 1] by a seeded generator.
Field random_polynomial_field(const GridSpec& grid, int ncomp,
                              std::uint64_t seed);

}  // namespace kpbox
