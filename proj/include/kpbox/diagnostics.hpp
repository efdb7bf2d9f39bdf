// diagnostics.hpp
// Error norms, crest/peak tracking, mass drift, the pointwise continuous
// conservation-law check for pairs of linearized solutions, and
// convergence-order estimation.
#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "kpbox/core.hpp"
#include "kpbox/reduced45.hpp"
#include "kpbox/solutions.hpp"

namespace kpbox {

// Discrete error norms against the scenario's exact u over spatially
// interior points at every stored time level: l2 is the worst per-level
// cell-weighted L2 norm (weight dx*dy per point), linf the global max.
struct ErrorNorms {
  double l2 = 0, linf = 0;
};
ErrorNorms error_norms(const Field& u_numeric, const Scenario& sc);

enum class TrackMode { crest_line, point_peak };

// Result of tracking one plane. point_peak fills x, y, amplitude.
// crest_line fits the per-row refined maxima to the line x = x0 + slope*y
// and fills x (intercept), slope, amplitude (mean of refined row peaks).
struct TrackResult {
  double x = 0, y = 0, slope = 0, amplitude = 0;
};

// Locates the wave in one 2D plane. Quadratic refinement around the grid
// argmax; a degenerate quadratic falls back to the raw argmax. Throws when
// the argmax sits on the plane boundary (untrackable).
TrackResult peak_track(const Plane2D& u, const GridSpec& grid, TrackMode mode);

// Trapezoid integral of u over the spatial rectangle.
double mass_integral(const Plane2D& u, const GridSpec& grid);

// Jet of a scalar tangent field: value and the nine derivatives entering
// the continuous conservation forms.
struct JetVector10 {
  double phi = 0;                     // the value itself
  double x = 0, xx = 0, xy = 0, xt = 0;
  double xxx = 0, xyy = 0, xxt = 0, xxxx = 0, xxxxx = 0;
};

using ScalarSampler = std::function<double(double x, double y, double t)>;

// Jet by centered differences around one point, with its own probe
// spacing (7-point stencil for the 5th x-derivative).
JetVector10 sample_jet(const ScalarSampler& f, double x, double y, double t,
                       double probe_h);

// The three bilinear flux densities of the continuous conservation law for
// scalar tangents about a base potential (depends on the base through
// phi_xx and phi_xxx):
//   T-density: (tf/2) (Vx Wxx - Vxx Wx)
//   Y-density: sigma  (Vx Wxy - Vxy Wx)
//   X-density: -2c phi_xxx (V Wxx)_wedge - 2c phi_xx (V Wxxx)_wedge
//              - sigma (V Wxyy)_wedge - tf (V Wxxt)_wedge
//              - (V Wxxxxx)_wedge + 2c phi_xx (Vx Wxx)_wedge
//              + (tf/2) (Vx Wxt)_wedge + (Vx Wxxxx)_wedge
//              - (Vxx Wxxx)_wedge
// where (A B)_wedge = A_V B_W - A_W B_V. Exposed for direct testing.
double msym_density_t(const JetVector10& V, const JetVector10& W,
                      const EquationParams& params);
double msym_density_y(const JetVector10& V, const JetVector10& W,
                      const EquationParams& params);
double msym_density_x(const JetVector10& V, const JetVector10& W,
                      double base_phi_xx, double base_phi_xxx,
                      const EquationParams& params);

// Max over interior grid points of the centered-difference divergence
// d_t(T) + d_x(X) + d_y(Y) of the three densities, with both tangents'
// jets sampled at probe_h (default: a quarter of the smallest grid step).
// Vanishes at O(grid^2) for true linearized solutions about the base.
double continuous_msym_check(const Scenario& base, const ScalarSampler& tangent_a,
                             const ScalarSampler& tangent_b,
                             const GridSpec& grid, const EquationParams& params,
                             double probe_h = 0.0);

// log2(e_h / e_half); both errors must be positive.
double convergence_order(double e_h, double e_half);

// Aggregated run diagnostics, serialized by the io module.
struct RunReport {
  double l2_error = 0, linf_error = 0;
  struct TrackSample {
    double t = 0;
    TrackResult track;
  };
  std::vector<TrackSample> peak_tracks;
  std::map<std::string, double> conservation_residuals;
  std::map<std::string, double> convergence_orders;
  double mass_initial = 0, mass_final = 0;
};

}  // namespace kpbox
