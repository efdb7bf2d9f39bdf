#include "kpbox/diagnostics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kpbox {

ErrorNorms error_norms(const Field& u_numeric, const Scenario& sc) {
  const GridSpec& g = u_numeric.grid;
  if (g.nx < 3 || g.ny < 3)
    throw std::invalid_argument("error_norms: grid needs interior points");
  const int uc = (u_numeric.component_count == kNumComp) ? comp::u : 0;
  ErrorNorms out;
  for (int k = 0; k < g.nt; ++k) {
    double sumsq = 0;
    for (int j = 1; j + 1 < g.ny; ++j) {
      for (int i = 1; i + 1 < g.nx; ++i) {
        const double e =
            u_numeric.at(uc, i, j, k) - sc.u(g.x(i), g.y(j), g.t(k));
        sumsq += e * e;
        out.linf = std::max(out.linf, std::abs(e));
      }
    }
    out.l2 = std::max(out.l2, std::sqrt(sumsq * g.dx * g.dy));
  }
  return out;
}

namespace {

// Refines a 1D grid maximum with the parabola through three samples.
// Returns {offset in index units, refined value}.
struct Refined1D {
  double offset = 0, value = 0;
};

Refined1D refine_parabola(double fm, double f0, double fp) {
  const double denom = fm - 2.0 * f0 + fp;
  Refined1D r;
  r.value = f0;
  if (std::abs(denom) > 1e-300 * (std::abs(f0) + 1.0)) {
    r.offset = 0.5 * (fm - fp) / denom;
    if (std::abs(r.offset) <= 1.0)
      r.value = f0 - 0.125 * (fm - fp) * (fm - fp) / denom;
    else
      r.offset = 0;  // not a well-formed local max; keep the grid point
  }
  return r;
}

TrackResult track_crest(const Plane2D& u, const GridSpec& g) {
  std::vector<double> ys, xs, amps;
  ys.reserve(u.ny);
  for (int j = 0; j < u.ny; ++j) {
    int im = 0;
    for (int i = 1; i < u.nx; ++i)
      if (u.at(i, j) > u.at(im, j)) im = i;
    if (im == 0 || im == u.nx - 1)
      throw std::runtime_error("peak_track: crest touches the x boundary");
    const Refined1D r =
        refine_parabola(u.at(im - 1, j), u.at(im, j), u.at(im + 1, j));
    ys.push_back(g.y(j));
    xs.push_back(g.x(im) + r.offset * g.dx);
    amps.push_back(r.value);
  }
  // Least-squares line x = x0 + slope * y over the rows.
  const int n = static_cast<int>(ys.size());
  double sy = 0, sx = 0, syy = 0, sxy = 0;
  for (int j = 0; j < n; ++j) {
    sy += ys[j];
    sx += xs[j];
    syy += ys[j] * ys[j];
    sxy += ys[j] * xs[j];
  }
  TrackResult out;
  const double det = n * syy - sy * sy;
  if (n >= 2 && std::abs(det) > 1e-300) {
    out.slope = (n * sxy - sy * sx) / det;
    out.x = (sx - out.slope * sy) / n;
  } else {
    out.slope = 0;
    out.x = sx / std::max(n, 1);
  }
  out.y = 0;
  double asum = 0;
  for (double a : amps) asum += a;
  out.amplitude = asum / std::max(n, 1);
  return out;
}

TrackResult track_point(const Plane2D& u, const GridSpec& g) {
  int im = 0, jm = 0;
  for (int j = 0; j < u.ny; ++j)
    for (int i = 0; i < u.nx; ++i)
      if (u.at(i, j) > u.at(im, jm)) {
        im = i;
        jm = j;
      }
  if (im == 0 || im == u.nx - 1 || jm == 0 || jm == u.ny - 1)
    throw std::runtime_error("peak_track: peak sits on the plane boundary");

  // Least-squares quadratic q = a + b*s + c*e + d*s^2 + f*s*e + h*e^2 over
  // the 3x3 patch, in index offsets s, e in {-1, 0, 1}.
  Eigen::Matrix<double, 9, 6> A;
  Eigen::Matrix<double, 9, 1> rhs;
  int row = 0;
  for (int de = -1; de <= 1; ++de)
    for (int ds = -1; ds <= 1; ++ds) {
      A(row, 0) = 1;
      A(row, 1) = ds;
      A(row, 2) = de;
      A(row, 3) = ds * ds;
      A(row, 4) = ds * de;
      A(row, 5) = de * de;
      rhs(row) = u.at(im + ds, jm + de);
      ++row;
    }
  Eigen::Matrix<double, 6, 1> q =
      A.colPivHouseholderQr().solve(rhs);
  const double b = q(1), c = q(2), d = q(3), f = q(4), h = q(5);
  const double det = 4.0 * d * h - f * f;
  TrackResult out;
  const double scale = std::abs(u.at(im, jm)) + 1.0;
  bool usable = det > 1e-12 * scale * scale && d < 0;
  double s = 0, e = 0;
  if (usable) {
    s = (-2.0 * h * b + f * c) / det;
    e = (-2.0 * d * c + f * b) / det;
    usable = std::abs(s) <= 1.5 && std::abs(e) <= 1.5;
  }
  if (usable) {
    const double fitted =
        q(0) + b * s + c * e + d * s * s + f * s * e + h * e * e;
    // A faithful concave fit peaks at or above the max sample; a vertex
    // below it means the data is spike-like, not quadratic.
    usable = fitted >= u.at(im, jm) - 1e-12 * scale;
    out.amplitude = fitted;
  }
  if (!usable) {  // degenerate fit: report the raw grid maximum
    s = 0;
    e = 0;
    out.amplitude = u.at(im, jm);
  }
  out.x = g.x(im) + s * g.dx;
  out.y = g.y(jm) + e * g.dy;
  out.slope = 0;
  return out;
}

}  // namespace

TrackResult peak_track(const Plane2D& u, const GridSpec& grid, TrackMode mode) {
  if (u.nx != grid.nx || u.ny != grid.ny)
    throw std::invalid_argument("peak_track: plane/grid shape mismatch");
  if (u.nx < 3 || u.ny < 1)
    throw std::invalid_argument("peak_track: plane too small");
  return mode == TrackMode::crest_line ? track_crest(u, grid)
                                       : track_point(u, grid);
}

double mass_integral(const Plane2D& u, const GridSpec& grid) {
  if (u.nx != grid.nx || u.ny != grid.ny)
    throw std::invalid_argument("mass_integral: plane/grid shape mismatch");
  double sum = 0;
  for (int j = 0; j < u.ny; ++j) {
    const double wj = (j == 0 || j == u.ny - 1) ? 0.5 : 1.0;
    for (int i = 0; i < u.nx; ++i) {
      const double wi = (i == 0 || i == u.nx - 1) ? 0.5 : 1.0;
      sum += wi * wj * u.at(i, j);
    }
  }
  return sum * grid.dx * grid.dy;
}

JetVector10 sample_jet(const ScalarSampler& f, double x, double y, double t,
                       double probe_h) {
  if (!(probe_h > 0)) throw std::invalid_argument("sample_jet: probe_h <= 0");
  const double h = probe_h;
  double line[7];
  for (int m = -3; m <= 3; ++m) line[m + 3] = f(x + m * h, y, t);

  JetVector10 j;
  j.phi = line[3];
  j.x = fd::d1_5pt(line + 1, h);
  j.xx = fd::d2_5pt(line + 1, h);
  j.xxx = fd::d3_5pt(line + 1, h);
  j.xxxx = fd::d4_7pt(line, h);
  j.xxxxx = fd::d5_7pt(line, h);

  // Mixed derivatives from 3x3 crosses at the same probe spacing.
  const double fpp = f(x + h, y + h, t), fpm = f(x + h, y - h, t);
  const double fmp = f(x - h, y + h, t), fmm = f(x - h, y - h, t);
  j.xy = (fpp - fpm - fmp + fmm) / (4.0 * h * h);

  const double gpp = f(x + h, y, t + h), gpm = f(x + h, y, t - h);
  const double gmp = f(x - h, y, t + h), gmm = f(x - h, y, t - h);
  j.xt = (gpp - gpm - gmp + gmm) / (4.0 * h * h);

  // xyy: second y-difference of the centered x-derivative.
  auto dx_at = [&](double yy) {
    return (f(x + h, yy, t) - f(x - h, yy, t)) / (2.0 * h);
  };
  j.xyy = (dx_at(y - h) - 2.0 * dx_at(y) + dx_at(y + h)) / (h * h);

  // xxt: centered t-difference of the second x-difference.
  auto dxx_at = [&](double tt) {
    return (f(x - h, y, tt) - 2.0 * f(x, y, tt) + f(x + h, y, tt)) / (h * h);
  };
  j.xxt = (dxx_at(t + h) - dxx_at(t - h)) / (2.0 * h);
  return j;
}

namespace {
inline double wedge(double av, double bw, double aw, double bv) {
  return av * bw - aw * bv;
}
}  // namespace

double msym_density_t(const JetVector10& V, const JetVector10& W,
                      const EquationParams& params) {
  return 0.5 * params.time_factor * wedge(V.x, W.xx, W.x, V.xx);
}

double msym_density_y(const JetVector10& V, const JetVector10& W,
                      const EquationParams& params) {
  return params.sigma * wedge(V.x, W.xy, W.x, V.xy);
}

double msym_density_x(const JetVector10& V, const JetVector10& W,
                      double base_phi_xx, double base_phi_xxx,
                      const EquationParams& params) {
  const double tf = params.time_factor;
  const double c = params.nonlin_coeff;
  const double s = params.sigma;
  double out = 0;
  out += -2.0 * c * base_phi_xxx * wedge(V.phi, W.xx, W.phi, V.xx);
  out += -2.0 * c * base_phi_xx * wedge(V.phi, W.xxx, W.phi, V.xxx);
  out += -s * wedge(V.phi, W.xyy, W.phi, V.xyy);
  out += -tf * wedge(V.phi, W.xxt, W.phi, V.xxt);
  out += -wedge(V.phi, W.xxxxx, W.phi, V.xxxxx);
  out += 2.0 * c * base_phi_xx * wedge(V.x, W.xx, W.x, V.xx);
  out += 0.5 * tf * wedge(V.x, W.xt, W.x, V.xt);
  out += wedge(V.x, W.xxxx, W.x, V.xxxx);
  out += -wedge(V.xx, W.xxx, W.xx, V.xxx);
  return out;
}

double continuous_msym_check(const Scenario& base, const ScalarSampler& tangent_a,
                             const ScalarSampler& tangent_b,
                             const GridSpec& grid, const EquationParams& params,
                             double probe_h) {
  grid.validate();
  params.validate();
  if (grid.nx < 3 || grid.ny < 3 || grid.nt < 3)
    throw std::invalid_argument(
        "continuous_msym_check: grid needs interior points on every axis");
  if (probe_h <= 0)
    probe_h = 0.25 * std::min({grid.dx, grid.dy, grid.dt});

  const int nx = grid.nx, ny = grid.ny, nt = grid.nt;
  auto idx = [&](int i, int j, int k) { return (k * ny + j) * nx + i; };
  std::vector<double> Mt(static_cast<size_t>(nx) * ny * nt);
  std::vector<double> Mx(Mt.size()), My(Mt.size());

  for (int k = 0; k < nt; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double x = grid.x(i), y = grid.y(j), t = grid.t(k);
        const JetVector10 A = sample_jet(tangent_a, x, y, t, probe_h);
        const JetVector10 B = sample_jet(tangent_b, x, y, t, probe_h);
        const PotentialJet bj = base.jet(x, y, t);
        const size_t q = idx(i, j, k);
        Mt[q] = msym_density_t(A, B, params);
        My[q] = msym_density_y(A, B, params);
        Mx[q] = msym_density_x(A, B, bj.xx, bj.xxx, params);
      }

  double worst = 0;
  for (int k = 1; k + 1 < nt; ++k)
    for (int j = 1; j + 1 < ny; ++j)
      for (int i = 1; i + 1 < nx; ++i) {
        const double div =
            (Mt[idx(i, j, k + 1)] - Mt[idx(i, j, k - 1)]) / (2.0 * grid.dt) +
            (Mx[idx(i + 1, j, k)] - Mx[idx(i - 1, j, k)]) / (2.0 * grid.dx) +
            (My[idx(i, j + 1, k)] - My[idx(i, j - 1, k)]) / (2.0 * grid.dy);
        worst = std::max(worst, std::abs(div));
      }
  return worst;
}

double convergence_order(double e_h, double e_half) {
  if (!(e_h > 0) || !(e_half > 0))
    throw std::invalid_argument("convergence_order: errors must be positive");
  return std::log2(e_h / e_half);
}

}  // namespace kpbox
