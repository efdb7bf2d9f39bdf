#include "kpbox/core.hpp"

#include <cmath>

namespace kpbox {

void EquationParams::validate() const {
  if (sigma == 0.0)
    throw std::invalid_argument("EquationParams: sigma must be nonzero");
  if (!(nonlin_coeff > 0.0))
    throw std::invalid_argument("EquationParams: nonlin_coeff must be positive");
  if (time_factor != 1.0 && time_factor != 2.0)
    throw std::invalid_argument("EquationParams: time_factor must be 1 or 2");
}

namespace {
constexpr double StateZ::*kMembers[kNumComp] = {
    &StateZ::phi, &StateZ::v,   &StateZ::u,   &StateZ::w,   &StateZ::p,
    &StateZ::px,  &StateZ::pxx, &StateZ::pxy, &StateZ::pxt, &StateZ::pxxx};
}

double& StateZ::operator[](int i) { return this->*kMembers[i]; }
double StateZ::operator[](int i) const { return this->*kMembers[i]; }

MsymOperators build_matrices() {
  MsymOperators ops;
  auto skew = [](Mat10& m, int a, int b) {
    m[a][b] = 1.0;
    m[b][a] = -1.0;
  };
  skew(ops.M, comp::v, comp::pxt);
  skew(ops.K, comp::phi, comp::px);
  skew(ops.K, comp::v, comp::pxx);
  skew(ops.K, comp::u, comp::pxxx);
  skew(ops.L, comp::v, comp::pxy);
  return ops;
}

double hamiltonian_S(const StateZ& z, const EquationParams& params) {
  const double c = params.nonlin_coeff, sig = params.sigma;
  return z.u * z.p + 0.5 * z.pxxx * z.pxxx + 0.5 * sig * z.w * z.w +
         (c / 3.0) * z.u * z.u * z.u - z.px * z.v - z.pxx * z.u -
         z.pxt * z.p - z.pxy * z.w;
}

StateZ grad_S(const StateZ& z, const EquationParams& params) {
  const double c = params.nonlin_coeff, sig = params.sigma;
  StateZ g;
  g.phi = 0.0;
  g.v = -z.px;
  g.u = z.p + c * z.u * z.u - z.pxx;
  g.w = sig * z.w - z.pxy;
  g.p = z.u - z.pxt;
  g.px = -z.v;
  g.pxx = -z.u;
  g.pxy = -z.w;
  g.pxt = -z.p;
  g.pxxx = z.pxxx;
  return g;
}

Mat10 hess_S(const StateZ& z, const EquationParams& params) {
  const double c = params.nonlin_coeff, sig = params.sigma;
  Mat10 h{};
  auto sym = [&h](int a, int b, double val) {
    h[a][b] = val;
    h[b][a] = val;
  };
  sym(comp::u, comp::p, 1.0);
  sym(comp::u, comp::pxx, -1.0);
  sym(comp::v, comp::px, -1.0);
  sym(comp::w, comp::pxy, -1.0);
  sym(comp::p, comp::pxt, -1.0);
  h[comp::u][comp::u] = 2.0 * c * z.u;
  h[comp::w][comp::w] = sig;
  h[comp::pxxx][comp::pxxx] = 1.0;
  return h;
}

StateZ lift_state(const PotentialJet& jet, const EquationParams& params) {
  const double tf = params.time_factor, c = params.nonlin_coeff,
               sig = params.sigma;
  StateZ z;
  z.phi = jet.phi;
  z.v = jet.x;
  z.u = jet.xx;
  z.w = jet.xy;
  z.p = 0.5 * tf * jet.xt;
  z.px = -(tf * jet.xxt + 2.0 * c * jet.xx * jet.xxx + sig * jet.xyy + jet.xxxxx);
  z.pxx = 0.5 * tf * jet.xt + c * jet.xx * jet.xx + jet.xxxx;
  z.pxy = sig * jet.xy;
  z.pxt = jet.xx;
  z.pxxx = -jet.xxx;
  return z;
}

std::function<StateZ(double, double, double)> lift_from_potential(
    PotentialSampler phi_derivs, const EquationParams& params) {
  return [phi_derivs = std::move(phi_derivs), params](double x, double y,
                                                      double t) {
    return lift_state(phi_derivs(x, y, t), params);
  };
}

void GridSpec::validate() const {
  if (!(dx > 0.0) || !(dy > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("GridSpec: steps must be positive");
  if (nx < 2 || ny < 2 || nt < 2)
    throw std::invalid_argument("GridSpec: need at least 2 points per axis");
}

StateZ Field::state(int i, int j, int k) const {
  StateZ z;
  for (int c = 0; c < component_count && c < kNumComp; ++c)
    z[c] = at(c, i, j, k);
  return z;
}

void Field::set_state(int i, int j, int k, const StateZ& z) {
  for (int c = 0; c < component_count && c < kNumComp; ++c)
    at(c, i, j, k) = z[c];
}

bool Field::all_finite() const {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

Field continuous_residual(const Field& zfield, const EquationParams& params) {
  if (zfield.component_count != kNumComp)
    throw std::invalid_argument("continuous_residual: need a 10-component field");
  params.validate();
  const GridSpec& g = zfield.grid;
  g.validate();
  const double tf2 = 0.5 * params.time_factor;
  Field res(g, kNumComp);
  for (int k = 1; k < g.nt - 1; ++k)
    for (int j = 1; j < g.ny - 1; ++j)
      for (int i = 1; i < g.nx - 1; ++i) {
        const StateZ gs = grad_S(zfield.state(i, j, k), params);
        const auto d = [&](int c, char axis) {
          switch (axis) {
            case 't':
              return (zfield.at(c, i, j, k + 1) - zfield.at(c, i, j, k - 1)) / (2.0 * g.dt);
            case 'x':
              return (zfield.at(c, i + 1, j, k) - zfield.at(c, i - 1, j, k)) / (2.0 * g.dx);
            default:
              return (zfield.at(c, i, j + 1, k) - zfield.at(c, i, j - 1, k)) / (2.0 * g.dy);
          }
        };
        for (int c = 0; c < kNumComp; ++c) res.at(c, i, j, k) = -gs[c];
        // The skew operators couple one component pair each; the rows are
        // written out directly instead of looping over mostly-zero matrices.
        res.at(comp::phi, i, j, k) += d(comp::px, 'x');
        res.at(comp::v, i, j, k) +=
            tf2 * d(comp::pxt, 't') + d(comp::pxx, 'x') + d(comp::pxy, 'y');
        res.at(comp::u, i, j, k) += d(comp::pxxx, 'x');
        res.at(comp::px, i, j, k) += -d(comp::phi, 'x');
        res.at(comp::pxx, i, j, k) += -d(comp::v, 'x');
        res.at(comp::pxy, i, j, k) += -d(comp::v, 'y');
        res.at(comp::pxt, i, j, k) += -tf2 * d(comp::v, 't');
        res.at(comp::pxxx, i, j, k) += -d(comp::u, 'x');
      }
  return res;
}

namespace fd {

double d1_3pt(const double* f, double h) { return (f[2] - f[0]) / (2.0 * h); }

double d2_3pt(const double* f, double h) {
  return (f[0] - 2.0 * f[1] + f[2]) / (h * h);
}

double d1_5pt(const double* f, double h) {
  return (f[0] - 8.0 * f[1] + 8.0 * f[3] - f[4]) / (12.0 * h);
}

double d2_5pt(const double* f, double h) {
  return (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) /
         (12.0 * h * h);
}

double d3_5pt(const double* f, double h) {
  return (-f[0] + 2.0 * f[1] - 2.0 * f[3] + f[4]) / (2.0 * h * h * h);
}

double d4_5pt(const double* f, double h) {
  const double h4 = h * h * h * h;
  return (f[0] - 4.0 * f[1] + 6.0 * f[2] - 4.0 * f[3] + f[4]) / h4;
}

double d4_7pt(const double* f, double h) {
  const double h4 = h * h * h * h;
  return (-f[0] + 12.0 * f[1] - 39.0 * f[2] + 56.0 * f[3] - 39.0 * f[4] +
          12.0 * f[5] - f[6]) /
         (6.0 * h4);
}

double d5_7pt(const double* f, double h) {
  const double h5 = h * h * h * h * h;
  return (-f[0] + 4.0 * f[1] - 5.0 * f[2] + 5.0 * f[4] - 4.0 * f[5] + f[6]) /
         (2.0 * h5);
}

}  // namespace fd

}  // namespace kpbox
