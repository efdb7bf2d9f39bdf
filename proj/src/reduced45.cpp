#include "kpbox/reduced45.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <stdexcept>

#include "kpbox/preissman.hpp"

namespace kpbox {

namespace {

// Separable factors of the three linear groups, indexed by offset+2 or
// offset+1.
constexpr double kX1[5] = {-1.0, -2.0, 0.0, 2.0, 1.0};
constexpr double kX2[5] = {1.0, -4.0, 6.0, -4.0, 1.0};
constexpr double kX3[5] = {1.0, 4.0, 6.0, 4.0, 1.0};
constexpr double kYA[3] = {1.0, 2.0, 1.0};
constexpr double kYD[3] = {1.0, -2.0, 1.0};
constexpr double kTD[3] = {-1.0, 0.0, 1.0};
constexpr double kTA[3] = {1.0, 2.0, 1.0};
// delta_bar signs over box lower x-offsets -2..1.
constexpr double kFX[4] = {1.0, -1.0, -1.0, 1.0};

}  // namespace

ReducedTable closed_form_reduced_table(double dx, double dy, double dt,
                                       const EquationParams& params) {
  params.validate();
  ReducedTable tb;
  const double c1 = params.time_factor / (4.0 * dx * dt);
  const double c2 = 1.0 / (dx * dx * dx * dx);
  const double c3 = params.sigma / (4.0 * dy * dy);
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 3; ++b)
      for (int d = 0; d < 3; ++d)
        tb.u_w[a][b][d] = c1 * kX1[a] * kYA[b] * kTD[d] +
                          c2 * kX2[a] * kYA[b] * kTA[d] +
                          c3 * kX3[a] * kYD[b] * kTA[d];
  const double cf = 2.0 / (dx * dx);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 2; ++b)
      for (int d = 0; d < 2; ++d) tb.f_w[a][b][d] = cf * kFX[a];
  return tb;
}

namespace {

// Mean of u over the 8 corners of the box with lower corner (ib, jb) and
// time levels (kb, kb+1) selected from the three planes.
double box_mean_u(const Plane2D& u_prev, const Plane2D& u_curr,
                  const Plane2D& u_next, int ib, int jb, int kb) {
  const Plane2D* lo = kb == -1 ? &u_prev : &u_curr;
  const Plane2D* hi = kb == -1 ? &u_curr : &u_next;
  double s = 0.0;
  for (int b = 0; b < 2; ++b)
    for (int a = 0; a < 2; ++a)
      s += lo->at(ib + a, jb + b) + hi->at(ib + a, jb + b);
  return 0.125 * s;
}

const Plane2D& plane_of(int dk, const Plane2D& u_prev, const Plane2D& u_curr,
                        const Plane2D& u_next) {
  return dk == -1 ? u_prev : (dk == 0 ? u_curr : u_next);
}

}  // namespace

Plane2D residual_45(const Plane2D& u_prev, const Plane2D& u_curr,
                    const Plane2D& u_next, double dx, double dy, double dt,
                    const EquationParams& params, const ReducedTable* table) {
  const int nx = u_curr.nx, ny = u_curr.ny;
  if (u_prev.nx != nx || u_prev.ny != ny || u_next.nx != nx ||
      u_next.ny != ny)
    throw std::invalid_argument("residual_45: plane shapes differ");
  if (nx < 5 || ny < 3)
    throw std::invalid_argument("residual_45: need nx >= 5 and ny >= 3");
  ReducedTable local;
  if (!table) {
    local = closed_form_reduced_table(dx, dy, dt, params);
    table = &local;
  }
  const double c = params.nonlin_coeff;
  Plane2D r(nx, ny);
  for (int j = 1; j < ny - 1; ++j)
    for (int i = 2; i < nx - 2; ++i) {
      double acc = 0.0;
      for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 3; ++b)
          for (int d = 0; d < 3; ++d) {
            const double w = table->u_w[a][b][d];
            if (w != 0.0)
              acc += w * plane_of(d - 1, u_prev, u_curr, u_next)
                             .at(i + a - 2, j + b - 1);
          }
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 2; ++b)
          for (int d = 0; d < 2; ++d) {
            const double m = box_mean_u(u_prev, u_curr, u_next, i + a - 2,
                                        j + b - 1, d - 1);
            acc += table->f_w[a][b][d] * c * m * m;
          }
      r.at(i, j) = acc;
    }
  return r;
}

Plane2D step(const ThreeLevelState& state, const Plane2D& band_next,
             double dx, double dy, double dt, const EquationParams& params,
             const SolverOptions& opts, const ReducedTable* table) {
  params.validate();
  opts.validate();
  const int nx = state.u_curr.nx, ny = state.u_curr.ny;
  if (band_next.nx != nx || band_next.ny != ny)
    throw std::invalid_argument("step: band plane shape differs");
  if (nx < 5 || ny < 3)
    throw std::invalid_argument("step: need nx >= 5 and ny >= 3");
  ReducedTable local;
  if (!table) {
    local = closed_form_reduced_table(dx, dy, dt, params);
    table = &local;
  }
  const double c = params.nonlin_coeff;

  const int nix = nx - 4, niy = ny - 2;
  const int nin = nix * niy;
  auto col_of = [&](int i, int j) -> int {
    if (i < 2 || i > nx - 3 || j < 1 || j > ny - 2) return -1;
    return (j - 1) * nix + (i - 2);
  };

  // Band values are fixed; interior starts from a linear-in-time predictor.
  Plane2D u_next = band_next;
  for (int j = 1; j < ny - 1; ++j)
    for (int i = 2; i < nx - 2; ++i)
      u_next.at(i, j) = 2.0 * state.u_curr.at(i, j) - state.u_prev.at(i, j);

  Eigen::SparseMatrix<double> J(nin, nin);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool analyzed = false, factorized = false;
  std::vector<Eigen::Triplet<double>> trips;

  double max_res = 0.0;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    const Plane2D r =
        residual_45(state.u_prev, state.u_curr, u_next, dx, dy, dt, params,
                    table);
    Eigen::VectorXd rv(nin);
    max_res = 0.0;
    for (int j = 1; j < ny - 1; ++j)
      for (int i = 2; i < nx - 2; ++i) {
        rv[col_of(i, j)] = r.at(i, j);
        max_res = std::max(max_res, std::abs(r.at(i, j)));
      }
    if (max_res <= opts.tol_residual) return u_next;

    const bool rebuild =
        !factorized || opts.method == SolverOptions::Method::newton;
    if (rebuild) {
      trips.clear();
      for (int j = 1; j < ny - 1; ++j)
        for (int i = 2; i < nx - 2; ++i) {
          const int row = col_of(i, j);
          // Linear part at level k+1.
          for (int a = 0; a < 5; ++a)
            for (int b = 0; b < 3; ++b) {
              const double w = table->u_w[a][b][2];
              const int cidx = col_of(i + a - 2, j + b - 1);
              if (w != 0.0 && cidx >= 0) trips.emplace_back(row, cidx, w);
            }
          // Nonlinear part: boxes spanning levels k, k+1.
          for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 2; ++b) {
              const double w = table->f_w[a][b][1];
              if (w == 0.0) continue;
              const int ib = i + a - 2, jb = j + b - 1;
              const double m =
                  box_mean_u(state.u_prev, state.u_curr, u_next, ib, jb, 0);
              const double dfd = w * c * m * 0.25;  // 2*c*m/8 per corner
              for (int bb = 0; bb < 2; ++bb)
                for (int aa = 0; aa < 2; ++aa) {
                  const int cidx = col_of(ib + aa, jb + bb);
                  if (cidx >= 0) trips.emplace_back(row, cidx, dfd);
                }
            }
        }
      J.setFromTriplets(trips.begin(), trips.end());
      if (!analyzed) {
        lu.analyzePattern(J);
        analyzed = true;
      }
      lu.factorize(J);
      if (lu.info() != Eigen::Success)
        throw SolveError("step: Jacobian factorization failed", max_res, iter);
      factorized = true;
    }
    const Eigen::VectorXd d = lu.solve(-rv);
    for (int j = 1; j < ny - 1; ++j)
      for (int i = 2; i < nx - 2; ++i) u_next.at(i, j) += d[col_of(i, j)];
    // Secondary, affine-invariant stopping test: the correction bounds the
    // distance to the solution in solution units, whereas the raw residual
    // scales with the stencil weights (~1/dx^4) and on fine grids its
    // round-off floor can sit above any fixed absolute threshold.
    if (d.lpNorm<Eigen::Infinity>() <= opts.tol_residual) return u_next;
  }
  // Accept a final iterate that meets the tolerance even when max_iters was
  // exhausted assembling it.
  const Plane2D r = residual_45(state.u_prev, state.u_curr, u_next, dx, dy,
                                dt, params, table);
  max_res = 0.0;
  for (int j = 1; j < ny - 1; ++j)
    for (int i = 2; i < nx - 2; ++i)
      max_res = std::max(max_res, std::abs(r.at(i, j)));
  if (max_res <= opts.tol_residual) return u_next;
  throw SolveError("step: no convergence", max_res, opts.max_iters);
}

ThreeLevelState startup(const Scenario& sc, const GridSpec& grid,
                        StartupMode mode, const EquationParams& params,
                        const SolverOptions& opts) {
  grid.validate();
  ThreeLevelState st;
  st.k_index = 1;
  st.u_prev = Plane2D(grid.nx, grid.ny);
  st.u_curr = Plane2D(grid.nx, grid.ny);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i)
      st.u_prev.at(i, j) = sc.u(grid.x(i), grid.y(j), grid.t(0));
  if (mode == StartupMode::exact_two_planes) {
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        st.u_curr.at(i, j) = sc.u(grid.x(i), grid.y(j), grid.t(1));
    return st;
  }
  GridSpec g2 = grid;
  g2.nt = 2;
  const Field ref = sample_lift(sc, g2, params);
  const Field sol = solve_global(ref, params, opts);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i)
      st.u_curr.at(i, j) = sol.at(comp::u, i, j, 1);
  return st;
}

ReducedTable derive_reduced_scheme(double dx, double dy, double dt,
                                   const EquationParams& params) {
  params.validate();
  // Point block 5 x 4 x 3 (x, y, t); boxes 4 x 3 x 2; the eliminated
  // identity is centered at point (2, 1, 1) and is the y-average of the
  // reduced stencil at rows j and j+1.
  constexpr int PX_ = 5, PY_ = 4, PT_ = 3;
  constexpr int npts = PX_ * PY_ * PT_;
  constexpr int nbox = (PX_ - 1) * (PY_ - 1) * (PT_ - 1);
  constexpr int nrows = 10 * nbox;
  const double tf2 = 0.5 * params.time_factor;

  auto pidx = [&](int i, int j, int k) { return (k * PY_ + j) * PX_ + i; };
  // Auxiliary component order: all but u.
  const int aux_comps[9] = {comp::phi, comp::v,   comp::w,   comp::p,
                            comp::px,  comp::pxx, comp::pxy, comp::pxt,
                            comp::pxxx};
  int aux_of[kNumComp];
  for (int q = 0; q < kNumComp; ++q) aux_of[q] = -1;
  for (int q = 0; q < 9; ++q) aux_of[aux_comps[q]] = q;

  Eigen::MatrixXd Au = Eigen::MatrixXd::Zero(nrows, npts);
  Eigen::MatrixXd Aaux = Eigen::MatrixXd::Zero(nrows, 9 * npts);
  Eigen::MatrixXd Af = Eigen::MatrixXd::Zero(nrows, nbox);

  auto add = [&](int row, int c, int i, int j, int k, double w) {
    if (c == comp::u)
      Au(row, pidx(i, j, k)) += w;
    else
      Aaux(row, aux_of[c] * npts + pidx(i, j, k)) += w;
  };

  int box = 0;
  for (int bk = 0; bk < PT_ - 1; ++bk)
    for (int bj = 0; bj < PY_ - 1; ++bj)
      for (int bi = 0; bi < PX_ - 1; ++bi, ++box) {
        const int r0 = 10 * box;
        for (int dk = 0; dk < 2; ++dk)
          for (int dj = 0; dj < 2; ++dj)
            for (int di = 0; di < 2; ++di) {
              const int i = bi + di, j = bj + dj, k = bk + dk;
              const double a = 0.125;
              const double gx = (2 * di - 1) / (4.0 * dx);
              const double gy = (2 * dj - 1) / (4.0 * dy);
              const double gt = (2 * dk - 1) / (4.0 * dt);
              add(r0 + 0, comp::px, i, j, k, gx);
              add(r0 + 1, comp::pxx, i, j, k, gx);
              add(r0 + 1, comp::pxy, i, j, k, gy);
              add(r0 + 1, comp::pxt, i, j, k, tf2 * gt);
              add(r0 + 1, comp::px, i, j, k, a);
              add(r0 + 2, comp::pxxx, i, j, k, gx);
              add(r0 + 2, comp::p, i, j, k, -a);
              add(r0 + 2, comp::pxx, i, j, k, a);
              add(r0 + 3, comp::pxy, i, j, k, a);
              add(r0 + 3, comp::w, i, j, k, -params.sigma * a);
              add(r0 + 4, comp::pxt, i, j, k, a);
              add(r0 + 4, comp::u, i, j, k, -a);
              add(r0 + 5, comp::v, i, j, k, a);
              add(r0 + 5, comp::phi, i, j, k, -gx);
              add(r0 + 6, comp::u, i, j, k, a);
              add(r0 + 6, comp::v, i, j, k, -gx);
              add(r0 + 7, comp::w, i, j, k, a);
              add(r0 + 7, comp::v, i, j, k, -gy);
              add(r0 + 8, comp::p, i, j, k, a);
              add(r0 + 8, comp::v, i, j, k, -tf2 * gt);
              add(r0 + 9, comp::u, i, j, k, -gx);
              add(r0 + 9, comp::pxxx, i, j, k, -a);
            }
        // The nonlinearity c*(box mean u)^2 enters row 2 as one symbol per
        // box with coefficient -1.
        Af(r0 + 2, box) = -1.0;
      }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Aaux, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  const double s0 = sv(0);
  int nullity = 0;
  for (int q = 0; q < sv.size(); ++q)
    if (sv(q) <= 1e-10 * s0) ++nullity;
  if (nullity != 1) throw std::runtime_error("elimination singular");
  const Eigen::VectorXd g = svd.matrixU().col(nrows - 1);

  const Eigen::VectorXd eu = Au.transpose() * g;   // y-averaged u weights
  const Eigen::VectorXd ef = Af.transpose() * g;   // y-averaged f weights
  const double scale = std::max(eu.cwiseAbs().maxCoeff(),
                                ef.cwiseAbs().maxCoeff());
  const double ctol = 1e-8 * scale;

  // Undo the y-averaging: E[j'] = (G[j'] + G[j'-1]) / 2 with G supported on
  // three rows (u) or two rows (f); the last relation is a consistency
  // check on the eliminant's structure.
  ReducedTable tb;
  for (int a = 0; a < 5; ++a)
    for (int d = 0; d < 3; ++d) {
      const double e[4] = {eu(pidx(a, 0, d)), eu(pidx(a, 1, d)),
                           eu(pidx(a, 2, d)), eu(pidx(a, 3, d))};
      double gr[3];
      gr[0] = 2.0 * e[0];
      gr[1] = 2.0 * e[1] - gr[0];
      gr[2] = 2.0 * e[2] - gr[1];
      if (std::abs(2.0 * e[3] - gr[2]) > ctol)
        throw std::runtime_error("elimination singular");
      for (int b = 0; b < 3; ++b) tb.u_w[a][b][d] = gr[b];
    }
  auto bidx = [&](int a, int b, int d) { return (d * (PY_ - 1) + b) * (PX_ - 1) + a; };
  for (int a = 0; a < 4; ++a)
    for (int d = 0; d < 2; ++d) {
      const double e[3] = {ef(bidx(a, 0, d)), ef(bidx(a, 1, d)),
                           ef(bidx(a, 2, d))};
      double gr[2];
      gr[0] = 2.0 * e[0];
      gr[1] = 2.0 * e[1] - gr[0];
      if (std::abs(2.0 * e[2] - gr[1]) > ctol)
        throw std::runtime_error("elimination singular");
      for (int b = 0; b < 2; ++b) tb.f_w[a][b][d] = gr[b];
    }

  // Fix scale and sign: the f group's weight at box offset +1 is 2/dx^2.
  const double pivot = tb.f_w[3][1][1];
  if (std::abs(pivot) <= 1e-12 * scale)
    throw std::runtime_error("elimination singular");
  const double rho = (2.0 / (dx * dx)) / pivot;
  for (auto& pa : tb.u_w)
    for (auto& pb : pa)
      for (auto& w : pb) w *= rho;
  for (auto& pa : tb.f_w)
    for (auto& pb : pa)
      for (auto& w : pb) w *= rho;
  return tb;
}

}  // namespace kpbox
