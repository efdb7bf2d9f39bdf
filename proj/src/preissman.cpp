#include "kpbox/preissman.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "kpbox/reduced45.hpp"

namespace kpbox {

Field box_average(const Field& f, Axes axes) {
  const GridSpec& g = f.grid;
  GridSpec og = g;
  if (axes.x) {
    if (g.nx < 2) throw std::invalid_argument("box_average: nx < 2");
    og.nx -= 1;
    og.x0 += 0.5 * g.dx;
  }
  if (axes.y) {
    if (g.ny < 2) throw std::invalid_argument("box_average: ny < 2");
    og.ny -= 1;
    og.y0 += 0.5 * g.dy;
  }
  if (axes.t) {
    if (g.nt < 2) throw std::invalid_argument("box_average: nt < 2");
    og.nt -= 1;
    og.t0 += 0.5 * g.dt;
  }
  Field out(og, f.component_count);
  const int sx = axes.x ? 1 : 0, sy = axes.y ? 1 : 0, st = axes.t ? 1 : 0;
  const double w = 1.0 / ((sx + 1) * (sy + 1) * (st + 1));
  for (int c = 0; c < f.component_count; ++c)
    for (int k = 0; k < og.nt; ++k)
      for (int j = 0; j < og.ny; ++j)
        for (int i = 0; i < og.nx; ++i) {
          double s = 0.0;
          for (int dk = 0; dk <= st; ++dk)
            for (int dj = 0; dj <= sy; ++dj)
              for (int di = 0; di <= sx; ++di)
                s += f.at(c, i + di, j + dj, k + dk);
          out.at(c, i, j, k) = w * s;
        }
  return out;
}

namespace {

// Box midpoint average and scaled face differences for all components.
// Corner order is fixed (x fastest, then y, then t) so sums are bitwise
// reproducible.
struct BoxMeans {
  StateZ A, Dx, Dy, Dt;
};

// One slab plane: the 10 components at fixed k, addressed by
// col(q, i, j) = (q*ny + j)*nx + i.
using Plane = std::vector<double>;

int plane_col(const GridSpec& g, int q, int i, int j) {
  return (q * g.ny + j) * g.nx + i;
}

BoxMeans slab_means(const GridSpec& g, const Plane& zlo, const Plane& zhi,
                    int i, int j) {
  BoxMeans m;
  for (int c = 0; c < kNumComp; ++c) {
    const double c000 = zlo[plane_col(g, c, i, j)];
    const double c100 = zlo[plane_col(g, c, i + 1, j)];
    const double c010 = zlo[plane_col(g, c, i, j + 1)];
    const double c110 = zlo[plane_col(g, c, i + 1, j + 1)];
    const double c001 = zhi[plane_col(g, c, i, j)];
    const double c101 = zhi[plane_col(g, c, i + 1, j)];
    const double c011 = zhi[plane_col(g, c, i, j + 1)];
    const double c111 = zhi[plane_col(g, c, i + 1, j + 1)];
    m.A[c] = 0.125 * (c000 + c100 + c010 + c110 + c001 + c101 + c011 + c111);
    m.Dx[c] = (0.25 * (c100 + c110 + c101 + c111) -
               0.25 * (c000 + c010 + c001 + c011)) /
              g.dx;
    m.Dy[c] = (0.25 * (c010 + c110 + c011 + c111) -
               0.25 * (c000 + c100 + c001 + c101)) /
              g.dy;
    m.Dt[c] = (0.25 * (c001 + c101 + c011 + c111) -
               0.25 * (c000 + c100 + c010 + c110)) /
              g.dt;
  }
  return m;
}

// The ten box-equation rows given the means.
void box_rows(const BoxMeans& m, const EquationParams& eqp, double* r) {
  const double tf2 = 0.5 * eqp.time_factor, c = eqp.nonlin_coeff,
               sig = eqp.sigma;
  using namespace comp;
  r[0] = m.Dx[px];
  r[1] = m.Dx[pxx] + m.Dy[pxy] + tf2 * m.Dt[pxt] + m.A[px];
  r[2] = m.Dx[pxxx] - m.A[p] - c * m.A[u] * m.A[u] + m.A[pxx];
  r[3] = m.A[pxy] - sig * m.A[w];
  r[4] = m.A[pxt] - m.A[u];
  r[5] = m.A[v] - m.Dx[phi];
  r[6] = m.A[u] - m.Dx[v];
  r[7] = m.A[w] - m.Dy[v];
  r[8] = m.A[p] - tf2 * m.Dt[v];
  r[9] = -m.Dx[u] - m.A[pxxx];
}

// Derivatives of the ten rows with respect to one box corner at time
// offset dk (0 = lower plane, 1 = upper). au is the current box mean of u,
// the only state-dependent weight.
struct RowEntry {
  int row, comp;
  double w;
};
int box_row_jacobian(int di, int dj, int dk, const GridSpec& g, double au,
                     const EquationParams& eqp, RowEntry* out) {
  const double tf2 = 0.5 * eqp.time_factor, c = eqp.nonlin_coeff,
               sig = eqp.sigma;
  const double a = 0.125;
  const double gx = (2 * di - 1) / (4.0 * g.dx);
  const double gy = (2 * dj - 1) / (4.0 * g.dy);
  const double gt = (2 * dk - 1) / (4.0 * g.dt);
  using namespace comp;
  int n = 0;
  auto put = [&](int row, int cc, double w) { out[n++] = {row, cc, w}; };
  put(0, px, gx);
  put(1, pxx, gx);
  put(1, pxy, gy);
  put(1, pxt, tf2 * gt);
  put(1, px, a);
  put(2, pxxx, gx);
  put(2, p, -a);
  put(2, u, -2.0 * c * au * a);
  put(2, pxx, a);
  put(3, pxy, a);
  put(3, w, -sig * a);
  put(4, pxt, a);
  put(4, u, -a);
  put(5, v, a);
  put(5, phi, -gx);
  put(6, u, a);
  put(6, v, -gx);
  put(7, w, a);
  put(7, v, -gy);
  put(8, p, a);
  put(8, v, -tf2 * gt);
  put(9, u, -gx);
  put(9, pxxx, -a);
  return n;
}

bool on_band(int i, int j, int nx, int ny) {
  return i < 2 || i >= nx - 2 || j == 0 || j == ny - 1;
}

// Shared geometry of one slab's constrained system.
struct SlabShape {
  GridSpec g;
  int nun, nbox, npin, ngauge, nrows;
  std::vector<std::pair<int, int>> pins;  // (i, j) in band order

  SlabShape(const GridSpec& grid, bool with_gauge) : g(grid) {
    nun = kNumComp * g.nx * g.ny;
    nbox = 10 * (g.nx - 1) * (g.ny - 1);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        if (on_band(i, j, g.nx, g.ny)) pins.emplace_back(i, j);
    npin = static_cast<int>(pins.size());
    ngauge = (with_gauge && g.nx >= 6 && g.ny >= 3) ? g.nx - 4 : 0;
    nrows = nbox + npin + ngauge;
  }
};

// Reduced 45-point residual centered at (i, j=1, level of zmid) and its
// derivative weights with respect to the top plane's u values.
double gauge_value(const SlabShape& s, const ReducedTable& tb, double c,
                   const Plane& ulow, const Plane& zmid, const Plane& ztop,
                   int i, int j) {
  const GridSpec& g = s.g;
  double acc = 0.0;
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 3; ++b) {
      const int ci = i + a - 2, cj = j + b - 1;
      acc += tb.u_w[a][b][0] * ulow[plane_col(g, comp::u, ci, cj)];
      acc += tb.u_w[a][b][1] * zmid[plane_col(g, comp::u, ci, cj)];
      acc += tb.u_w[a][b][2] * ztop[plane_col(g, comp::u, ci, cj)];
    }
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 2; ++b) {
      const int ib = i + a - 2, jb = j + b - 1;
      double mlo = 0.0, mhi = 0.0;
      for (int bb = 0; bb < 2; ++bb)
        for (int aa = 0; aa < 2; ++aa) {
          const int cl = plane_col(g, comp::u, ib + aa, jb + bb);
          mlo += ulow[cl] + zmid[cl];
          mhi += zmid[cl] + ztop[cl];
        }
      mlo *= 0.125;
      mhi *= 0.125;
      acc += tb.f_w[a][b][0] * c * mlo * mlo;
      acc += tb.f_w[a][b][1] * c * mhi * mhi;
    }
  return acc;
}

// Solves one nonlinear slab: unknown top plane z, objective
// min ||z - ref||^2, hard rows = box equations, u pins, optional gauge
// rows. ulow is the u-carrying plane one level below zprev (null for the
// first slab).
Plane solve_slab(const SlabShape& s, const EquationParams& p,
                 const SolverOptions& o, const ReducedTable& tb,
                 const Plane* ulow, const Plane& zprev, const Plane& ref,
                 const char* who) {
  const GridSpec& g = s.g;
  const bool gauge = s.ngauge > 0 && ulow != nullptr;
  const int n = s.nun, m = s.nrows;
  Plane z = ref;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool analyzed = false, factorized = false;
  RowEntry ent[32];
  double maxc = 0.0;

  auto residual = [&](const Plane& zc) {
    Eigen::VectorXd r(m);
    int row0 = 0;
    for (int bj = 0; bj < g.ny - 1; ++bj)
      for (int bi = 0; bi < g.nx - 1; ++bi, row0 += 10) {
        const BoxMeans bm = slab_means(g, zprev, zc, bi, bj);
        box_rows(bm, p, r.data() + row0);
      }
    for (int t = 0; t < s.npin; ++t) {
      const auto [i, j] = s.pins[t];
      const int cl = plane_col(g, comp::u, i, j);
      r[s.nbox + t] = zc[cl] - ref[cl];
    }
    for (int t = 0; t < s.ngauge; ++t)
      r[s.nbox + s.npin + t] =
          gauge ? gauge_value(s, tb, p.nonlin_coeff, *ulow, zprev, zc, 2 + t, 1)
                : 0.0;
    return r;
  };

  for (int iter = 0; iter < o.max_iters; ++iter) {
    Eigen::VectorXd r = residual(z);
    maxc = r.cwiseAbs().maxCoeff();
    if (maxc <= o.tol_residual) return z;

    if (!factorized || o.method == SolverOptions::Method::newton) {
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(static_cast<std::size_t>(n) + 50u * m);
      for (int t = 0; t < n; ++t) trips.emplace_back(t, t, 1.0);
      auto addC = [&](int row, int cc, double w) {
        trips.emplace_back(n + row, cc, w);
        trips.emplace_back(cc, n + row, w);
      };
      int row0 = 0;
      for (int bj = 0; bj < g.ny - 1; ++bj)
        for (int bi = 0; bi < g.nx - 1; ++bi, row0 += 10) {
          double au = 0.0;
          for (int dj = 0; dj < 2; ++dj)
            for (int di = 0; di < 2; ++di) {
              const int cl = plane_col(g, comp::u, bi + di, bj + dj);
              au += zprev[cl] + z[cl];
            }
          au *= 0.125;
          for (int dj = 0; dj < 2; ++dj)
            for (int di = 0; di < 2; ++di) {
              const int ne = box_row_jacobian(di, dj, 1, g, au, p, ent);
              for (int e = 0; e < ne; ++e)
                addC(row0 + ent[e].row,
                     plane_col(g, ent[e].comp, bi + di, bj + dj), ent[e].w);
            }
        }
      for (int t = 0; t < s.npin; ++t) {
        const auto [i, j] = s.pins[t];
        addC(s.nbox + t, plane_col(g, comp::u, i, j), 1.0);
      }
      for (int t = 0; t < s.ngauge; ++t) {
        const int i = 2 + t, j = 1, grow = s.nbox + s.npin + t;
        for (int a = 0; a < 5; ++a)
          for (int b = 0; b < 3; ++b)
            addC(grow, plane_col(g, comp::u, i + a - 2, j + b - 1),
                 tb.u_w[a][b][2]);
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 2; ++b) {
            const int ib = i + a - 2, jb = j + b - 1;
            double mhi = 0.0;
            for (int bb = 0; bb < 2; ++bb)
              for (int aa = 0; aa < 2; ++aa) {
                const int cl = plane_col(g, comp::u, ib + aa, jb + bb);
                mhi += zprev[cl] + z[cl];
              }
            mhi *= 0.125;
            // d(w c m^2)/d corner = w * 2 c m / 8.
            const double dfd = tb.f_w[a][b][1] * p.nonlin_coeff * mhi * 0.25;
            for (int bb = 0; bb < 2; ++bb)
              for (int aa = 0; aa < 2; ++aa)
                addC(grow, plane_col(g, comp::u, ib + aa, jb + bb), dfd);
          }
      }
      Eigen::SparseMatrix<double> kkt(n + m, n + m);
      kkt.setFromTriplets(trips.begin(), trips.end());
      if (!analyzed) {
        lu.analyzePattern(kkt);
        analyzed = true;
      }
      lu.factorize(kkt);
      if (lu.info() != Eigen::Success)
        throw SolveError(std::string(who) + ": KKT factorization failed", maxc,
                         iter);
      factorized = true;
    }

    Eigen::VectorXd rhs(n + m);
    for (int t = 0; t < n; ++t) rhs[t] = -(z[t] - ref[t]);
    for (int t = 0; t < m; ++t) rhs[n + t] = -r[t];
    const Eigen::VectorXd d = lu.solve(rhs);
    for (int t = 0; t < n; ++t) z[t] += d[t];
  }
  const Eigen::VectorXd r = residual(z);
  maxc = r.cwiseAbs().maxCoeff();
  if (maxc <= o.tol_residual) return z;
  throw SolveError(std::string(who) + ": no convergence", maxc, o.max_iters);
}

Plane extract_plane(const Field& f, int k) {
  const GridSpec& g = f.grid;
  Plane pl(static_cast<std::size_t>(kNumComp) * g.nx * g.ny);
  for (int q = 0; q < kNumComp; ++q)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        pl[plane_col(g, q, i, j)] = f.at(q, i, j, k);
  return pl;
}

void insert_plane(Field& f, int k, const Plane& pl) {
  const GridSpec& g = f.grid;
  for (int q = 0; q < kNumComp; ++q)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        f.at(q, i, j, k) = pl[plane_col(g, q, i, j)];
}

}  // namespace

BoxResidual scheme_residual(const Field& zfield, const EquationParams& params) {
  if (zfield.component_count != kNumComp)
    throw std::invalid_argument("scheme_residual: need a 10-component field");
  params.validate();
  const GridSpec& g = zfield.grid;
  g.validate();
  GridSpec og = g;
  og.nx -= 1;
  og.ny -= 1;
  og.nt -= 1;
  og.x0 += 0.5 * g.dx;
  og.y0 += 0.5 * g.dy;
  og.t0 += 0.5 * g.dt;
  Field out(og, kNumComp);
  double rows[10];
  for (int k = 0; k < og.nt; ++k) {
    const Plane lo = extract_plane(zfield, k);
    const Plane hi = extract_plane(zfield, k + 1);
    for (int j = 0; j < og.ny; ++j)
      for (int i = 0; i < og.nx; ++i) {
        const BoxMeans m = slab_means(g, lo, hi, i, j);
        box_rows(m, params, rows);
        for (int c = 0; c < kNumComp; ++c) out.at(c, i, j, k) = rows[c];
      }
  }
  return out;
}

Field solve_global(const Field& reference, const EquationParams& params,
                   const SolverOptions& opts) {
  if (reference.component_count != kNumComp)
    throw std::invalid_argument("solve_global: need a 10-component reference");
  params.validate();
  opts.validate();
  const GridSpec& g = reference.grid;
  g.validate();
  const ReducedTable tb = closed_form_reduced_table(g.dx, g.dy, g.dt, params);
  const SlabShape shape_first(g, false), shape_rest(g, true);

  Field sol(g, kNumComp);
  Plane prev = extract_plane(reference, 0);
  insert_plane(sol, 0, prev);
  Plane below;  // u-carrying plane two levels down
  for (int k = 0; k + 1 < g.nt; ++k) {
    const Plane ref = extract_plane(reference, k + 1);
    const bool first = (k == 0);
    const SlabShape& s = first ? shape_first : shape_rest;
    Plane top = solve_slab(s, params, opts, tb, first ? nullptr : &below,
                           prev, ref, "solve_global");
    insert_plane(sol, k + 1, top);
    below = std::move(prev);
    prev = std::move(top);
  }
  return sol;
}

TangentField solve_tangent(const Field& base, const Field& tangent_reference,
                           const EquationParams& params,
                           const SolverOptions& opts) {
  if (base.component_count != kNumComp ||
      tangent_reference.component_count != kNumComp)
    throw std::invalid_argument("solve_tangent: need 10-component fields");
  if (base.grid.num_points() != tangent_reference.grid.num_points() ||
      base.grid.nx != tangent_reference.grid.nx ||
      base.grid.ny != tangent_reference.grid.ny)
    throw std::invalid_argument("solve_tangent: grid mismatch");
  params.validate();
  opts.validate();
  const GridSpec& g = base.grid;
  const SlabShape shape_first(g, false), shape_rest(g, true);
  const ReducedTable tb =
      closed_form_reduced_table(g.dx, g.dy, g.dt, params);
  RowEntry ent[32];

  Field dz(g, kNumComp);
  Plane dprev = extract_plane(tangent_reference, 0);
  insert_plane(dz, 0, dprev);
  Plane bbelow, dbelow;  // planes two levels down (base / tangent)

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  int analyzed_for = -1;  // 0: first-slab pattern, 1: later slabs
  for (int k = 0; k + 1 < g.nt; ++k) {
    const Plane bprev = extract_plane(base, k);
    const Plane bnext = extract_plane(base, k + 1);
    const Plane dref = extract_plane(tangent_reference, k + 1);
    const bool first = (k == 0);
    const SlabShape& s = first ? shape_first : shape_rest;
    const bool gauge = s.ngauge > 0 && !first;
    const int n = s.nun, m = s.nrows;

    // Linearized box rows: J0 dz_prev + J1 dz_next = 0. Solve for
    // d = dz_next - dref so the objective is plain min ||d||^2.
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) + 50u * m);
    for (int t = 0; t < n; ++t) trips.emplace_back(t, t, 1.0);
    auto addC = [&](int row, int cc, double w) {
      trips.emplace_back(n + row, cc, w);
      trips.emplace_back(cc, n + row, w);
    };
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
    int row0 = 0;
    for (int bj = 0; bj < g.ny - 1; ++bj)
      for (int bi = 0; bi < g.nx - 1; ++bi, row0 += 10) {
        double au = 0.0;
        for (int dj = 0; dj < 2; ++dj)
          for (int di = 0; di < 2; ++di) {
            const int cl = plane_col(g, comp::u, bi + di, bj + dj);
            au += bprev[cl] + bnext[cl];
          }
        au *= 0.125;
        for (int dk = 0; dk < 2; ++dk)
          for (int dj = 0; dj < 2; ++dj)
            for (int di = 0; di < 2; ++di) {
              const int ne = box_row_jacobian(di, dj, dk, g, au, params, ent);
              for (int e = 0; e < ne; ++e) {
                const int cl =
                    plane_col(g, ent[e].comp, bi + di, bj + dj);
                if (dk == 1) {
                  addC(row0 + ent[e].row, cl, ent[e].w);
                  rhs[n + row0 + ent[e].row] -= ent[e].w * dref[cl];
                } else {
                  rhs[n + row0 + ent[e].row] -= ent[e].w * dprev[cl];
                }
              }
            }
      }
    for (int t = 0; t < s.npin; ++t) {
      const auto [i, j] = s.pins[t];
      addC(s.nbox + t, plane_col(g, comp::u, i, j), 1.0);
      // Pin value equals dref there, and the unknown is the offset from
      // dref, so the pin rhs is zero.
    }
    // Linearized gauge rows about the base trajectory, mirroring the
    // nonlinear solve's constraints so the tangent is its exact derivative.
    for (int t = 0; t < s.ngauge; ++t) {
      const int ic = 2 + t, jc = 1, grow = s.nbox + s.npin + t;
      double known = 0.0;
      for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 3; ++b) {
          const int cl = plane_col(g, comp::u, ic + a - 2, jc + b - 1);
          known += tb.u_w[a][b][0] * (gauge ? dbelow[cl] : 0.0);
          known += tb.u_w[a][b][1] * dprev[cl];
          addC(grow, cl, tb.u_w[a][b][2]);
          known += tb.u_w[a][b][2] * dref[cl];
        }
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 2; ++b) {
          const int ib = ic + a - 2, jb = jc + b - 1;
          double mlo = 0.0, mhi = 0.0, dlo = 0.0, dmid = 0.0;
          for (int bb = 0; bb < 2; ++bb)
            for (int aa = 0; aa < 2; ++aa) {
              const int cl = plane_col(g, comp::u, ib + aa, jb + bb);
              mlo += (gauge ? bbelow[cl] : 0.0) + bprev[cl];
              mhi += bprev[cl] + bnext[cl];
              dlo += (gauge ? dbelow[cl] : 0.0) + dprev[cl];
              dmid += dprev[cl];
            }
          mlo *= 0.125;
          mhi *= 0.125;
          const double cnl = params.nonlin_coeff;
          known += tb.f_w[a][b][0] * cnl * 2.0 * mlo * (0.125 * dlo);
          known += tb.f_w[a][b][1] * cnl * 2.0 * mhi * (0.125 * dmid);
          const double dfd = tb.f_w[a][b][1] * cnl * mhi * 0.25;
          for (int bb = 0; bb < 2; ++bb)
            for (int aa = 0; aa < 2; ++aa) {
              const int cl = plane_col(g, comp::u, ib + aa, jb + bb);
              addC(grow, cl, dfd);
              known += dfd * dref[cl];
            }
        }
      rhs[n + grow] = -known;
    }
    Eigen::SparseMatrix<double> kkt(n + m, n + m);
    kkt.setFromTriplets(trips.begin(), trips.end());
    const int shape_id = first ? 0 : 1;
    if (analyzed_for != shape_id) {
      lu.analyzePattern(kkt);
      analyzed_for = shape_id;
    }
    lu.factorize(kkt);
    if (lu.info() != Eigen::Success)
      throw SolveError("solve_tangent: KKT factorization failed", 0.0, k);
    const Eigen::VectorXd d = lu.solve(rhs);
    Plane dnext = dref;
    for (int t = 0; t < n; ++t) dnext[t] += d[t];
    insert_plane(dz, k + 1, dnext);
    bbelow = bprev;
    dbelow = dprev;
    dprev = std::move(dnext);
  }
  return dz;
}

Field discrete_msym_residual(const Field& U, const Field& V,
                             const EquationParams& params) {
  if (U.component_count != kNumComp || V.component_count != kNumComp)
    throw std::invalid_argument("discrete_msym_residual: need 10 components");
  const GridSpec& g = U.grid;
  if (V.grid.nx != g.nx || V.grid.ny != g.ny || V.grid.nt != g.nt)
    throw std::invalid_argument("discrete_msym_residual: grid mismatch");
  params.validate();
  const double tf2 = 0.5 * params.time_factor;
  using namespace comp;

  const Field Uxy = box_average(U, {true, true, false});
  const Field Vxy = box_average(V, {true, true, false});
  const Field Uxt = box_average(U, {true, false, true});
  const Field Vxt = box_average(V, {true, false, true});
  const Field Uyt = box_average(U, {false, true, true});
  const Field Vyt = box_average(V, {false, true, true});

  auto wedge = [](const Field& A, const Field& B, int ca, int cb, int i,
                  int j, int k) {
    return A.at(ca, i, j, k) * B.at(cb, i, j, k) -
           B.at(ca, i, j, k) * A.at(cb, i, j, k);
  };

  GridSpec og = g;
  og.nx -= 1;
  og.ny -= 1;
  og.nt -= 1;
  og.x0 += 0.5 * g.dx;
  og.y0 += 0.5 * g.dy;
  og.t0 += 0.5 * g.dt;
  Field out(og, 1);
  for (int k = 0; k < og.nt; ++k)
    for (int j = 0; j < og.ny; ++j)
      for (int i = 0; i < og.nx; ++i) {
        const double wM1 = tf2 * wedge(Uxy, Vxy, v, pxt, i, j, k + 1);
        const double wM0 = tf2 * wedge(Uxy, Vxy, v, pxt, i, j, k);
        const double wL1 = wedge(Uxt, Vxt, v, pxy, i, j + 1, k);
        const double wL0 = wedge(Uxt, Vxt, v, pxy, i, j, k);
        const double wK1 = wedge(Uyt, Vyt, phi, px, i + 1, j, k) +
                           wedge(Uyt, Vyt, v, pxx, i + 1, j, k) +
                           wedge(Uyt, Vyt, u, pxxx, i + 1, j, k);
        const double wK0 = wedge(Uyt, Vyt, phi, px, i, j, k) +
                           wedge(Uyt, Vyt, v, pxx, i, j, k) +
                           wedge(Uyt, Vyt, u, pxxx, i, j, k);
        out.at(i, j, k) = (wM1 - wM0) / g.dt + (wL1 - wL0) / g.dy +
                          (wK1 - wK0) / g.dx;
      }
  return out;
}

Field random_polynomial_field(const GridSpec& grid, int ncomp,
                              std::uint64_t seed) {
  grid.validate();
  Field f(grid, ncomp);
  // splitmix64 stream; avoids distribution implementation differences.
  std::uint64_t state = seed;
  auto next_unit = [&state]() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return 2.0 * (static_cast<double>(x >> 11) * 0x1.0p-53) - 1.0;
  };
  const double inx = 1.0 / std::max(1, grid.nx - 1);
  const double iny = 1.0 / std::max(1, grid.ny - 1);
  const double int_ = 1.0 / std::max(1, grid.nt - 1);
  for (int c = 0; c < ncomp; ++c) {
    double a[10];
    for (double& coeff : a) coeff = next_unit();
    for (int k = 0; k < grid.nt; ++k)
      for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
          const double xi = i * inx, yj = j * iny, tk = k * int_;
          f.at(c, i, j, k) = a[0] + a[1] * xi + a[2] * yj + a[3] * tk +
                             a[4] * xi * yj + a[5] * yj * tk +
                             a[6] * xi * tk + a[7] * xi * xi +
                             a[8] * yj * yj + a[9] * tk * tk;
        }
  }
  return f;
}

}  // namespace kpbox
