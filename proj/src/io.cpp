#include "kpbox/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "kpbox/preissman.hpp"

namespace kpbox {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_line(int line, const std::string& what) {
  throw std::invalid_argument("config line " + std::to_string(line) + ": " +
                              what);
}

double parse_num(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    bad_line(line, "malformed number for key '" + key + "'");
  }
}

long long parse_ll(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    bad_line(line, "malformed integer for key '" + key + "'");
  }
}

[[noreturn]] void bad_key(const std::string& key, const std::string& what) {
  throw std::invalid_argument("config key '" + key + "': " + what);
}

const char* scenario_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::line_soliton: return "line_soliton";
    case ScenarioKind::two_soliton: return "two_soliton";
    case ScenarioKind::lump: return "lump";
    default: return "manufactured";
  }
}

// Least-squares line v = a + b * s through the samples; returns {a, b}.
std::pair<double, double> fit_line(const std::vector<double>& s,
                                   const std::vector<double>& v) {
  const int n = static_cast<int>(s.size());
  double ss = 0, sv = 0, sss = 0, ssv = 0;
  for (int q = 0; q < n; ++q) {
    ss += s[q];
    sv += v[q];
    sss += s[q] * s[q];
    ssv += s[q] * v[q];
  }
  const double det = n * sss - ss * ss;
  if (n < 2 || std::abs(det) < 1e-300) return {n ? sv / n : 0.0, 0.0};
  const double b = (n * ssv - ss * sv) / det;
  return {(sv - b * ss) / n, b};
}

Plane2D field_plane(const Field& f, int c, int k) {
  Plane2D pl(f.grid.nx, f.grid.ny);
  for (int j = 0; j < f.grid.ny; ++j)
    for (int i = 0; i < f.grid.nx; ++i) pl.at(i, j) = f.at(c, i, j, k);
  return pl;
}

double field_linf(const Field& f) {
  double m = 0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

// Interior local maxima of one row, refined by parabola, tallest first.
struct RowCrest {
  double x = 0, amp = 0;
};
std::vector<RowCrest> scan_row_crests(const Plane2D& u, const GridSpec& g,
                                      int j) {
  double rowmax = 0;
  for (int i = 0; i < u.nx; ++i) rowmax = std::max(rowmax, u.at(i, j));
  std::vector<RowCrest> out;
  for (int i = 1; i + 1 < u.nx; ++i) {
    const double fm = u.at(i - 1, j), f0 = u.at(i, j), fp = u.at(i + 1, j);
    if (!(f0 >= fm && f0 > fp)) continue;
    if (f0 < 0.15 * rowmax) continue;  // ignore tail ripples
    const double denom = fm - 2.0 * f0 + fp;
    double off = 0, amp = f0;
    if (std::abs(denom) > 1e-300) {
      off = 0.5 * (fm - fp) / denom;
      if (std::abs(off) <= 1.0)
        amp = f0 - 0.125 * (fm - fp) * (fm - fp) / denom;
      else
        off = 0;
    }
    out.push_back({g.x(i) + off * g.dx, amp});
  }
  std::sort(out.begin(), out.end(),
            [](const RowCrest& a, const RowCrest& b) { return a.amp > b.amp; });
  return out;
}

std::string snap_tag(int k) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "snap%06d", k);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  if (!(dx > 0)) bad_key("dx", "must be positive");
  if (!(dy > 0)) bad_key("dy", "must be positive");
  if (!(dt > 0)) bad_key("dt", "must be positive");
  if (!(t_end > 0)) bad_key("t_end", "must exceed the start time 0");
  if (!(x1 > x0)) bad_key("domain", "needs x1 > x0");
  if (!(y1 > y0)) bad_key("domain", "needs y1 > y0");
  if (sigma == 0.0) bad_key("sigma", "must be nonzero");
  if (time_factor != 0 && time_factor != 1 && time_factor != 2)
    bad_key("time_factor", "must be auto, 1 or 2");
  if (snapshot_every < 1) bad_key("snapshot_every", "must be >= 1");
  if (!(tol > 0)) bad_key("tol", "must be positive");
  if (max_iters < 1) bad_key("max_iters", "must be >= 1");
  if (scenario == ScenarioKind::manufactured)
    bad_key("scenario", "manufactured runs are not configurable from text");
}

GridSpec RunConfig::grid() const {
  auto count = [](double lo, double hi, double step, const char* key) {
    const double n = (hi - lo) / step;
    const double nr = std::round(n);
    if (nr < 1 || std::abs(n - nr) > 1e-8 * std::max(1.0, std::abs(n)))
      bad_key(key, "step does not tile the domain extent");
    return static_cast<int>(nr) + 1;
  };
  GridSpec g;
  g.x0 = x0;
  g.y0 = y0;
  g.t0 = 0.0;
  g.dx = dx;
  g.dy = dy;
  g.dt = dt;
  g.nx = count(x0, x1, dx, "dx");
  g.ny = count(y0, y1, dy, "dy");
  g.nt = count(0.0, t_end, dt, "dt");
  g.validate();
  return g;
}

Scenario RunConfig::make_scenario() const {
  Scenario sc;
  switch (scenario) {
    case ScenarioKind::line_soliton: sc = paper_line_soliton(); break;
    case ScenarioKind::two_soliton: sc = paper_two_soliton(); break;
    case ScenarioKind::lump: sc = paper_lump(); break;
    default: bad_key("scenario", "unsupported kind");
  }
  sc.sigma = sigma;
  return sc;
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) bad_line(line, "expected key=value");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    if (key.empty()) bad_line(line, "empty key");

    if (key == "scenario") {
      if (val == "line_soliton")
        cfg.scenario = ScenarioKind::line_soliton;
      else if (val == "two_soliton")
        cfg.scenario = ScenarioKind::two_soliton;
      else if (val == "lump")
        cfg.scenario = ScenarioKind::lump;
      else
        bad_line(line, "unknown scenario '" + val + "'");
    } else if (key == "scheme") {
      if (val == "preissman")
        cfg.scheme = SchemeKind::preissman;
      else if (val == "reduced45")
        cfg.scheme = SchemeKind::reduced45;
      else
        bad_line(line, "unknown scheme '" + val + "'");
    } else if (key == "dx") {
      cfg.dx = parse_num(val, line, key);
    } else if (key == "dy") {
      cfg.dy = parse_num(val, line, key);
    } else if (key == "dt") {
      cfg.dt = parse_num(val, line, key);
    } else if (key == "t_end") {
      cfg.t_end = parse_num(val, line, key);
    } else if (key == "domain") {
      double v[4];
      int q = 0;
      std::size_t pos = 0;
      while (q < 4) {
        const auto comma = val.find(',', pos);
        const std::string part =
            trim(val.substr(pos, comma == std::string::npos
                                     ? std::string::npos
                                     : comma - pos));
        v[q++] = parse_num(part, line, key);
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      if (q != 4) bad_line(line, "domain needs x0,x1,y0,y1");
      cfg.x0 = v[0];
      cfg.x1 = v[1];
      cfg.y0 = v[2];
      cfg.y1 = v[3];
    } else if (key == "sigma") {
      cfg.sigma = parse_num(val, line, key);
    } else if (key == "time_factor") {
      if (val == "auto")
        cfg.time_factor = 0;
      else if (val == "1")
        cfg.time_factor = 1;
      else if (val == "2")
        cfg.time_factor = 2;
      else
        bad_line(line, "time_factor must be auto, 1 or 2");
    } else if (key == "snapshot_every") {
      cfg.snapshot_every = static_cast<int>(parse_ll(val, line, key));
    } else if (key == "tol") {
      cfg.tol = parse_num(val, line, key);
    } else if (key == "max_iters") {
      cfg.max_iters = static_cast<int>(parse_ll(val, line, key));
    } else if (key == "seed") {
      const long long s = parse_ll(val, line, key);
      if (s < 0) bad_line(line, "seed must be non-negative");
      cfg.seed = static_cast<unsigned long long>(s);
    } else if (key == "out_dir") {
      cfg.out_dir = val;
    } else {
      bad_line(line, "unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

void Manifest::set(const std::string& key, const std::string& value) {
  entries.emplace_back(key, value);
}
void Manifest::set_num(const std::string& key, double value) {
  set(key, fmt17(value));
}
void Manifest::set_int(const std::string& key, long long value) {
  set(key, std::to_string(value));
}
std::string Manifest::get(const std::string& key) const {
  for (auto it = entries.rbegin(); it != entries.rend(); ++it)
    if (it->first == key) return it->second;
  return "";
}
double Manifest::get_num(const std::string& key) const {
  const std::string v = get(key);
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  try {
    return std::stod(v);
  } catch (...) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}
std::string Manifest::text() const {
  std::string out;
  for (const auto& [k, v] : entries) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}
void Manifest::write(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text();
  if (!f) throw std::runtime_error("write failed for " + path);
}

void write_snapshot(const std::string& path, const Plane2D& u,
                    const GridSpec& grid) {
  if (u.nx != grid.nx || u.ny != grid.ny)
    throw std::invalid_argument("write_snapshot: plane/grid shape mismatch");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "x,y,u\n";
  for (int j = 0; j < u.ny; ++j)
    for (int i = 0; i < u.nx; ++i)
      f << fmt17(grid.x(i)) << ',' << fmt17(grid.y(j)) << ','
        << fmt17(u.at(i, j)) << '\n';
  if (!f) throw std::runtime_error("write failed for " + path);
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(f, line) || trim(line) != "x,y,u")
    throw std::runtime_error(path + ": missing x,y,u header");
  Snapshot s;
  int ln = 1;
  while (std::getline(f, line)) {
    ++ln;
    if (trim(line).empty()) continue;
    double x, y, u;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &u) != 3)
      throw std::runtime_error(path + ": malformed row at line " +
                               std::to_string(ln));
    s.x.push_back(x);
    s.y.push_back(y);
    s.u.push_back(u);
  }
  return s;
}

Field march_reduced45(const Scenario& sc, const GridSpec& grid,
                      const EquationParams& params, const SolverOptions& opts) {
  grid.validate();
  params.validate();
  ThreeLevelState st =
      startup(sc, grid, StartupMode::exact_two_planes, params, opts);
  Field out(grid, 1);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      out.at(0, i, j, 0) = st.u_prev.at(i, j);
      out.at(0, i, j, 1) = st.u_curr.at(i, j);
    }
  for (int k = 2; k < grid.nt; ++k) {
    Plane2D band(grid.nx, grid.ny);
    const double tk = grid.t(k);
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        band.at(i, j) = sc.u(grid.x(i), grid.y(j), tk);
    Plane2D next;
    try {
      next = step(st, band, grid.dx, grid.dy, grid.dt, params, opts);
    } catch (const SolveError& e) {
      throw SolveError("march: step to level " + std::to_string(k) + ": " +
                           e.what(),
                       e.residual, e.iterations);
    }
    st.u_prev = std::move(st.u_curr);
    st.u_curr = std::move(next);
    st.k_index = k;
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        out.at(0, i, j, k) = st.u_curr.at(i, j);
  }
  return out;
}

Manifest run(const RunConfig& cfg) {
  cfg.validate();
  const auto t_begin = std::chrono::steady_clock::now();
  Manifest m;
  m.set("version", "1.0.0");
  m.set("scenario", scenario_name(cfg.scenario));
  m.set("scheme",
        cfg.scheme == SchemeKind::preissman ? "preissman" : "reduced45");
  m.set_num("dx", cfg.dx);
  m.set_num("dy", cfg.dy);
  m.set_num("dt", cfg.dt);
  m.set_num("t_end", cfg.t_end);
  m.set("domain", fmt17(cfg.x0) + "," + fmt17(cfg.x1) + "," + fmt17(cfg.y0) +
                      "," + fmt17(cfg.y1));
  m.set_num("sigma", cfg.sigma);
  m.set(
      "time_factor",
      cfg.time_factor == 0 ? std::string("auto") : std::to_string(cfg.time_factor));
  m.set_int("snapshot_every", cfg.snapshot_every);
  m.set_num("tol", cfg.tol);
  m.set_int("max_iters", cfg.max_iters);
  m.set_int("seed", static_cast<long long>(cfg.seed));
  m.set("out_dir", cfg.out_dir);

  // Scalar-form convention adjudication (recorded even when forced).
  const ConventionReport cr = certify_conventions(cfg.sigma);
  m.set_int("oracle_conclusive", cr.conclusive ? 1 : 0);
  m.set_num("oracle_time_factor", cr.selected_time_factor);
  m.set_int("oracle_lump_denominator_squared",
            cr.lump_denominator_squared ? 1 : 0);
  m.set_num("oracle_soliton_order", cr.soliton_order_selected);
  m.set_num("oracle_lump_order", cr.lump_order);
  for (std::size_t L = 0; L < cr.soliton_residual_tf1.size(); ++L) {
    const std::string lv = std::to_string(L);
    m.set_num("oracle_soliton_res_tf1_L" + lv, cr.soliton_residual_tf1[L]);
    m.set_num("oracle_soliton_res_tf2_L" + lv, cr.soliton_residual_tf2[L]);
  }
  for (std::size_t L = 0; L < cr.lump_residual_squared.size(); ++L) {
    const std::string lv = std::to_string(L);
    m.set_num("oracle_lump_res_sq_L" + lv, cr.lump_residual_squared[L]);
    m.set_num("oracle_lump_res_unsq_L" + lv, cr.lump_residual_unsquared[L]);
  }
  int tf = cfg.time_factor;
  if (tf == 0) {
    if (!cr.conclusive)
      throw std::runtime_error("run: convention oracle inconclusive");
    tf = static_cast<int>(cr.selected_time_factor);
  }
  m.set_int("time_factor_used", tf);

  EquationParams p;
  p.sigma = cfg.sigma;
  p.time_factor = tf;
  p.validate();
  const GridSpec g = cfg.grid();
  const Scenario sc = cfg.make_scenario();
  SolverOptions opts;
  opts.tol_residual = cfg.tol;
  opts.max_iters = cfg.max_iters;

  Field u(g, 1);
  if (cfg.scheme == SchemeKind::reduced45) {
    u = march_reduced45(sc, g, p, opts);
  } else {
    const Field ref = sample_lift(sc, g, p);
    const Field z = solve_global(ref, p, opts);
    for (int k = 0; k < g.nt; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          u.at(0, i, j, k) = z.at(comp::u, i, j, k);
  }

  std::filesystem::create_directories(cfg.out_dir);
  std::vector<int> snaps;
  for (int k = 0; k < g.nt; ++k)
    if (k % cfg.snapshot_every == 0 || k == g.nt - 1) snaps.push_back(k);

  const int j_mid = (g.ny - 1) / 2;
  std::vector<double> ts, c1x, c2x, t2s, pkx;
  std::vector<int> crest_counts;
  double mass0 = 0, mass1 = 0;
  TrackResult last_track;
  RowCrest last_c1, last_c2;
  int last_count = 0;

  for (std::size_t si = 0; si < snaps.size(); ++si) {
    const int k = snaps[si];
    const double tk = g.t(k);
    const Plane2D pl = field_plane(u, 0, k);
    char name[32];
    std::snprintf(name, sizeof name, "u_k%06d.csv", k);
    write_snapshot(cfg.out_dir + "/" + name, pl, g);

    const std::string tag = snap_tag(k);
    m.set_num(tag + "_t", tk);
    const double mass = mass_integral(pl, g);
    m.set_num(tag + "_mass", mass);
    if (si == 0) mass0 = mass;
    mass1 = mass;

    // Per-level interior error norms against the scenario model.
    double sumsq = 0, linf = 0;
    for (int j = 1; j + 1 < g.ny; ++j)
      for (int i = 1; i + 1 < g.nx; ++i) {
        const double e = pl.at(i, j) - sc.u(g.x(i), g.y(j), tk);
        sumsq += e * e;
        linf = std::max(linf, std::abs(e));
      }
    m.set_num(tag + "_l2", std::sqrt(sumsq * g.dx * g.dy));
    m.set_num(tag + "_linf", linf);

    ts.push_back(tk);
    if (cfg.scenario == ScenarioKind::line_soliton) {
      last_track = peak_track(pl, g, TrackMode::crest_line);
      m.set_num(tag + "_crest_x", last_track.x);
      m.set_num(tag + "_crest_slope", last_track.slope);
      m.set_num(tag + "_amplitude", last_track.amplitude);
      c1x.push_back(last_track.x);
    } else if (cfg.scenario == ScenarioKind::lump) {
      last_track = peak_track(pl, g, TrackMode::point_peak);
      m.set_num(tag + "_peak_x", last_track.x);
      m.set_num(tag + "_peak_y", last_track.y);
      m.set_num(tag + "_amplitude", last_track.amplitude);
      pkx.push_back(last_track.x);
    } else {  // two_soliton: the two tallest crests of the middle row
      const std::vector<RowCrest> crests = scan_row_crests(pl, g, j_mid);
      last_count = static_cast<int>(std::min<std::size_t>(crests.size(), 2));
      m.set_int(tag + "_crest_count", last_count);
      if (last_count >= 1) {
        last_c1 = crests[0];
        m.set_num(tag + "_crest1_x", crests[0].x);
        m.set_num(tag + "_crest1_amplitude", crests[0].amp);
      }
      if (last_count >= 2) {
        last_c2 = crests[1];
        m.set_num(tag + "_crest2_x", crests[1].x);
        m.set_num(tag + "_crest2_amplitude", crests[1].amp);
        if (tk <= 1.0 + 1e-12) {
          t2s.push_back(tk);
          c1x.push_back(crests[0].x);
          c2x.push_back(crests[1].x);
        }
      }
      crest_counts.push_back(last_count);
    }
  }

  const ErrorNorms en = error_norms(u, sc);
  m.set_num("l2_error", en.l2);
  m.set_num("linf_error", en.linf);
  m.set_num("mass_initial", mass0);
  m.set_num("mass_final", mass1);
  m.set_num("mass_drift_rel",
            std::abs(mass1 - mass0) / std::max(std::abs(mass0), 1e-300));

  if (cfg.scenario == ScenarioKind::line_soliton) {
    m.set_num("final_crest_x", last_track.x);
    m.set_num("final_crest_slope", last_track.slope);
    m.set_num("final_amplitude", last_track.amplitude);
    m.set_num("crest_velocity", fit_line(ts, c1x).second);
  } else if (cfg.scenario == ScenarioKind::lump) {
    m.set_num("final_peak_x", last_track.x);
    m.set_num("final_peak_y", last_track.y);
    m.set_num("final_amplitude", last_track.amplitude);
    m.set_num("peak_velocity", fit_line(ts, pkx).second);
  } else {
    m.set_num("crest1_velocity", fit_line(t2s, c1x).second);
    m.set_num("crest2_velocity", fit_line(t2s, c2x).second);
    m.set_int("final_crest_count", last_count);
    m.set_num("crest1_amplitude_final", last_c1.amp);
    m.set_num("crest2_amplitude_final", last_c2.amp);
    m.set_num("crest1_x_final", last_c1.x);
    m.set_num("crest2_x_final", last_c2.x);
  }

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin)
          .count();
  m.set_num("wall_clock_seconds", secs);
  m.write(cfg.out_dir + "/manifest.txt");
  return m;
}

VerifyResult verify_conservation(const RunConfig& cfg, bool perturb_base) {
  cfg.validate();
  Manifest m;
  bool ok = true;
  m.set("check", "conservation");

  int tf = cfg.time_factor;
  if (tf == 0) {
    const ConventionReport cr = certify_conventions(cfg.sigma);
    if (!cr.conclusive)
      throw std::runtime_error("verify_conservation: oracle inconclusive");
    tf = static_cast<int>(cr.selected_time_factor);
  }
  m.set_int("time_factor_used", tf);
  EquationParams p;
  p.sigma = cfg.sigma;
  p.time_factor = tf;
  p.validate();

  // Fixed small verification grid straddling the soliton crest.
  GridSpec vg;
  vg.x0 = 4.0;
  vg.y0 = -0.75;
  vg.t0 = 0.0;
  vg.dx = 0.5;
  vg.dy = 0.5;
  vg.dt = 0.1;
  vg.nx = 8;
  vg.ny = 4;
  vg.nt = 4;
  Scenario sc = paper_line_soliton();
  sc.sigma = cfg.sigma;
  SolverOptions opts;
  opts.tol_residual = cfg.tol;
  opts.max_iters = cfg.max_iters;

  const Field ref = sample_lift(sc, vg, p);
  Field z = solve_global(ref, p, opts);
  if (perturb_base)
    z.at(comp::u, vg.nx / 2, vg.ny / 2, vg.nt / 2) += 1e-3;
  const Field sr = scheme_residual(z, p);
  const double base_res = field_linf(sr);
  m.set_num("base_scheme_residual", base_res);
  ok = ok && base_res <= 1e-10;

  const Field ref_u = random_polynomial_field(vg, kNumComp, cfg.seed);
  const Field ref_v = random_polynomial_field(vg, kNumComp, cfg.seed + 1);
  const Field tu = solve_tangent(z, ref_u, p, opts);
  const Field tv = solve_tangent(z, ref_v, p, opts);
  const Field d = discrete_msym_residual(tu, tv, p);
  const double dmax = field_linf(d);
  const double scale = field_linf(tu) * field_linf(tv) *
                       (1.0 / vg.dt + 1.0 / vg.dx + 1.0 / vg.dy);
  const double rel = dmax / std::max(scale, 1e-300);
  m.set_num("discrete_msym_max", dmax);
  m.set_num("tangent_scale", scale);
  m.set_num("discrete_msym_rel", rel);
  ok = ok && rel <= 1e-10;

  const double self = field_linf(discrete_msym_residual(tu, tu, p));
  m.set_num("discrete_msym_self", self);
  ok = ok && self == 0.0;

  // Continuous check: difference-quotient tangents of the soliton family
  // (offset and steepness directions), two refinement levels of grid,
  // probe spacing, and quotient step together.
  const LineSolitonParams sp = sc.soliton;
  const double sig = sc.sigma;
  double res_level[2] = {0, 0};
  double self_level0 = 0;
  for (int L = 0; L < 2; ++L) {
    const double h = 0.2 / (1 << L);
    const double eps = 0.01 * h;
    GridSpec cg;
    cg.nx = cg.ny = cg.nt = 7;
    cg.dx = cg.dy = cg.dt = h;
    cg.x0 = sp.x_offset - 3.0 * h;
    cg.y0 = -3.0 * h;
    cg.t0 = 0.0;
    ScalarSampler da = [sp, sig, eps](double x, double y, double t) {
      LineSolitonParams a = sp, b = sp;
      a.x_offset += eps;
      b.x_offset -= eps;
      return (line_soliton_jet(x, y, t, a, sig).phi -
              line_soliton_jet(x, y, t, b, sig).phi) /
             (2.0 * eps);
    };
    ScalarSampler db = [sp, sig, eps](double x, double y, double t) {
      LineSolitonParams a = sp, b = sp;
      a.k += eps;
      b.k -= eps;
      return (line_soliton_jet(x, y, t, a, sig).phi -
              line_soliton_jet(x, y, t, b, sig).phi) /
             (2.0 * eps);
    };
    res_level[L] = continuous_msym_check(sc, da, db, cg, p, h);
    if (L == 0) self_level0 = continuous_msym_check(sc, da, da, cg, p, h);
  }
  const double cont_order = std::log2(res_level[0] / res_level[1]);
  m.set_num("continuous_res_h", res_level[0]);
  m.set_num("continuous_res_h2", res_level[1]);
  m.set_num("continuous_order", cont_order);
  m.set_num("continuous_self", self_level0);
  ok = ok && cont_order >= 1.0 && self_level0 == 0.0;

  m.set_int("passed", ok ? 1 : 0);
  std::filesystem::create_directories(cfg.out_dir);
  m.write(cfg.out_dir + "/conservation.txt");
  return {m, ok};
}

VerifyResult verify_equivalence(const RunConfig& cfg, double band_bias) {
  cfg.validate();
  Manifest m;
  m.set("check", "equivalence");

  int tf = cfg.time_factor;
  if (tf == 0) {
    const ConventionReport cr = certify_conventions(cfg.sigma);
    if (!cr.conclusive)
      throw std::runtime_error("verify_equivalence: oracle inconclusive");
    tf = static_cast<int>(cr.selected_time_factor);
  }
  m.set_int("time_factor_used", tf);
  EquationParams p;
  p.sigma = cfg.sigma;
  p.time_factor = tf;
  p.validate();

  // Small verification grid centered on the scenario's feature.
  Scenario sc = cfg.make_scenario();
  GridSpec vg;
  vg.nx = 12;
  vg.ny = 6;
  vg.nt = 4;
  vg.dt = cfg.dt;
  vg.t0 = 0.0;
  if (cfg.scenario == ScenarioKind::lump) {
    vg.dx = 0.2;
    vg.dy = 0.2;
    vg.x0 = sc.lump.x0 - 1.1;
    vg.y0 = sc.lump.y0 - 0.5;
  } else {
    vg.dx = 0.2;
    vg.dy = 0.1;
    vg.x0 = sc.soliton.x_offset - 1.1;
    vg.y0 = 0.0;
  }

  SolverOptions opts;
  opts.tol_residual = cfg.tol;
  opts.max_iters = cfg.max_iters;

  const Field ref = sample_lift(sc, vg, p);
  const Field z = solve_global(ref, p, opts);

  // Reduced march from the box solution's first two u planes, boundary
  // band from the same reference data the box solve pinned.
  ThreeLevelState st;
  st.u_prev = field_plane(z, comp::u, 0);
  st.u_curr = field_plane(z, comp::u, 1);
  st.k_index = 1;
  double max_diff = 0;
  for (int k = 2; k < vg.nt; ++k) {
    Plane2D band(vg.nx, vg.ny);
    const double tk = vg.t(k);
    for (int j = 0; j < vg.ny; ++j)
      for (int i = 0; i < vg.nx; ++i)
        band.at(i, j) = sc.u(vg.x(i), vg.y(j), tk) + band_bias;
    Plane2D next = step(st, band, vg.dx, vg.dy, vg.dt, p, opts);
    for (int j = 0; j < vg.ny; ++j)
      for (int i = 0; i < vg.nx; ++i)
        max_diff =
            std::max(max_diff, std::abs(next.at(i, j) - z.at(comp::u, i, j, k)));
    st.u_prev = std::move(st.u_curr);
    st.u_curr = std::move(next);
    st.k_index = k;
  }
  m.set_num("equivalence_max_diff", max_diff);
  const double threshold = 1e-8;
  m.set_num("threshold", threshold);
  const bool ok = max_diff <= threshold;
  m.set_int("passed", ok ? 1 : 0);
  std::filesystem::create_directories(cfg.out_dir);
  m.write(cfg.out_dir + "/equivalence.txt");
  return {m, ok};
}

Manifest convergence_study(const RunConfig& cfg, int levels,
                           const USolver& solver) {
  cfg.validate();
  if (levels < 2)
    throw std::invalid_argument("convergence_study: levels must be >= 2");

  int tf = cfg.time_factor;
  if (tf == 0) {
    const ConventionReport cr = certify_conventions(cfg.sigma);
    if (!cr.conclusive)
      throw std::runtime_error("convergence_study: oracle inconclusive");
    tf = static_cast<int>(cr.selected_time_factor);
  }
  EquationParams p;
  p.sigma = cfg.sigma;
  p.time_factor = tf;
  p.validate();

  const Scenario sc = cfg.make_scenario();
  SolverOptions opts;
  opts.tol_residual = cfg.tol;
  opts.max_iters = cfg.max_iters;
  const USolver solve = solver ? solver : USolver(march_reduced45);

  Manifest m;
  m.set("check", "convergence");
  m.set_int("time_factor_used", tf);
  m.set_int("levels", levels);
  std::vector<double> l2(levels), linf(levels);
  for (int L = 0; L < levels; ++L) {
    RunConfig c = cfg;
    const double f = 1 << L;
    c.dx = cfg.dx / f;
    c.dy = cfg.dy / f;
    c.dt = cfg.dt / f;
    const GridSpec g = c.grid();
    const Field u = solve(sc, g, p, opts);
    const ErrorNorms en = error_norms(u, sc);
    l2[L] = en.l2;
    linf[L] = en.linf;
    const std::string lv = std::to_string(L);
    m.set_num("l2_L" + lv, en.l2);
    m.set_num("linf_L" + lv, en.linf);
  }
  for (int L = 0; L + 1 < levels; ++L) {
    const std::string lv = std::to_string(L + 1);
    if (l2[L] > 0 && l2[L + 1] > 0)
      m.set_num("order_l2_L" + lv, convergence_order(l2[L], l2[L + 1]));
    else
      m.set("order_l2_L" + lv, "nan");  // exact-solver sentinel
    if (linf[L] > 0 && linf[L + 1] > 0)
      m.set_num("order_linf_L" + lv, convergence_order(linf[L], linf[L + 1]));
    else
      m.set("order_linf_L" + lv, "nan");
  }
  std::filesystem::create_directories(cfg.out_dir);
  m.write(cfg.out_dir + "/convergence.txt");
  return m;
}

}  // namespace kpbox
