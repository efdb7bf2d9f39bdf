// Batch CLI: scenario runs, conservation/equivalence verification, and
// convergence studies. Exit codes: 0 success / thresholds met, 1 threshold
// breached, 2 error.
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "kpbox/io.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read config file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multisymplectic box-scheme toolkit for the KP equation"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int levels = 3;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", config_path, "key=value config file");
    s->add_option("--out", out_dir, "output directory (overrides config)");
  };
  CLI::App* s_run = app.add_subcommand(
      "run", "march the configured scenario, writing snapshots and a manifest");
  add_common(s_run);
  CLI::App* s_cons = app.add_subcommand(
      "verify-conservation",
      "check the discrete and continuous conservation laws on a small grid");
  add_common(s_cons);
  CLI::App* s_eq = app.add_subcommand(
      "verify-equivalence",
      "check the reduced scheme against the box scheme on a small grid");
  add_common(s_eq);
  CLI::App* s_conv = app.add_subcommand(
      "convergence", "run the scenario at successive refinements");
  add_common(s_conv);
  s_conv->add_option("--levels", levels, "refinement levels (>= 2)");

  CLI11_PARSE(app, argc, argv);

  try {
    kpbox::RunConfig cfg;
    if (!config_path.empty()) cfg = kpbox::parse_config(read_file(config_path));
    if (!out_dir.empty()) cfg.out_dir = out_dir;

    if (s_run->parsed()) {
      const kpbox::Manifest m = kpbox::run(cfg);
      std::cout << m.text();
      return 0;
    }
    if (s_cons->parsed()) {
      const kpbox::VerifyResult r = kpbox::verify_conservation(cfg);
      std::cout << r.manifest.text();
      return r.ok ? 0 : 1;
    }
    if (s_eq->parsed()) {
      const kpbox::VerifyResult r = kpbox::verify_equivalence(cfg);
      std::cout << r.manifest.text();
      return r.ok ? 0 : 1;
    }
    const kpbox::Manifest m = kpbox::convergence_study(cfg, levels);
    std::cout << m.text();
    return 0;
  } catch (const kpbox::SolveError& e) {
    std::cerr << "solver failure: " << e.what() << " (residual " << e.residual
              << " after " << e.iterations << " iterations)\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
