// Command-line driver: single solves, convergence tables and the self-test.
#include "lpscat/log.hpp"
#include "lpscat/pipeline.hpp"
#include "lpscat/selftest.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>

using namespace lpscat;

namespace {

constexpr int kOk = 0, kFailure = 1, kBadConfig = 2, kNoConvergence = 3;

struct CommonArgs {
  std::string config, preset, out, rhs_sign, precond;
  int jobs = 0;
  bool direct = false;
  int N = 0;
  double h = 0.0;
  bool quiet = false;
};

void add_common(CLI::App *cmd, CommonArgs &a) {
  cmd->add_option("--config", a.config, "INI run configuration");
  cmd->add_option("--preset", a.preset, "built-in case example1..example8");
  cmd->add_option("--jobs", a.jobs, "parallelism cap");
  cmd->add_option("--out", a.out, "output directory");
  cmd->add_option("--rhs-sign", a.rhs_sign, "sign of the Dirichlet data, +1 or -1");
  cmd->add_flag("--direct", a.direct, "force the direct sparse solver");
  cmd->add_option("--N", a.N, "number of alpha intervals");
  cmd->add_option("--mesh-size", a.h, "target mesh size h");
  cmd->add_option("--precond", a.precond, "ilu0, ilut, shared_lu or none");
  cmd->add_flag("--quiet", a.quiet, "only warnings and errors");
}

RunConfig resolve(const CommonArgs &a) {
  if (a.config.empty() == a.preset.empty())
    throw ConfigError("give exactly one of --config or --preset");
  RunConfig c = a.config.empty() ? preset(a.preset) : load_config(a.config);
  if (a.jobs > 0)
    c.jobs = a.jobs;
  if (!a.out.empty())
    c.out_dir = a.out;
  if (!a.rhs_sign.empty()) {
    if (a.rhs_sign == "+1" || a.rhs_sign == "1")
      c.rhs_sign = 1;
    else if (a.rhs_sign == "-1")
      c.rhs_sign = -1;
    else
      throw ConfigError("--rhs-sign must be +1 or -1");
  }
  if (a.direct)
    c.method = "direct";
  if (!a.precond.empty())
    c.ilu = a.precond;
  if (a.N > 0)
    c.N = a.N;
  if (a.h > 0.0) {
    c.h = a.h;
    c.n1 = c.n2 = 0;
  }
  validate_config(c);
  if (a.quiet)
    log::set_level(log::Level::warn);
  return c;
}

int cmd_solve(const RunConfig &cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  const auto r = run_case(cfg, {.keep_field = cfg.write_vtk});
  const auto dir = std::filesystem::path(cfg.out_dir);
  {
    std::ofstream os(dir / "summary.csv");
    os << summary_csv_header() << '\n' << summary_csv_row(r) << '\n';
  }
  if (r.field)
    write_field_vtk(*r.field, (dir / ("fields_" + cfg.name + ".vtk")).string());
  {
    std::ofstream os(dir / "run.ini");
    os << serialize_config(cfg);
  }
  std::cout << std::setprecision(4) << cfg.name << ": N=" << r.N << " h=" << r.h << " relative_error=" << r.rel_error
            << " (physical " << r.rel_error_physical << ") iterations=" << r.report.iterations
            << " residual=" << r.report.residual << " time=" << r.total_seconds << "s sigma=" << r.sigma
            << (r.ok ? "" : " NOT CONVERGED") << '\n';
  return r.ok ? kOk : kNoConvergence;
}

int cmd_table(const RunConfig &base) {
  if (base.table_N.empty() || base.table_h.empty())
    throw ConfigError("table grid is empty");
  std::filesystem::create_directories(base.out_dir);
  const auto dir = std::filesystem::path(base.out_dir);
  std::ofstream longf(dir / ("table_" + base.name + ".csv"));
  longf << "N,h,relative_error,iterations,wall_seconds,status\n";
  std::map<std::pair<double, int>, RunResult> cells;
  bool all_ok = true;
  for (double h : base.table_h)
    for (int N : base.table_N) {
      RunConfig c = base;
      c.N = N;
      c.h = h;
      c.n1 = c.n2 = 0;
      RunResult r;
      std::string status = "ok";
      try {
        r = run_case(c);
        if (!r.ok)
          status = "not_converged";
      } catch (const std::exception &e) {
        status = std::string("failed: ") + e.what();
        log::error(status);
      }
      if (status != "ok")
        all_ok = false;
      longf << N << ',' << h << ',' << std::setprecision(6) << r.rel_error << ',' << r.report.iterations << ','
            << r.total_seconds << ',' << '"' << status << '"' << '\n';
      longf.flush();
      r.ok = status == "ok";
      cells[{h, N}] = r;
    }
  // One row per h, one column per N.
  std::ofstream grid(dir / ("table_" + base.name + "_grid.csv"));
  grid << "h";
  for (int N : base.table_N)
    grid << ",N=" << N;
  for (int N : base.table_N)
    grid << ",seconds_N=" << N;
  grid << '\n';
  for (double h : base.table_h) {
    grid << h;
    for (int N : base.table_N) {
      const auto &r = cells[{h, N}];
      grid << ',';
      if (r.ok)
        grid << std::scientific << std::setprecision(2) << r.rel_error << std::defaultfloat;
      else
        grid << "NA";
    }
    for (int N : base.table_N)
      grid << ',' << std::setprecision(3) << cells[{h, N}].total_seconds;
    grid << '\n';
  }
  std::cout << "wrote " << (dir / ("table_" + base.name + ".csv")).string() << '\n';
  return all_ok ? kOk : kNoConvergence;
}

int cmd_selftest(std::uint64_t seed, bool flip) {
  const auto rep = run_selftest({seed, flip});
  for (const auto &r : rep.results)
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << '\n';
  std::cout << "adopted sigma = " << rep.sigma << ", rhs_sign adjudication = " << rep.rhs_sign << '\n';
  return rep.all_pass() ? kOk : kFailure;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Floquet-Bloch FEM for scattering from a locally perturbed periodic surface"};
  app.require_subcommand(1);
  CommonArgs solve_args, table_args;
  auto *solve = app.add_subcommand("solve", "solve one configuration");
  add_common(solve, solve_args);
  auto *table = app.add_subcommand("table", "run an (N, h) grid and write table CSVs");
  add_common(table, table_args);
  std::string n_list, h_list;
  table->add_option("--N-list", n_list, "comma separated N values");
  table->add_option("--h-list", h_list, "comma separated h values");
  auto *self = app.add_subcommand("selftest", "run the property suite");
  std::uint64_t seed = 1;
  bool flip = false;
  self->add_option("--seed", seed, "random seed");
  self->add_flag("--flip-sigma", flip, "negative control: use the rejected mode sign");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadConfig;
  }
  try {
    if (solve->parsed())
      return cmd_solve(resolve(solve_args));
    if (table->parsed()) {
      RunConfig c = resolve(table_args);
      if (!n_list.empty() || !h_list.empty()) {
        IniData ini = parse_ini("[case]\ngeometry = x\n[table]\n" + (n_list.empty() ? "" : "N = " + n_list + "\n") +
                                (h_list.empty() ? "" : "h = " + h_list + "\n"));
        const RunConfig t = config_from_ini(ini);
        if (!n_list.empty())
          c.table_N = t.table_N;
        if (!h_list.empty())
          c.table_h = t.table_h;
      }
      return cmd_table(c);
    }
    if (self->parsed())
      return cmd_selftest(seed, flip);
  } catch (const ConfigError &e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kBadConfig;
  } catch (const GeometryError &e) {
    std::cerr << "geometry error: " << e.what() << '\n';
    return kBadConfig;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
