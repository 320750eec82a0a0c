#include "lpscat/pipeline.hpp"
#include "lpscat/log.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

namespace lpscat {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

} // namespace

int resolve_sigma(const RunConfig &cfg, SigmaAdjudication *details) {
  if (cfg.sigma == "-1")
    return -1;
  if (cfg.sigma == "+1" || cfg.sigma == "1")
    return 1;
  static std::mutex m;
  static std::map<std::tuple<double, double, double, double>, SigmaAdjudication> cache;
  const auto key = std::make_tuple(cfg.k, cfg.period, cfg.source.x1, cfg.source.x2);
  std::lock_guard lock(m);
  auto it = cache.find(key);
  if (it == cache.end()) {
    IncidentSource src{cfg.source, cfg.k};
    const double lo = cfg.source.x2 + 0.25, hi = cfg.source.x2 + 2.0;
    const auto adj = adjudicate_sigma(src, cfg.period, lo, hi, cfg.seed);
    std::ostringstream os;
    os << "sigma adjudication: series vs lattice sum discrepancy " << adj.discrepancy_minus << " (sigma=-1), "
       << adj.discrepancy_plus << " (sigma=+1); adopted sigma = " << adj.sigma;
    log::info(os.str());
    it = cache.emplace(key, adj).first;
  }
  if (details)
    *details = it->second;
  return it->second.sigma;
}

std::shared_ptr<CellMesh> mesh_from_config(const RunConfig &cfg, const Geometry &geo) {
  if (cfg.n1 > 0 && cfg.n2 > 0)
    return std::make_shared<CellMesh>(generate_cell_mesh(geo, cfg.n1, cfg.n2));
  return std::make_shared<CellMesh>(mesh_for_target_h(geo, cfg.h));
}

RunResult run_case(const RunConfig &cfg, const RunHooks &hooks) {
  const auto t0 = Clock::now();
  RunResult r;
  r.name = cfg.name;
  r.N = cfg.N;
  r.h_target = cfg.h;
  validate_config(cfg);
  const Geometry geo = geometry_from_config(cfg);
  if (!(cfg.source.x2 < geo.min_zeta_p()))
    throw ConfigError("source must lie below both surfaces");
  r.sigma = resolve_sigma(cfg);
  const WaveParams params{cfg.k, cfg.period, r.sigma};
  const IncidentSource src{cfg.source, cfg.k};
  auto mesh = mesh_from_config(cfg, geo);
  r.h = mesh->h;
  r.n1 = mesh->n1;
  r.n2 = mesh->n2;
  r.Mt = mesh->M_total;
  const auto grid = make_grid(cfg.N, cfg.period, cfg.alpha_offset);

  AssemblyOptions ao;
  ao.quad_order = cfg.quad_order;
  ao.M_dtn = cfg.m_dtn;
  ao.jobs = cfg.jobs;
  ao.rhs.sign = cfg.rhs_sign;
  ao.rhs.q_alpha = cfg.q_alpha;
  ao.rhs.mode = cfg.rhs_mode == "literal" ? RhsMode::literal : RhsMode::corrected;
  const auto ta = Clock::now();
  const BlockSystem sys = build_block_system(grid, mesh, geo, src, params, ao);
  r.assembly_seconds = since(ta);
  r.unknowns = sys.size();
  {
    std::ostringstream os;
    os << cfg.name << ": N = " << cfg.N << ", h = " << mesh->h << " (" << mesh->n1 << " x " << mesh->n2
       << "), unknowns = " << sys.size() << ", assembly " << std::setprecision(3) << r.assembly_seconds << " s";
    log::info(os.str());
  }
  auto sol = solve_block_system(sys, solver_options_from_config(cfg));
  r.report = sol.report;
  r.ok = sol.report.converged;
  if (!r.ok)
    r.failure = "solver did not converge";

  const auto field = reconstruct_field(sys, sol.W);
  const auto q = reference_quadrature(4);
  const double sign = cfg.rhs_sign;
  auto ui_phi = [&](Point2 x) { return incident_field(src, phi_p(geo, x)); };
  const auto e = l2_error(field, [&](Point2 x) { return sign * ui_phi(x); }, q);
  r.rel_error = e.relative();
  const auto ep = l2_error(
      field, [&](Point2 x) { return sign * ui_phi(x); }, q, [&](Point2 x) { return coefficients(geo, x).c; });
  r.rel_error_physical = ep.relative();
  const auto et = l2_error(field, [&](Point2 x) { return -ui_phi(x); }, q);
  r.total_field_ratio = et.relative();
  r.total_seconds = since(t0);
  {
    std::ostringstream os;
    os << cfg.name << ": relative L2 error " << std::setprecision(4) << r.rel_error << ", iterations "
       << r.report.iterations << ", preconditioned residual " << r.report.residual << ", solve "
       << r.report.seconds << " s";
    log::info(os.str());
  }
  if (hooks.keep_field)
    r.field = field;
  if (hooks.keep_solution)
    r.solution = std::move(sol);
  return r;
}

std::string summary_csv_header() {
  return "name,N,h,relative_error,iterations,wall_seconds,h_target,n1,n2,unknowns,relative_error_physical,"
         "preconditioned_residual,true_residual,converged,sigma,assembly_seconds,solve_seconds";
}

std::string summary_csv_row(const RunResult &r) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << r.name << ',' << r.N << ',' << r.h << ',' << r.rel_error << ',' << r.report.iterations << ','
     << r.total_seconds << ',' << r.h_target << ',' << r.n1 << ',' << r.n2 << ',' << r.unknowns << ','
     << r.rel_error_physical << ',' << r.report.residual << ',' << r.report.true_residual << ','
     << (r.ok ? 1 : 0) << ',' << r.sigma << ',' << r.assembly_seconds << ',' << r.report.seconds;
  return os.str();
}

} // namespace lpscat
