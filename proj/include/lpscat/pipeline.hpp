#pragma once

#include "lpscat/config.hpp"
#include "lpscat/postprocess.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lpscat {

struct RunResult {
  std::string name;
  int N = 0;
  double h_target = 0.0;
  double h = 0.0;
  int n1 = 0, n2 = 0;
  int Mt = 0;
  std::size_t unknowns = 0;
  int sigma = -1;
  double rel_error = 0.0;          // transformed cell
  double rel_error_physical = 0.0; // Jacobian-weighted, physical cell
  double total_field_ratio = 0.0;  // ||u_h + u^i o Phi_p|| / ||u^i o Phi_p||
  SolverReport report;
  double assembly_seconds = 0.0;
  double total_seconds = 0.0;
  bool ok = false;
  std::string failure;
  std::optional<SolutionField> field;
  std::optional<BlockSolution> solution;
};

struct RunHooks {
  bool keep_field = false;
  bool keep_solution = false;
};

// Resolves the configured mode sign; "auto" runs the lattice-sum comparison.
int resolve_sigma(const RunConfig &cfg, SigmaAdjudication *details = nullptr);

std::shared_ptr<CellMesh> mesh_from_config(const RunConfig &cfg, const Geometry &geo);

// Full pipeline: geometry, mesh, assembly, solve, error against the exact
// transformed scattered field rhs_sign * u^i o Phi_p.
RunResult run_case(const RunConfig &cfg, const RunHooks &hooks = {});

std::string summary_csv_header();
std::string summary_csv_row(const RunResult &r);

} // namespace lpscat
