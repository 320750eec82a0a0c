#pragma once

#include "lpscat/assembly.hpp"
#include "lpscat/solver.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lpscat {

struct RunConfig {
  // [case]
  std::string geometry;     // "f1+g1", ..., or "fourier"
  double fourier_a0 = 1.0;  // used when geometry = fourier
  std::vector<double> fourier_a, fourier_b;
  std::string bump = "none"; // bump family for fourier surfaces
  double bump_amplitude = 1.0;
  double k = 1.0;
  double H = 4.0;
  double period = 2.0 * pi;
  Point2 source{0.5, 0.4};
  std::string sigma = "auto"; // auto, -1, +1

  // [discretization]
  int N = 20;
  double h = 0.16;
  int n1 = 0, n2 = 0; // override h when both positive
  double alpha_offset = 0.0;
  int quad_order = 4;
  int q_alpha = 8;
  int m_dtn = 0;
  std::string rhs_mode = "corrected";

  // [solver]
  std::string method = "gmres";
  std::string ilu = "shared_lu";
  std::string ilu_precision = "double";
  double tol = 1e-6;
  int restart = 80;
  int maxiter = 2000;
  int direct_threshold = 20000;
  double memory_gb = 3.0;
  int lu_groups = 0;
  double lu_memory_gb = 1.5;

  // [output]
  int rhs_sign = -1;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int jobs = 1;
  bool write_vtk = true;

  // [table]
  std::vector<int> table_N{20, 40, 80};
  std::vector<double> table_h{0.16, 0.08, 0.04};
  std::string name = "run";
};

using IniData = std::map<std::string, std::map<std::string, std::string>>;

IniData parse_ini(const std::string &text);
// Throws ConfigError on unknown keys, malformed values, or missing geometry.
RunConfig config_from_ini(const IniData &ini);
RunConfig load_config(const std::string &path);
std::string serialize_config(const RunConfig &cfg);
void validate_config(const RunConfig &cfg);

// example1..example8 as captioned in the experiments.
RunConfig preset(const std::string &name);
std::vector<std::string> preset_names();

Geometry geometry_from_config(const RunConfig &cfg);
SolverOptions solver_options_from_config(const RunConfig &cfg);

} // namespace lpscat
