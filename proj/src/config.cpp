#include "lpscat/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace lpscat {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string &key, const std::string &v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (trim(v.substr(used)).empty())
      return d;
  } catch (const std::exception &) {
  }
  throw ConfigError("invalid number for '" + key + "': '" + v + "'");
}

long to_long(const std::string &key, const std::string &v) {
  try {
    std::size_t used = 0;
    const long d = std::stol(v, &used);
    if (trim(v.substr(used)).empty())
      return d;
  } catch (const std::exception &) {
  }
  throw ConfigError("invalid integer for '" + key + "': '" + v + "'");
}

std::vector<std::string> split_list(const std::string &v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty())
      out.push_back(trim(item));
  return out;
}

bool to_bool(const std::string &key, const std::string &v) {
  std::string s = v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes")
    return true;
  if (s == "false" || s == "0" || s == "no")
    return false;
  throw ConfigError("invalid boolean for '" + key + "': '" + v + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <class T> std::string join(const std::vector<T> &v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i)
      os << ", ";
    if constexpr (std::is_floating_point_v<T>)
      os << fmt(v[i]);
    else
      os << v[i];
  }
  return os.str();
}

} // namespace

IniData parse_ini(const std::string &text) {
  IniData out;
  std::string section;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty())
      continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      out[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": key outside of a section");
    out[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

RunConfig config_from_ini(const IniData &ini) {
  static const std::map<std::string, std::set<std::string>> known = {
      {"case",
       {"name", "geometry", "fourier_a0", "fourier_a", "fourier_b", "bump", "bump_amplitude", "k", "H", "period",
        "source", "sigma"}},
      {"discretization", {"N", "h", "n1", "n2", "alpha_offset", "quad_order", "q_alpha", "m_dtn", "rhs_mode"}},
      {"solver",
       {"method", "ilu", "ilu_precision", "tol", "restart", "maxiter", "direct_threshold", "memory_gb", "lu_groups", "lu_memory_gb"}},
      {"output", {"rhs_sign", "dir", "seed", "jobs", "write_vtk"}},
      {"table", {"N", "h"}},
  };
  for (const auto &[sec, kv] : ini) {
    const auto it = known.find(sec);
    if (it == known.end())
      throw ConfigError("unknown section [" + sec + "]");
    for (const auto &[k, v] : kv)
      if (!it->second.count(k))
        throw ConfigError("unknown key '" + k + "' in [" + sec + "]");
  }
  auto get = [&](const std::string &sec, const std::string &key) -> const std::string * {
    const auto s = ini.find(sec);
    if (s == ini.end())
      return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  };
  RunConfig c;
  const auto *geo = get("case", "geometry");
  if (!geo || geo->empty())
    throw ConfigError("missing required key 'geometry' in [case]");
  c.geometry = *geo;
  if (auto v = get("case", "name"))
    c.name = *v;
  if (auto v = get("case", "fourier_a0"))
    c.fourier_a0 = to_double("fourier_a0", *v);
  if (auto v = get("case", "fourier_a"))
    for (auto &s : split_list(*v))
      c.fourier_a.push_back(to_double("fourier_a", s));
  if (auto v = get("case", "fourier_b"))
    for (auto &s : split_list(*v))
      c.fourier_b.push_back(to_double("fourier_b", s));
  if (auto v = get("case", "bump"))
    c.bump = *v;
  if (auto v = get("case", "bump_amplitude"))
    c.bump_amplitude = to_double("bump_amplitude", *v);
  if (auto v = get("case", "k"))
    c.k = to_double("k", *v);
  if (auto v = get("case", "H"))
    c.H = to_double("H", *v);
  if (auto v = get("case", "period"))
    c.period = to_double("period", *v);
  if (auto v = get("case", "source")) {
    const auto parts = split_list(*v);
    if (parts.size() != 2)
      throw ConfigError("source must be 'y1, y2'");
    c.source = {to_double("source", parts[0]), to_double("source", parts[1])};
  }
  if (auto v = get("case", "sigma"))
    c.sigma = *v;
  if (auto v = get("discretization", "N"))
    c.N = static_cast<int>(to_long("N", *v));
  if (auto v = get("discretization", "h"))
    c.h = to_double("h", *v);
  if (auto v = get("discretization", "n1"))
    c.n1 = static_cast<int>(to_long("n1", *v));
  if (auto v = get("discretization", "n2"))
    c.n2 = static_cast<int>(to_long("n2", *v));
  if (auto v = get("discretization", "alpha_offset"))
    c.alpha_offset = to_double("alpha_offset", *v);
  if (auto v = get("discretization", "quad_order"))
    c.quad_order = static_cast<int>(to_long("quad_order", *v));
  if (auto v = get("discretization", "q_alpha"))
    c.q_alpha = static_cast<int>(to_long("q_alpha", *v));
  if (auto v = get("discretization", "m_dtn"))
    c.m_dtn = static_cast<int>(to_long("m_dtn", *v));
  if (auto v = get("discretization", "rhs_mode"))
    c.rhs_mode = *v;
  if (auto v = get("solver", "method"))
    c.method = *v;
  if (auto v = get("solver", "ilu"))
    c.ilu = *v;
  if (auto v = get("solver", "ilu_precision"))
    c.ilu_precision = *v;
  if (auto v = get("solver", "tol"))
    c.tol = to_double("tol", *v);
  if (auto v = get("solver", "restart"))
    c.restart = static_cast<int>(to_long("restart", *v));
  if (auto v = get("solver", "maxiter"))
    c.maxiter = static_cast<int>(to_long("maxiter", *v));
  if (auto v = get("solver", "direct_threshold"))
    c.direct_threshold = static_cast<int>(to_long("direct_threshold", *v));
  if (auto v = get("solver", "memory_gb"))
    c.memory_gb = to_double("memory_gb", *v);
  if (auto v = get("solver", "lu_groups"))
    c.lu_groups = static_cast<int>(to_long("lu_groups", *v));
  if (auto v = get("solver", "lu_memory_gb"))
    c.lu_memory_gb = to_double("lu_memory_gb", *v);
  if (auto v = get("output", "rhs_sign"))
    c.rhs_sign = static_cast<int>(to_long("rhs_sign", *v));
  if (auto v = get("output", "dir"))
    c.out_dir = *v;
  if (auto v = get("output", "seed"))
    c.seed = static_cast<std::uint64_t>(to_long("seed", *v));
  if (auto v = get("output", "jobs"))
    c.jobs = static_cast<int>(to_long("jobs", *v));
  if (auto v = get("output", "write_vtk"))
    c.write_vtk = to_bool("write_vtk", *v);
  if (auto v = get("table", "N")) {
    c.table_N.clear();
    for (auto &s : split_list(*v))
      c.table_N.push_back(static_cast<int>(to_long("table N", s)));
  }
  if (auto v = get("table", "h")) {
    c.table_h.clear();
    for (auto &s : split_list(*v))
      c.table_h.push_back(to_double("table h", s));
  }
  validate_config(c);
  return c;
}

RunConfig load_config(const std::string &path) {
  std::ifstream is(path);
  if (!is)
    throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return config_from_ini(parse_ini(ss.str()));
}

std::string serialize_config(const RunConfig &c) {
  std::ostringstream os;
  os << "[case]\n";
  os << "name = " << c.name << '\n';
  os << "geometry = " << c.geometry << '\n';
  if (c.geometry == "fourier") {
    os << "fourier_a0 = " << fmt(c.fourier_a0) << '\n';
    os << "fourier_a = " << join(c.fourier_a) << '\n';
    os << "fourier_b = " << join(c.fourier_b) << '\n';
    os << "bump = " << c.bump << '\n';
  }
  os << "bump_amplitude = " << fmt(c.bump_amplitude) << '\n';
  os << "k = " << fmt(c.k) << '\n';
  os << "H = " << fmt(c.H) << '\n';
  os << "period = " << fmt(c.period) << '\n';
  os << "source = " << fmt(c.source.x1) << ", " << fmt(c.source.x2) << '\n';
  os << "sigma = " << c.sigma << '\n';
  os << "\n[discretization]\n";
  os << "N = " << c.N << '\n';
  os << "h = " << fmt(c.h) << '\n';
  os << "n1 = " << c.n1 << '\n';
  os << "n2 = " << c.n2 << '\n';
  os << "alpha_offset = " << fmt(c.alpha_offset) << '\n';
  os << "quad_order = " << c.quad_order << '\n';
  os << "q_alpha = " << c.q_alpha << '\n';
  os << "m_dtn = " << c.m_dtn << '\n';
  os << "rhs_mode = " << c.rhs_mode << '\n';
  os << "\n[solver]\n";
  os << "method = " << c.method << '\n';
  os << "ilu = " << c.ilu << '\n';
  os << "ilu_precision = " << c.ilu_precision << '\n';
  os << "tol = " << fmt(c.tol) << '\n';
  os << "restart = " << c.restart << '\n';
  os << "maxiter = " << c.maxiter << '\n';
  os << "direct_threshold = " << c.direct_threshold << '\n';
  os << "memory_gb = " << fmt(c.memory_gb) << '\n';
  os << "lu_groups = " << c.lu_groups << '\n';
  os << "lu_memory_gb = " << fmt(c.lu_memory_gb) << '\n';
  os << "\n[output]\n";
  os << "rhs_sign = " << c.rhs_sign << '\n';
  os << "dir = " << c.out_dir << '\n';
  os << "seed = " << c.seed << '\n';
  os << "jobs = " << c.jobs << '\n';
  os << "write_vtk = " << (c.write_vtk ? "true" : "false") << '\n';
  os << "\n[table]\n";
  os << "N = " << join(c.table_N) << '\n';
  os << "h = " << join(c.table_h) << '\n';
  return os.str();
}

void validate_config(const RunConfig &c) {
  if (c.geometry.empty())
    throw ConfigError("geometry must be set");
  if (!(c.k > 0.0) || !(c.H > 0.0) || !(c.period > 0.0))
    throw ConfigError("k, H and period must be positive");
  if (!(c.source.x2 > 0.0))
    throw ConfigError("source must lie in the upper half-plane (y2 > 0)");
  if (c.N < 1)
    throw ConfigError("N must be >= 1");
  if (!(c.n1 > 0 && c.n2 > 0) && !(c.h > 0.0))
    throw ConfigError("either h > 0 or both n1, n2 must be given");
  if (c.rhs_sign != 1 && c.rhs_sign != -1)
    throw ConfigError("rhs_sign must be +1 or -1");
  if (c.sigma != "auto" && c.sigma != "-1" && c.sigma != "+1" && c.sigma != "1")
    throw ConfigError("sigma must be auto, -1 or +1");
  if (c.rhs_mode != "corrected" && c.rhs_mode != "literal")
    throw ConfigError("rhs_mode must be corrected or literal");
  if (c.method != "gmres" && c.method != "direct")
    throw ConfigError("method must be gmres or direct");
  if (c.ilu != "ilu0" && c.ilu != "ilut" && c.ilu != "shared_lu" && c.ilu != "none")
    throw ConfigError("ilu must be ilu0, ilut, shared_lu or none");
  if (!(c.lu_memory_gb > 0.0))
    throw ConfigError("lu_memory_gb must be positive");
  if (c.lu_groups < 0)
    throw ConfigError("lu_groups must be >= 0");
  if (c.ilu_precision != "double" && c.ilu_precision != "single")
    throw ConfigError("ilu_precision must be double or single");
  if (!(c.tol > 0.0) || c.restart < 1 || c.maxiter < 1)
    throw ConfigError("tol, restart and maxiter must be positive");
  if (c.quad_order != 2 && c.quad_order != 4 && c.quad_order != 6)
    throw ConfigError("quad_order must be 2, 4 or 6");
  if (c.q_alpha != 4 && c.q_alpha != 8 && c.q_alpha != 16 && c.q_alpha != 32)
    throw ConfigError("q_alpha must be 4, 8, 16 or 32");
  if (c.jobs < 1)
    throw ConfigError("jobs must be >= 1");
}

std::vector<std::string> preset_names() {
  return {"example1", "example2", "example3", "example4", "example5", "example6", "example7", "example8"};
}

RunConfig preset(const std::string &name) {
  static const char *surfaces[] = {"f1+g1", "f1+g2", "f2+g1", "f2+g2"};
  const auto names = preset_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw ConfigError("unknown preset '" + name + "'");
  const int idx = static_cast<int>(it - names.begin());
  RunConfig c;
  c.name = name;
  c.geometry = surfaces[idx / 2];
  if (idx % 2 == 0) {
    c.source = {0.5, 0.4};
    c.k = 1.0;
  } else {
    c.source = {-2.0, 0.2};
    c.k = 10.0;
  }
  c.H = 4.0;
  c.period = 2.0 * pi;
  return c;
}

Geometry geometry_from_config(const RunConfig &c) {
  if (c.geometry == "fourier") {
    auto s = fourier_surface(c.period, c.fourier_a0, c.fourier_a, c.fourier_b);
    return Geometry(std::move(s), bump_by_name(c.bump, c.bump_amplitude), c.H);
  }
  if (std::abs(c.period - 2.0 * pi) > 1e-12)
    throw ConfigError("built-in surfaces have period 2 pi");
  const auto plus = c.geometry.find('+');
  const std::string sname = c.geometry.substr(0, plus);
  const std::string bname = plus == std::string::npos ? "none" : c.geometry.substr(plus + 1);
  Geometry base = make_geometry(sname, c.H);
  return Geometry(base.surface(), bump_by_name(bname, c.bump_amplitude), c.H);
}

SolverOptions solver_options_from_config(const RunConfig &c) {
  SolverOptions o;
  o.method = c.method == "direct" ? SolverMethod::direct : SolverMethod::gmres;
  o.ilu = c.ilu == "ilut"        ? IluKind::ilut
          : c.ilu == "shared_lu" ? IluKind::shared_lu
          : c.ilu == "none"      ? IluKind::none
                                 : IluKind::ilu0;
  o.lu_groups = c.lu_groups;
  o.lu_budget_gb = c.lu_memory_gb;
  o.precision = c.ilu_precision == "single" ? IluPrecision::single_precision : IluPrecision::double_precision;
  o.tol = c.tol;
  o.restart = c.restart;
  o.maxiter = c.maxiter;
  o.direct_threshold = static_cast<std::size_t>(c.direct_threshold);
  o.memory_budget_gb = c.memory_gb;
  o.jobs = c.jobs;
  return o;
}

} // namespace lpscat
