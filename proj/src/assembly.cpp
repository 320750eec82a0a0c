#include "lpscat/assembly.hpp"
#include "lpscat/log.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace lpscat {

namespace {

struct ElementGeometry {
  double area;
  double gx[3], gy[3]; // gradients of barycentric coordinates
};

ElementGeometry element_geometry(const std::array<Point2, 3> &p) {
  const double ax = p[1].x1 - p[0].x1, ay = p[1].x2 - p[0].x2;
  const double bx = p[2].x1 - p[0].x1, by = p[2].x2 - p[0].x2;
  const double det = ax * by - bx * ay;
  ElementGeometry e;
  e.area = 0.5 * det;
  e.gx[1] = by / det;
  e.gy[1] = -bx / det;
  e.gx[2] = -ay / det;
  e.gy[2] = ax / det;
  e.gx[0] = -e.gx[1] - e.gx[2];
  e.gy[0] = -e.gy[1] - e.gy[2];
  return e;
}

Point2 map_point(const std::array<Point2, 3> &p, double s, double t) {
  const double l0 = 1.0 - s - t;
  return {l0 * p[0].x1 + s * p[1].x1 + t * p[2].x1, l0 * p[0].x2 + s * p[1].x2 + t * p[2].x2};
}

std::array<double, 3> bary(double s, double t) { return {1.0 - s - t, s, t}; }

// Gauss-Legendre nodes on [-1, 1].
std::vector<std::pair<double, double>> gauss_rule(int q) {
  std::vector<std::pair<double, double>> out;
  auto fill = [&](const auto &x, const auto &w) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      out.emplace_back(x[i], w[i]);
      if (x[i] != 0.0)
        out.emplace_back(-x[i], w[i]);
    }
  };
  using boost::math::quadrature::gauss;
  switch (q) {
  case 4:
    fill(gauss<double, 4>::abscissa(), gauss<double, 4>::weights());
    break;
  case 8:
    fill(gauss<double, 8>::abscissa(), gauss<double, 8>::weights());
    break;
  case 16:
    fill(gauss<double, 16>::abscissa(), gauss<double, 16>::weights());
    break;
  case 32:
    fill(gauss<double, 32>::abscissa(), gauss<double, 32>::weights());
    break;
  default:
    throw DomainError("q_alpha must be one of 4, 8, 16, 32");
  }
  return out;
}

} // namespace

ElementMatrices assemble_element_matrices(const CellMesh &mesh, const QuadratureRule &q) {
  const int n = mesh.M_total;
  std::vector<std::vector<int>> rows(n);
  for (const auto &t : mesh.triangles)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        rows[t[a]].push_back(t[b]);
  auto pat = std::make_shared<CsrPattern>(pattern_from_rows(n, n, std::move(rows)));
  ElementMatrices em;
  em.K.assign(pat->nnz(), 0.0);
  em.Mss.assign(pat->nnz(), 0.0);
  em.D.assign(pat->nnz(), 0.0);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto eg = element_geometry(mesh.triangle_coords(t));
    double Ke[3][3] = {}, Me[3][3] = {}, De[3][3] = {};
    for (std::size_t k = 0; k < q.points.size(); ++k) {
      const auto lam = bary(q.points[k][0], q.points[k][1]);
      const double w = q.weights[k] * eg.area;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          Ke[a][b] += w * (eg.gx[a] * eg.gx[b] + eg.gy[a] * eg.gy[b]);
          Me[a][b] += w * lam[a] * lam[b];
          De[a][b] += w * (lam[b] * eg.gx[a] - eg.gx[b] * lam[a]);
        }
    }
    const auto &tri = mesh.triangles[t];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const int e = pat->find(tri[a], tri[b]);
        em.K[e] += Ke[a][b];
        em.Mss[e] += Me[a][b];
        em.D[e] += De[a][b];
      }
  }
  em.pattern = std::move(pat);
  return em;
}

AlphaMoments alpha_moments(const BlochGrid &grid, int j) {
  const double d = grid.delta, a = grid.node(j);
  return {2.0 * d, 2.0 * d * a, 2.0 * d * (a * a + d * d / 3.0)};
}

CouplingBlocks assemble_C(const BlochGrid &grid, const CellMesh &mesh, const Geometry &geo, const QuadratureRule &q,
                          const WaveParams &p, int jobs) {
  CouplingBlocks out;
  std::vector<std::size_t> active;
  if (geo.perturbed()) {
    const double sa = geo.perturbation().support_a, sb = geo.perturbation().support_b;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      const auto c = mesh.triangle_coords(t);
      const double lo = std::min({c[0].x1, c[1].x1, c[2].x1}), hi = std::max({c[0].x1, c[1].x1, c[2].x1});
      if (hi <= sa || lo >= sb)
        continue;
      if (mesh.ghost_mask[t])
        throw GeometryError("perturbation support must stay clear of the left cell edge");
      active.push_back(t);
    }
  }
  std::vector<std::vector<int>> rows(mesh.M_total);
  for (auto t : active) {
    const auto &tri = mesh.triangles[t];
    for (int a = 0; a < 3; ++a)
      if (tri[a] < mesh.M)
        for (int b = 0; b < 3; ++b)
          rows[tri[a]].push_back(tri[b]);
  }
  auto pat = std::make_shared<CsrPattern>(pattern_from_rows(mesh.M_total, mesh.M_total, std::move(rows)));

  // Geometry-dependent data at quadrature points, shared by all intervals.
  struct QpData {
    double x1, w;
    double A[4];
    double dc;
    std::array<double, 3> lam;
  };
  std::vector<std::vector<QpData>> qdata(active.size());
  std::vector<ElementGeometry> egs(active.size());
  for (std::size_t n = 0; n < active.size(); ++n) {
    const auto c = mesh.triangle_coords(active[n]);
    egs[n] = element_geometry(c);
    for (std::size_t k = 0; k < q.points.size(); ++k) {
      const Point2 x = map_point(c, q.points[k][0], q.points[k][1]);
      const auto co = coefficients(geo, x);
      QpData d;
      d.x1 = x.x1;
      d.w = q.weights[k] * egs[n].area;
      d.A[0] = co.A[0] - 1.0;
      d.A[1] = co.A[1];
      d.A[2] = co.A[2];
      d.A[3] = co.A[3] - 1.0;
      d.dc = co.c - 1.0;
      d.lam = bary(q.points[k][0], q.points[k][1]);
      qdata[n].push_back(d);
    }
  }
  const double scale = std::sqrt(grid.period / (2.0 * pi));
  const double k2 = p.k * p.k;
  out.values.assign(grid.N, std::vector<cplx>(pat->nnz(), 0.0));
  parallel_for(grid.N, jobs, [&](int j) {
    auto &vals = out.values[j];
    for (std::size_t n = 0; n < active.size(); ++n) {
      const auto &eg = egs[n];
      const auto &tri = mesh.triangles[active[n]];
      cplx Ce[3][3] = {};
      for (const auto &d : qdata[n]) {
        const cplx g = std::conj(g_weight(grid, j, d.x1, p.sigma));
        const cplx dg = std::conj(g_weight_deriv(grid, j, d.x1, p.sigma));
        for (int b = 0; b < 3; ++b) {
          // (A - I) grad phi_b
          const double vx = d.A[0] * eg.gx[b] + d.A[1] * eg.gy[b];
          const double vy = d.A[2] * eg.gx[b] + d.A[3] * eg.gy[b];
          for (int a = 0; a < 3; ++a) {
            const cplx grad_term = vx * (g * eg.gx[a] + d.lam[a] * dg) + vy * (g * eg.gy[a]);
            Ce[a][b] += d.w * (grad_term - k2 * d.dc * d.lam[b] * g * d.lam[a]);
          }
        }
      }
      for (int a = 0; a < 3; ++a) {
        if (tri[a] >= mesh.M)
          continue;
        for (int b = 0; b < 3; ++b)
          vals[pat->find(tri[a], tri[b])] += scale * Ce[a][b];
      }
    }
  });
  out.pattern = std::move(pat);
  return out;
}

std::vector<std::vector<cplx>> assemble_B(const BlochGrid &grid, const CellMesh &mesh, int sigma) {
  const double scale = std::sqrt(grid.period / (2.0 * pi));
  std::vector<std::vector<cplx>> B(grid.N, std::vector<cplx>(mesh.M_total));
  for (int j = 0; j < grid.N; ++j)
    for (int m = 0; m < mesh.M_total; ++m)
      B[j][m] = -scale * g_weight(grid, j, mesh.vertices[m].x1, sigma);
  return B;
}

cplx interval_average_incident(const IncidentSource &src, const WaveParams &p, double a, double b, Point2 x,
                               int q_alpha) {
  const auto rule = gauss_rule(q_alpha);
  // Cutoffs |L* m + sigma alpha| = k inside (a, b) split the interval.
  std::vector<double> cuts{a, b};
  const double ls = p.dual_period();
  const double reach = std::max(std::abs(a), std::abs(b)) + p.k;
  const long mmax = static_cast<long>(std::ceil(reach / ls)) + 1;
  for (long m = -mmax; m <= mmax; ++m)
    for (double s : {-1.0, 1.0}) {
      const double ac = p.sigma * (s * p.k - ls * m);
      if (ac > a && ac < b)
        cuts.push_back(ac);
    }
  std::sort(cuts.begin(), cuts.end());
  cplx total = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double lo = cuts[c], hi = cuts[c + 1];
    if (hi <= lo)
      continue;
    // alpha = lo + (hi - lo)(1 - cos(pi s))/2 clusters nodes at both ends,
    // absorbing the square-root behaviour at cutoffs.
    for (const auto &[xi, w] : rule) {
      const double s = 0.5 * (xi + 1.0);
      const double alpha = lo + 0.5 * (hi - lo) * (1.0 - std::cos(pi * s));
      const double jac = 0.5 * (hi - lo) * pi * std::sin(pi * s);
      total += 0.5 * w * jac * std::polar(1.0, -p.sigma * alpha * x.x1) * incident_bloch(src, p, alpha, x);
    }
  }
  return total / (b - a);
}

RightHandSide assemble_rhs(const BlochGrid &grid, const CellMesh &mesh, const Geometry &geo,
                           const IncidentSource &src, const WaveParams &p, const RhsOptions &opt) {
  if (opt.sign != 1 && opt.sign != -1)
    throw DomainError("rhs sign must be +1 or -1");
  RightHandSide rhs;
  rhs.sign = opt.sign;
  rhs.F.assign(grid.N, std::vector<cplx>(mesh.M_total, 0.0));
  const auto bottom = mesh.bottom_nodes();
  const double scale = std::sqrt(grid.period / (2.0 * pi));
  parallel_for(static_cast<int>(bottom.size()), opt.jobs, [&](int b) {
    const int node = bottom[b];
    const Point2 x = mesh.vertices[node];
    cplx corr = 0.0;
    if (opt.mode == RhsMode::corrected && geo.bump(x.x1) != 0.0)
      corr = scale * (incident_field(src, {x.x1, geo.zeta_p(x.x1)}) - incident_field(src, x));
    for (int j = 0; j < grid.N; ++j) {
      cplx v = interval_average_incident(src, p, grid.lower(j), grid.upper(j), x, opt.q_alpha);
      if (corr != 0.0)
        v += corr * std::conj(g_weight(grid, j, x.x1, p.sigma)) / (2.0 * grid.delta);
      rhs.F[j][node] = static_cast<double>(opt.sign) * v;
    }
  });
  if (opt.check_convergence && opt.q_alpha < 32) {
    const int stride = std::max<int>(1, static_cast<int>(bottom.size()) / 8);
    double change = 0.0, ref = 0.0;
    for (std::size_t b = 0; b < bottom.size(); b += stride) {
      const Point2 x = mesh.vertices[bottom[b]];
      for (int j = 0; j < grid.N; ++j) {
        const cplx v1 = interval_average_incident(src, p, grid.lower(j), grid.upper(j), x, opt.q_alpha);
        const cplx v2 = interval_average_incident(src, p, grid.lower(j), grid.upper(j), x, 2 * opt.q_alpha);
        change = std::max(change, std::abs(v1 - v2));
        ref = std::max(ref, std::abs(v2));
      }
    }
    rhs.max_quadrature_change = ref > 0.0 ? change / ref : 0.0;
    if (rhs.max_quadrature_change > 1e-8) {
      std::ostringstream os;
      os << "alpha quadrature not converged: Q -> 2Q changes data by " << rhs.max_quadrature_change;
      log::warn(os.str());
    }
  }
  return rhs;
}

BlockSystem build_block_system(const BlochGrid &grid, std::shared_ptr<const CellMesh> mesh, const Geometry &geo,
                               const IncidentSource &src, const WaveParams &p, const AssemblyOptions &opt) {
  BlockSystem s;
  s.grid = grid;
  s.params = p;
  s.mesh = mesh;
  s.M = mesh->M;
  s.Mt = mesh->M_total;
  const auto q = reference_quadrature(opt.quad_order);
  s.em = assemble_element_matrices(*mesh, q);
  s.moments.resize(grid.N);
  for (int j = 0; j < grid.N; ++j)
    s.moments[j] = alpha_moments(grid, j);
  const auto tb = make_trace_basis(*mesh, opt.M_dtn);
  s.top = tb.nodes;
  s.dtn.resize(grid.N);
  parallel_for(grid.N, opt.jobs,
               [&](int j) { s.dtn[j] = assemble_dtn_block(tb, grid.lower(j), grid.upper(j), p); });
  s.C = assemble_C(grid, *mesh, geo, q, p, opt.jobs);
  s.B = assemble_B(grid, *mesh, p.sigma);
  RhsOptions ro = opt.rhs;
  ro.jobs = opt.jobs;
  s.rhs = assemble_rhs(grid, *mesh, geo, src, p, ro);

  // Pattern of a materialized A_j.
  const auto &fp = *s.em.pattern;
  std::vector<char> is_top(s.Mt, 0);
  for (int n : s.top)
    is_top[n] = 1;
  std::vector<std::vector<int>> rows(s.Mt);
  for (int r = 0; r < s.Mt; ++r) {
    if (r >= s.M) {
      rows[r].push_back(r);
      continue;
    }
    rows[r].assign(fp.col_idx.begin() + fp.row_ptr[r], fp.col_idx.begin() + fp.row_ptr[r + 1]);
    if (is_top[r])
      rows[r].insert(rows[r].end(), s.top.begin(), s.top.end());
  }
  auto ap = std::make_shared<CsrPattern>(pattern_from_rows(s.Mt, s.Mt, std::move(rows)));
  s.fem_to_a.assign(fp.nnz(), -1);
  for (int r = 0; r < s.M; ++r)
    for (int e = fp.row_ptr[r]; e < fp.row_ptr[r + 1]; ++e)
      s.fem_to_a[e] = ap->find(r, fp.col_idx[e]);
  const int nt = static_cast<int>(s.top.size());
  s.dtn_to_a.resize(static_cast<std::size_t>(nt) * nt);
  for (int r = 0; r < nt; ++r)
    for (int c = 0; c < nt; ++c)
      s.dtn_to_a[static_cast<std::size_t>(r) * nt + c] = ap->find(s.top[r], s.top[c]);
  s.a_pattern = std::move(ap);
  return s;
}

void BlockSystem::apply_A(int j, const cplx *x, cplx *y) const {
  const auto &fp = *em.pattern;
  const double k2 = params.k * params.k;
  const double c0 = moments[j].I0;
  const double cm = -moments[j].I0 * k2 + moments[j].I2;
  const double cd = params.sigma * moments[j].I1;
  for (int r = 0; r < M; ++r) {
    cplx acc = 0.0;
    for (int e = fp.row_ptr[r]; e < fp.row_ptr[r + 1]; ++e)
      acc += cplx(c0 * em.K[e] + cm * em.Mss[e], cd * em.D[e]) * x[fp.col_idx[e]];
    y[r] = acc;
  }
  for (int r = M; r < Mt; ++r)
    y[r] = x[r];
  dtn[j].apply([&](int c) { return x[top[c]]; }, [&](int r, cplx v) { y[top[r]] += v; });
}

void BlockSystem::apply(const cplx *x, cplx *y, int jobs) const {
  const int n = N();
  const cplx *u = x + static_cast<std::size_t>(n) * Mt;
  parallel_for(n, jobs, [&](int j) {
    const std::size_t off = static_cast<std::size_t>(j) * Mt;
    apply_A(j, x + off, y + off);
    const auto &cp = *C.pattern;
    const auto &cv = C.values[j];
    for (int r = 0; r < cp.rows; ++r) {
      cplx acc = 0.0;
      for (int e = cp.row_ptr[r]; e < cp.row_ptr[r + 1]; ++e)
        acc += cv[e] * u[cp.col_idx[e]];
      y[off + r] += acc;
    }
  });
  cplx *yu = y + static_cast<std::size_t>(n) * Mt;
  for (int m = 0; m < Mt; ++m) {
    cplx acc = u[m];
    for (int j = 0; j < n; ++j)
      acc += B[j][m] * x[static_cast<std::size_t>(j) * Mt + m];
    yu[m] = acc;
  }
}

CsrMatrix<cplx> BlockSystem::materialize_A(int j) const {
  CsrMatrix<cplx> A;
  A.pattern = a_pattern;
  A.values.assign(a_pattern->nnz(), 0.0);
  const auto &fp = *em.pattern;
  const double k2 = params.k * params.k;
  const double c0 = moments[j].I0;
  const double cm = -moments[j].I0 * k2 + moments[j].I2;
  const double cd = params.sigma * moments[j].I1;
  for (std::size_t e = 0; e < fp.nnz(); ++e)
    if (fem_to_a[e] >= 0)
      A.values[fem_to_a[e]] += cplx(c0 * em.K[e] + cm * em.Mss[e], cd * em.D[e]);
  const int nt = static_cast<int>(top.size());
  for (int r = 0; r < nt; ++r)
    for (int c = 0; c < nt; ++c)
      A.values[dtn_to_a[static_cast<std::size_t>(r) * nt + c]] += dtn[j](r, c);
  for (int r = M; r < Mt; ++r)
    A.values[a_pattern->find(r, r)] = 1.0;
  return A;
}

std::vector<cplx> BlockSystem::rhs_vector() const {
  std::vector<cplx> b(size(), 0.0);
  for (int j = 0; j < N(); ++j)
    std::copy(rhs.F[j].begin(), rhs.F[j].end(), b.begin() + static_cast<std::ptrdiff_t>(j) * Mt);
  return b;
}

std::vector<Triplet> system_triplets(const BlockSystem &sys) {
  std::vector<Triplet> out;
  const int n = sys.N(), Mt = sys.Mt;
  for (int j = 0; j < n; ++j) {
    const auto A = sys.materialize_A(j);
    const auto &ap = *A.pattern;
    for (int r = 0; r < ap.rows; ++r)
      for (int e = ap.row_ptr[r]; e < ap.row_ptr[r + 1]; ++e)
        out.push_back({j * Mt + r, j * Mt + ap.col_idx[e], A.values[e]});
    const auto &cp = *sys.C.pattern;
    for (int r = 0; r < cp.rows; ++r)
      for (int e = cp.row_ptr[r]; e < cp.row_ptr[r + 1]; ++e)
        if (sys.C.values[j][e] != 0.0)
          out.push_back({j * Mt + r, n * Mt + cp.col_idx[e], sys.C.values[j][e]});
    for (int m = 0; m < Mt; ++m)
      out.push_back({n * Mt + m, j * Mt + m, sys.B[j][m]});
  }
  for (int m = 0; m < Mt; ++m)
    out.push_back({n * Mt + m, n * Mt + m, 1.0});
  return out;
}

namespace {

void write_mtx(const std::filesystem::path &path, int rows, int cols, const std::vector<Triplet> &entries) {
  std::ofstream os(path);
  if (!os)
    throw std::runtime_error("cannot open " + path.string());
  os << "%%MatrixMarket matrix coordinate complex general\n";
  os << rows << ' ' << cols << ' ' << entries.size() << '\n';
  os << std::setprecision(17);
  for (const auto &t : entries)
    os << t.row + 1 << ' ' << t.col + 1 << ' ' << t.value.real() << ' ' << t.value.imag() << '\n';
}

std::string block_name(const char *prefix, int j) {
  std::ostringstream os;
  os << prefix << '_' << std::setw(3) << std::setfill('0') << j + 1 << ".mtx";
  return os.str();
}

} // namespace

void write_matrix_market(const BlockSystem &sys, const std::string &dir) {
  std::filesystem::create_directories(dir);
  const int Mt = sys.Mt;
  for (int j = 0; j < sys.N(); ++j) {
    std::vector<Triplet> a, c, b, f;
    const auto A = sys.materialize_A(j);
    const auto &ap = *A.pattern;
    for (int r = 0; r < ap.rows; ++r)
      for (int e = ap.row_ptr[r]; e < ap.row_ptr[r + 1]; ++e)
        a.push_back({r, ap.col_idx[e], A.values[e]});
    const auto &cp = *sys.C.pattern;
    for (int r = 0; r < cp.rows; ++r)
      for (int e = cp.row_ptr[r]; e < cp.row_ptr[r + 1]; ++e)
        c.push_back({r, cp.col_idx[e], sys.C.values[j][e]});
    for (int m = 0; m < Mt; ++m) {
      b.push_back({m, m, sys.B[j][m]});
      if (sys.rhs.F[j][m] != 0.0)
        f.push_back({m, 0, sys.rhs.F[j][m]});
    }
    const std::filesystem::path d(dir);
    write_mtx(d / block_name("A", j), Mt, Mt, a);
    write_mtx(d / block_name("C", j), Mt, Mt, c);
    write_mtx(d / block_name("B", j), Mt, Mt, b);
    write_mtx(d / block_name("F", j), Mt, 1, f);
  }
}

} // namespace lpscat
