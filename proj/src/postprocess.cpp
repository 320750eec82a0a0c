#include "lpscat/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lpscat {

cplx SolutionField::vertex_value(std::size_t tri, int v) const {
  const int node = mesh->triangles[tri][v];
  return (mesh->ghost_mask[tri] & (1u << v)) ? ghost[node] : values[node];
}

SolutionField interpolate(std::shared_ptr<const CellMesh> mesh, const std::function<cplx(Point2)> &f,
                          std::string tag) {
  SolutionField out;
  out.tag = std::move(tag);
  out.values.resize(mesh->M_total);
  out.ghost.assign(mesh->M_total, 0.0);
  for (int m = 0; m < mesh->M_total; ++m)
    out.values[m] = f(mesh->vertices[m]);
  for (int j = 0; j <= mesh->n2; ++j) {
    const int node = mesh->node_index(mesh->n1, j);
    out.ghost[node] = f(mesh->periodic_partner(node));
  }
  out.mesh = std::move(mesh);
  return out;
}

SolutionField reconstruct_field(const BlockSystem &sys, const std::vector<std::vector<cplx>> &W) {
  const auto &mesh = *sys.mesh;
  const auto &grid = sys.grid;
  const double scale = std::sqrt(grid.period / (2.0 * pi));
  auto at = [&](int node, double x1) {
    cplx acc = 0.0;
    for (int j = 0; j < grid.N; ++j)
      acc += g_weight(grid, j, x1, sys.params.sigma) * W[j][node];
    return scale * acc;
  };
  SolutionField out;
  out.mesh = sys.mesh;
  out.tag = "u_h";
  out.values.resize(mesh.M_total);
  out.ghost.assign(mesh.M_total, 0.0);
  for (int m = 0; m < mesh.M_total; ++m)
    out.values[m] = at(m, mesh.vertices[m].x1);
  for (int j = 0; j <= mesh.n2; ++j) {
    const int node = mesh.node_index(mesh.n1, j);
    out.ghost[node] = at(node, mesh.periodic_partner(node).x1);
  }
  return out;
}

cplx evaluate_field(const SolutionField &f, Point2 x) {
  const auto &m = *f.mesh;
  const double L = m.period;
  const double tol = 1e-12 * std::max(1.0, L);
  if (x.x1 < -0.5 * L - tol || x.x1 > 0.5 * L + tol || x.x2 > m.H + tol) {
    std::ostringstream os;
    os << "point (" << x.x1 << ", " << x.x2 << ") outside the cell";
    throw DomainError(os.str());
  }
  const double ds = L / m.n1;
  const int col = std::clamp(static_cast<int>(std::floor((x.x1 + 0.5 * L) / ds)), 0, m.n1 - 1);
  const double s0 = -0.5 * L + col * ds;
  const double theta = std::clamp((x.x1 - s0) / ds, 0.0, 1.0);
  const double zc = (1.0 - theta) * m.bottom(s0) + theta * m.bottom(s0 + ds);
  const double t = (x.x2 - zc) / (m.H - zc);
  if (t < -1e-10) {
    std::ostringstream os;
    os << "point (" << x.x1 << ", " << x.x2 << ") below the meshed cell";
    throw DomainError(os.str());
  }
  const int row = std::clamp(static_cast<int>(std::floor(t * m.n2)), 0, m.n2 - 1);
  const std::size_t base = 2 * (static_cast<std::size_t>(row) * m.n1 + col);
  double best = -1e300;
  cplx best_val = 0.0;
  for (std::size_t tri = base; tri < base + 2; ++tri) {
    const auto p = m.triangle_coords(tri);
    const double det = (p[1].x1 - p[0].x1) * (p[2].x2 - p[0].x2) - (p[2].x1 - p[0].x1) * (p[1].x2 - p[0].x2);
    const double l1 = ((x.x1 - p[0].x1) * (p[2].x2 - p[0].x2) - (p[2].x1 - p[0].x1) * (x.x2 - p[0].x2)) / det;
    const double l2 = ((p[1].x1 - p[0].x1) * (x.x2 - p[0].x2) - (x.x1 - p[0].x1) * (p[1].x2 - p[0].x2)) / det;
    const double l0 = 1.0 - l1 - l2;
    const double worst = std::min({l0, l1, l2});
    if (worst > best) {
      best = worst;
      best_val = l0 * f.vertex_value(tri, 0) + l1 * f.vertex_value(tri, 1) + l2 * f.vertex_value(tri, 2);
    }
  }
  if (best < -1e-8) {
    std::ostringstream os;
    os << "point (" << x.x1 << ", " << x.x2 << ") not inside the mesh";
    throw DomainError(os.str());
  }
  return best_val;
}

std::vector<cplx> evaluate_field(const SolutionField &f, const std::vector<Point2> &points) {
  std::vector<cplx> out;
  out.reserve(points.size());
  for (const auto &p : points)
    out.push_back(evaluate_field(f, p));
  return out;
}

ErrorNorms l2_error(const SolutionField &f, const std::function<cplx(Point2)> &ref, const QuadratureRule &q,
                    const std::function<double(Point2)> &weight) {
  const auto &m = *f.mesh;
  ErrorNorms out;
  double e2 = 0.0, r2 = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto p = m.triangle_coords(t);
    const double area =
        0.5 * ((p[1].x1 - p[0].x1) * (p[2].x2 - p[0].x2) - (p[2].x1 - p[0].x1) * (p[1].x2 - p[0].x2));
    const cplx v0 = f.vertex_value(t, 0), v1 = f.vertex_value(t, 1), v2 = f.vertex_value(t, 2);
    for (std::size_t k = 0; k < q.points.size(); ++k) {
      const double s = q.points[k][0], tt = q.points[k][1], l0 = 1.0 - s - tt;
      const Point2 x{l0 * p[0].x1 + s * p[1].x1 + tt * p[2].x1, l0 * p[0].x2 + s * p[1].x2 + tt * p[2].x2};
      const double w = q.weights[k] * area * (weight ? weight(x) : 1.0);
      const cplx r = ref(x);
      const cplx uh = l0 * v0 + s * v1 + tt * v2;
      e2 += w * std::norm(uh - r);
      r2 += w * std::norm(r);
    }
  }
  out.l2_error = std::sqrt(e2);
  out.l2_reference = std::sqrt(r2);
  return out;
}

double relative_l2_error(const SolutionField &f, const std::function<cplx(Point2)> &ref, const QuadratureRule &q) {
  const auto e = l2_error(f, ref, q);
  if (e.l2_reference == 0.0)
    throw DomainError("relative_l2_error: reference has zero norm");
  return e.relative();
}

double relative_h1_error(const SolutionField &f, const std::function<std::array<cplx, 2>(Point2)> &grad,
                         const QuadratureRule &q) {
  const auto &m = *f.mesh;
  double e2 = 0.0, r2 = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto p = m.triangle_coords(t);
    const double ax = p[1].x1 - p[0].x1, ay = p[1].x2 - p[0].x2;
    const double bx = p[2].x1 - p[0].x1, by = p[2].x2 - p[0].x2;
    const double det = ax * by - bx * ay;
    const cplx v0 = f.vertex_value(t, 0), v1 = f.vertex_value(t, 1), v2 = f.vertex_value(t, 2);
    // grad u_h = (v1 - v0) grad l1 + (v2 - v0) grad l2
    const cplx gx = (v1 - v0) * (by / det) + (v2 - v0) * (-ay / det);
    const cplx gy = (v1 - v0) * (-bx / det) + (v2 - v0) * (ax / det);
    for (std::size_t k = 0; k < q.points.size(); ++k) {
      const double s = q.points[k][0], tt = q.points[k][1], l0 = 1.0 - s - tt;
      const Point2 x{l0 * p[0].x1 + s * p[1].x1 + tt * p[2].x1, l0 * p[0].x2 + s * p[1].x2 + tt * p[2].x2};
      const double w = q.weights[k] * 0.5 * det;
      const auto g = grad(x);
      e2 += w * (std::norm(gx - g[0]) + std::norm(gy - g[1]));
      r2 += w * (std::norm(g[0]) + std::norm(g[1]));
    }
  }
  return std::sqrt(e2 / r2);
}

std::function<cplx(Point2)> reconstruct_physical(const SolutionField &f, const Geometry &geo) {
  return [f, &geo](Point2 y) { return evaluate_field(f, phi_p_inverse(geo, y)); };
}

double fit_loglog_slope(const std::vector<double> &x, const std::vector<double> &err) {
  const std::size_t n = x.size();
  if (n < 2 || err.size() != n)
    throw DomainError("fit_loglog_slope needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(err[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_field_vtk(const SolutionField &f, const std::string &path) {
  const auto &m = *f.mesh;
  std::ofstream os(path);
  if (!os)
    throw std::runtime_error("cannot open " + path);
  std::vector<Point2> pts = m.vertices;
  std::vector<cplx> vals = f.values;
  std::vector<int> ghost_of(m.M_total, -1);
  std::vector<std::array<int, 3>> cells = m.triangles;
  for (std::size_t t = 0; t < cells.size(); ++t)
    for (int v = 0; v < 3; ++v)
      if (m.ghost_mask[t] & (1u << v)) {
        int &gid = ghost_of[cells[t][v]];
        if (gid < 0) {
          gid = static_cast<int>(pts.size());
          pts.push_back(m.periodic_partner(cells[t][v]));
          vals.push_back(f.ghost[cells[t][v]]);
        }
        cells[t][v] = gid;
      }
  os << "# vtk DataFile Version 3.0\n" << f.tag << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os.precision(12);
  os << "POINTS " << pts.size() << " double\n";
  for (const auto &p : pts)
    os << p.x1 << ' ' << p.x2 << " 0\n";
  os << "CELLS " << cells.size() << ' ' << 4 * cells.size() << '\n';
  for (const auto &c : cells)
    os << "3 " << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
  os << "CELL_TYPES " << cells.size() << '\n';
  for (std::size_t t = 0; t < cells.size(); ++t)
    os << "5\n";
  os << "POINT_DATA " << pts.size() << '\n';
  const char *names[] = {"real", "imag", "abs"};
  for (int c = 0; c < 3; ++c) {
    os << "SCALARS " << names[c] << " double 1\nLOOKUP_TABLE default\n";
    for (const auto &v : vals)
      os << (c == 0 ? v.real() : c == 1 ? v.imag() : std::abs(v)) << '\n';
  }
}

} // namespace lpscat
