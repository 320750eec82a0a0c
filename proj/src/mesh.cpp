#include "lpscat/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace lpscat {

int CellMesh::node_index(int i, int j) const {
  if (i == 0)
    i = n1;
  if (j == 0)
    return M + (i - 1);
  return (j - 1) * n1 + (i - 1);
}

std::array<Point2, 3> CellMesh::triangle_coords(std::size_t t) const {
  std::array<Point2, 3> p;
  for (int v = 0; v < 3; ++v) {
    p[v] = vertices[triangles[t][v]];
    if (ghost_mask[t] & (1u << v))
      p[v].x1 -= period;
  }
  return p;
}

std::vector<int> CellMesh::top_nodes() const {
  std::vector<int> out(n1);
  for (int i = 1; i <= n1; ++i)
    out[i - 1] = node_index(i, n2);
  return out;
}

std::vector<int> CellMesh::bottom_nodes() const {
  std::vector<int> out(n1);
  for (int i = 1; i <= n1; ++i)
    out[i - 1] = node_index(i, 0);
  return out;
}

Point2 CellMesh::periodic_partner(int node) const {
  Point2 p = vertices.at(node);
  p.x1 -= period;
  return p;
}

double CellMesh::min_angle_degrees() const {
  double amin = 180.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const auto p = triangle_coords(t);
    for (int v = 0; v < 3; ++v) {
      const Point2 a = p[v], b = p[(v + 1) % 3], c = p[(v + 2) % 3];
      const double ux = b.x1 - a.x1, uy = b.x2 - a.x2, wx = c.x1 - a.x1, wy = c.x2 - a.x2;
      const double ang = std::atan2(std::abs(ux * wy - uy * wx), ux * wx + uy * wy);
      amin = std::min(amin, ang * 180.0 / pi);
    }
  }
  return amin;
}

CellMesh generate_cell_mesh(const Geometry &g, int n1, int n2) {
  if (n1 < 4 || n2 < 4)
    throw DomainError("generate_cell_mesh needs n1, n2 >= 4");
  CellMesh m;
  m.period = g.period();
  m.H = g.H();
  m.n1 = n1;
  m.n2 = n2;
  m.M = n1 * n2;
  m.M_total = n1 * (n2 + 1);
  m.vertices.resize(m.M_total);
  m.node_class.resize(m.M_total);
  const double L = m.period;
  for (int j = 0; j <= n2; ++j) {
    const double t = static_cast<double>(j) / n2;
    for (int i = 1; i <= n1; ++i) {
      const double s = -0.5 * L + L * i / n1;
      const double z = g.zeta(s);
      const int id = m.node_index(i, j);
      m.vertices[id] = {s, j == n2 ? g.H() : (j == 0 ? z : (1.0 - t) * z + t * g.H())};
      NodeClass c = NodeClass::interior;
      if (j == 0)
        c = NodeClass::bottom;
      else if (j == n2)
        c = NodeClass::top;
      else if (i == n1)
        c = NodeClass::right_periodic;
      m.node_class[id] = c;
    }
  }
  m.triangles.reserve(2 * n1 * n2);
  m.ghost_mask.reserve(2 * n1 * n2);
  for (int j = 1; j <= n2; ++j) {
    for (int i = 1; i <= n1; ++i) {
      const int p00 = m.node_index(i - 1, j - 1), p10 = m.node_index(i, j - 1);
      const int p11 = m.node_index(i, j), p01 = m.node_index(i - 1, j);
      const bool ghost = (i == 1);
      // Local vertex slots holding a left-column node get the ghost bit.
      auto push = [&](int a, bool ga, int b, bool gb, int c, bool gc) {
        m.triangles.push_back({a, b, c});
        m.ghost_mask.push_back(static_cast<unsigned char>((ga ? 1 : 0) | (gb ? 2 : 0) | (gc ? 4 : 0)));
      };
      if ((i + j) % 2 == 0) {
        push(p00, ghost, p10, false, p11, false);
        push(p00, ghost, p11, false, p01, ghost);
      } else {
        push(p00, ghost, p10, false, p01, ghost);
        push(p10, false, p11, false, p01, ghost);
      }
    }
  }
  double h = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto p = m.triangle_coords(t);
    const double area2 = (p[1].x1 - p[0].x1) * (p[2].x2 - p[0].x2) - (p[2].x1 - p[0].x1) * (p[1].x2 - p[0].x2);
    if (!(area2 > 0.0))
      throw GeometryError("inverted element in generated mesh");
    for (int v = 0; v < 3; ++v)
      h = std::max(h, std::hypot(p[(v + 1) % 3].x1 - p[v].x1, p[(v + 1) % 3].x2 - p[v].x2));
  }
  m.h = h;
  const auto &surf = g.surface();
  m.bottom = surf.height;
  return m;
}

CellMesh mesh_for_target_h(const Geometry &g, double h_target) {
  if (!(h_target > 0.0))
    throw DomainError("mesh size must be positive");
  const double L = g.period();
  const double depth = g.H() - g.surface().min_height;
  int n1 = std::max(4, static_cast<int>(std::ceil(std::sqrt(2.0) * L / h_target)));
  int n2 = std::max(4, static_cast<int>(std::ceil(std::sqrt(2.0) * depth / h_target)));
  for (int attempt = 0; attempt < 50; ++attempt) {
    CellMesh m = generate_cell_mesh(g, n1, n2);
    if (m.h <= h_target * (1.0 + 1e-12))
      return m;
    const double f = m.h / h_target;
    n1 = std::max(n1 + 1, static_cast<int>(std::ceil(n1 * std::min(f, 1.02))));
    n2 = std::max(n2 + 1, static_cast<int>(std::ceil(n2 * std::min(f, 1.02))));
  }
  throw NumericError("could not reach the requested mesh size");
}

QuadratureRule reference_quadrature(int order) {
  QuadratureRule q;
  q.order = order;
  auto add3 = [&](double a, double w) {
    const double b = 1.0 - 2.0 * a;
    q.points.push_back({a, a});
    q.points.push_back({b, a});
    q.points.push_back({a, b});
    q.weights.insert(q.weights.end(), 3, w);
  };
  auto add6 = [&](double a, double b, double w) {
    const double c = 1.0 - a - b;
    for (auto p : {std::array<double, 2>{a, b}, {b, a}, {a, c}, {c, a}, {b, c}, {c, b}})
      q.points.push_back(p);
    q.weights.insert(q.weights.end(), 6, w);
  };
  switch (order) {
  case 2:
    add3(1.0 / 6.0, 1.0 / 3.0);
    break;
  case 4:
    add3(0.445948490915965, 0.223381589678011);
    add3(0.091576213509771, 0.109951743655322);
    break;
  case 6:
    add3(0.249286745170910, 0.116786275726379);
    add3(0.063089014491502, 0.050844906370207);
    add6(0.053145049844817, 0.310352451033784, 0.082851075618374);
    break;
  default:
    throw DomainError("unsupported quadrature order " + std::to_string(order));
  }
  // Renormalize the tabulated weights so they sum to 1 in double precision.
  const double s = std::accumulate(q.weights.begin(), q.weights.end(), 0.0);
  for (double &w : q.weights)
    w /= s;
  return q;
}

void write_mesh_vtk(const CellMesh &mesh, const std::string &path) {
  std::ofstream os(path);
  if (!os)
    throw std::runtime_error("cannot open " + path);
  os << "# vtk DataFile Version 3.0\ncell mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  // Ghost vertices are written as extra points so the periodic seam renders.
  std::vector<Point2> pts = mesh.vertices;
  std::vector<std::array<int, 3>> cells = mesh.triangles;
  std::vector<int> ghost_of(mesh.M_total, -1);
  for (std::size_t t = 0; t < cells.size(); ++t)
    for (int v = 0; v < 3; ++v)
      if (mesh.ghost_mask[t] & (1u << v)) {
        int &gid = ghost_of[cells[t][v]];
        if (gid < 0) {
          gid = static_cast<int>(pts.size());
          pts.push_back(mesh.periodic_partner(cells[t][v]));
        }
        cells[t][v] = gid;
      }
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
}

} // namespace lpscat
