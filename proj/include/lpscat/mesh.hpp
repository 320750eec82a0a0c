#pragma once

#include "lpscat/geometry.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace lpscat {

enum class NodeClass : unsigned char { interior, bottom, top, right_periodic };

// Mapped structured triangulation of the reference cell
// {zeta(x1) < x2 < H, -L/2 < x1 <= L/2}. Nodes on x1 = -L/2 are identified
// with their partners on x1 = L/2 and are not stored.
//
// Node indices equal unknown indices: non-bottom nodes occupy [0, M), the top
// row being last among them, bottom nodes occupy [M, M').
struct CellMesh {
  double period = 0.0;
  double H = 0.0;
  int n1 = 0;
  int n2 = 0;
  std::vector<Point2> vertices;
  std::vector<NodeClass> node_class;
  std::vector<std::array<int, 3>> triangles;
  // Per triangle, bit v set if vertex v is used through its periodic image
  // at x1 - L (the ghost copy on the left boundary).
  std::vector<unsigned char> ghost_mask;
  double h = 0.0;
  int M = 0;
  int M_total = 0;

  std::array<Point2, 3> triangle_coords(std::size_t t) const;
  // Node index of grid point (i, j), i in [1, n1] (0 maps to n1), j in [0, n2].
  int node_index(int i, int j) const;
  // Top nodes ordered by x1 (ascending), as node indices.
  std::vector<int> top_nodes() const;
  std::vector<int> bottom_nodes() const;
  // Ghost coordinate at x1 = -L/2 of a right-periodic node.
  Point2 periodic_partner(int node) const;
  double min_angle_degrees() const;

  // Heights of the column through x1: used by point location.
  std::function<double(double)> bottom;
};

CellMesh generate_cell_mesh(const Geometry &g, int n1, int n2);
// Smallest structured mesh whose max edge length does not exceed h_target.
CellMesh mesh_for_target_h(const Geometry &g, double h_target);

struct QuadratureRule {
  // Barycentric coordinates (l1, l2) with l0 = 1 - l1 - l2; reference point (l1, l2).
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights; // sum to 1
  int order = 0;
};

QuadratureRule reference_quadrature(int order);

// Integral over a reference triangle of f(s, t); uses area 1/2.
template <class F> double integrate_reference(const QuadratureRule &q, F &&f) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.points.size(); ++i)
    s += q.weights[i] * f(q.points[i][0], q.points[i][1]);
  return 0.5 * s;
}

void write_mesh_vtk(const CellMesh &mesh, const std::string &path);

} // namespace lpscat
