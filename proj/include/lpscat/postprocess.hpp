#pragma once

#include "lpscat/assembly.hpp"
#include "lpscat/solver.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace lpscat {

// Nodal values of a piecewise-linear field on the cell. Because the
// reconstructed field is not periodic, nodes on x1 = L/2 also carry the value
// of their left image at x1 = -L/2 in `ghost`.
struct SolutionField {
  std::shared_ptr<const CellMesh> mesh;
  std::vector<cplx> values;
  std::vector<cplx> ghost;
  std::string tag;

  cplx vertex_value(std::size_t tri, int v) const;
};

// Interpolant of a function on the mesh (ghost values from the image points).
SolutionField interpolate(std::shared_ptr<const CellMesh> mesh, const std::function<cplx(Point2)> &f,
                          std::string tag = "interpolant");

// u_h = sqrt(L/2pi) sum_j g_j(x1) W_j at the nodes and their left images.
SolutionField reconstruct_field(const BlockSystem &sys, const std::vector<std::vector<cplx>> &W);

std::vector<cplx> evaluate_field(const SolutionField &f, const std::vector<Point2> &points);
cplx evaluate_field(const SolutionField &f, Point2 x);

struct ErrorNorms {
  double l2_error = 0.0;
  double l2_reference = 0.0;
  double relative() const { return l2_error / l2_reference; }
};

// ||u_h - ref|| and ||ref|| over the cell with element quadrature; weight
// multiplies the integrand (e.g. the Jacobian c_p for physical-domain norms).
ErrorNorms l2_error(const SolutionField &f, const std::function<cplx(Point2)> &ref, const QuadratureRule &q,
                    const std::function<double(Point2)> &weight = {});
double relative_l2_error(const SolutionField &f, const std::function<cplx(Point2)> &ref, const QuadratureRule &q);

// Relative H1-seminorm error against a reference with known gradient.
double relative_h1_error(const SolutionField &f, const std::function<std::array<cplx, 2>(Point2)> &grad,
                         const QuadratureRule &q);

// Evaluation of the transformed-cell field at physical points of the
// perturbed cell: u(y) = u_h(Phi_p^{-1}(y)).
std::function<cplx(Point2)> reconstruct_physical(const SolutionField &f, const Geometry &geo);

// Least-squares slope of log(err) against log(x).
double fit_loglog_slope(const std::vector<double> &x, const std::vector<double> &err);

void write_field_vtk(const SolutionField &f, const std::string &path);

} // namespace lpscat
