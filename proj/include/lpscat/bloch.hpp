#pragma once

#include "lpscat/mesh.hpp"
#include "lpscat/specfun.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace lpscat {

// Piecewise-constant alpha grid on the Brillouin zone (-pi/L, pi/L].
// Nodes are 0-based here: node(0) = -pi/L + pi/(N L). A nonzero offset
// shifts all nodes (used for the shifted-grid cross-check).
struct BlochGrid {
  int N = 1;
  double period = 2.0 * pi;
  double delta = 0.0; // half-width pi / (N L)
  double offset = 0.0;
  std::vector<double> nodes;

  double node(int j) const { return nodes[j]; }
  double lower(int j) const { return nodes[j] - delta; }
  double upper(int j) const { return nodes[j] + delta; }
};

BlochGrid make_grid(int N, double period, double offset = 0.0);

// g_j(x1) = integral over interval j of exp(i sigma alpha x1) d alpha.
cplx g_weight(const BlochGrid &grid, int j, double x1, int sigma = -1);
cplx g_weight_deriv(const BlochGrid &grid, int j, double x1, int sigma = -1);

struct IncidentSource {
  Point2 y{0.5, 0.4};
  double k = 1.0;
  long J_trunc = 200000;
  double tol_series = 1e-13;
};

// Half-space Dirichlet Green's function (i/4)[H0(k|x-y|) - H0(k|x-y'|)].
cplx incident_field(const IncidentSource &s, Point2 x);

// Bloch transform of the incident field via its mode series; x2 > y2.
cplx incident_bloch(const IncidentSource &s, const WaveParams &p, double alpha, Point2 x);

enum class LatticeWindow { none, smooth };

struct LatticeSum {
  cplx value;
  double tail = 0.0; // |S_J - S_{J/2}|
};

// sqrt(L/2pi) sum_{|j|<=J} u(x1 + L j, x2) exp(i L j alpha).
LatticeSum bloch_direct(const std::function<cplx(Point2)> &u, double period, double alpha, Point2 x, long J_sum,
                        LatticeWindow window = LatticeWindow::none);

// u(x_m) = sqrt(L/2pi) sum_j g_j(x_m1) w0_j(x_m) for periodic samples w0_j.
std::vector<cplx> discrete_inverse_bloch(const BlochGrid &grid, const std::vector<std::vector<cplx>> &w0,
                                         const CellMesh &mesh, int sigma = -1);

struct SigmaAdjudication {
  int sigma = -1;
  double discrepancy_minus = 0.0; // max relative discrepancy with sigma = -1
  double discrepancy_plus = 0.0;
};

// Compares the mode series against the lattice sum at random (alpha, x) for
// both signs and adopts the one that agrees.
SigmaAdjudication adjudicate_sigma(const IncidentSource &s, double period, double x2_lo, double x2_hi,
                                   std::uint64_t seed, int samples = 20, long J_sum = 4000);

} // namespace lpscat
