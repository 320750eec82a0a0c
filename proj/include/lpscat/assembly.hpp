#pragma once

#include "lpscat/bloch.hpp"
#include "lpscat/dtn.hpp"
#include "lpscat/geometry.hpp"
#include "lpscat/mesh.hpp"
#include "lpscat/sparse.hpp"

#include <memory>
#include <string>
#include <vector>

namespace lpscat {

// Global P1 matrices over all M' nodes on the mesh adjacency pattern.
struct ElementMatrices {
  std::shared_ptr<const CsrPattern> pattern;
  std::vector<double> K;   // int grad phi_m . grad phi_l
  std::vector<double> Mss; // int phi_m phi_l
  std::vector<double> D;   // int (phi_m d1 phi_l - d1 phi_m phi_l), row l, column m
};

ElementMatrices assemble_element_matrices(const CellMesh &mesh, const QuadratureRule &q);

struct AlphaMoments {
  double I0 = 0.0; // interval length
  double I1 = 0.0; // int alpha
  double I2 = 0.0; // int alpha^2
};
AlphaMoments alpha_moments(const BlochGrid &grid, int j);

// Coupling blocks C_j on a shared pattern: rows are non-bottom test
// functions, columns range over all nodes.
struct CouplingBlocks {
  std::shared_ptr<const CsrPattern> pattern;
  std::vector<std::vector<cplx>> values;
};

CouplingBlocks assemble_C(const BlochGrid &grid, const CellMesh &mesh, const Geometry &geo, const QuadratureRule &q,
                          const WaveParams &p, int jobs = 1);

// Diagonals of B_j over all M' nodes.
std::vector<std::vector<cplx>> assemble_B(const BlochGrid &grid, const CellMesh &mesh, int sigma);

enum class RhsMode {
  // Bloch transform of the incident trace on the unperturbed surface only.
  literal,
  // Adds the one-cell correction u^i(x1, zeta_p) - u^i(x1, zeta) so that the
  // data is the transform of the incident field composed with Phi_p.
  corrected,
};

struct RhsOptions {
  int sign = -1;
  int q_alpha = 8;
  RhsMode mode = RhsMode::corrected;
  int jobs = 1;
  bool check_convergence = true;
};

struct RightHandSide {
  std::vector<std::vector<cplx>> F; // per interval, length M'
  int sign = -1;
  double max_quadrature_change = 0.0; // from the Q -> 2Q probe
};

RightHandSide assemble_rhs(const BlochGrid &grid, const CellMesh &mesh, const Geometry &geo,
                           const IncidentSource &src, const WaveParams &p, const RhsOptions &opt);

// Integral over [a, b] of exp(-i sigma alpha x1) J u^i(alpha, x) / (b - a),
// split at cutoffs and integrated with a cosine-mapped Gauss rule.
cplx interval_average_incident(const IncidentSource &src, const WaveParams &p, double a, double b, Point2 x,
                               int q_alpha);

struct AssemblyOptions {
  int quad_order = 4;
  int M_dtn = 0;
  RhsOptions rhs;
  int jobs = 1;
};

// The block system
//   [A_1        C_1] [W_1]   [F_1]
//   [    ...    ...] [...] = [...]
//   [       A_N C_N] [W_N]   [F_N]
//   [B_1 ... B_N  I] [ U ]   [ 0 ]
// with A_j kept implicit: shared K, Mss, D plus per-interval scalars and DtN.
struct BlockSystem {
  BlochGrid grid;
  WaveParams params;
  std::shared_ptr<const CellMesh> mesh;
  int M = 0;
  int Mt = 0;

  ElementMatrices em;
  std::vector<AlphaMoments> moments;
  std::vector<int> top; // top dof -> node
  std::vector<DtnBlock> dtn;
  CouplingBlocks C;
  std::vector<std::vector<cplx>> B;
  RightHandSide rhs;

  // Pattern of the materialized A_j and the positions of FEM / DtN entries.
  std::shared_ptr<const CsrPattern> a_pattern;
  std::vector<int> fem_to_a; // -1 for bottom rows
  std::vector<int> dtn_to_a; // n_top * n_top, row-major

  int N() const { return grid.N; }
  std::size_t size() const { return static_cast<std::size_t>(grid.N + 1) * Mt; }

  // y = A_j x for vectors of length M'.
  void apply_A(int j, const cplx *x, cplx *y) const;
  // y = (block operator) x for vectors of length size().
  void apply(const cplx *x, cplx *y, int jobs = 1) const;
  CsrMatrix<cplx> materialize_A(int j) const;
  std::vector<cplx> rhs_vector() const;
};

BlockSystem build_block_system(const BlochGrid &grid, std::shared_ptr<const CellMesh> mesh, const Geometry &geo,
                               const IncidentSource &src, const WaveParams &p, const AssemblyOptions &opt);

// Row/col/value triplets of the full operator (for direct solves and dumps).
struct Triplet {
  int row, col;
  cplx value;
};
std::vector<Triplet> system_triplets(const BlockSystem &sys);

// Writes A_001.mtx..., C_001.mtx..., B_001.mtx..., F_001.mtx... into dir.
void write_matrix_market(const BlockSystem &sys, const std::string &dir);

} // namespace lpscat
