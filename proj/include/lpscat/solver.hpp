#pragma once

#include "lpscat/assembly.hpp"
#include "lpscat/sparse.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace lpscat {

// Approximate inverse of one diagonal block.
class LocalPreconditioner {
public:
  virtual ~LocalPreconditioner() = default;
  // x <- (LU)^{-1} x
  virtual void solve(cplx *x) const = 0;
  virtual std::size_t memory_bytes() const = 0;
};

// Zero-fill incomplete LU stored on the pattern of A (unit lower L and U
// share the value array). T selects the storage precision.
template <class T> class Ilu0 : public LocalPreconditioner {
public:
  explicit Ilu0(const CsrMatrix<cplx> &A);
  void solve(cplx *x) const override;
  std::size_t memory_bytes() const override { return values_.size() * sizeof(T); }
  // Factor entry at (r, c) of the combined L\U array; zero off-pattern.
  cplx lu_entry(int r, int c) const;
  int perturbed_pivots() const { return perturbed_; }

private:
  std::shared_ptr<const CsrPattern> pattern_;
  std::vector<T> values_;
  std::vector<int> diag_;
  int perturbed_ = 0;
};

extern template class Ilu0<std::complex<double>>;
extern template class Ilu0<std::complex<float>>;

// Dual-threshold incomplete LU (drop tolerance tau relative to the row norm,
// at most `fill` entries kept per row in each of L and U).
class Ilut : public LocalPreconditioner {
public:
  Ilut(const CsrMatrix<cplx> &A, double tau, int fill);
  void solve(cplx *x) const override;
  std::size_t memory_bytes() const override;

private:
  int n_ = 0;
  std::vector<int> lptr_, lcol_, uptr_, ucol_;
  std::vector<cplx> lval_, uval_; // U rows store the diagonal first
};

struct SolverReport {
  int iterations = 0;
  int restarts = 0;
  int restart_length = 0;
  double residual = 0.0;      // final relative preconditioned residual
  double true_residual = 0.0; // ||b - A x|| / ||b|| recomputed after the solve
  double seconds = 0.0;
  double setup_seconds = 0.0;
  bool converged = false;
  std::string method;
  std::vector<double> history; // preconditioned relative residual per iteration
};

using LinearOperator = std::function<void(const cplx *x, cplx *y)>;
using PreconditionerOp = std::function<void(cplx *x)>;

// Restarted GMRES with left preconditioning, modified Gram-Schmidt plus one
// reorthogonalization pass. x holds the initial guess on entry.
SolverReport gmres(std::size_t n, const LinearOperator &A, const PreconditionerOp &P, const std::vector<cplx> &b,
                   std::vector<cplx> &x, double tol, int restart, int maxiter);

enum class SolverMethod { gmres, direct };
// shared_lu: exact sparse LU of a few reference blocks, each reused for a
// contiguous group of alpha intervals.
enum class IluKind { ilu0, ilut, shared_lu, none };
enum class IluPrecision { double_precision, single_precision };

struct SolverOptions {
  SolverMethod method = SolverMethod::gmres;
  IluKind ilu = IluKind::shared_lu;
  IluPrecision precision = IluPrecision::double_precision;
  double tol = 1e-6;
  int restart = 80;
  int maxiter = 2000;
  std::size_t direct_threshold = 20000;
  double memory_budget_gb = 3.0; // Krylov basis cap; restart shrinks to fit
  double ilut_tau = 1e-3;
  int ilut_fill = 10;
  int lu_groups = 0;             // shared_lu reference count; 0 picks from lu_budget_gb
  double lu_budget_gb = 1.5;     // shared_lu factor memory cap
  int jobs = 1;
};

class BlockPreconditioner {
public:
  BlockPreconditioner(const BlockSystem &sys, const SolverOptions &opt);
  // x <- diag(LU_1, ..., LU_N, I)^{-1} x
  void apply(cplx *x, int jobs = 1) const;
  const LocalPreconditioner &block(int j) const { return *blocks_[j]; }
  std::size_t memory_bytes() const;
  int distinct_factors() const { return distinct_; }

private:
  std::size_t Mt_ = 0;
  int distinct_ = 0;
  std::vector<std::unique_ptr<LocalPreconditioner>> blocks_;
};

struct BlockSolution {
  std::vector<std::vector<cplx>> W; // per interval, length M'
  std::vector<cplx> U;              // length M'
  SolverReport report;
};

BlockSolution solve_block_system(const BlockSystem &sys, const SolverOptions &opt);
// Sparse LU of the fully assembled operator.
std::vector<cplx> direct_solve(const BlockSystem &sys, const std::vector<cplx> &b);

} // namespace lpscat
