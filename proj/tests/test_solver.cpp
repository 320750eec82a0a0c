#include <doctest.h>

#include "lpscat/solver.hpp"

#include <cmath>
#include <random>

using namespace lpscat;

namespace {

using Dense = std::vector<std::vector<cplx>>;

CsrMatrix<cplx> csr_from_dense(const Dense &a) {
  const int n = static_cast<int>(a.size());
  std::vector<std::vector<int>> rows(n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (a[r][c] != 0.0)
        rows[r].push_back(c);
  CsrMatrix<cplx> m;
  auto p = std::make_shared<CsrPattern>(pattern_from_rows(n, n, std::move(rows)));
  m.values.assign(p->nnz(), 0.0);
  for (int r = 0; r < n; ++r)
    for (int e = p->row_ptr[r]; e < p->row_ptr[r + 1]; ++e)
      m.values[e] = a[r][p->col_idx[e]];
  m.pattern = std::move(p);
  return m;
}

// Gaussian elimination with partial pivoting.
std::vector<cplx> dense_solve(Dense a, std::vector<cplx> b) {
  const int n = static_cast<int>(a.size());
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int r = k + 1; r < n; ++r)
      if (std::abs(a[r][k]) > std::abs(a[piv][k]))
        piv = r;
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (int r = k + 1; r < n; ++r) {
      const cplx f = a[r][k] / a[k][k];
      for (int c = k; c < n; ++c)
        a[r][c] -= f * a[k][c];
      b[r] -= f * b[k];
    }
  }
  std::vector<cplx> x(n);
  for (int r = n - 1; r >= 0; --r) {
    cplx s = b[r];
    for (int c = r + 1; c < n; ++c)
      s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return x;
}

std::vector<cplx> matvec(const Dense &a, const std::vector<cplx> &x) {
  std::vector<cplx> y(a.size(), 0.0);
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t c = 0; c < x.size(); ++c)
      y[r] += a[r][c] * x[c];
  return y;
}

double rel_diff(const std::vector<cplx> &a, const std::vector<cplx> &b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

Dense random_sparse(int n, double density, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pick(0.0, 1.0);
  Dense a(n, std::vector<cplx>(n, 0.0));
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c)
      if (pick(rng) < density)
        a[r][c] = {u(rng), u(rng)};
    a[r][r] = cplx(4.0 + u(rng), u(rng));
  }
  return a;
}

struct SmallProblem {
  Geometry geo = make_geometry("f1+g1", 3.0);
  std::shared_ptr<const CellMesh> mesh = std::make_shared<CellMesh>(generate_cell_mesh(geo, 16, 8));
  WaveParams p{1.0, 2.0 * pi, -1};
  BlockSystem sys = build_block_system(make_grid(6, 2.0 * pi), mesh, geo, IncidentSource{{0.5, 0.4}, 1.0}, p, {});
};

} // namespace

TEST_CASE("ILU(0) of a full 3x3 matrix is the exact LU factorization") {
  const Dense a = {{{4.0, 1.0}, {1.0, 0.0}, {0.5, -0.5}},
                   {{2.0, 0.0}, {5.0, -1.0}, {1.0, 1.0}},
                   {{-1.0, 0.5}, {0.0, 2.0}, {3.0, 0.0}}};
  // Doolittle by hand.
  const cplx u00 = a[0][0], u01 = a[0][1], u02 = a[0][2];
  const cplx l10 = a[1][0] / u00, l20 = a[2][0] / u00;
  const cplx u11 = a[1][1] - l10 * u01, u12 = a[1][2] - l10 * u02;
  const cplx l21 = (a[2][1] - l20 * u01) / u11;
  const cplx u22 = a[2][2] - l20 * u02 - l21 * u12;
  const Ilu0<cplx> f(csr_from_dense(a));
  const Dense lu = {{u00, u01, u02}, {l10, u11, u12}, {l20, l21, u22}};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      CHECK(std::abs(f.lu_entry(r, c) - lu[r][c]) < 1e-14);
  std::vector<cplx> b = {{1.0, 2.0}, {-1.0, 0.0}, {0.0, 3.0}};
  const auto ref = dense_solve(a, b);
  f.solve(b.data());
  CHECK(rel_diff(b, ref) < 1e-14);
  CHECK(f.perturbed_pivots() == 0);
}

TEST_CASE("ILU(0) reproduces A on its sparsity pattern") {
  const int n = 40;
  const Dense a = random_sparse(n, 0.12, 11);
  const auto A = csr_from_dense(a);
  const Ilu0<cplx> f(A);
  const auto &p = *A.pattern;
  for (int r = 0; r < n; ++r)
    for (int e = p.row_ptr[r]; e < p.row_ptr[r + 1]; ++e) {
      const int c = p.col_idx[e];
      cplx s = 0.0;
      for (int k = 0; k <= std::min(r, c); ++k) {
        const cplx l = k == r ? 1.0 : f.lu_entry(r, k);
        s += l * f.lu_entry(k, c);
      }
      CHECK(std::abs(s - a[r][c]) < 1e-12);
    }
}

TEST_CASE("ILUT without dropping is an exact solve") {
  const int n = 30;
  const Dense a = random_sparse(n, 0.15, 4);
  const Ilut f(csr_from_dense(a), 0.0, n);
  std::vector<cplx> b(n);
  for (int i = 0; i < n; ++i)
    b[i] = {std::sin(i + 1.0), std::cos(2.0 * i)};
  const auto ref = dense_solve(a, b);
  f.solve(b.data());
  CHECK(rel_diff(b, ref) < 1e-12);
}

TEST_CASE("GMRES matches a dense solve") {
  const int n = 50;
  const Dense a = random_sparse(n, 0.5, 21);
  std::vector<cplx> b(n);
  for (int i = 0; i < n; ++i)
    b[i] = {1.0 / (i + 1.0), 0.1 * i};
  const auto ref = dense_solve(a, b);
  for (int restart : {50, 8}) {
    std::vector<cplx> x(n, 0.0);
    const auto rep = gmres(
        n,
        [&](const cplx *in, cplx *out) {
          const auto y = matvec(a, std::vector<cplx>(in, in + n));
          std::copy(y.begin(), y.end(), out);
        },
        {}, b, x, 1e-12, restart, 2000);
    CHECK(rep.converged);
    CHECK(rel_diff(x, ref) < 1e-9);
    // Residuals never increase.
    for (std::size_t i = 1; i < rep.history.size(); ++i)
      CHECK(rep.history[i] <= rep.history[i - 1] * (1.0 + 1e-12));
  }
  // A zero right-hand side gives the zero solution immediately.
  std::vector<cplx> z(n, 0.0), x(n, 0.0);
  const auto rep = gmres(
      n, [&](const cplx *in, cplx *out) { std::copy(in, in + n, out); }, {}, z, x, 1e-10, 10, 10);
  CHECK(rep.converged);
  CHECK(rep.iterations == 0);
}

TEST_CASE("preconditioned GMRES on the block system agrees with the direct solve") {
  SmallProblem sp;
  SolverOptions direct;
  direct.method = SolverMethod::direct;
  const auto ref = solve_block_system(sp.sys, direct);
  CHECK(ref.report.true_residual < 1e-10);
  std::vector<cplx> xr;
  for (const auto &w : ref.W)
    xr.insert(xr.end(), w.begin(), w.end());
  xr.insert(xr.end(), ref.U.begin(), ref.U.end());

  int shared_iterations = 0, ilu_iterations = 0;
  for (auto kind : {IluKind::shared_lu, IluKind::ilu0, IluKind::ilut}) {
    SolverOptions o;
    o.ilu = kind;
    o.tol = 1e-10;
    if (kind == IluKind::shared_lu)
      o.lu_groups = 2;
    const auto s = solve_block_system(sp.sys, o);
    CHECK(s.report.converged);
    CHECK(s.report.true_residual < 1e-6);
    std::vector<cplx> x;
    for (const auto &w : s.W)
      x.insert(x.end(), w.begin(), w.end());
    x.insert(x.end(), s.U.begin(), s.U.end());
    CHECK(rel_diff(x, xr) < 1e-6);
    if (kind == IluKind::shared_lu)
      shared_iterations = s.report.iterations;
    if (kind == IluKind::ilu0)
      ilu_iterations = s.report.iterations;
  }
  CHECK(shared_iterations < ilu_iterations);
}

TEST_CASE("shared LU reuses a few reference factors") {
  SmallProblem sp;
  for (int groups : {1, 2, 6, 50}) {
    SolverOptions o;
    o.ilu = IluKind::shared_lu;
    o.lu_groups = groups;
    const BlockPreconditioner P(sp.sys, o);
    CHECK(P.distinct_factors() == std::min(groups, sp.sys.N()));
  }
  // One factor per interval is the exact block-diagonal inverse.
  SolverOptions o;
  o.ilu = IluKind::shared_lu;
  o.lu_groups = sp.sys.N();
  const BlockPreconditioner P(sp.sys, o);
  const int Mt = sp.sys.Mt;
  std::vector<cplx> x(sp.sys.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = {std::cos(0.3 * i), std::sin(0.7 * i)};
  std::vector<cplx> y = x;
  P.apply(y.data());
  for (int j = 0; j < sp.sys.N(); ++j) {
    std::vector<cplx> ay(Mt);
    sp.sys.apply_A(j, y.data() + static_cast<std::size_t>(j) * Mt, ay.data());
    CHECK(rel_diff(ay, std::vector<cplx>(x.begin() + j * Mt, x.begin() + (j + 1) * Mt)) < 1e-10);
  }
  // The last block row is left untouched.
  for (std::size_t i = static_cast<std::size_t>(sp.sys.N()) * Mt; i < x.size(); ++i)
    CHECK(y[i] == x[i]);
}

TEST_CASE("single-precision ILU storage still converges") {
  SmallProblem sp;
  SolverOptions o;
  o.ilu = IluKind::ilu0;
  o.precision = IluPrecision::single_precision;
  const auto s = solve_block_system(sp.sys, o);
  CHECK(s.report.converged);
  CHECK(s.report.true_residual < 1e-5);
}

TEST_CASE("GMRES restart shrinks to the Krylov memory budget") {
  SmallProblem sp;
  SolverOptions o;
  o.ilu = IluKind::shared_lu;
  o.memory_budget_gb = 12.0 * sp.sys.size() * sizeof(cplx) / 1e9;
  const auto s = solve_block_system(sp.sys, o);
  CHECK(s.report.restart_length <= 11);
  CHECK(s.report.converged);
}
