#include "lpscat/solver.hpp"
#include "lpscat/log.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <umfpack.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <sstream>

namespace lpscat {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double inf_norm(const CsrMatrix<cplx> &A) {
  const auto &p = *A.pattern;
  double nrm = 0.0;
  for (int r = 0; r < p.rows; ++r) {
    double s = 0.0;
    for (int e = p.row_ptr[r]; e < p.row_ptr[r + 1]; ++e)
      s += std::abs(A.values[e]);
    nrm = std::max(nrm, s);
  }
  return nrm;
}

double norm2(const std::vector<cplx> &v) {
  double s = 0.0;
  for (const auto &z : v)
    s += std::norm(z);
  return std::sqrt(s);
}

} // namespace

template <class T> Ilu0<T>::Ilu0(const CsrMatrix<cplx> &A) : pattern_(A.pattern) {
  const auto &p = *pattern_;
  const int n = p.rows;
  std::vector<cplx> a = A.values;
  diag_.assign(n, -1);
  for (int r = 0; r < n; ++r)
    diag_[r] = p.find(r, r);
  const double anorm = inf_norm(A);
  std::vector<int> pos(n, -1);
  for (int i = 0; i < n; ++i) {
    if (diag_[i] < 0)
      throw NumericError("ILU(0): missing diagonal entry");
    for (int e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e)
      pos[p.col_idx[e]] = e;
    for (int e = p.row_ptr[i]; e < diag_[i]; ++e) {
      const int k = p.col_idx[e];
      a[e] /= a[diag_[k]];
      const cplx lik = a[e];
      for (int f = diag_[k] + 1; f < p.row_ptr[k + 1]; ++f) {
        const int q = pos[p.col_idx[f]];
        if (q >= 0)
          a[q] -= lik * a[f];
      }
    }
    if (std::abs(a[diag_[i]]) < 1e-14 * anorm) {
      a[diag_[i]] += 1e-8 * anorm;
      ++perturbed_;
    }
    for (int e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e)
      pos[p.col_idx[e]] = -1;
  }
  if (perturbed_ > 0) {
    std::ostringstream os;
    os << "ILU(0): perturbed " << perturbed_ << " near-zero pivots";
    log::warn(os.str());
  }
  values_.assign(a.begin(), a.end());
}

template <class T> void Ilu0<T>::solve(cplx *x) const {
  const auto &p = *pattern_;
  const int n = p.rows;
  for (int i = 0; i < n; ++i) {
    cplx acc = x[i];
    for (int e = p.row_ptr[i]; e < diag_[i]; ++e)
      acc -= cplx(values_[e]) * x[p.col_idx[e]];
    x[i] = acc;
  }
  for (int i = n - 1; i >= 0; --i) {
    cplx acc = x[i];
    for (int e = diag_[i] + 1; e < p.row_ptr[i + 1]; ++e)
      acc -= cplx(values_[e]) * x[p.col_idx[e]];
    x[i] = acc / cplx(values_[diag_[i]]);
  }
}

template <class T> cplx Ilu0<T>::lu_entry(int r, int c) const {
  const int e = pattern_->find(r, c);
  return e < 0 ? cplx(0.0) : cplx(values_[e]);
}

template class Ilu0<std::complex<double>>;
template class Ilu0<std::complex<float>>;

Ilut::Ilut(const CsrMatrix<cplx> &A, double tau, int fill) {
  const auto &p = *A.pattern;
  n_ = p.rows;
  lptr_.assign(1, 0);
  uptr_.assign(1, 0);
  const double anorm = inf_norm(A);
  std::vector<cplx> w(n_, 0.0);
  std::vector<char> used(n_, 0);
  std::vector<int> nz;
  for (int i = 0; i < n_; ++i) {
    double rnorm = 0.0;
    nz.clear();
    std::priority_queue<int, std::vector<int>, std::greater<int>> lower;
    for (int e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e) {
      const int c = p.col_idx[e];
      w[c] = A.values[e];
      used[c] = 1;
      nz.push_back(c);
      rnorm += std::norm(A.values[e]);
      if (c < i)
        lower.push(c);
    }
    rnorm = std::sqrt(rnorm);
    const double drop = tau * rnorm;
    int last = -1;
    while (!lower.empty()) {
      const int k = lower.top();
      lower.pop();
      if (k == last)
        continue;
      last = k;
      const cplx lik = w[k] / uval_[uptr_[k]];
      if (std::abs(lik) < drop) {
        w[k] = 0.0;
        continue;
      }
      w[k] = lik;
      for (int f = uptr_[k] + 1; f < uptr_[k + 1]; ++f) {
        const int c = ucol_[f];
        if (!used[c]) {
          used[c] = 1;
          w[c] = 0.0;
          nz.push_back(c);
          if (c < i)
            lower.push(c);
        }
        w[c] -= lik * uval_[f];
      }
    }
    std::vector<std::pair<double, int>> lpart, upart;
    cplx diag = 0.0;
    for (int c : nz) {
      if (c == i)
        diag = w[c];
      else if (std::abs(w[c]) >= drop && w[c] != 0.0)
        (c < i ? lpart : upart).emplace_back(std::abs(w[c]), c);
    }
    auto keep_largest = [fill](std::vector<std::pair<double, int>> &v) {
      if (static_cast<int>(v.size()) > fill) {
        std::nth_element(v.begin(), v.begin() + fill, v.end(), std::greater<>());
        v.resize(fill);
      }
      std::sort(v.begin(), v.end(), [](auto &x, auto &y) { return x.second < y.second; });
    };
    keep_largest(lpart);
    keep_largest(upart);
    for (auto &[m, c] : lpart) {
      lcol_.push_back(c);
      lval_.push_back(w[c]);
    }
    if (std::abs(diag) < 1e-14 * anorm)
      diag += 1e-8 * anorm;
    ucol_.push_back(i);
    uval_.push_back(diag);
    for (auto &[m, c] : upart) {
      ucol_.push_back(c);
      uval_.push_back(w[c]);
    }
    lptr_.push_back(static_cast<int>(lcol_.size()));
    uptr_.push_back(static_cast<int>(ucol_.size()));
    for (int c : nz) {
      used[c] = 0;
      w[c] = 0.0;
    }
  }
}

void Ilut::solve(cplx *x) const {
  for (int i = 0; i < n_; ++i) {
    cplx acc = x[i];
    for (int e = lptr_[i]; e < lptr_[i + 1]; ++e)
      acc -= lval_[e] * x[lcol_[e]];
    x[i] = acc;
  }
  for (int i = n_ - 1; i >= 0; --i) {
    cplx acc = x[i];
    for (int e = uptr_[i] + 1; e < uptr_[i + 1]; ++e)
      acc -= uval_[e] * x[ucol_[e]];
    x[i] = acc / uval_[uptr_[i]];
  }
}

std::size_t Ilut::memory_bytes() const {
  return (lval_.size() + uval_.size()) * sizeof(cplx) + (lcol_.size() + ucol_.size()) * sizeof(int);
}

SolverReport gmres(std::size_t n, const LinearOperator &A, const PreconditionerOp &P, const std::vector<cplx> &b,
                   std::vector<cplx> &x, double tol, int restart, int maxiter) {
  const auto t0 = Clock::now();
  SolverReport rep;
  rep.method = "gmres";
  rep.restart_length = restart;
  x.resize(n, 0.0);
  auto precond = [&](std::vector<cplx> &v) {
    if (P)
      P(v.data());
  };
  std::vector<cplx> pb = b;
  precond(pb);
  const double bnorm = norm2(pb);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    rep.converged = true;
    rep.seconds = seconds_since(t0);
    return rep;
  }
  std::vector<cplx> r(n);
  auto residual = [&]() {
    A(x.data(), r.data());
    for (std::size_t i = 0; i < n; ++i)
      r[i] = b[i] - r[i];
    precond(r);
    return norm2(r);
  };
  double beta = residual();
  rep.residual = beta / bnorm;
  if (rep.residual <= tol) {
    rep.converged = true;
    rep.seconds = seconds_since(t0);
    return rep;
  }
  const int m = std::max(1, restart);
  std::vector<std::vector<cplx>> V;
  std::vector<std::vector<cplx>> H(m + 1, std::vector<cplx>(m, 0.0));
  std::vector<double> cs(m);
  std::vector<cplx> sn(m), g(m + 1);
  std::vector<cplx> w(n);
  while (rep.iterations < maxiter) {
    if (V.empty())
      V.emplace_back(n);
    for (std::size_t i = 0; i < n; ++i)
      V[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    int used = 0;
    for (int i = 0; i < m && rep.iterations < maxiter; ++i) {
      A(V[i].data(), w.data());
      precond(w);
      for (int pass = 0; pass < 2; ++pass)
        for (int k = 0; k <= i; ++k) {
          cplx h = 0.0;
          for (std::size_t t = 0; t < n; ++t)
            h += std::conj(V[k][t]) * w[t];
          for (std::size_t t = 0; t < n; ++t)
            w[t] -= h * V[k][t];
          H[k][i] = pass == 0 ? h : H[k][i] + h;
        }
      const double hn = norm2(w);
      H[i + 1][i] = hn;
      if (static_cast<int>(V.size()) < i + 2)
        V.emplace_back(n);
      if (hn > 0.0)
        for (std::size_t t = 0; t < n; ++t)
          V[i + 1][t] = w[t] / hn;
      for (int k = 0; k < i; ++k) {
        const cplx a = H[k][i], c = H[k + 1][i];
        H[k][i] = cs[k] * a + sn[k] * c;
        H[k + 1][i] = -std::conj(sn[k]) * a + cs[k] * c;
      }
      const cplx a = H[i][i];
      const double bb = hn;
      const double t = std::hypot(std::abs(a), bb);
      if (bb == 0.0) {
        cs[i] = 1.0;
        sn[i] = 0.0;
      } else if (std::abs(a) == 0.0) {
        cs[i] = 0.0;
        sn[i] = 1.0;
      } else {
        cs[i] = std::abs(a) / t;
        sn[i] = a / std::abs(a) * bb / t;
      }
      H[i][i] = cs[i] * a + sn[i] * bb;
      H[i + 1][i] = 0.0;
      g[i + 1] = -std::conj(sn[i]) * g[i];
      g[i] = cs[i] * g[i];
      ++rep.iterations;
      used = i + 1;
      const double res = std::abs(g[i + 1]) / bnorm;
      rep.history.push_back(res);
      if (res <= tol || hn == 0.0)
        break;
    }
    std::vector<cplx> y(used);
    for (int i = used - 1; i >= 0; --i) {
      cplx s = g[i];
      for (int k = i + 1; k < used; ++k)
        s -= H[i][k] * y[k];
      y[i] = s / H[i][i];
    }
    for (int k = 0; k < used; ++k)
      for (std::size_t t = 0; t < n; ++t)
        x[t] += y[k] * V[k][t];
    beta = residual();
    rep.residual = beta / bnorm;
    if (rep.residual <= tol) {
      rep.converged = true;
      break;
    }
    ++rep.restarts;
    std::ostringstream os;
    os << "GMRES restart " << rep.restarts << " after " << rep.iterations << " iterations, residual "
       << rep.residual;
    log::info(os.str());
  }
  rep.seconds = seconds_since(t0);
  return rep;
}

namespace {

// UMFPACK factors of matrices sharing one CSR pattern. The CSR arrays are
// handed over as the CSC arrays of A^T, so solves use the transposed system.
class UmfpackSymbolic {
public:
  explicit UmfpackSymbolic(std::shared_ptr<const CsrPattern> pattern) : pattern_(std::move(pattern)) {
    umfpack_zi_defaults(control_);
    control_[UMFPACK_IRSTEP] = 0; // preconditioner use: no iterative refinement
    std::vector<double> zeros(2 * pattern_->nnz(), 1.0);
    const int status = umfpack_zi_symbolic(pattern_->rows, pattern_->cols, pattern_->row_ptr.data(),
                                           pattern_->col_idx.data(), zeros.data(), nullptr, &symbolic_, control_,
                                           nullptr);
    if (status != UMFPACK_OK)
      throw NumericError("UMFPACK symbolic analysis failed with status " + std::to_string(status));
  }
  ~UmfpackSymbolic() { umfpack_zi_free_symbolic(&symbolic_); }
  UmfpackSymbolic(const UmfpackSymbolic &) = delete;
  UmfpackSymbolic &operator=(const UmfpackSymbolic &) = delete;

  const CsrPattern &pattern() const { return *pattern_; }
  void *handle() const { return symbolic_; }
  const double *control() const { return control_; }

private:
  std::shared_ptr<const CsrPattern> pattern_;
  void *symbolic_ = nullptr;
  double control_[UMFPACK_CONTROL];
};

class UmfpackFactor {
public:
  UmfpackFactor(std::shared_ptr<const UmfpackSymbolic> sym, const CsrMatrix<cplx> &A)
      : sym_(std::move(sym)), values_(A.values) {
    const auto &p = sym_->pattern();
    double info[UMFPACK_INFO];
    const int status = umfpack_zi_numeric(p.row_ptr.data(), p.col_idx.data(), reinterpret_cast<double *>(values_.data()),
                                          nullptr, sym_->handle(), &numeric_, sym_->control(), info);
    if (status != UMFPACK_OK)
      throw NumericError("UMFPACK factorization failed with status " + std::to_string(status));
    bytes_ = static_cast<std::size_t>(info[UMFPACK_NUMERIC_SIZE] * info[UMFPACK_SIZE_OF_UNIT]);
  }
  ~UmfpackFactor() { umfpack_zi_free_numeric(&numeric_); }
  UmfpackFactor(const UmfpackFactor &) = delete;
  UmfpackFactor &operator=(const UmfpackFactor &) = delete;

  // x <- A^{-1} x
  void solve(cplx *x) const {
    const auto &p = sym_->pattern();
    std::vector<cplx> b(x, x + p.rows);
    const int status =
        umfpack_zi_solve(UMFPACK_Aat, p.row_ptr.data(), p.col_idx.data(), reinterpret_cast<const double *>(values_.data()),
                         nullptr, reinterpret_cast<double *>(x), nullptr, reinterpret_cast<const double *>(b.data()),
                         nullptr, numeric_, sym_->control(), nullptr);
    if (status < 0)
      throw NumericError("UMFPACK solve failed with status " + std::to_string(status));
  }
  std::size_t memory_bytes() const { return bytes_ + values_.size() * sizeof(cplx); }

private:
  std::shared_ptr<const UmfpackSymbolic> sym_;
  std::vector<cplx> values_;
  void *numeric_ = nullptr;
  std::size_t bytes_ = 0;
};

class SharedLu : public LocalPreconditioner {
public:
  explicit SharedLu(std::shared_ptr<const UmfpackFactor> lu) : lu_(std::move(lu)) {}
  void solve(cplx *x) const override { lu_->solve(x); }
  std::size_t memory_bytes() const override { return lu_->memory_bytes(); }

private:
  std::shared_ptr<const UmfpackFactor> lu_;
};

} // namespace

BlockPreconditioner::BlockPreconditioner(const BlockSystem &sys, const SolverOptions &opt) : Mt_(sys.Mt) {
  const int N = sys.N();
  blocks_.resize(N);
  if (opt.ilu == IluKind::shared_lu) {
    // The first factor fixes the per-factor cost used to size the group count.
    auto sym = std::make_shared<const UmfpackSymbolic>(sys.a_pattern);
    auto first = std::make_shared<const UmfpackFactor>(sym, sys.materialize_A(N / 2));
    const double bytes = static_cast<double>(first->memory_bytes());
    int G = opt.lu_groups > 0 ? opt.lu_groups : static_cast<int>(opt.lu_budget_gb * 1e9 / bytes);
    G = std::clamp(G, 1, N);
    std::vector<std::shared_ptr<const UmfpackFactor>> factors(G);
    std::vector<int> ref(G);
    for (int g = 0; g < G; ++g) {
      const int lo = static_cast<int>(static_cast<long>(g) * N / G);
      const int hi = static_cast<int>(static_cast<long>(g + 1) * N / G);
      ref[g] = (lo + hi) / 2;
      if (ref[g] == N / 2)
        factors[g] = first;
    }
    parallel_for(G, opt.jobs, [&](int g) {
      if (!factors[g])
        factors[g] = std::make_shared<const UmfpackFactor>(sym, sys.materialize_A(ref[g]));
    });
    for (int j = 0; j < N; ++j) {
      const int g = static_cast<int>(static_cast<long>(j) * G / N);
      blocks_[j] = std::make_unique<SharedLu>(factors[g]);
    }
    distinct_ = G;
    std::ostringstream os;
    os << "shared LU preconditioner: " << G << " reference factor(s), " << bytes / 1e6 << " MB each";
    log::info(os.str());
    return;
  }
  distinct_ = N;
  parallel_for(N, opt.jobs, [&](int j) {
    const auto A = sys.materialize_A(j);
    switch (opt.ilu) {
    case IluKind::ilut:
      blocks_[j] = std::make_unique<Ilut>(A, opt.ilut_tau, opt.ilut_fill);
      break;
    default:
      if (opt.precision == IluPrecision::single_precision)
        blocks_[j] = std::make_unique<Ilu0<std::complex<float>>>(A);
      else
        blocks_[j] = std::make_unique<Ilu0<std::complex<double>>>(A);
      break;
    }
  });
}

void BlockPreconditioner::apply(cplx *x, int jobs) const {
  parallel_for(static_cast<int>(blocks_.size()), jobs, [&](int j) { blocks_[j]->solve(x + j * Mt_); });
}

std::size_t BlockPreconditioner::memory_bytes() const {
  if (blocks_.empty())
    return 0;
  if (distinct_ < static_cast<int>(blocks_.size()))
    return static_cast<std::size_t>(distinct_) * blocks_.front()->memory_bytes();
  std::size_t s = 0;
  for (const auto &b : blocks_)
    s += b->memory_bytes();
  return s;
}

std::vector<cplx> direct_solve(const BlockSystem &sys, const std::vector<cplx> &b) {
  const auto trip = system_triplets(sys);
  std::vector<Eigen::Triplet<cplx>> et;
  et.reserve(trip.size());
  for (const auto &t : trip)
    et.emplace_back(t.row, t.col, t.value);
  const auto n = static_cast<Eigen::Index>(sys.size());
  Eigen::SparseMatrix<cplx> A(n, n);
  A.setFromTriplets(et.begin(), et.end());
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw NumericError("sparse LU factorization failed: " + lu.lastErrorMessage());
  Eigen::Map<const Eigen::VectorXcd> rhs(b.data(), n);
  Eigen::VectorXcd x = lu.solve(rhs);
  return std::vector<cplx>(x.data(), x.data() + n);
}

BlockSolution solve_block_system(const BlockSystem &sys, const SolverOptions &opt) {
  const std::size_t n = sys.size();
  const auto b = sys.rhs_vector();
  std::vector<cplx> x(n, 0.0);
  SolverReport rep;
  if (opt.method == SolverMethod::direct) {
    if (n > opt.direct_threshold) {
      std::ostringstream os;
      os << "direct solve on " << n << " unknowns exceeds the threshold " << opt.direct_threshold;
      log::warn(os.str());
    }
    const auto t0 = Clock::now();
    x = direct_solve(sys, b);
    rep.method = "direct";
    rep.seconds = seconds_since(t0);
    rep.converged = true;
  } else {
    int restart = opt.restart;
    const double per_vector = static_cast<double>(n) * sizeof(cplx);
    const int fit = static_cast<int>(opt.memory_budget_gb * 1e9 / per_vector) - 1;
    if (fit < restart) {
      restart = std::max(5, fit);
      std::ostringstream os;
      os << "GMRES restart reduced from " << opt.restart << " to " << restart << " to fit a "
         << opt.memory_budget_gb << " GB Krylov budget";
      log::warn(os.str());
    }
    const auto t0 = Clock::now();
    std::unique_ptr<BlockPreconditioner> P;
    if (opt.ilu != IluKind::none)
      P = std::make_unique<BlockPreconditioner>(sys, opt);
    const double setup = seconds_since(t0);
    rep = gmres(
        n, [&](const cplx *in, cplx *out) { sys.apply(in, out, opt.jobs); },
        P ? PreconditionerOp([&](cplx *v) { P->apply(v, opt.jobs); }) : PreconditionerOp{}, b, x, opt.tol,
        restart, opt.maxiter);
    rep.setup_seconds = setup;
    rep.seconds += setup;
  }
  std::vector<cplx> ax(n);
  sys.apply(x.data(), ax.data(), opt.jobs);
  double rn = 0.0, bn = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rn += std::norm(b[i] - ax[i]);
    bn += std::norm(b[i]);
  }
  rep.true_residual = bn > 0.0 ? std::sqrt(rn / bn) : std::sqrt(rn);
  BlockSolution out;
  out.W.resize(sys.N());
  for (int j = 0; j < sys.N(); ++j)
    out.W[j].assign(x.begin() + static_cast<std::ptrdiff_t>(j) * sys.Mt,
                    x.begin() + static_cast<std::ptrdiff_t>(j + 1) * sys.Mt);
  out.U.assign(x.begin() + static_cast<std::ptrdiff_t>(sys.N()) * sys.Mt, x.end());
  out.report = std::move(rep);
  return out;
}

} // namespace lpscat
