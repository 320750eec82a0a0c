#pragma once

#include "lpscat/mesh.hpp"
#include "lpscat/specfun.hpp"

#include <vector>

namespace lpscat {

// Piecewise-linear hat traces on the top boundary x2 = H, in x1 order.
struct TraceBasis {
  double period = 0.0;
  std::vector<int> nodes; // mesh node index of each top dof
  std::vector<double> x;  // abscissae
  std::vector<double> hl; // left / right support widths
  std::vector<double> hr;
  int M_dtn = 32;
  bool uniform = false;

  int size() const { return static_cast<int>(nodes.size()); }
  // t_{l,m} = integral of phi_l(x1, H) exp(-i L* m x1) dx1.
  cplx coefficient(int l, long m) const;
};

// M_dtn <= 0 selects max(32, 4 * number of top intervals).
TraceBasis make_trace_basis(const CellMesh &mesh, int M_dtn = 0);

cplx dtn_multiplier(long m, double alpha, const WaveParams &p);
// Integral of dtn_multiplier(m, alpha) over alpha in [a, b], in closed form.
cplx dtn_multiplier_interval(long m, double a, double b, const WaveParams &p);

// Alpha-integrated DtN boundary matrix over the top dofs. Row l is the test
// function, column l' the trial function.
class DtnBlock {
public:
  DtnBlock() = default;
  DtnBlock(int n, bool circulant, std::vector<cplx> data) : n_(n), circulant_(circulant), data_(std::move(data)) {}

  int size() const { return n_; }
  bool circulant() const { return circulant_; }
  cplx operator()(int r, int c) const {
    return circulant_ ? data_[((r - c) % n_ + n_) % n_] : data_[static_cast<std::size_t>(r) * n_ + c];
  }
  // y[l] += sum_l' B(l, l') x[l'] with x, y indexed by top dof.
  template <class GetX, class AddY> void apply(GetX &&x, AddY &&y) const {
    for (int r = 0; r < n_; ++r) {
      cplx acc = 0.0;
      for (int c = 0; c < n_; ++c)
        acc += (*this)(r, c) * x(c);
      y(r, acc);
    }
  }
  double frobenius_norm() const;

  double a = 0.0, b = 0.0; // alpha interval

private:
  int n_ = 0;
  bool circulant_ = false;
  std::vector<cplx> data_;
};

DtnBlock assemble_dtn_block(const TraceBasis &basis, double a, double b, const WaveParams &p);

} // namespace lpscat
