#pragma once

#include "lpscat/types.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace lpscat {

// Compressed sparse row pattern; column indices sorted within each row.
struct CsrPattern {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;
  std::vector<int> col_idx;

  std::size_t nnz() const { return col_idx.size(); }
  // Position of (r, c) in col_idx, or -1.
  int find(int r, int c) const;
};

CsrPattern pattern_from_rows(int rows, int cols, std::vector<std::vector<int>> row_cols);

template <class T> struct CsrMatrix {
  std::shared_ptr<const CsrPattern> pattern;
  std::vector<T> values;

  int rows() const { return pattern->rows; }
  // y += A x
  void multiply_add(const cplx *x, cplx *y) const {
    const auto &p = *pattern;
    for (int r = 0; r < p.rows; ++r) {
      cplx acc = 0.0;
      for (int e = p.row_ptr[r]; e < p.row_ptr[r + 1]; ++e)
        acc += cplx(values[e]) * x[p.col_idx[e]];
      y[r] += acc;
    }
  }
};

// Runs f(0..n-1) on up to `jobs` threads with a static cyclic split.
void parallel_for(int n, int jobs, const std::function<void(int)> &f);

} // namespace lpscat
