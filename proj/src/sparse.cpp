#include "lpscat/sparse.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>

namespace lpscat {

int CsrPattern::find(int r, int c) const {
  const auto b = col_idx.begin() + row_ptr[r], e = col_idx.begin() + row_ptr[r + 1];
  const auto it = std::lower_bound(b, e, c);
  return (it != e && *it == c) ? static_cast<int>(it - col_idx.begin()) : -1;
}

CsrPattern pattern_from_rows(int rows, int cols, std::vector<std::vector<int>> row_cols) {
  CsrPattern p;
  p.rows = rows;
  p.cols = cols;
  p.row_ptr.assign(rows + 1, 0);
  for (int r = 0; r < rows; ++r) {
    auto &v = row_cols[r];
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    p.row_ptr[r + 1] = p.row_ptr[r] + static_cast<int>(v.size());
  }
  p.col_idx.reserve(p.row_ptr[rows]);
  for (int r = 0; r < rows; ++r)
    p.col_idx.insert(p.col_idx.end(), row_cols[r].begin(), row_cols[r].end());
  return p;
}

void parallel_for(int n, int jobs, const std::function<void(int)> &f) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i)
      f(i);
    return;
  }
  std::exception_ptr err;
  std::mutex m;
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&, t] {
      try {
        for (int i = t; i < n; i += jobs)
          f(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!err)
          err = std::current_exception();
      }
    });
  for (auto &th : pool)
    th.join();
  if (err)
    std::rethrow_exception(err);
}

} // namespace lpscat
