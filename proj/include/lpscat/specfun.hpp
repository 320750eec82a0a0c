#pragma once

#include "lpscat/types.hpp"

namespace lpscat {

struct WaveParams {
  double k = 1.0;
  double period = 2.0 * pi;
  // Mode sign: the m-th mode of an alpha-quasiperiodic field is exp(i (L* m + sigma alpha) x1).
  int sigma = -1;

  double dual_period() const { return 2.0 * pi / period; }
  double kappa(long m, double alpha) const { return dual_period() * m + sigma * alpha; }
};

// Square root with the branch cut on the negative imaginary axis.
cplx branch_sqrt(cplx z);

cplx beta(long j, double alpha, const WaveParams &p);

// H_0^(1)(x) = J0(x) + i Y0(x) for x > 0.
cplx hankel0_first(double x);
// H_1^(1)(x), used for gradients of the Green's function.
cplx hankel1_first(double x);

cplx csinc(cplx z);

} // namespace lpscat
