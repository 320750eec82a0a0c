#include "lpscat/specfun.hpp"

#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <sstream>

namespace lpscat {

cplx branch_sqrt(cplx z) {
  cplx w = std::sqrt(z);
  // std::sqrt has its cut on the negative real axis; rotate results with
  // arg(w) < -pi/4 onto the other sheet.
  if (std::arg(w) < -0.25 * pi)
    w = -w;
  return w;
}

cplx beta(long j, double alpha, const WaveParams &p) {
  const double kap = p.kappa(j, alpha);
  return branch_sqrt(cplx(p.k * p.k - kap * kap, 0.0));
}

cplx hankel0_first(double x) {
  if (!(x > 0.0)) {
    std::ostringstream os;
    os << "hankel0_first requires x > 0, got " << x;
    throw DomainError(os.str());
  }
  return {boost::math::cyl_bessel_j(0, x), boost::math::cyl_neumann(0, x)};
}

cplx hankel1_first(double x) {
  if (!(x > 0.0)) {
    std::ostringstream os;
    os << "hankel1_first requires x > 0, got " << x;
    throw DomainError(os.str());
  }
  return {boost::math::cyl_bessel_j(1, x), boost::math::cyl_neumann(1, x)};
}

cplx csinc(cplx z) {
  if (std::abs(z) < 1e-4) {
    const cplx z2 = z * z;
    return 1.0 - z2 / 6.0 + z2 * z2 / 120.0 - z2 * z2 * z2 / 5040.0;
  }
  return std::sin(z) / z;
}

} // namespace lpscat
