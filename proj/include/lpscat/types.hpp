#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <string>

namespace lpscat {

using cplx = std::complex<double>;
inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr cplx I{0.0, 1.0};

struct Point2 {
  double x1 = 0.0;
  double x2 = 0.0;
};

// Row-major 2x2 real matrix.
using Mat2 = std::array<double, 4>;

// Error taxonomy. DomainError: caller passed a point/argument outside the
// operation's domain. GeometryError: inadmissible surface or perturbation.
// NumericError: an iteration failed to converge.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace lpscat
