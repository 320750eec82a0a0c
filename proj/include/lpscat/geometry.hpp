#pragma once

#include "lpscat/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace lpscat {

// Periodic surface x2 = zeta(x1) with period Lambda.
struct SurfaceProfile {
  double period = 2.0 * pi;
  std::function<double(double)> height;
  std::function<double(double)> height_deriv;
  double min_height = 0.0;
  double max_height = 0.0;
  std::string name;
};

// Compactly supported bump g, so that zeta_p = zeta + g.
struct PerturbationProfile {
  std::function<double(double)> bump;
  std::function<double(double)> bump_deriv;
  double support_a = 0.0;
  double support_b = 0.0;
  std::string name;

  bool is_zero() const { return !bump; }
};

SurfaceProfile make_surface(std::string name, double period, std::function<double(double)> h,
                            std::function<double(double)> dh);
// zeta(x) = a0 + sum_n a_n cos(n L* x) + b_n sin(n L* x), L* = 2 pi / period.
SurfaceProfile fourier_surface(double period, double a0, std::vector<double> a, std::vector<double> b);
SurfaceProfile surface_f1(); // 1 + sin(t)/4
SurfaceProfile surface_f2(); // 1.9 + sin(t)/3 - cos(2t)/4
SurfaceProfile flat_surface(double height, double period = 2.0 * pi);

PerturbationProfile bump_none();
PerturbationProfile bump_g1(); // supported on [-2, 0]
PerturbationProfile bump_g2(); // supported on [-1, 1]
PerturbationProfile bump_by_name(const std::string &name, double amplitude = 1.0);

class Geometry {
public:
  Geometry(SurfaceProfile surface, PerturbationProfile perturbation, double H);

  const SurfaceProfile &surface() const { return surface_; }
  const PerturbationProfile &perturbation() const { return perturbation_; }
  double H() const { return H_; }
  double period() const { return surface_.period; }
  bool perturbed() const { return !perturbation_.is_zero(); }

  double zeta(double x1) const { return surface_.height(x1); }
  double zeta_deriv(double x1) const { return surface_.height_deriv(x1); }
  // Bump value g(x1); zero outside its support within the reference cell.
  double bump(double x1) const;
  double bump_deriv(double x1) const;
  double zeta_p(double x1) const { return zeta(x1) + bump(x1); }
  double min_zeta_p() const { return min_zeta_p_; }

  // True if x1 lies in the closed x1-support of the perturbation.
  bool in_support(double x1) const;

private:
  SurfaceProfile surface_;
  PerturbationProfile perturbation_;
  double H_;
  double min_zeta_p_ = 0.0;
};

Geometry make_geometry(const std::string &name, double H);

Point2 phi_p(const Geometry &g, Point2 x);
Point2 phi_p_inverse(const Geometry &g, Point2 y);
Mat2 jacobian_phi_p(const Geometry &g, Point2 x);

struct Coefficients {
  Mat2 A; // symmetric positive definite
  double c = 1.0;
};
Coefficients coefficients(const Geometry &g, Point2 x);

} // namespace lpscat
