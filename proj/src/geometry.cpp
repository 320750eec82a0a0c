#include "lpscat/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lpscat {

namespace {

constexpr int kSamples = 4096;

void sample_extrema(SurfaceProfile &s) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int i = 0; i < kSamples; ++i) {
    const double x = -0.5 * s.period + s.period * i / kSamples;
    const double v = s.height(x);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  s.min_height = lo;
  s.max_height = hi;
}

// exp(1/q) with q < 0, guarded against underflow turning 0 * inf into NaN.
double exp_recip(double q) {
  if (q >= 0.0)
    return 0.0;
  const double e = 1.0 / q;
  return e < -700.0 ? 0.0 : std::exp(e);
}

} // namespace

SurfaceProfile make_surface(std::string name, double period, std::function<double(double)> h,
                            std::function<double(double)> dh) {
  SurfaceProfile s;
  s.name = std::move(name);
  s.period = period;
  s.height = std::move(h);
  s.height_deriv = std::move(dh);
  sample_extrema(s);
  return s;
}

SurfaceProfile fourier_surface(double period, double a0, std::vector<double> a, std::vector<double> b) {
  const double ls = 2.0 * pi / period;
  auto h = [=](double x) {
    double v = a0;
    for (std::size_t n = 0; n < a.size(); ++n)
      v += a[n] * std::cos((n + 1) * ls * x);
    for (std::size_t n = 0; n < b.size(); ++n)
      v += b[n] * std::sin((n + 1) * ls * x);
    return v;
  };
  auto dh = [=](double x) {
    double v = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n)
      v -= a[n] * (n + 1) * ls * std::sin((n + 1) * ls * x);
    for (std::size_t n = 0; n < b.size(); ++n)
      v += b[n] * (n + 1) * ls * std::cos((n + 1) * ls * x);
    return v;
  };
  return make_surface("fourier", period, h, dh);
}

SurfaceProfile surface_f1() {
  return make_surface(
      "f1", 2.0 * pi, [](double t) { return 1.0 + std::sin(t) / 4.0; },
      [](double t) { return std::cos(t) / 4.0; });
}

SurfaceProfile surface_f2() {
  return make_surface(
      "f2", 2.0 * pi, [](double t) { return 1.9 + std::sin(t) / 3.0 - std::cos(2.0 * t) / 4.0; },
      [](double t) { return std::cos(t) / 3.0 + std::sin(2.0 * t) / 2.0; });
}

SurfaceProfile flat_surface(double height, double period) {
  auto s = make_surface(
      "flat", period, [height](double) { return height; }, [](double) { return 0.0; });
  return s;
}

PerturbationProfile bump_none() { return PerturbationProfile{{}, {}, 0.0, 0.0, "none"}; }

PerturbationProfile bump_g1() {
  PerturbationProfile p;
  p.name = "g1";
  p.support_a = -2.0;
  p.support_b = 0.0;
  p.bump = [](double t) {
    if (t <= -2.0 || t >= 0.0)
      return 0.0;
    return exp_recip(t * (t + 2.0)) * (std::cos(pi * (t + 2.0) / 2.0) + 1.0);
  };
  p.bump_deriv = [](double t) {
    if (t <= -2.0 || t >= 0.0)
      return 0.0;
    const double q = t * (t + 2.0);
    const double e = exp_recip(q);
    if (e == 0.0)
      return 0.0;
    const double c = std::cos(pi * (t + 2.0) / 2.0) + 1.0;
    const double dc = -0.5 * pi * std::sin(pi * (t + 2.0) / 2.0);
    return e * (-(2.0 * t + 2.0) / (q * q) * c + dc);
  };
  return p;
}

PerturbationProfile bump_g2() {
  PerturbationProfile p;
  p.name = "g2";
  p.support_a = -1.0;
  p.support_b = 1.0;
  p.bump = [](double t) {
    if (t <= -1.0 || t >= 1.0)
      return 0.0;
    return exp_recip((t + 1.0) * (t - 1.0)) * std::sin(pi * (t + 1.0));
  };
  p.bump_deriv = [](double t) {
    if (t <= -1.0 || t >= 1.0)
      return 0.0;
    const double q = (t + 1.0) * (t - 1.0);
    const double e = exp_recip(q);
    if (e == 0.0)
      return 0.0;
    return e * (-(2.0 * t) / (q * q) * std::sin(pi * (t + 1.0)) + pi * std::cos(pi * (t + 1.0)));
  };
  return p;
}

PerturbationProfile bump_by_name(const std::string &name, double amplitude) {
  PerturbationProfile p;
  if (name == "none" || name.empty())
    return bump_none();
  if (name == "g1")
    p = bump_g1();
  else if (name == "g2")
    p = bump_g2();
  else
    throw GeometryError("unknown bump family '" + name + "'");
  if (amplitude == 0.0)
    return bump_none();
  if (amplitude != 1.0) {
    auto f = p.bump;
    auto df = p.bump_deriv;
    p.bump = [f, amplitude](double t) { return amplitude * f(t); };
    p.bump_deriv = [df, amplitude](double t) { return amplitude * df(t); };
  }
  return p;
}

Geometry::Geometry(SurfaceProfile surface, PerturbationProfile perturbation, double H)
    : surface_(std::move(surface)), perturbation_(std::move(perturbation)), H_(H) {
  const double L = surface_.period;
  if (!(L > 0.0))
    throw GeometryError("period must be positive");
  if (!surface_.height || !surface_.height_deriv)
    throw GeometryError("surface needs height and height_deriv");
  if (!(surface_.min_height > 0.0))
    throw GeometryError("surface must stay above x2 = 0");
  if (!(H_ > surface_.max_height))
    throw GeometryError("truncation height H must exceed the surface maximum");
  if (perturbed()) {
    if (!perturbation_.bump_deriv)
      throw GeometryError("perturbation needs bump_deriv");
    if (perturbation_.support_a < -0.5 * L - 1e-12 || perturbation_.support_b > 0.5 * L + 1e-12 ||
        !(perturbation_.support_a < perturbation_.support_b))
      throw GeometryError("perturbation support must lie inside one period cell");
  }
  min_zeta_p_ = surface_.min_height;
  double max_p = surface_.max_height;
  for (int i = 0; i <= kSamples; ++i) {
    const double x = -0.5 * L + L * i / kSamples;
    const double zp = zeta_p(x);
    min_zeta_p_ = std::min(min_zeta_p_, zp);
    max_p = std::max(max_p, zp);
  }
  if (!(min_zeta_p_ > 0.0))
    throw GeometryError("perturbed surface must stay above x2 = 0");
  if (!(H_ > max_p))
    throw GeometryError("truncation height H must exceed the perturbed surface maximum");
  if (perturbed()) {
    // Admissibility of the cubic blend: det grad Phi_p bounded away from zero.
    const int nx = 400, nt = 64;
    for (int i = 0; i <= nx; ++i) {
      const double x1 = perturbation_.support_a + (perturbation_.support_b - perturbation_.support_a) * i / nx;
      const double z = zeta(x1);
      for (int j = 0; j <= nt; ++j) {
        const double x2 = z + (H_ - z) * j / nt;
        const Mat2 J = jacobian_phi_p(*this, {x1, x2});
        if (!(J[3] > 1e-8)) {
          std::ostringstream os;
          os << "inadmissible perturbation: det grad Phi_p = " << J[3] << " at (" << x1 << ", " << x2 << ")";
          throw GeometryError(os.str());
        }
      }
    }
  }
}

bool Geometry::in_support(double x1) const {
  return perturbed() && x1 >= perturbation_.support_a && x1 <= perturbation_.support_b;
}

double Geometry::bump(double x1) const {
  if (!perturbed() || x1 < perturbation_.support_a || x1 > perturbation_.support_b)
    return 0.0;
  return perturbation_.bump(x1);
}

double Geometry::bump_deriv(double x1) const {
  if (!perturbed() || x1 < perturbation_.support_a || x1 > perturbation_.support_b)
    return 0.0;
  return perturbation_.bump_deriv(x1);
}

Geometry make_geometry(const std::string &name, double H) {
  const auto plus = name.find('+');
  const std::string sname = name.substr(0, plus);
  const std::string bname = plus == std::string::npos ? "none" : name.substr(plus + 1);
  SurfaceProfile s;
  if (sname == "f1")
    s = surface_f1();
  else if (sname == "f2")
    s = surface_f2();
  else if (sname.rfind("flat", 0) == 0) {
    double h = 1.0;
    if (sname.size() > 4 && sname[4] == ':')
      h = std::stod(sname.substr(5));
    s = flat_surface(h);
  } else
    throw GeometryError("unknown surface '" + sname + "'");
  return Geometry(std::move(s), bump_by_name(bname), H);
}

namespace {

void check_domain(const Geometry &g, Point2 x, double lower) {
  const double tol = 1e-10 * std::max(1.0, g.H());
  if (x.x2 < lower - tol || x.x2 > g.H() + tol) {
    std::ostringstream os;
    os << "point (" << x.x1 << ", " << x.x2 << ") outside the strip [" << lower << ", " << g.H() << "]";
    throw DomainError(os.str());
  }
}

} // namespace

Point2 phi_p(const Geometry &g, Point2 x) {
  const double z = g.zeta(x.x1);
  check_domain(g, x, z);
  const double b = g.bump(x.x1);
  if (b == 0.0)
    return x;
  const double r = (x.x2 - g.H()) / (z - g.H());
  return {x.x1, x.x2 + r * r * r * b};
}

Point2 phi_p_inverse(const Geometry &g, Point2 y) {
  const double zp = g.zeta_p(y.x1);
  check_domain(g, y, zp);
  const double b = g.bump(y.x1);
  if (b == 0.0)
    return y;
  const double z = g.zeta(y.x1);
  const double H = g.H();
  const double target = std::clamp(y.x2, zp, H);
  auto F = [&](double x2) {
    const double r = (x2 - H) / (z - H);
    return x2 + r * r * r * b - target;
  };
  auto dF = [&](double x2) {
    const double r = (x2 - H) / (z - H);
    return 1.0 + 3.0 * r * r * b / (z - H);
  };
  // F is increasing on [z, H] for admissible geometries; F(z) <= 0 <= F(H).
  double lo = z, hi = H;
  double x = z + (H - z) * (target - zp) / (H - zp);
  for (int it = 0; it < 60; ++it) {
    const double f = F(x);
    if (std::abs(f) <= 1e-13)
      return {y.x1, x};
    if (f < 0.0)
      lo = x;
    else
      hi = x;
    double next = x - f / dF(x);
    if (!(next > lo && next < hi))
      next = 0.5 * (lo + hi);
    if (hi - lo <= 1e-15 * std::max(1.0, H))
      return {y.x1, next};
    x = next;
  }
  std::ostringstream os;
  os << "phi_p_inverse did not converge at y = (" << y.x1 << ", " << y.x2 << "), residual " << F(x)
     << ", bracket [" << lo << ", " << hi << "]";
  throw NumericError(os.str());
}

Mat2 jacobian_phi_p(const Geometry &g, Point2 x) {
  const double z = g.zeta(x.x1);
  check_domain(g, x, z);
  const double b = g.bump(x.x1);
  const double db = g.bump_deriv(x.x1);
  if (b == 0.0 && db == 0.0)
    return {1.0, 0.0, 0.0, 1.0};
  const double dz = z - g.H();
  const double r = (x.x2 - g.H()) / dz;
  const double r3 = r * r * r;
  const double a = r3 * db - 3.0 * r3 * b * g.zeta_deriv(x.x1) / dz;
  const double d = 1.0 + 3.0 * r * r * b / dz;
  return {1.0, 0.0, a, d};
}

Coefficients coefficients(const Geometry &g, Point2 x) {
  const Mat2 J = jacobian_phi_p(g, x);
  const double a = J[2], d = J[3];
  if (!(d > 0.0))
    throw GeometryError("degenerate Jacobian of Phi_p");
  // c (grad Phi)^{-1} (grad Phi)^{-T} with grad Phi = [[1, 0], [a, d]], c = d.
  Coefficients out;
  out.c = d;
  out.A = {d, -a, -a, (1.0 + a * a) / d};
  return out;
}

} // namespace lpscat
