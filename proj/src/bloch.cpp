#include "lpscat/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace lpscat {

BlochGrid make_grid(int N, double period, double offset) {
  if (N < 1)
    throw DomainError("Bloch grid needs N >= 1");
  BlochGrid g;
  g.N = N;
  g.period = period;
  g.offset = offset;
  g.delta = pi / (N * period);
  g.nodes.resize(N);
  for (int j = 0; j < N; ++j)
    g.nodes[j] = -pi / period + (2 * j + 1) * g.delta + offset;
  return g;
}

cplx g_weight(const BlochGrid &grid, int j, double x1, int sigma) {
  const double d = grid.delta;
  const cplx phase = std::polar(1.0, sigma * grid.node(j) * x1);
  if (std::abs(x1) < 1e-8)
    return phase * (2.0 * d * (1.0 - (d * x1) * (d * x1) / 6.0));
  return phase * (2.0 * std::sin(d * x1) / x1);
}

cplx g_weight_deriv(const BlochGrid &grid, int j, double x1, int sigma) {
  const double d = grid.delta;
  const double a = sigma * grid.node(j);
  const cplx phase = std::polar(1.0, a * x1);
  const double dx = d * x1;
  double s, ds; // s = 2 sin(d x)/x, ds = d/dx of s
  if (std::abs(dx) < 1e-3) {
    s = 2.0 * d * (1.0 - dx * dx / 6.0 + dx * dx * dx * dx / 120.0);
    ds = 2.0 * d * d * (-dx / 3.0 + dx * dx * dx / 30.0);
  } else {
    s = 2.0 * std::sin(dx) / x1;
    ds = 2.0 * (dx * std::cos(dx) - std::sin(dx)) / (x1 * x1);
  }
  return phase * (I * a * s + ds);
}

cplx incident_field(const IncidentSource &s, Point2 x) {
  const double r1 = std::hypot(x.x1 - s.y.x1, x.x2 - s.y.x2);
  const double r2 = std::hypot(x.x1 - s.y.x1, x.x2 + s.y.x2);
  return 0.25 * I * (hankel0_first(s.k * r1) - hankel0_first(s.k * r2));
}

namespace {

// exp(i b x2) sin(b y2) / b, stable for evanescent b.
cplx mode_profile(cplx b, double x2, double y2) {
  if (std::abs(b) * y2 < 1e-4)
    return std::exp(I * b * x2) * y2 * csinc(b * y2);
  return (std::exp(I * b * (x2 + y2)) - std::exp(I * b * (x2 - y2))) / (2.0 * I * b);
}

} // namespace

cplx incident_bloch(const IncidentSource &s, const WaveParams &p, double alpha, Point2 x) {
  const double y2 = s.y.x2;
  if (!(x.x2 > y2)) {
    std::ostringstream os;
    os << "incident_bloch needs x2 > y2 (x2 = " << x.x2 << ", y2 = " << y2 << ")";
    throw DomainError(os.str());
  }
  const double ls = p.dual_period();
  const double gap = x.x2 - y2;
  const double log_tol = -std::log(s.tol_series);
  const double dx1 = x.x1 - s.y.x1;
  // Start at the mode closest to normal incidence and walk outwards.
  const long m0 = std::lround(-p.sigma * alpha / ls);
  auto term = [&](long m) {
    const double kap = p.kappa(m, alpha);
    const cplx b = branch_sqrt(cplx(s.k * s.k - kap * kap, 0.0));
    return std::polar(1.0, kap * dx1) * mode_profile(b, x.x2, y2);
  };
  auto done = [&](long m) {
    const double kap = p.kappa(m, alpha);
    if (std::abs(kap) <= s.k)
      return false;
    return std::sqrt(kap * kap - s.k * s.k) * gap > log_tol;
  };
  cplx sum = term(m0);
  for (long m = m0 + 1; m - m0 <= s.J_trunc; ++m) {
    sum += term(m);
    if (done(m))
      break;
  }
  for (long m = m0 - 1; m0 - m <= s.J_trunc; --m) {
    sum += term(m);
    if (done(m))
      break;
  }
  return sum / std::sqrt(2.0 * pi * p.period);
}

namespace {

double smooth_window(double t) {
  constexpr double c = 0.5;
  t = std::abs(t);
  if (t <= c)
    return 1.0;
  if (t >= 1.0)
    return 0.0;
  const double u = (t - c) / (1.0 - c);
  return std::exp(2.0 * std::exp(-1.0 / u) / (u - 1.0));
}

cplx lattice_partial(const std::function<cplx(Point2)> &u, double period, double alpha, Point2 x, long J,
                     LatticeWindow window) {
  cplx s = 0.0;
  for (long j = -J; j <= J; ++j) {
    const double w = window == LatticeWindow::smooth ? smooth_window(static_cast<double>(j) / (J + 1)) : 1.0;
    if (w == 0.0)
      continue;
    s += w * u({x.x1 + period * j, x.x2}) * std::polar(1.0, period * j * alpha);
  }
  return s * std::sqrt(period / (2.0 * pi));
}

} // namespace

LatticeSum bloch_direct(const std::function<cplx(Point2)> &u, double period, double alpha, Point2 x, long J_sum,
                        LatticeWindow window) {
  LatticeSum out;
  out.value = lattice_partial(u, period, alpha, x, J_sum, window);
  out.tail = J_sum >= 2 ? std::abs(out.value - lattice_partial(u, period, alpha, x, J_sum / 2, window)) : 0.0;
  return out;
}

std::vector<cplx> discrete_inverse_bloch(const BlochGrid &grid, const std::vector<std::vector<cplx>> &w0,
                                         const CellMesh &mesh, int sigma) {
  if (static_cast<int>(w0.size()) != grid.N)
    throw DomainError("discrete_inverse_bloch: expected one field per alpha interval");
  const std::size_t n = mesh.vertices.size();
  for (const auto &w : w0)
    if (w.size() != n)
      throw DomainError("discrete_inverse_bloch: field size does not match mesh");
  const double scale = std::sqrt(grid.period / (2.0 * pi));
  std::vector<cplx> u(n, 0.0);
  for (std::size_t m = 0; m < n; ++m) {
    cplx acc = 0.0;
    for (int j = 0; j < grid.N; ++j)
      acc += g_weight(grid, j, mesh.vertices[m].x1, sigma) * w0[j][m];
    u[m] = scale * acc;
  }
  return u;
}

SigmaAdjudication adjudicate_sigma(const IncidentSource &s, double period, double x2_lo, double x2_hi,
                                   std::uint64_t seed, int samples, long J_sum) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ua(-pi / period, pi / period), ux(-0.5 * period, 0.5 * period),
      uy(x2_lo, x2_hi);
  auto G = [&](Point2 p) { return incident_field(s, p); };
  SigmaAdjudication out;
  for (int n = 0; n < samples; ++n) {
    const double alpha = ua(rng);
    const Point2 x{ux(rng), uy(rng)};
    const cplx ref = bloch_direct(G, period, alpha, x, J_sum, LatticeWindow::smooth).value;
    const double nref = std::max(std::abs(ref), 1e-300);
    WaveParams pm{s.k, period, -1}, pp{s.k, period, +1};
    out.discrepancy_minus = std::max(out.discrepancy_minus, std::abs(incident_bloch(s, pm, alpha, x) - ref) / nref);
    out.discrepancy_plus = std::max(out.discrepancy_plus, std::abs(incident_bloch(s, pp, alpha, x) - ref) / nref);
  }
  out.sigma = out.discrepancy_minus <= out.discrepancy_plus ? -1 : +1;
  return out;
}

} // namespace lpscat
