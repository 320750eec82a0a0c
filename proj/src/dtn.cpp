#include "lpscat/dtn.hpp"
#include "lpscat/log.hpp"

#include <boost/math/special_functions/polygamma.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lpscat {

namespace {

// (e^z - 1 - z) / z^2
cplx hat_kernel(cplx z) {
  if (std::abs(z) < 1e-3)
    return 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0;
  return (std::exp(z) - 1.0 - z) / (z * z);
}

} // namespace

cplx TraceBasis::coefficient(int l, long m) const {
  const double w = 2.0 * pi / period * m;
  const cplx local = hr[l] * hat_kernel(cplx(0.0, -w * hr[l])) + hl[l] * hat_kernel(cplx(0.0, w * hl[l]));
  return std::polar(1.0, -w * x[l]) * local;
}

TraceBasis make_trace_basis(const CellMesh &mesh, int M_dtn) {
  TraceBasis tb;
  tb.period = mesh.period;
  tb.nodes = mesh.top_nodes();
  const int n = static_cast<int>(tb.nodes.size());
  tb.x.resize(n);
  for (int l = 0; l < n; ++l)
    tb.x[l] = mesh.vertices[tb.nodes[l]].x1;
  tb.hl.resize(n);
  tb.hr.resize(n);
  for (int l = 0; l < n; ++l) {
    const double prev = l == 0 ? tb.x[n - 1] - tb.period : tb.x[l - 1];
    const double next = l == n - 1 ? tb.x[0] + tb.period : tb.x[l + 1];
    tb.hl[l] = tb.x[l] - prev;
    tb.hr[l] = next - tb.x[l];
  }
  const double dx = tb.period / n;
  tb.uniform = true;
  for (int l = 0; l < n; ++l)
    if (std::abs(tb.hl[l] - dx) > 1e-12 * tb.period || std::abs(tb.hr[l] - dx) > 1e-12 * tb.period)
      tb.uniform = false;
  tb.M_dtn = M_dtn > 0 ? M_dtn : std::max(32, 4 * n);
  return tb;
}

cplx dtn_multiplier(long m, double alpha, const WaveParams &p) {
  const double kap = p.kappa(m, alpha);
  return I * branch_sqrt(cplx(p.k * p.k - kap * kap, 0.0));
}

namespace {

// Endpoint of a piece: t and s = sqrt(|k^2 - t^2|). At a cutoff s = 0 exactly.
struct End {
  double t, s;
};

End end_at(double t, double k) {
  const double a = std::abs(t);
  return {t, std::sqrt(std::abs((k - a) * (k + a)))};
}

// Integral of sqrt(k^2 - t^2) over [t1, t2] inside [-k, k], with the width
// dt = t2 - t1 supplied exactly. The asin difference is one atan2; when both
// ends are off the cutoffs and share a sign the differences use product forms.
double inner_diff(End e1, End e2, double dt, double k) {
  const double t1 = e1.t, t2 = e2.t, s1 = e1.s, s2 = e2.s;
  const bool product = t1 * t2 > 0.0 && s1 > 0.0 && s2 > 0.0;
  const double ts_diff =
      product ? dt * (t1 + t2) * (k * k - t1 * t1 - t2 * t2) / (t2 * s2 + t1 * s1) : t2 * s2 - t1 * s1;
  const double sin_num = product ? k * k * dt * (t1 + t2) / (t2 * s1 + t1 * s2) : t2 * s1 - t1 * s2;
  const double dtheta = std::atan2(sin_num, s1 * s2 + t1 * t2);
  return 0.5 * ts_diff + 0.5 * k * k * dtheta;
}

// Integral of branch_sqrt(k^2 - t^2) over [t1, t2] with k <= t1 <= t2:
// i [ (t s)/2 - (k^2/2) ln(t + s) ] evaluated stably.
cplx outer_diff(End e1, End e2, double dt, double k) {
  const double t1 = e1.t, t2 = e2.t, s1 = e1.s, s2 = e2.s;
  if (dt <= 0.0)
    return 0.0;
  const bool product = s1 > 0.0 && s2 > 0.0;
  const double ts_diff = product ? dt * (t2 + t1) * (t2 * t2 + t1 * t1 - k * k) / (t2 * s2 + t1 * s1)
                                 : t2 * s2 - t1 * s1;
  const double ds = product ? dt * (t2 + t1) / (s1 + s2) : s2 - s1;
  const double log_ratio = std::log1p((dt + ds) / (t1 + s1));
  return I * (0.5 * ts_diff - 0.5 * k * k * log_ratio);
}

// int_0^d sqrt(u (2k + sign u)) du as a binomial series in u / (2k); used for
// short pieces that end on a cutoff, where the closed form cancels.
double cutoff_series(double d, double k, double sign) {
  const double r = sign * d / (2.0 * k);
  double coef = 1.0, power = 1.0, sum = 0.0;
  for (int n = 0; n < 60; ++n) {
    const double term = coef * power / (n + 1.5);
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum))
      break;
    coef *= (0.5 - n) / (n + 1.0);
    power *= r;
  }
  return std::sqrt(2.0 * k) * d * std::sqrt(d) * sum;
}

// Integral of branch_sqrt(k^2 - t^2) over one piece [e1.t, e2.t] that does
// not cross t = +-k. The integrand is even in t.
cplx piece_integral(End e1, End e2, double dt, double k) {
  if (dt == 0.0)
    return 0.0;
  if (e2.t <= -k)
    return outer_diff({-e2.t, e2.s}, {-e1.t, e1.s}, dt, k);
  if (e1.t >= k)
    return outer_diff(e1, e2, dt, k);
  return inner_diff(e1, e2, dt, k);
}

} // namespace

cplx dtn_multiplier_interval(long m, double a, double b, const WaveParams &p) {
  if (a == b)
    return 0.0;
  if (a > b)
    return -dtn_multiplier_interval(m, b, a, p);
  // t = kappa(m, alpha), dt = sigma d alpha. Split in alpha at the cutoffs
  // kappa = +-k. Next to a cutoff the end values are taken from the exact
  // alpha distance, so the piece is free of cancellation.
  struct Pt {
    double alpha;
    bool cut;
    double tc; // +-k when cut
  };
  std::vector<Pt> pts{{a, false, 0.0}, {b, false, 0.0}};
  for (double s : {-1.0, 1.0}) {
    const double ac = p.sigma * (s * p.k - p.dual_period() * m);
    if (ac > a && ac < b)
      pts.push_back({ac, true, s * p.k});
  }
  std::sort(pts.begin(), pts.end(), [](const Pt &x, const Pt &y) { return x.alpha < y.alpha; });
  cplx total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Pt &l = pts[i], &r = pts[i + 1];
    const double dt = r.alpha - l.alpha;
    End e1, e2;
    if (l.cut && r.cut) {
      e1 = {l.tc, 0.0};
      e2 = {r.tc, 0.0};
    } else if (l.cut || r.cut) {
      const Pt &c = l.cut ? l : r, &o = l.cut ? r : l;
      const double d = p.sigma * (o.alpha - c.alpha); // t_o - t_c
      const double ad = std::abs(d);
      const bool outer = (c.tc > 0.0) == (d > 0.0);
      if (ad < 0.2 * p.k) {
        const double v = cutoff_series(ad, p.k, outer ? 1.0 : -1.0);
        total += outer ? I * v : cplx(v);
        continue;
      }
      e1 = {c.tc, 0.0};
      e2 = {c.tc + d, std::sqrt(std::abs(d * (2.0 * c.tc + d)))};
    } else {
      e1 = end_at(p.kappa(m, l.alpha), p.k);
      e2 = end_at(p.kappa(m, r.alpha), p.k);
    }
    if (e1.t > e2.t)
      std::swap(e1, e2);
    total += piece_integral(e1, e2, dt, p.k);
  }
  return I * total;
}

double DtnBlock::frobenius_norm() const {
  double s = 0.0;
  for (int r = 0; r < n_; ++r)
    for (int c = 0; c < n_; ++c)
      s += std::norm((*this)(r, c));
  return std::sqrt(s);
}

namespace {

// Hurwitz zeta(s, a) for s = 3, 4, 5 via polygamma.
double hurwitz(int s, double a) {
  switch (s) {
  case 3:
    return -0.5 * boost::math::polygamma(2, a);
  case 4:
    return boost::math::polygamma(3, a) / 6.0;
  default:
    return -boost::math::polygamma(4, a) / 24.0;
  }
}

// Sum over m > M, m = r (mod n), of m^-s, for 0 < r < n.
double residue_tail(int s, long M, int n, int r) {
  const long q0 = (M - r) / n + 1;
  return std::pow(static_cast<double>(n), -s) * hurwitz(s, static_cast<double>(q0) + static_cast<double>(r) / n);
}

} // namespace

DtnBlock assemble_dtn_block(const TraceBasis &basis, double a, double b, const WaveParams &p) {
  const int n = basis.size();
  const long M = basis.M_dtn;
  const double L = basis.period;
  DtnBlock out;
  if (basis.uniform) {
    // Entry (l, l') depends on l - l' only; fold modes by m mod n.
    std::vector<cplx> folded(n, 0.0);
    for (long m = -M; m <= M; ++m) {
      const double tau = std::abs(basis.coefficient(0, m));
      folded[((m % n) + n) % n] += dtn_multiplier_interval(m, a, b, p) * tau * tau;
    }
    // Modes |m| > M: |t_m|^2 = C_r / m^4 exactly and
    // I_m = -(b - a) (L*|m| + sgn(m) sigma alpha_c - k^2 / (2 L*|m|)) + O(|m|^-2).
    const double Ls = p.dual_period();
    const double ac = 0.5 * (a + b);
    const double dx = L / n;
    for (int r = 1; r < n; ++r) {
      const double sr = std::sin(pi * r / n);
      const double C = dx * dx * std::pow(sr * n / pi, 4);
      const int rn = n - r;
      const double plus = Ls * residue_tail(3, M, n, r) + p.sigma * ac * residue_tail(4, M, n, r) -
                          p.k * p.k / (2.0 * Ls) * residue_tail(5, M, n, r);
      const double minus = Ls * residue_tail(3, M, n, rn) - p.sigma * ac * residue_tail(4, M, n, rn) -
                           p.k * p.k / (2.0 * Ls) * residue_tail(5, M, n, rn);
      folded[r] += -(b - a) * C * (plus + minus);
    }
    std::vector<cplx> col(n, 0.0);
    for (int d = 0; d < n; ++d) {
      cplx acc = 0.0;
      for (int r = 0; r < n; ++r)
        acc += folded[r] * std::polar(1.0, 2.0 * pi * static_cast<double>((static_cast<long>(r) * d) % n) / n);
      col[d] = -acc / L;
    }
    out = DtnBlock(n, true, std::move(col));
  } else {
    double tail_bound = 0.0, scale = 0.0;
    std::vector<cplx> dense(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<cplx> t(n);
    for (long m = -2 * M; m <= 2 * M; ++m) {
      const cplx Im = dtn_multiplier_interval(m, a, b, p);
      for (int l = 0; l < n; ++l)
        t[l] = basis.coefficient(l, m);
      if (std::abs(m) > M) {
        double mx = 0.0;
        for (int l = 0; l < n; ++l)
          mx = std::max(mx, std::norm(t[l]));
        tail_bound += std::abs(Im) * mx / L;
        continue;
      }
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
          dense[static_cast<std::size_t>(r) * n + c] -= Im * t[c] * std::conj(t[r]) / L;
    }
    for (const auto &v : dense)
      scale = std::max(scale, std::abs(v));
    out = DtnBlock(n, false, std::move(dense));
    if (tail_bound > 1e-6 * std::max(scale, 1e-300)) {
      std::ostringstream os;
      os << "DtN truncation M_dtn = " << M << " on a non-uniform top boundary: doubling bound " << tail_bound
         << " vs scale " << scale;
      log::warn(os.str());
    }
  }
  out.a = a;
  out.b = b;
  return out;
}

} // namespace lpscat
