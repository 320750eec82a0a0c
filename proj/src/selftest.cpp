#include "lpscat/selftest.hpp"
#include "lpscat/pipeline.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <sstream>

namespace lpscat {

bool SelftestReport::all_pass() const {
  for (const auto &r : results)
    if (!r.pass)
      return false;
  return true;
}

namespace {

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

cplx quad_complex(const std::function<cplx(double)> &f, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  const double re = gauss_kronrod<double, 31>::integrate([&](double t) { return f(t).real(); }, a, b, 15, 1e-14);
  const double im = gauss_kronrod<double, 31>::integrate([&](double t) { return f(t).imag(); }, a, b, 15, 1e-14);
  return {re, im};
}

} // namespace

SelftestReport run_selftest(const SelftestOptions &opt) {
  SelftestReport rep;
  auto add = [&](std::string name, bool pass, std::string detail) {
    rep.results.push_back({std::move(name), pass, std::move(detail)});
  };
  const double L = 2.0 * pi;
  const IncidentSource src{{0.5, 0.4}, 1.0};

  // Mode sign from the lattice-sum comparison.
  const auto adj = adjudicate_sigma(src, L, 0.65, 2.4, opt.seed);
  rep.sigma = opt.flip_sigma ? -adj.sigma : adj.sigma;
  add("sigma adjudication", std::min(adj.discrepancy_minus, adj.discrepancy_plus) < 1e-6,
      "sigma=-1: " + sci(adj.discrepancy_minus) + ", sigma=+1: " + sci(adj.discrepancy_plus));
  const WaveParams p{1.0, L, rep.sigma};

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> ua(-0.5, 0.5), ux(-pi, pi), uy(0.7, 2.0);
  auto G = [&](Point2 x) { return incident_field(src, x); };

  {
    double worst = 0.0;
    for (int n = 0; n < 20; ++n) {
      const double a = ua(rng);
      const Point2 x{ux(rng), uy(rng)};
      const cplx ref = bloch_direct(G, L, a, x, 4000, LatticeWindow::smooth).value;
      worst = std::max(worst, std::abs(incident_bloch(src, p, a, x) - ref) / std::abs(ref));
    }
    add("series vs lattice sum (20 points)", worst < 1e-6, "max rel " + sci(worst));
  }
  {
    double worst = 0.0;
    for (int n = 0; n < 20; ++n) {
      const double a = ua(rng);
      const Point2 x{ux(rng), uy(rng)};
      const cplx v0 = incident_bloch(src, p, a, x);
      const cplx v1 = incident_bloch(src, p, a, {x.x1 + L, x.x2});
      worst = std::max(worst, std::abs(v1 - std::polar(1.0, -L * a) * v0) / std::abs(v0));
    }
    add("quasiperiodicity factor exp(-i L alpha)", worst < 1e-10, "max rel " + sci(worst));
  }
  {
    // A function on three cells: the transform is a trig polynomial in alpha.
    auto u = [](Point2 x) {
      const double t = x.x1 / 9.0;
      return std::abs(t) < 1.0 ? cplx(std::exp(-1.0 / (1.0 - t * t)) * std::cos(x.x1), x.x2 * std::sin(t)) : 0.0;
    };
    double worst = 0.0;
    for (int n = 0; n < 5; ++n) {
      const Point2 x{ux(rng), uy(rng)};
      const int P = 16;
      double lhs = 0.0;
      for (int q = 0; q < P; ++q) {
        const double a = -0.5 + static_cast<double>(q) / P;
        lhs += std::norm(bloch_direct(u, L, a, x, 3).value) / P;
      }
      double rhs = 0.0;
      for (int j = -3; j <= 3; ++j)
        rhs += std::norm(u({x.x1 + L * j, x.x2}));
      worst = std::max(worst, std::abs(lhs - rhs) / rhs);
    }
    add("Bloch isometry", worst < 1e-10, "max rel " + sci(worst));
  }
  {
    double worst = 0.0;
    const WaveParams pk{1.0, L, rep.sigma};
    const std::vector<std::tuple<long, double, double>> cases = {
        {0, -0.05, 0.05}, {1, -0.05, 0.05}, {1, -0.1, 0.2}, {-1, -0.3, 0.1}, {3, 0.2, 0.45}};
    for (auto [m, a, b] : cases) {
      // Split the reference quadrature at the cutoffs |L* m + sigma alpha| = k.
      std::vector<double> cuts{a, b};
      for (double s : {-1.0, 1.0}) {
        const double ac = pk.sigma * (s * pk.k - static_cast<double>(m));
        if (ac > a && ac < b)
          cuts.push_back(ac);
      }
      std::sort(cuts.begin(), cuts.end());
      cplx ref = 0.0;
      for (std::size_t c = 0; c + 1 < cuts.size(); ++c)
        ref += quad_complex([&](double al) { return dtn_multiplier(m, al, pk); }, cuts[c], cuts[c + 1]);
      const cplx v = dtn_multiplier_interval(m, a, b, pk);
      worst = std::max(worst, std::abs(v - ref) / std::max(1e-300, std::abs(ref)));
    }
    add("DtN interval integral vs quadrature", worst < 1e-10, "max rel " + sci(worst));
  }
  {
    const Geometry geo = make_geometry("f1+g1", 4.0);
    auto mesh = std::make_shared<CellMesh>(generate_cell_mesh(geo, 24, 12));
    const auto em = assemble_element_matrices(*mesh, reference_quadrature(4));
    double ksum = 0.0, mtot = 0.0, dasym = 0.0;
    const auto &pat = *em.pattern;
    for (int r = 0; r < pat.rows; ++r) {
      double s = 0.0;
      for (int e = pat.row_ptr[r]; e < pat.row_ptr[r + 1]; ++e) {
        s += em.K[e];
        mtot += em.Mss[e];
        dasym = std::max(dasym, std::abs(em.D[e] + em.D[pat.find(pat.col_idx[e], r)]));
      }
      ksum = std::max(ksum, std::abs(s));
    }
    double area = 0.0;
    for (std::size_t t = 0; t < mesh->triangles.size(); ++t) {
      const auto c = mesh->triangle_coords(t);
      area += 0.5 * ((c[1].x1 - c[0].x1) * (c[2].x2 - c[0].x2) - (c[2].x1 - c[0].x1) * (c[1].x2 - c[0].x2));
    }
    add("element matrices (K 1 = 0, sum M = area, D = -D^T)",
        ksum < 1e-12 && std::abs(mtot - area) < 1e-10 && dasym < 1e-14,
        "K row sum " + sci(ksum) + ", mass defect " + sci(std::abs(mtot - area)) + ", D asym " + sci(dasym));

    // Small coupled system: GMRES + block ILU vs sparse LU, and rhs sign.
    const auto grid = make_grid(2, L);
    auto small = std::make_shared<CellMesh>(generate_cell_mesh(geo, 16, 8));
    AssemblyOptions ao;
    const auto sys = build_block_system(grid, small, geo, src, p, ao);
    SolverOptions so;
    so.tol = 1e-10;
    const auto it = solve_block_system(sys, so);
    so.method = SolverMethod::direct;
    const auto dir = solve_block_system(sys, so);
    double num = 0.0, den = 0.0;
    for (int m = 0; m < sys.Mt; ++m) {
      num += std::norm(it.U[m] - dir.U[m]);
      den += std::norm(dir.U[m]);
    }
    const double rel = std::sqrt(num / den);
    add("preconditioned GMRES vs direct", rel < 1e-6 && it.report.converged, "rel " + sci(rel));
  }
  {
    // rhs sign: which sign makes the total field vanish on a small run.
    RunConfig cfg = preset("example1");
    cfg.sigma = rep.sigma < 0 ? "-1" : "+1";
    cfg.N = 10;
    cfg.n1 = 48;
    cfg.n2 = 24;
    cfg.seed = opt.seed;
    double ratio[2];
    for (int s = 0; s < 2; ++s) {
      cfg.rhs_sign = s == 0 ? -1 : 1;
      ratio[s] = run_case(cfg).total_field_ratio;
    }
    rep.rhs_sign = ratio[0] <= ratio[1] ? -1 : 1;
    add("rhs sign adjudication", rep.rhs_sign == -1 && ratio[0] < 0.1,
        "||u_h + u^i|| / ||u^i||: sign -1 -> " + sci(ratio[0]) + ", sign +1 -> " + sci(ratio[1]));
  }
  return rep;
}

} // namespace lpscat
