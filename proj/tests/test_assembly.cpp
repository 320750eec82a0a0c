#include <doctest.h>

#include "lpscat/assembly.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <random>

using namespace lpscat;

namespace {

using Dense = std::vector<std::vector<cplx>>;

Dense zeros(int n, int m) { return Dense(n, std::vector<cplx>(m, 0.0)); }

// P1 element data from the inverse of [1 x y] rows.
struct P1 {
  double area;
  double gx[3], gy[3];
};

P1 p1(const std::array<Point2, 3> &v) {
  const double a[3][3] = {{1.0, v[0].x1, v[0].x2}, {1.0, v[1].x1, v[1].x2}, {1.0, v[2].x1, v[2].x2}};
  const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                     a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                     a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  P1 e;
  e.area = 0.5 * std::abs(det);
  // Columns of the inverse hold the coefficients of each barycentric function.
  for (int i = 0; i < 3; ++i) {
    const int r1 = (i + 1) % 3, r2 = (i + 2) % 3;
    e.gx[i] = -(a[r1][0] * a[r2][2] - a[r1][2] * a[r2][0]) / det;
    e.gy[i] = (a[r1][0] * a[r2][1] - a[r1][1] * a[r2][0]) / det;
  }
  return e;
}

double csr_get(const CsrPattern &p, const std::vector<double> &v, int r, int c) {
  const int e = p.find(r, c);
  return e < 0 ? 0.0 : v[e];
}

Dense dense_of(const CsrMatrix<cplx> &A) {
  const auto &p = *A.pattern;
  Dense d = zeros(p.rows, p.cols);
  for (int r = 0; r < p.rows; ++r)
    for (int e = p.row_ptr[r]; e < p.row_ptr[r + 1]; ++e)
      d[r][p.col_idx[e]] += A.values[e];
  return d;
}

std::vector<cplx> random_vector(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<cplx> v(n);
  for (auto &x : v)
    x = {g(rng), g(rng)};
  return v;
}

double max_abs_diff(const std::vector<cplx> &a, const std::vector<cplx> &b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

cplx tanh_sinh_integral(const std::function<cplx(double)> &f, double a, double b) {
  boost::math::quadrature::tanh_sinh<double> ts;
  const double re = ts.integrate([&](double t) { return f(t).real(); }, a, b);
  const double im = ts.integrate([&](double t) { return f(t).imag(); }, a, b);
  return {re, im};
}

struct Fixture {
  Geometry geo;
  std::shared_ptr<const CellMesh> mesh;
  WaveParams p;
  BlockSystem sys;
  Fixture(const std::string &name, int n1, int n2, int N, double k, int quad = 4)
      : geo(make_geometry(name, 3.0)), mesh(std::make_shared<CellMesh>(generate_cell_mesh(geo, n1, n2))),
        p{k, 2.0 * pi, -1} {
    AssemblyOptions ao;
    ao.quad_order = quad;
    sys = build_block_system(make_grid(N, 2.0 * pi), mesh, geo, IncidentSource{{0.5, 0.4}, k}, p, ao);
  }
};

} // namespace

TEST_CASE("element matrices match closed-form P1 integrals") {
  const Geometry g = make_geometry("f2+g2", 3.0);
  const auto mesh = generate_cell_mesh(g, 6, 5);
  const auto em = assemble_element_matrices(mesh, reference_quadrature(2));
  const int n = mesh.M_total;
  std::vector<std::vector<double>> K(n, std::vector<double>(n)), M = K, D = K;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto e = p1(mesh.triangle_coords(t));
    const auto &tri = mesh.triangles[t];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        K[tri[a]][tri[b]] += e.area * (e.gx[a] * e.gx[b] + e.gy[a] * e.gy[b]);
        M[tri[a]][tri[b]] += e.area / 12.0 * (a == b ? 2.0 : 1.0);
        D[tri[a]][tri[b]] += e.area / 3.0 * (e.gx[a] - e.gx[b]);
      }
  }
  const auto &pt = *em.pattern;
  double area = 0.0;
  for (int r = 0; r < n; ++r) {
    double ksum = 0.0;
    for (int c = 0; c < n; ++c) {
      CHECK(csr_get(pt, em.K, r, c) == doctest::Approx(K[r][c]).epsilon(1e-12).scale(1.0));
      CHECK(csr_get(pt, em.Mss, r, c) == doctest::Approx(M[r][c]).epsilon(1e-12).scale(1.0));
      CHECK(csr_get(pt, em.D, r, c) == doctest::Approx(D[r][c]).epsilon(1e-12).scale(1.0));
      // D is antisymmetric, K and M symmetric.
      CHECK(csr_get(pt, em.D, r, c) == doctest::Approx(-csr_get(pt, em.D, c, r)).scale(1.0));
      CHECK(csr_get(pt, em.K, r, c) == doctest::Approx(csr_get(pt, em.K, c, r)));
      ksum += csr_get(pt, em.K, r, c);
      area += csr_get(pt, em.Mss, r, c);
    }
    // Constants lie in the kernel of the stiffness matrix on the torus.
    CHECK(std::abs(ksum) < 1e-12);
  }
  double tri_area = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    tri_area += p1(mesh.triangle_coords(t)).area;
  CHECK(area == doctest::Approx(tri_area).epsilon(1e-13));
}

TEST_CASE("alpha moments are the exact interval integrals") {
  const auto grid = make_grid(6, 2.0 * pi);
  for (int j = 0; j < 6; ++j) {
    const double a = grid.lower(j), b = grid.upper(j);
    const auto m = alpha_moments(grid, j);
    CHECK(m.I0 == doctest::Approx(b - a));
    CHECK(m.I1 == doctest::Approx((b * b - a * a) / 2.0).scale(1.0));
    CHECK(m.I2 == doctest::Approx((b * b * b - a * a * a) / 3.0));
  }
}

TEST_CASE("A_j equals the dense combination of FEM matrices and the DtN block") {
  Fixture f("f1+g1", 8, 6, 3, 2.5);
  const auto &s = f.sys;
  const auto &mesh = *f.mesh;
  const auto top = mesh.top_nodes();
  const double k2 = f.p.k * f.p.k;
  for (int j = 0; j < 3; ++j) {
    const auto mom = alpha_moments(s.grid, j);
    Dense ref = zeros(s.Mt, s.Mt);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      const auto e = p1(mesh.triangle_coords(t));
      const auto &tri = mesh.triangles[t];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          if (tri[a] >= s.M)
            continue;
          const double Ke = e.area * (e.gx[a] * e.gx[b] + e.gy[a] * e.gy[b]);
          const double Me = e.area / 12.0 * (a == b ? 2.0 : 1.0);
          const double De = e.area / 3.0 * (e.gx[a] - e.gx[b]);
          ref[tri[a]][tri[b]] += mom.I0 * Ke + (mom.I2 - k2 * mom.I0) * Me + I * (f.p.sigma * mom.I1 * De);
        }
    }
    for (std::size_t r = 0; r < top.size(); ++r)
      for (std::size_t c = 0; c < top.size(); ++c)
        ref[top[r]][top[c]] += s.dtn[j](static_cast<int>(r), static_cast<int>(c));
    for (int r = s.M; r < s.Mt; ++r)
      ref[r][r] = 1.0;

    const Dense got = dense_of(s.materialize_A(j));
    double diff = 0.0;
    for (int r = 0; r < s.Mt; ++r)
      for (int c = 0; c < s.Mt; ++c)
        diff = std::max(diff, std::abs(got[r][c] - ref[r][c]));
    CHECK(diff < 1e-12);

    const auto x = random_vector(s.Mt, 7 + j);
    std::vector<cplx> y(s.Mt), yref(s.Mt, 0.0);
    s.apply_A(j, x.data(), y.data());
    for (int r = 0; r < s.Mt; ++r)
      for (int c = 0; c < s.Mt; ++c)
        yref[r] += ref[r][c] * x[c];
    CHECK(max_abs_diff(y, yref) < 1e-11);
  }
}

TEST_CASE("block operator matches the dense assembly of its blocks") {
  Fixture f("f2+g2", 6, 4, 2, 1.0);
  const auto &s = f.sys;
  const int n = s.N(), Mt = s.Mt;
  const int dim = static_cast<int>(s.size());
  Dense big = zeros(dim, dim);
  for (int j = 0; j < n; ++j) {
    const Dense A = dense_of(s.materialize_A(j));
    for (int r = 0; r < Mt; ++r)
      for (int c = 0; c < Mt; ++c)
        big[j * Mt + r][j * Mt + c] = A[r][c];
    const auto &cp = *s.C.pattern;
    for (int r = 0; r < cp.rows; ++r)
      for (int e = cp.row_ptr[r]; e < cp.row_ptr[r + 1]; ++e)
        big[j * Mt + r][n * Mt + cp.col_idx[e]] += s.C.values[j][e];
    for (int m = 0; m < Mt; ++m)
      big[n * Mt + m][j * Mt + m] = s.B[j][m];
  }
  for (int m = 0; m < Mt; ++m)
    big[n * Mt + m][n * Mt + m] = 1.0;

  const auto x = random_vector(dim, 3);
  std::vector<cplx> y(dim), yref(dim, 0.0), yt(dim, 0.0);
  s.apply(x.data(), y.data());
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c)
      yref[r] += big[r][c] * x[c];
  for (const auto &t : system_triplets(s))
    yt[t.row] += t.value * x[t.col];
  CHECK(max_abs_diff(y, yref) < 1e-11);
  CHECK(max_abs_diff(yt, yref) < 1e-11);
  // Coupling rows are restricted to non-bottom test functions.
  const auto &cp = *s.C.pattern;
  CHECK(cp.nnz() > 0);
  for (int r = s.M; r < cp.rows; ++r)
    CHECK(cp.row_ptr[r + 1] == cp.row_ptr[r]);
}

TEST_CASE("coupling blocks vanish without a perturbation") {
  Fixture f("f1", 8, 6, 4, 1.0);
  CHECK(f.sys.C.pattern->nnz() == 0);
  Fixture g("flat:1", 8, 6, 4, 1.0);
  CHECK(g.sys.C.pattern->nnz() == 0);
}

TEST_CASE("coupling block rows equal their defining integrals") {
  // U = 1 and U = x2 are reproduced exactly by P1, so (C_j U)_l is an integral
  // over the support of phi_l that a refined sub-triangle rule can evaluate.
  Fixture f("f1+g1", 64, 32, 4, 2.0, 6);
  const auto &s = f.sys;
  const auto &mesh = *f.mesh;
  const double scale = std::sqrt(s.grid.period / (2.0 * pi));
  const double k2 = f.p.k * f.p.k;

  // Nodes near the middle of the bump support at a few heights.
  std::vector<int> rows;
  for (int v = 0; v < s.M; ++v) {
    const Point2 x = mesh.vertices[v];
    if (std::abs(x.x1 + 1.0) < 0.05 && (std::abs(x.x2 - 1.2) < 0.05 || std::abs(x.x2 - 2.0) < 0.05))
      rows.push_back(v);
  }
  REQUIRE(rows.size() >= 2);
  // Nodes at the lower edge of the cell adjacent to the bottom row.
  std::vector<double> ones(s.Mt, 1.0), heights(s.Mt);
  for (int v = 0; v < s.Mt; ++v)
    heights[v] = mesh.vertices[v].x2;

  for (int j : {0, 3})
    for (int l : rows) {
      cplx c1 = 0.0, cx = 0.0;
      const auto &cp = *s.C.pattern;
      for (int e = cp.row_ptr[l]; e < cp.row_ptr[l + 1]; ++e) {
        c1 += s.C.values[j][e] * ones[cp.col_idx[e]];
        cx += s.C.values[j][e] * heights[cp.col_idx[e]];
      }
      cplx r1 = 0.0, rx = 0.0;
      const int sub = 24;
      for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto &tri = mesh.triangles[t];
        int a = -1;
        for (int q = 0; q < 3; ++q)
          if (tri[q] == l)
            a = q;
        if (a < 0)
          continue;
        const auto v = mesh.triangle_coords(t);
        const auto e = p1(v);
        // Edge-midpoint rule on a uniform subdivision.
        for (int i = 0; i < sub; ++i)
          for (int jj = 0; i + jj < sub; ++jj)
            for (int up = 0; up < 2; ++up) {
              if (up && i + jj + 1 >= sub)
                continue;
              std::array<std::array<double, 2>, 3> st;
              if (!up)
                st = {{{double(i), double(jj)}, {double(i + 1), double(jj)}, {double(i), double(jj + 1)}}};
              else
                st = {{{double(i + 1), double(jj)}, {double(i + 1), double(jj + 1)}, {double(i), double(jj + 1)}}};
              const double w = e.area / (sub * sub) / 3.0;
              for (int m = 0; m < 3; ++m) {
                const double ss = 0.5 * (st[m][0] + st[(m + 1) % 3][0]) / sub;
                const double tt = 0.5 * (st[m][1] + st[(m + 1) % 3][1]) / sub;
                const double lam[3] = {1.0 - ss - tt, ss, tt};
                const Point2 x{lam[0] * v[0].x1 + lam[1] * v[1].x1 + lam[2] * v[2].x1,
                               lam[0] * v[0].x2 + lam[1] * v[1].x2 + lam[2] * v[2].x2};
                const auto co = coefficients(f.geo, x);
                const cplx g = std::conj(g_weight(s.grid, j, x.x1, f.p.sigma));
                const cplx dg = std::conj(g_weight_deriv(s.grid, j, x.x1, f.p.sigma));
                const double phi = lam[a];
                // grad u = 0 for U = 1; grad u = e2 for U = x2.
                r1 += w * (-k2 * (co.c - 1.0) * g * phi);
                const cplx tx = g * e.gx[a] + phi * dg, ty = g * e.gy[a];
                rx += w * (co.A[1] * tx + (co.A[3] - 1.0) * ty - k2 * (co.c - 1.0) * x.x2 * g * phi);
              }
            }
      }
      r1 *= scale;
      rx *= scale;
      CHECK(std::abs(c1 - r1) <= 1e-6 * std::abs(r1));
      CHECK(std::abs(cx - rx) <= 1e-6 * std::abs(rx));
    }
}

TEST_CASE("B_j is minus the scaled g weight on every node") {
  Fixture f("f1+g1", 8, 6, 5, 1.0);
  const auto &s = f.sys;
  const double scale = std::sqrt(s.grid.period / (2.0 * pi));
  for (int m = 0; m < s.Mt; m += 7) {
    const double x1 = f.mesh->vertices[m].x1;
    cplx sum = 0.0;
    for (int j = 0; j < s.N(); ++j) {
      const cplx ref = -scale * tanh_sinh_integral([&](double a) { return std::polar(1.0, f.p.sigma * a * x1); },
                                                   s.grid.lower(j), s.grid.upper(j));
      CHECK(std::abs(s.B[j][m] - ref) < 1e-13);
      sum += s.B[j][m];
    }
    const double zone = std::abs(x1) < 1e-12 ? 1.0 : 2.0 * std::sin(0.5 * x1) / x1;
    CHECK(std::abs(sum + scale * zone) < 1e-13);
  }
}

TEST_CASE("right-hand side: interval averages of the transformed incident field") {
  const Geometry geo = make_geometry("f1+g1", 3.0);
  const auto mesh = generate_cell_mesh(geo, 16, 8);
  const WaveParams p{1.0, 2.0 * pi, -1};
  const IncidentSource src{{0.5, 0.4}, 1.0};
  const auto grid = make_grid(4, 2.0 * pi);
  RhsOptions lit;
  lit.mode = RhsMode::literal;
  RhsOptions cor;
  cor.sign = 1;
  const auto F = assemble_rhs(grid, mesh, geo, src, p, lit);
  const auto G = assemble_rhs(grid, mesh, geo, src, p, cor);
  CHECK(F.max_quadrature_change < 1e-8);
  for (int v = 0; v < mesh.M; ++v)
    for (int j = 0; j < 4; ++j) {
      CHECK(F.F[j][v] == cplx(0.0));
      CHECK(G.F[j][v] == cplx(0.0));
    }
  const auto bottom = mesh.bottom_nodes();
  const double scale = 1.0;
  for (std::size_t b = 0; b < bottom.size(); b += 3) {
    const Point2 x = mesh.vertices[bottom[b]];
    for (int j = 0; j < 4; ++j) {
      // alpha = 0 is a cutoff for k = 1; it lies on interval endpoints here.
      const cplx ref = tanh_sinh_integral(
                           [&](double a) { return std::polar(1.0, -p.sigma * a * x.x1) * incident_bloch(src, p, a, x); },
                           grid.lower(j), grid.upper(j)) /
                       (2.0 * grid.delta);
      CHECK(std::abs(F.F[j][bottom[b]] + ref) < 1e-9 * std::max(1.0, std::abs(ref)));
      // Corrected data adds the one-cell difference on the perturbed surface.
      const cplx corr = scale * (incident_field(src, {x.x1, geo.zeta_p(x.x1)}) - incident_field(src, x)) *
                        std::conj(g_weight(grid, j, x.x1, p.sigma)) / (2.0 * grid.delta);
      CHECK(std::abs(G.F[j][bottom[b]] - (ref + corr)) < 1e-9 * std::max(1.0, std::abs(ref)));
    }
  }
  CHECK_THROWS_AS(
      [&] {
        RhsOptions bad;
        bad.sign = 0;
        assemble_rhs(grid, mesh, geo, src, p, bad);
      }(),
      DomainError);
}

TEST_CASE("corrected data inverse-transforms to the incident trace on the perturbed surface") {
  const Geometry geo = make_geometry("f1+g1", 3.0);
  const auto mesh = generate_cell_mesh(geo, 32, 8);
  const WaveParams p{1.0, 2.0 * pi, -1};
  const IncidentSource src{{0.5, 0.4}, 1.0};
  const auto bottom = mesh.bottom_nodes();
  std::vector<double> err;
  for (int N : {10, 20, 40}) {
    const auto grid = make_grid(N, 2.0 * pi);
    RhsOptions cor;
    cor.sign = 1;
    const auto F = assemble_rhs(grid, mesh, geo, src, p, cor);
    double num = 0.0, den = 0.0;
    for (int v : bottom) {
      const Point2 x = mesh.vertices[v];
      cplx u = 0.0;
      for (int j = 0; j < N; ++j)
        u += g_weight(grid, j, x.x1, p.sigma) * F.F[j][v];
      const cplx ref = incident_field(src, {x.x1, geo.zeta_p(x.x1)});
      num += std::norm(u - ref);
      den += std::norm(ref);
    }
    err.push_back(std::sqrt(num / den));
  }
  CHECK(err[1] < err[0]);
  CHECK(err[2] < err[1]);
  CHECK(err[2] < 5e-2);
}
