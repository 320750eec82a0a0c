#include <doctest.h>

#include "lpscat/postprocess.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace lpscat;

namespace {

std::shared_ptr<const CellMesh> make_mesh(const Geometry &g, int n1, int n2) {
  return std::make_shared<CellMesh>(generate_cell_mesh(g, n1, n2));
}

// Random points inside the meshed cell, drawn through the column map.
std::vector<Point2> sample_points(const CellMesh &m, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point2> out;
  for (int i = 0; i < count; ++i) {
    const double x1 = -pi + 2.0 * pi * u(rng);
    const double ds = m.period / m.n1;
    const int col = std::min(m.n1 - 1, static_cast<int>((x1 + pi) / ds));
    const double s0 = -pi + col * ds, th = (x1 - s0) / ds;
    const double z = (1.0 - th) * m.bottom(s0) + th * m.bottom(s0 + ds);
    out.push_back({x1, z + (m.H - z) * u(rng)});
  }
  return out;
}

} // namespace

TEST_CASE("interpolant is exact at the nodes and their left images") {
  const Geometry g = make_geometry("f2+g2", 4.0);
  const auto mesh = make_mesh(g, 12, 8);
  auto f = [](Point2 x) { return cplx(std::cos(x.x1) * x.x2, x.x1 * x.x1); };
  const auto s = interpolate(mesh, f);
  for (int m = 0; m < mesh->M_total; ++m)
    CHECK(std::abs(evaluate_field(s, mesh->vertices[m]) - f(mesh->vertices[m])) < 1e-12);
  for (int j = 0; j <= mesh->n2; ++j) {
    const Point2 left = mesh->periodic_partner(mesh->node_index(mesh->n1, j));
    CHECK(std::abs(evaluate_field(s, left) - f(left)) < 1e-12);
  }
}

TEST_CASE("linear fields are reproduced everywhere") {
  const Geometry g = make_geometry("f1+g1", 4.0);
  const auto mesh = make_mesh(g, 10, 6);
  // Not periodic in x1: exercises the ghost values at the left edge.
  auto f = [](Point2 x) { return cplx(1.0 + 2.0 * x.x1, -0.5 * x.x2 + x.x1); };
  const auto s = interpolate(mesh, f);
  for (const auto &x : sample_points(*mesh, 200, 2))
    CHECK(std::abs(evaluate_field(s, x) - f(x)) < 1e-12);
  const auto q = reference_quadrature(4);
  CHECK(relative_l2_error(s, f, q) < 1e-14);
  CHECK(relative_h1_error(s, [](Point2) { return std::array<cplx, 2>{cplx(2.0, 1.0), cplx(0.0, -0.5)}; }, q) <
        1e-13);
}

TEST_CASE("error norm sanity: zero field and doubled field") {
  const Geometry g = make_geometry("f1", 4.0);
  const auto mesh = make_mesh(g, 16, 8);
  auto f = [](Point2 x) { return std::polar(1.0, x.x1 + 0.3 * x.x2); };
  const auto q = reference_quadrature(4);
  const auto zero = interpolate(mesh, [](Point2) { return cplx(0.0); });
  CHECK(relative_l2_error(zero, f, q) == doctest::Approx(1.0).epsilon(1e-14));
  const auto twice = interpolate(mesh, [&](Point2 x) { return 2.0 * f(x); });
  CHECK(relative_l2_error(twice, f, q) == doctest::Approx(1.0).epsilon(5e-2));
  // Jacobian weight of 4 scales both norms by 2.
  const auto s = interpolate(mesh, f);
  const auto e1 = l2_error(s, f, q), e4 = l2_error(s, f, q, [](Point2) { return 4.0; });
  CHECK(e4.l2_error == doctest::Approx(2.0 * e1.l2_error));
  CHECK(e4.l2_reference == doctest::Approx(2.0 * e1.l2_reference));
  CHECK_THROWS_AS(relative_l2_error(s, [](Point2) { return cplx(0.0); }, q), DomainError);
}

TEST_CASE("interpolation error converges at second order in L2 and first in H1") {
  const Geometry g = make_geometry("f2+g1", 4.0);
  auto f = [](Point2 x) { return std::polar(1.0 + 0.1 * x.x2, 1.3 * x.x1 - 0.8 * x.x2); };
  auto grad = [&](Point2 x) {
    const cplx v = f(x);
    const cplx dr = std::polar(0.1, 1.3 * x.x1 - 0.8 * x.x2);
    return std::array<cplx, 2>{I * 1.3 * v, dr - I * 0.8 * v};
  };
  const auto q = reference_quadrature(6);
  std::vector<double> hs, l2, h1;
  for (int n : {8, 16, 32, 64}) {
    const auto mesh = make_mesh(g, 2 * n, n);
    const auto s = interpolate(mesh, f);
    hs.push_back(mesh->h);
    l2.push_back(relative_l2_error(s, f, q));
    h1.push_back(relative_h1_error(s, grad, q));
  }
  CHECK(fit_loglog_slope(hs, l2) == doctest::Approx(2.0).epsilon(0.125));
  CHECK(fit_loglog_slope(hs, h1) == doctest::Approx(1.0).epsilon(0.25));
}

TEST_CASE("incident field interpolation at h = 0.04 is well below 1e-2") {
  const Geometry g = make_geometry("f1+g1", 4.0);
  const auto mesh = std::make_shared<CellMesh>(mesh_for_target_h(g, 0.04));
  const IncidentSource src{{0.5, 0.4}, 1.0};
  auto ref = [&](Point2 x) { return incident_field(src, phi_p(g, x)); };
  CHECK(relative_l2_error(interpolate(mesh, ref), ref, reference_quadrature(4)) < 1e-3);
}

TEST_CASE("reconstruction sums the g weights over intervals") {
  const Geometry g = make_geometry("f1+g1", 3.0);
  const auto mesh = make_mesh(g, 8, 4);
  BlockSystem sys;
  sys.grid = make_grid(5, 2.0 * pi);
  sys.params = WaveParams{1.0, 2.0 * pi, -1};
  sys.mesh = mesh;
  sys.M = mesh->M;
  sys.Mt = mesh->M_total;
  // W_j = c at every node reconstructs c * int_zone exp(i sigma alpha x1).
  const cplx c(0.7, -0.2);
  std::vector<std::vector<cplx>> W(5, std::vector<cplx>(sys.Mt, c));
  const auto u = reconstruct_field(sys, W);
  auto expect = [&](double x1) { return c * (std::abs(x1) < 1e-14 ? 1.0 : 2.0 * std::sin(0.5 * x1) / x1); };
  for (int m = 0; m < sys.Mt; ++m)
    CHECK(std::abs(u.values[m] - expect(mesh->vertices[m].x1)) < 1e-14);
  for (int j = 0; j <= mesh->n2; ++j) {
    const int node = mesh->node_index(mesh->n1, j);
    CHECK(std::abs(u.ghost[node] - expect(-pi)) < 1e-14);
  }
}

TEST_CASE("physical evaluation pulls back through the perturbation map") {
  const Geometry g = make_geometry("f2+g2", 4.0);
  const auto mesh = make_mesh(g, 24, 12);
  auto f = [](Point2 y) { return cplx(std::sin(y.x1), y.x2 * y.x2); };
  const auto s = interpolate(mesh, [&](Point2 x) { return f(phi_p(g, x)); });
  const auto phys = reconstruct_physical(s, g);
  for (int m = 0; m < mesh->M_total; m += 5) {
    const Point2 y = phi_p(g, mesh->vertices[m]);
    CHECK(std::abs(phys(y) - f(y)) < 1e-9);
  }
}

TEST_CASE("evaluation outside the cell is a domain error") {
  const Geometry g = make_geometry("f1", 4.0);
  const auto s = interpolate(make_mesh(g, 8, 4), [](Point2) { return cplx(1.0); });
  CHECK_THROWS_AS(evaluate_field(s, {4.0, 2.0}), DomainError);
  CHECK_THROWS_AS(evaluate_field(s, {0.0, 4.5}), DomainError);
  CHECK_THROWS_AS(evaluate_field(s, {0.0, 0.1}), DomainError);
}

TEST_CASE("log-log slope fit") {
  const std::vector<double> x{0.1, 0.05, 0.025, 0.0125};
  std::vector<double> y;
  for (double v : x)
    y.push_back(3.0 * v * v);
  CHECK(fit_loglog_slope(x, y) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(fit_loglog_slope({1.0}, {1.0}), DomainError);
  CHECK_THROWS_AS(fit_loglog_slope({1.0, 2.0}, {1.0}), DomainError);
}

TEST_CASE("VTK output lists every vertex and left image") {
  const Geometry g = make_geometry("f1+g1", 4.0);
  const auto mesh = make_mesh(g, 6, 4);
  const auto s = interpolate(mesh, [](Point2 x) { return cplx(x.x1, x.x2); });
  const auto path = std::filesystem::temp_directory_path() / "lpscat_test_field.vtk";
  write_field_vtk(s, path.string());
  std::ifstream is(path);
  std::string line;
  bool found = false;
  while (std::getline(is, line))
    if (line.rfind("POINTS", 0) == 0) {
      CHECK(line.find(std::to_string(mesh->M_total + mesh->n2 + 1)) != std::string::npos);
      found = true;
    }
  CHECK(found);
  std::filesystem::remove(path);
}
