#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nrflow/operators.hpp"

using namespace nrflow;
using doctest::Approx;

namespace {

std::vector<double> random_field(std::mt19937_64& rng, size_t n) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

TEST_CASE("1D grid geometry") {
  Grid g(10, 2.0);
  CHECK(g.dim() == 1);
  CHECK(g.num_cells() == 10);
  CHECK(g.faces().size() == 9);
  CHECK(g.boundary_faces().size() == 2);
  CHECK(g.cell_volume() == Approx(0.2));
  CHECK(g.total_volume() == Approx(2.0));
  CHECK(g.center(0)[0] == Approx(0.1));
  for (const auto& f : g.faces()) {
    CHECK(f.right == f.left + 1);
    CHECK(f.dist == Approx(0.2));
    CHECK(f.area == 1.0);
  }
  CHECK(g.cell_faces(0).size() == 1);
  CHECK(g.cell_faces(5).size() == 2);
}

TEST_CASE("2D grid geometry") {
  Grid g(4, 3, 2.0, 1.5);
  CHECK(g.num_cells() == 12);
  CHECK(g.faces().size() == 3 * 3 + 4 * 2);
  CHECK(g.boundary_faces().size() == 2 * (4 + 3));
  double perimeter = 0.0;
  for (const auto& b : g.boundary_faces()) perimeter += b.area;
  CHECK(perimeter == Approx(2 * (2.0 + 1.5)));
  CHECK(g.index(2, 1) == 6);
  CHECK(g.ij(6)[0] == 2);
  CHECK(g.ij(6)[1] == 1);
  CHECK_THROWS_AS(Grid(0, 1.0), std::invalid_argument);
}

TEST_CASE("divergence is conservative") {
  std::mt19937_64 rng(1);
  for (const Grid& g : {Grid(17, 1.0), Grid(5, 7, 1.0, 2.0)}) {
    const auto flux = random_field(rng, g.faces().size());
    CHECK(integrate(g, div(g, flux)) == Approx(0.0).scale(1.0));
  }
}

TEST_CASE("Laplacian of a quadratic is exact in the interior") {
  Grid g(20, 1.0);
  std::vector<double> u;
  for (int c = 0; c < g.num_cells(); ++c) u.push_back(g.center(c)[0] * g.center(c)[0]);
  const auto l = laplace(g, u);
  for (int c = 1; c + 1 < g.num_cells(); ++c) CHECK(l[static_cast<size_t>(c)] == Approx(2.0).epsilon(1e-9));
  const std::vector<double> one(20, 3.0);
  for (double x : laplace(g, one)) CHECK(x == 0.0);
}

TEST_CASE("Laplacian and bi-Laplacian are symmetric and semidefinite") {
  std::mt19937_64 rng(2);
  Grid g(6, 5, 1.0, 1.0);
  const size_t n = static_cast<size_t>(g.num_cells());
  const auto u = random_field(rng, n), v = random_field(rng, n);
  CHECK(dot(u, laplace(g, v)) == Approx(dot(laplace(g, u), v)).epsilon(1e-12));
  CHECK(dot(u, laplace(g, u)) <= 0.0);
  std::vector<double> w(n);
  for (auto& x : w) x = 1.0 + std::abs(random_field(rng, 1)[0]);
  CHECK(dot(u, bilaplace(g, v, &w)) == Approx(dot(bilaplace(g, u, &w), v)).epsilon(1e-12));
  CHECK(dot(u, bilaplace(g, u, &w)) >= 0.0);
}

TEST_CASE("weighted and p-Laplacian reduce to the plain operators") {
  std::mt19937_64 rng(3);
  Grid g(12, 1.0);
  const auto u = random_field(rng, 12);
  const std::vector<double> one(g.faces().size(), 1.0);
  const auto a = laplace(g, u), b = weighted_laplace(g, u, one);
  for (size_t k = 0; k < a.size(); ++k) CHECK(a[k] == Approx(b[k]));
  const auto gr = grad(g, u), p1 = p_laplacian_flux(g, u, 1.0);
  for (size_t k = 0; k < gr.size(); ++k) CHECK(gr[k] == Approx(p1[k]));
  const auto p3 = p_laplacian_flux(g, u, 3.0);
  for (size_t k = 0; k < gr.size(); ++k) CHECK(p3[k] == Approx(gr[k] * gr[k] * gr[k]));
  CHECK_THROWS_AS(p_laplacian_flux(g, u, 0.5), std::invalid_argument);
}

TEST_CASE("face average and integration") {
  Grid g(4, 1.0);
  const std::vector<double> u{1, 2, 3, 5};
  const auto fa = face_average(g, u);
  CHECK(fa[0] == 1.5);
  CHECK(fa[2] == 4.0);
  CHECK(integrate(g, u) == Approx(11.0 / 4));
}

TEST_CASE("boundary terms vanish at matched data") {
  Grid g(5, 1.0);
  Eigen::MatrixXd b(2, 2);
  b << 1, -1, -1, 1;
  std::vector<double> z;
  for (int c = 0; c < 5; ++c) z.insert(z.end(), {0.3, -0.2});
  for (double x : boundary_species_term(g, b, z, {0.3, -0.2})) CHECK(x == 0.0);
  const auto bs = boundary_species_term(g, b, z, {0.0, 0.0});
  CHECK(bs[0] == Approx(0.5 * 5));
  CHECK(bs[0] + bs[1] == Approx(0.0).scale(1.0));
  const std::vector<double> T{1.0, 1.0, 1.0, 1.0, 2.0};
  const auto bh = boundary_heat_term(g, 3.0, T, 1.0);
  CHECK(bh[0] == 0.0);
  CHECK(bh[4] == Approx(3.0 * 5));
}

TEST_CASE("OpenMP kernels reproduce the serial kernels bitwise") {
  std::mt19937_64 rng(4);
  Grid g(31, 17, 1.0, 1.0);
  const size_t n = static_cast<size_t>(g.num_cells());
  const auto u = random_field(rng, n);
  std::vector<double> w(n, 1.5), coef(g.faces().size(), 0.7);
  CHECK(grad(g, u, Exec::Serial) == grad(g, u, Exec::Parallel));
  CHECK(laplace(g, u, Exec::Serial) == laplace(g, u, Exec::Parallel));
  CHECK(weighted_laplace(g, u, coef, Exec::Serial) == weighted_laplace(g, u, coef, Exec::Parallel));
  CHECK(bilaplace(g, u, &w, Exec::Serial) == bilaplace(g, u, &w, Exec::Parallel));
  CHECK(p_laplacian_flux(g, u, 6.0, &coef, Exec::Serial) == p_laplacian_flux(g, u, 6.0, &coef, Exec::Parallel));
}

TEST_CASE("operators differentiate through dual numbers") {
  Grid g(8, 1.0);
  std::vector<Dual> u(8);
  for (int c = 0; c < 8; ++c) u[static_cast<size_t>(c)] = Dual{std::sin(c * 1.0), c == 3 ? 1.0 : 0.0};
  const auto l = laplace(g, u);
  const double h2 = 1.0 / (g.spacing(0) * g.spacing(0));
  CHECK(l[3].d == Approx(-2.0 * h2));
  CHECK(l[2].d == Approx(h2));
  CHECK(l[5].d == 0.0);
}
