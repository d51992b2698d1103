#include <doctest.h>

#include <random>

#include "finsler/error.hpp"
#include "finsler/geodesics.hpp"
#include "finsler/mesh.hpp"
#include "oracles.hpp"

using namespace finsler;

namespace {
const Vec kOrigin = Vec::Zero(2);
}

TEST_CASE("distortion values") {
  const auto flat = spaces::flat();
  CHECK(flat.distortion(kOrigin, vec2(0.4, 1.0)) == doctest::Approx(0.0));

  const auto gauss = spaces::gaussian();
  // det g = 1 so tau = -Phi = |x|^2/2
  CHECK(gauss.distortion(vec2(1, 0), vec2(0, 1)) == doctest::Approx(0.5));

  const auto rds = spaces::randers_const();
  const Vec y = vec2(0, 1);
  const Mat g = rds.metric.fundamental_tensor(kOrigin, y);
  const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);  // direct 2x2 formula
  CHECK(std::abs(rds.distortion(kOrigin, y) - std::log(std::sqrt(det))) <= 1e-8);

  CHECK_THROWS_AS((void)flat.distortion(kOrigin, Vec::Zero(2)), ZeroVector);
}

TEST_CASE("geodesic shooting: flat and constant Randers go straight") {
  const auto flat = spaces::flat();
  const auto path = geodesic_shoot(flat, kOrigin, vec2(1, 0), 2.0, 0.05);
  CHECK((path.x.back() - vec2(2, 0)).norm() <= 1e-12);
  CHECK(path.constant_speed_drift(flat) <= 1e-6);

  const auto rds = spaces::randers_const();
  const auto p2 = geodesic_shoot(rds, kOrigin, vec2(0, 1), 1.5, 0.05);
  CHECK(std::abs(p2.x.back()[0]) <= 1e-12);
  CHECK(p2.x.back()[1] == doctest::Approx(1.5));
}

TEST_CASE("geodesic shooting: Poincare disk diameter endpoint") {
  const auto hyp = spaces::hyperbolic();
  // unit-F initial vector at the origin: F = 2|y|
  const Vec y0 = vec2(0.5, 0.0);
  REQUIRE(hyp.metric.norm(kOrigin, y0) == doctest::Approx(1.0));
  const auto path = geodesic_shoot(hyp, kOrigin, y0, 1.0, 0.01);
  // closed form: Euclidean radius tanh(t/2) along a diameter
  CHECK(std::abs(path.x.back()[0] - std::tanh(0.5)) <= 1e-5);
  CHECK(std::abs(path.x.back()[1]) <= 1e-9);
  CHECK(path.constant_speed_drift(hyp) <= 1e-6);
}

TEST_CASE("constant-speed invariant on a curved shot") {
  const auto hyp = spaces::hyperbolic();
  const Vec y0 = vec2(0.3, 0.4);  // not unit
  const auto path = geodesic_shoot(hyp, vec2(0.1, -0.2), y0, 1.2, 0.02);
  CHECK(path.constant_speed_drift(hyp) <= 1e-6);
  CHECK(path.speed == doctest::Approx(hyp.metric.norm(vec2(0.1, -0.2), y0)));
}

TEST_CASE("shooting rejects bad inputs") {
  const auto flat = spaces::flat();
  CHECK_THROWS_AS((void)geodesic_shoot(flat, kOrigin, Vec::Zero(2), 1.0, 0.1), ZeroVector);
  CHECK_THROWS_AS((void)geodesic_shoot(flat, kOrigin, vec2(1, 0), 1.0, -0.1), StepFailure);
  // shooting out of the Poincare disk breaks the metric domain
  const auto hyp = spaces::hyperbolic();
  CHECK_THROWS_AS((void)geodesic_shoot(hyp, kOrigin, vec2(0.5, 0.0), 50.0, 0.05), StepFailure);
}

TEST_CASE("s-curvature") {
  const auto flat = spaces::flat();
  CHECK(std::abs(s_curvature(flat, vec2(0.3, 0.2), vec2(1, 0))) <= 1e-10);

  const auto gauss = spaces::gaussian();
  CHECK(std::abs(s_curvature(gauss, vec2(1, 0), vec2(1, 0)) - 1.0) <= 1e-5);

  const auto hyp = spaces::hyperbolic();
  CHECK(std::abs(s_curvature(hyp, vec2(0.2, 0.1), vec2(0.5, -0.2))) <= 1e-6);

  const auto rds = spaces::randers_const();
  CHECK(std::abs(s_curvature(rds, vec2(0.5, 0.5), vec2(0.3, 1.0))) <= 1e-8);
}

TEST_CASE("gaussian S matches <x,y> on 100 random unit vectors") {
  const auto gauss = spaces::gaussian();
  std::mt19937_64 rng(kDefaultSeed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int s = 0; s < 100; ++s) {
    const Vec x = vec2(unif(rng), unif(rng));
    double th = M_PI * unif(rng);
    const Vec y = vec2(std::cos(th), std::sin(th));
    CHECK(std::abs(s_curvature(gauss, x, y) - x.dot(y)) <= 1e-5);
  }
}

TEST_CASE("distance values") {
  const auto flat = spaces::flat();
  CHECK(distance(flat, kOrigin, vec2(3, 4)) == doctest::Approx(5.0));
  CHECK(distance(flat, vec2(1, 1), vec2(1, 1)) == 0.0);

  const auto rds = spaces::randers_const();
  CHECK(distance(rds, kOrigin, vec2(1, 0)) == doctest::Approx(1.5));
  CHECK(distance(rds, vec2(1, 0), kOrigin) == doctest::Approx(0.5));
}

TEST_CASE("hyperbolic distance against the closed form") {
  const auto hyp = spaces::hyperbolic();
  const Vec pairs[][2] = {{kOrigin, vec2(0.4, 0.1)},
                          {vec2(-0.3, 0.2), vec2(0.35, -0.1)},
                          {vec2(0.1, 0.1), vec2(0.2, 0.55)}};
  for (const auto& pq : pairs) {
    const double d = distance(hyp, pq[0], pq[1]);
    const double d_cf = oracles::hyperbolic_distance(pq[0], pq[1]);
    CHECK(std::abs(d - d_cf) <= 1e-3 * std::max(1.0, d_cf));
  }
}

TEST_CASE("triangle inequality under asymmetry") {
  const auto rds = spaces::randers_const();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(-1.5, 1.5);
  for (int s = 0; s < 50; ++s) {
    const Vec a = vec2(unif(rng), unif(rng));
    const Vec b = vec2(unif(rng), unif(rng));
    const Vec c = vec2(unif(rng), unif(rng));
    CHECK(distance(rds, a, c) <= distance(rds, a, b) + distance(rds, b, c) + 1e-9);
  }
}

TEST_CASE("distance consistency: minimizing shots land on target") {
  const auto hyp = spaces::hyperbolic();
  std::mt19937_64 rng(kDefaultSeed);
  std::uniform_real_distribution<double> unif(-0.45, 0.45);
  int checked = 0;
  for (int s = 0; s < 100; ++s) {
    const Vec a = vec2(unif(rng), unif(rng));
    const Vec b = vec2(unif(rng), unif(rng));
    if ((a - b).norm() < 0.05) continue;
    const auto res = distance_path(hyp, a, b);
    // the minimization value can never undercut the true distance by more
    // than the discretization slack
    const double d_cf = oracles::hyperbolic_distance(a, b);
    CHECK(res.value >= d_cf - 2e-3 * std::max(1.0, d_cf));
    // shoot along the minimizer's initial direction for time = distance;
    // a minimal path must land on the target
    Vec dir = res.polyline[1] - res.polyline[0];
    dir /= hyp.metric.norm(a, dir);
    const auto path = geodesic_shoot(hyp, a, dir, res.value, res.value / 64.0);
    CHECK((path.x.back() - b).norm() <= 1.5e-2);
    ++checked;
  }
  CHECK(checked >= 80);
}

TEST_CASE("gradient field on meshes") {
  const auto flat = spaces::flat();
  const Mesh mesh = Mesh::rectangle(flat, vec2(0, 0), vec2(1, 1), 8, 8);

  DiscreteFunction u = DiscreteFunction::zeros(mesh);
  for (int i = 0; i < mesh.n_nodes(); ++i) u.values[i] = mesh.nodes[i][0];
  auto field = gradient_field(flat, u);
  for (const Vec& y : field) CHECK((y - vec2(1, 0)).norm() <= 1e-12);

  DiscreteFunction c = DiscreteFunction::zeros(mesh);
  c.values.setConstant(3.0);
  for (const Vec& y : gradient_field(flat, c)) CHECK(y.norm() == 0.0);

  const auto rds = spaces::randers_const();
  const Mesh mesh2 = Mesh::rectangle(rds, vec2(0, 0), vec2(1, 1), 8, 8);
  DiscreteFunction u2 = DiscreteFunction::zeros(mesh2);
  for (int i = 0; i < mesh2.n_nodes(); ++i) u2.values[i] = mesh2.nodes[i][0];
  const Vec expect = rds.metric.legendre_inverse(kOrigin, vec2(1, 0));
  for (const Vec& y : gradient_field(rds, u2)) {
    CHECK((y - expect).norm() <= 1e-10);
    CHECK(std::abs(rds.metric.norm(kOrigin, y) - 2.0 / 3.0) <= 1e-8);
  }
}

TEST_CASE("reverse-metric gradient relation") {
  // F(grad(-u)) equals the reverse-metric norm of the reverse gradient
  const auto rds = spaces::randers_const();
  const auto rev = rds.metric.reversed();
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int s = 0; s < 200; ++s) {
    const Vec xi = vec2(unif(rng), unif(rng));
    if (xi.norm() < 1e-8) continue;
    const double lhs = rds.metric.norm(kOrigin, rds.metric.legendre_inverse(kOrigin, Vec(-xi)));
    const double rhs = rev.norm(kOrigin, rev.legendre_inverse(kOrigin, xi));
    CHECK(std::abs(lhs - rhs) <= 1e-8 * (1.0 + rhs));
  }
}

TEST_CASE("weak divergence residual") {
  const auto flat = spaces::flat();
  const Mesh mesh = Mesh::rectangle(flat, vec2(-1, -1), vec2(1, 1), 32, 32);

  // V = 0 vanishes exactly
  std::vector<Vec> V0(mesh.n_cells(), Vec::Zero(2));
  std::vector<double> div0(mesh.n_cells(), 0.0);
  DiscreteFunction phi = DiscreteFunction::zeros(mesh);
  int center = -1;
  for (int i = 0; i < mesh.n_nodes(); ++i)
    if ((mesh.nodes[i] - kOrigin).norm() < 1e-12) center = i;
  REQUIRE(center >= 0);
  phi.values[center] = 1.0;
  CHECK(weak_divergence_residual(flat, mesh, V0, div0, phi) == 0.0);

  // constant field, interior hat: discrete exactness
  std::vector<Vec> V1(mesh.n_cells(), vec2(1, 0));
  CHECK(std::abs(weak_divergence_residual(flat, mesh, V1, div0, phi)) <= 1e-10);

  // Gaussian weight: the dphi(V) term cancels the analytic divergence
  // integral int phi dPhi(V) dm over the hat support
  const auto gauss = spaces::gaussian();
  const Mesh gmesh = Mesh::rectangle(gauss, vec2(-1, -1), vec2(1, 1), 32, 32);
  DiscreteFunction gphi = DiscreteFunction::zeros(gmesh);
  int gc = -1;
  for (int i = 0; i < gmesh.n_nodes(); ++i)
    if ((gmesh.nodes[i] - vec2(0.25, 0.25)).norm() < 1e-9) gc = i;
  REQUIRE(gc >= 0);
  gphi.values[gc] = 1.0;
  const double residual = weak_divergence_residual(gauss, gmesh, V1, div0, gphi);
  CHECK(std::abs(residual) <= 1e-7);

  // independent fine barycentric quadrature over the support cells
  double oracle = 0.0;
  for (int c = 0; c < gmesh.n_cells(); ++c) {
    bool touches = false;
    for (int k = 0; k < 3; ++k) touches |= (gmesh.cells[c][k] == gc);
    if (!touches) continue;
    const Vec& p0 = gmesh.nodes[gmesh.cells[c][0]];
    const Vec& p1 = gmesh.nodes[gmesh.cells[c][1]];
    const Vec& p2 = gmesh.nodes[gmesh.cells[c][2]];
    double phiv[3];
    for (int k = 0; k < 3; ++k) phiv[k] = gphi.values[gmesh.cells[c][k]];
    const int sub = 32;
    for (int a = 0; a < sub; ++a)
      for (int b = 0; a + b < sub; ++b)
        for (int up = 0; up < 2; ++up) {
          if (up == 1 && a + b + 2 > sub) continue;
          const double l1 = (a + (up ? 2.0 : 1.0) / 3.0) / sub;
          const double l2 = (b + (up ? 2.0 : 1.0) / 3.0) / sub;
          const double l0 = 1.0 - l1 - l2;
          const Vec x = l0 * p0 + l1 * p1 + l2 * p2;
          const double phix = l0 * phiv[0] + l1 * phiv[1] + l2 * phiv[2];
          const double w = gmesh.cell_area[c] / (sub * sub);
          oracle += w * phix * gauss.grad_log_density(x)[0] * gauss.weight(x);
        }
  }
  double i1 = 0.0;
  for (int c = 0; c < gmesh.n_cells(); ++c)
    i1 += gmesh.cell_weight[c] * gphi.cell_du(c).dot(V1[c]);
  CHECK(std::abs(i1 + oracle) <= 1e-6);
}

TEST_CASE("mesh dual volumes sum to the domain mass") {
  const auto gauss = spaces::gaussian();
  const Mesh mesh = Mesh::rectangle(gauss, vec2(-1, -1), vec2(1, 1), 16, 16);
  double dual = 0.0;
  for (double v : mesh.node_dual_volume) dual += v;
  CHECK(dual == doctest::Approx(mesh.total_mass()));
  // mass approximates the analytic integral of e^{-|x|^2/2}
  double exact = 0.0;
  {
    const int n = 400;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double x = -1.0 + 2.0 * (i + 0.5) / n;
        const double y = -1.0 + 2.0 * (j + 0.5) / n;
        exact += std::exp(-0.5 * (x * x + y * y)) * (2.0 / n) * (2.0 / n);
      }
  }
  CHECK(mesh.total_mass() == doctest::Approx(exact).epsilon(1e-4));
}
