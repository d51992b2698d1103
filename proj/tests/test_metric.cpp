#include <doctest.h>

#include <random>

#include "finsler/error.hpp"
#include "finsler/metric.hpp"
#include "oracles.hpp"

using namespace finsler;

namespace {

MetricDescriptor randers_half() {
  return MetricDescriptor::randers(MatrixField::identity(2),
                                   CovectorField::constant_covector(vec2(0.5, 0.0)));
}

MetricDescriptor random_randers(std::mt19937_64& rng, double max_drift = 0.8) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // random SPD a = Q diag(l1,l2) Q^T
  const double th = 2.0 * M_PI * unif(rng);
  Mat Q(2, 2);
  Q << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  Mat D = Mat::Zero(2, 2);
  D(0, 0) = 0.5 + 1.5 * unif(rng);
  D(1, 1) = 0.5 + 1.5 * unif(rng);
  const Mat A = Q * D * Q.transpose();
  // drift with a-norm strictly below max_drift
  const double phi = 2.0 * M_PI * unif(rng);
  Vec dir = vec2(std::cos(phi), std::sin(phi));
  const double target = max_drift * std::sqrt(unif(rng));
  const double nrm = std::sqrt(dir.dot(A.inverse() * dir));
  Vec b = dir * (target / nrm);
  return MetricDescriptor::randers(MatrixField::constant_matrix(A),
                                   CovectorField::constant_covector(b));
}

const Vec kOrigin = Vec::Zero(2);

}  // namespace

TEST_CASE("norm values") {
  const auto euc = MetricDescriptor::euclidean(2);
  CHECK(euc.norm(kOrigin, vec2(3, 4)) == doctest::Approx(5.0));

  const auto rds = randers_half();
  CHECK(rds.norm(kOrigin, vec2(1, 0)) == doctest::Approx(1.5));
  CHECK(rds.norm(kOrigin, vec2(-1, 0)) == doctest::Approx(0.5));
}

TEST_CASE("norm positive homogeneity, 200 random samples") {
  std::mt19937_64 rng(kDefaultSeed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int s = 0; s < 200; ++s) {
    const auto m = random_randers(rng);
    const Vec y = vec2(2.0 * unif(rng) - 1.0, 2.0 * unif(rng) - 1.0);
    if (y.norm() < 1e-8) continue;
    const double lam = 10.0 * unif(rng) + 1e-6;
    const double f = m.norm(kOrigin, y);
    CHECK(std::abs(m.norm(kOrigin, lam * y) - lam * f) <= 1e-10 * std::max(1.0, f));
  }
}

TEST_CASE("fundamental tensor") {
  const auto euc = MetricDescriptor::euclidean(2);
  CHECK((euc.fundamental_tensor(kOrigin, vec2(0.3, -2)) - Mat::Identity(2, 2)).norm() == 0.0);

  Mat D = Mat::Zero(2, 2);
  D(0, 0) = 1;
  D(1, 1) = 4;
  const auto riem = MetricDescriptor::riemannian(MatrixField::constant_matrix(D));
  CHECK((riem.fundamental_tensor(kOrigin, vec2(1, 1)) - D).norm() == 0.0);

  const auto rds = randers_half();
  const Vec y = vec2(0, 1);
  const Mat g = rds.fundamental_tensor(kOrigin, y);
  const Mat g_fd = oracles::fd_fundamental_tensor(rds, kOrigin, y);
  CHECK((g - g_fd).cwiseAbs().maxCoeff() <= 1e-6);

  CHECK_THROWS_AS((void)rds.fundamental_tensor(kOrigin, Vec::Zero(2)), ZeroVector);
}

TEST_CASE("g_y(y,y) = F^2 on random samples") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int s = 0; s < 100; ++s) {
    const auto m = random_randers(rng);
    Vec y = vec2(unif(rng), unif(rng));
    if (y.norm() < 1e-6) y = vec2(1, 0);
    const double f2 = std::pow(m.norm(kOrigin, y), 2);
    const double gyy = y.dot(m.fundamental_tensor(kOrigin, y) * y);
    CHECK(std::abs(gyy - f2) <= 1e-8 * f2);
  }
}

TEST_CASE("cartan tensor") {
  const auto euc = MetricDescriptor::euclidean(2);
  CHECK(euc.cartan_tensor(kOrigin, vec2(1, 1)).max_abs() == 0.0);

  Mat D = Mat::Zero(2, 2);
  D(0, 0) = 1;
  D(1, 1) = 4;
  const auto riem = MetricDescriptor::riemannian(MatrixField::constant_matrix(D));
  CHECK(riem.cartan_tensor(kOrigin, vec2(0.2, 0.7)).max_abs() == 0.0);

  const auto rds = randers_half();
  const Vec y = vec2(0, 1);
  const auto C = rds.cartan_tensor(kOrigin, y);
  CHECK(C.contract(y).cwiseAbs().maxCoeff() <= 1e-8);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        CHECK(std::abs(C(i, j, k) - oracles::fd_cartan_entry(rds, kOrigin, y, i, j, k)) <= 1e-5);
}

TEST_CASE("cartan contraction vanishes on random randers") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int s = 0; s < 50; ++s) {
    const auto m = random_randers(rng);
    Vec y = vec2(unif(rng), unif(rng));
    if (y.norm() < 1e-6) y = vec2(1, 0);
    CHECK(m.cartan_tensor(kOrigin, y).contract(y).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("dual norm") {
  const auto euc = MetricDescriptor::euclidean(2);
  CHECK(euc.dual_norm(kOrigin, vec2(3, 4)) == doctest::Approx(5.0));

  const auto rds = randers_half();
  CHECK(std::abs(rds.dual_norm(kOrigin, vec2(1, 0)) - 2.0 / 3.0) <= 1e-8);
  CHECK(std::abs(rds.dual_norm(kOrigin, vec2(-1, 0)) - 2.0) <= 1e-8);
  // circle brute-force oracle
  CHECK(std::abs(rds.dual_norm(kOrigin, vec2(1, 0)) -
                 oracles::sphere_max_dual(rds, kOrigin, vec2(1, 0))) <= 1e-8);
  CHECK(std::abs(rds.dual_norm(kOrigin, vec2(-1, 0)) -
                 oracles::sphere_max_dual(rds, kOrigin, vec2(-1, 0))) <= 1e-8);
  CHECK(rds.dual_norm(kOrigin, Vec::Zero(2)) == 0.0);
}

TEST_CASE("legendre transform and inverse") {
  const auto euc = MetricDescriptor::euclidean(2);
  CHECK((euc.legendre(kOrigin, vec2(3, 4)) - vec2(3, 4)).norm() == 0.0);
  CHECK(euc.legendre(kOrigin, Vec::Zero(2)).norm() == 0.0);
  CHECK((euc.legendre_inverse(kOrigin, vec2(1, 2)) - vec2(1, 2)).norm() == 0.0);
  CHECK(euc.legendre_inverse(kOrigin, Vec::Zero(2)).norm() == 0.0);

  const auto rds = randers_half();
  // norm preservation F*(L(y)) = F(y)
  const Vec y = vec2(0, 1);
  const Vec xi = rds.legendre(kOrigin, y);
  CHECK(std::abs(rds.dual_norm(kOrigin, xi) - rds.norm(kOrigin, y)) <= 1e-8);
  // F(L^{-1}(xi)) = F*(xi) = 2/3 for xi = (1,0)
  const Vec yi = rds.legendre_inverse(kOrigin, vec2(1, 0));
  CHECK(std::abs(rds.norm(kOrigin, yi) - 2.0 / 3.0) <= 1e-8);
}

TEST_CASE("legendre round trips, 1000 random randers with |b| <= 0.8") {
  std::mt19937_64 rng(kDefaultSeed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int s = 0; s < 1000; ++s) {
    const auto m = random_randers(rng, 0.8);
    Vec y = vec2(unif(rng), unif(rng));
    if (y.norm() < 1e-6) y = vec2(0.3, -0.4);
    const Vec xi = m.legendre(kOrigin, y);
    const Vec y2 = m.legendre_inverse(kOrigin, xi);
    CHECK((y2 - y).norm() <= 1e-8 * (1.0 + y.norm()));
    const Vec xi2 = m.legendre(kOrigin, y2);
    CHECK((xi2 - xi).norm() <= 1e-8 * (1.0 + xi.norm()));
    // closed-form dual oracle agrees with the Newton route
    const double fs = m.dual_norm(kOrigin, xi);
    const double fs_cf = oracles::randers_dual_closed_form(
        m.a_field().eval(kOrigin), m.b_field().eval(kOrigin), xi);
    CHECK(std::abs(fs - fs_cf) <= 1e-8 * (1.0 + fs_cf));
  }
}

TEST_CASE("dual tensor") {
  const auto euc = MetricDescriptor::euclidean(2);
  CHECK((euc.dual_tensor(kOrigin, vec2(0.5, 1)) - Mat::Identity(2, 2)).norm() <= 1e-14);

  Mat D = Mat::Zero(2, 2);
  D(0, 0) = 1;
  D(1, 1) = 4;
  const auto riem = MetricDescriptor::riemannian(MatrixField::constant_matrix(D));
  const Mat gs = riem.dual_tensor(kOrigin, vec2(1, 1));
  CHECK(gs(0, 0) == doctest::Approx(1.0));
  CHECK(gs(1, 1) == doctest::Approx(0.25));

  CHECK_THROWS_AS((void)euc.dual_tensor(kOrigin, Vec::Zero(2)), ZeroCovector);

  // inverse relation against the fundamental tensor at L^{-1}(xi)
  const auto rds = randers_half();
  const Vec xi = vec2(1, 1);
  const Vec y = rds.legendre_inverse(kOrigin, xi);
  const Mat prod = rds.dual_tensor(kOrigin, xi) * rds.fundamental_tensor(kOrigin, y);
  CHECK((prod - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("uniformity constants") {
  const SampleRegion region{kOrigin, 0.0, 1};
  const auto euc_const = uniformity_constants(MetricDescriptor::euclidean(2), region);
  CHECK(euc_const.kappa == doctest::Approx(1.0));
  CHECK(euc_const.kappa_star == doctest::Approx(1.0));
  CHECK(euc_const.lambda_rev == doctest::Approx(1.0));

  const auto rc = uniformity_constants(randers_half(), region);
  // circle oracle: Lambda = (1+|b|)/(1-|b|) = 3
  CHECK(std::abs(rc.lambda_rev - 3.0) <= 1e-8);
  CHECK(rc.valid());
  CHECK(rc.kappa >= 9.0 - 1e-8);
  CHECK(rc.kappa_star <= 1.0 / 9.0 + 1e-8);
}

TEST_CASE("uniformity invariant on random metrics") {
  std::mt19937_64 rng(23);
  for (int s = 0; s < 25; ++s) {
    const auto m = random_randers(rng);
    const auto c = uniformity_constants(m, SampleRegion{kOrigin, 0.0, 1});
    CHECK(c.valid());
  }
}

TEST_CASE("dual ellipticity sandwich with module constants") {
  std::mt19937_64 rng(kDefaultSeed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const auto m = randers_half();
  const auto c = uniformity_constants(m, SampleRegion{kOrigin, 0.0, 1});
  const double kt = 1.0 / c.kappa_star;
  const double kts = 1.0 / c.kappa;
  for (int s = 0; s < 500; ++s) {
    Vec xi = vec2(unif(rng), unif(rng));
    Vec eta = vec2(unif(rng), unif(rng));
    if (xi.norm() < 1e-6 || eta.norm() < 1e-6) continue;
    const Mat gs = m.dual_tensor(kOrigin, xi);
    const double q = eta.dot(gs * eta);
    const double fs2 = std::pow(m.dual_norm(kOrigin, eta), 2);
    CHECK(q <= kt * fs2 * (1.0 + 1e-9));
    CHECK(q >= kts * fs2 * (1.0 - 1e-9));
  }
}

TEST_CASE("reversibility bound on samples") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const auto m = randers_half();
  const auto c = uniformity_constants(m, SampleRegion{kOrigin, 0.0, 1});
  for (int s = 0; s < 200; ++s) {
    Vec y = vec2(unif(rng), unif(rng));
    if (y.norm() < 1e-6) continue;
    CHECK(m.norm(kOrigin, y) <= c.lambda_rev * m.norm(kOrigin, Vec(-y)) * (1.0 + 1e-12));
  }
}

TEST_CASE("invalid metric rejected") {
  const auto bad = MetricDescriptor::randers(MatrixField::identity(2),
                                             CovectorField::constant_covector(vec2(1.2, 0.0)));
  CHECK_THROWS_AS((void)bad.norm(kOrigin, vec2(1, 0)), InvalidMetric);
  CHECK_THROWS_AS((void)uniformity_constants(bad, SampleRegion{kOrigin, 0.0, 1}), InvalidMetric);
}

TEST_CASE("reverse metric flips the drift") {
  const auto rds = randers_half();
  const auto rev = rds.reversed();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int s = 0; s < 50; ++s) {
    const Vec y = vec2(unif(rng), unif(rng));
    CHECK(rev.norm(kOrigin, y) == doctest::Approx(rds.norm(kOrigin, Vec(-y))));
  }
}
