#include <doctest.h>

#include <random>

#include "finsler/comparison.hpp"
#include "finsler/error.hpp"
#include "oracles.hpp"

using namespace finsler;

namespace {
const Vec kOrigin = Vec::Zero(2);

PolarOptions fast_opts() {
  PolarOptions o;
  o.verify_minimality = false;
  return o;
}
}  // namespace

TEST_CASE("comparison functions s_c and ct_c") {
  CHECK(s_c(0.0, 7.0) == doctest::Approx(7.0));
  CHECK(s_c(1.0, M_PI / 2) == doctest::Approx(1.0));
  CHECK(std::abs(s_c(-1.0, 1.0) - oracles::series_sinh(1.0)) <= 1e-15);

  CHECK(ct_c(0.0, 2.0) == doctest::Approx(0.5));
  CHECK(ct_c(1.0, M_PI / 4) == doctest::Approx(1.0));
  const double coth1 = oracles::series_cosh(1.0) / oracles::series_sinh(1.0);
  CHECK(std::abs(ct_c(-1.0, 1.0) - coth1) <= 1e-14);

  CHECK_THROWS_AS((void)s_c(1.0, M_PI), DomainError);
  CHECK_THROWS_AS((void)s_c(0.0, -1.0), DomainError);
  CHECK_THROWS_AS((void)ct_c(4.0, M_PI / 2), DomainError);
}

TEST_CASE("ct_c bound used in the volume comparison proof") {
  // ct_{-K/(n-1)}(r) <= sqrt(K/(n-1)) (sqrt((n-1)/K)/r + 1)
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.05, 3.0);
  const int n = 2;
  for (int s = 0; s < 200; ++s) {
    const double K = unif(rng);
    const double r = unif(rng);
    const double lhs = ct_c(-K / (n - 1), r);
    const double rhs = std::sqrt(K / (n - 1)) * (std::sqrt((n - 1) / K) / r + 1.0);
    CHECK(lhs <= rhs * (1.0 + 1e-12));
  }
}

TEST_CASE("chi profiles") {
  // tau branch, K=0, n=2, k=1 at t=2: s_0(2)^(n+4k-1) = 2^5
  CHECK(ComparisonProfile::tau_bound(0.0, 2, 1.0).chi(2.0) == doctest::Approx(32.0));
  // S branch, K=0, alpha=1, n=2 at t=1: e
  CHECK(ComparisonProfile::s_bound(0.0, 2, 1.0).chi(1.0) == doctest::Approx(std::exp(1.0)));
  // tau branch, K=-1, n=2, k=0.25 at t=1: sinh(1)^2
  const double sh = oracles::series_sinh(1.0);
  CHECK(std::abs(ComparisonProfile::tau_bound(-1.0, 2, 0.25).chi(1.0) - sh * sh) <= 1e-12);
  // mean-curvature branch takes m0 as data
  const auto mc = ComparisonProfile::mean_curv(0.5, 2, 1.3, 1.0);
  CHECK(mc.chi(2.0) == doctest::Approx(std::exp(1.3 - 0.25)));
  CHECK(mc.dlog_chi(2.0) == doctest::Approx(1.3 - 0.5));
  CHECK_THROWS_AS((void)mc.chi(0.5), DomainError);
}

TEST_CASE("branch consistency as k -> 0") {
  const auto profile = ComparisonProfile::tau_bound(-1.0, 2, 1e-8);
  for (double t : {0.3, 1.0, 2.5}) {
    const double base = std::pow(s_c(-1.0, t), 1.0);  // [s]^(n-1), n=2
    CHECK(std::abs(profile.chi(t) - base) <= 1e-6 * base);
  }
}

TEST_CASE("K>0 range caps are exact") {
  const double K = 1.0;
  const int n = 2;
  const auto tau = ComparisonProfile::tau_bound(K, n, 0.3);
  const auto sb = ComparisonProfile::s_bound(K, n, 0.3);
  const double cap_tau = 0.25 * M_PI * std::sqrt((n - 1) / K);
  const double cap_s = 0.5 * M_PI * std::sqrt((n - 1) / K);
  CHECK(tau.valid_max() == doctest::Approx(cap_tau));
  CHECK(sb.valid_max() == doctest::Approx(cap_s));
  CHECK_NOTHROW((void)tau.chi(cap_tau * 0.999));
  CHECK_THROWS_AS((void)tau.chi(cap_tau), DomainError);
  CHECK_THROWS_AS((void)tau.dlog_chi(cap_tau + 1e-9), DomainError);
  CHECK_NOTHROW((void)sb.chi(cap_s * 0.999));
  CHECK_THROWS_AS((void)sb.chi(cap_s), DomainError);
}

TEST_CASE("polar density: flat disk") {
  const auto flat = spaces::flat();
  const auto table = polar_density(flat, kOrigin, 2.2, 110, fast_opts());
  // sigma = r in every direction
  for (int j = 0; j < table.n_dirs(); j += 7)
    for (int i = 0; i < table.n_radii(); i += 13)
      CHECK(std::abs(table.sigma(j, i) - table.radii[i]) <= 1e-4 * table.radii[i]);
  // small-r asymptotics at the two smallest radii
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < table.n_dirs(); j += 9)
      CHECK(table.sigma(j, i) / table.radii[i] == doctest::Approx(1.0).epsilon(1e-3));
  // ball volume & monotonicity
  CHECK(std::abs(ball_volume(table, 1.0) - M_PI) <= 0.01 * M_PI);
  double prev = 0.0;
  for (double R : {0.3, 0.7, 1.1, 1.6, 2.0}) {
    const double v = ball_volume(table, R);
    CHECK(v > prev);
    prev = v;
  }
  // laplacian of distance: (n-1)/r
  const int mid = table.radius_index(2.0);
  CHECK(mid >= 0);
  CHECK(std::abs(laplacian_of_distance(table, 0, 2.0) - 0.5) <= 1e-3);
}

TEST_CASE("polar density: hyperbolic plane") {
  const auto hyp = spaces::hyperbolic();
  PolarOptions opts;  // exercise the minimality verification path
  opts.minimality_tol = 1e-2;
  const auto table = polar_density(hyp, kOrigin, 2.0, 100, opts);
  // sigma = sinh(r)
  const int i1 = table.radius_index(1.0);
  for (int j = 0; j < table.n_dirs(); j += 5) {
    CHECK(table.minimal[j][i1]);
    CHECK(std::abs(table.sigma(j, i1) - oracles::series_sinh(1.0)) <=
          1e-3 * oracles::series_sinh(1.0));
  }
  // ball area 2 pi (cosh 1 - 1)
  const double area = oracles::hyperbolic_ball_area(1.0);
  CHECK(std::abs(ball_volume(table, 1.0) - area) <= 0.01 * area);
  // Delta r = coth(r)
  const double coth1 = oracles::series_cosh(1.0) / oracles::series_sinh(1.0);
  CHECK(std::abs(laplacian_of_distance(table, 3, 1.0) - coth1) <= 1e-3);
  // small-ball cone constant: area/r^2 -> pi
  const double r0 = table.radii[1];
  CHECK(ball_volume(table, r0) / (r0 * r0) == doctest::Approx(M_PI).epsilon(5e-3));
}

TEST_CASE("polar density: gaussian weight") {
  const auto gauss = spaces::gaussian();
  const auto table = polar_density(gauss, kOrigin, 1.5, 75, fast_opts());
  const int i1 = table.radius_index(1.0);
  const double expect = std::exp(-0.5);
  for (int j = 0; j < table.n_dirs(); j += 11)
    CHECK(std::abs(table.sigma(j, i1) - expect) <= 1e-3 * expect);
}

TEST_CASE("polar density: randers sector normalization") {
  const auto rds = spaces::randers_const();
  const auto table = polar_density(rds, kOrigin, 1.0, 50, fast_opts());
  // sigma -> r^{n-1} for every direction under the sector parametrization
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < table.n_dirs(); j += 7)
      CHECK(table.sigma(j, i) / table.radii[i] == doctest::Approx(1.0).epsilon(2e-2));
  // total small-ball mass approaches the Randers unit-ball area r^2 *
  // pi/(1-|b|^2)^{3/2}
  const double r = table.radii[4];
  const double cone = M_PI / std::pow(1.0 - 0.25, 1.5);
  CHECK(ball_volume(table, r) / (r * r) == doctest::Approx(cone).epsilon(5e-3));
}

TEST_CASE("volume ratio checks") {
  const auto flat = spaces::flat();
  const auto ftable = polar_density(flat, kOrigin, 2.2, 110, fast_opts());
  // flat, tau branch, Ric >= -0: lhs = 4, rhs = 2^{n+4k}
  auto rep = check_volume_ratio(flat, ftable, 1.0, 2.0, VolumeProposition::RicLowerNegative,
                                ComparisonBranch::TauBound);
  CHECK(rep.status == InequalityReport::Status::Pass);
  CHECK(rep.lhs == doctest::Approx(4.0).epsilon(5e-3));
  CHECK(rep.rhs == doctest::Approx(std::pow(2.0, 2.0 + 4.0 * 0.05)));

  const auto hyp = spaces::hyperbolic();
  auto htable = polar_density(hyp, kOrigin, 2.2, 110, fast_opts());
  MeasureSpace hyp_k = hyp;
  hyp_k.certified.distortion_bound = 0.01;  // tau = 0, any k > 0 certifies
  auto hrep = check_volume_ratio(hyp_k, htable, 1.0, 2.0, VolumeProposition::RicLowerNegative,
                                 ComparisonBranch::TauBound);
  CHECK(hrep.status == InequalityReport::Status::Pass);
  CHECK(hrep.lhs ==
        doctest::Approx(oracles::hyperbolic_ball_area(2.0) / oracles::hyperbolic_ball_area(1.0))
            .epsilon(5e-3));

  // hyperbolic S-branch: S = 0 >= -alpha
  auto hrep2 = check_volume_ratio(hyp_k, htable, 0.8, 1.9, VolumeProposition::RicLowerNegative,
                                  ComparisonBranch::SBound);
  CHECK(hrep2.status == InequalityReport::Status::Pass);

  // gaussian, Ric_inf >= 1 > 0, tau branch with k certified on the ball
  const auto gauss = spaces::gaussian();
  auto gtable = polar_density(gauss, kOrigin, 0.78, 78, fast_opts());
  MeasureSpace gauss_ball = gauss;
  gauss_ball.certified.distortion_bound = 0.5 * 0.7 * 0.7;  // sup tau over B_{0.7}
  auto grep = check_volume_ratio(gauss_ball, gtable, 0.35, 0.7,
                                 VolumeProposition::RicLowerPositive, ComparisonBranch::TauBound);
  CHECK(grep.status == InequalityReport::Status::Pass);
  // radial quadrature oracle for the lhs: m(B_R) = 2 pi (1 - e^{-R^2/2})
  const double lhs_oracle =
      (1.0 - std::exp(-0.5 * 0.7 * 0.7)) / (1.0 - std::exp(-0.5 * 0.35 * 0.35));
  CHECK(grep.lhs == doctest::Approx(lhs_oracle).epsilon(5e-3));
  CHECK(grep.rhs == doctest::Approx(std::pow(2.0, 2.0 + 4.0 * 0.245)));

  // gaussian S-branch of the positive proposition
  auto grep2 = check_volume_ratio(gauss_ball, gtable, 0.3, 0.6,
                                  VolumeProposition::RicLowerPositive, ComparisonBranch::SBound);
  CHECK(grep2.status == InequalityReport::Status::Pass);

  // the K>0 caps are enforced exactly
  CHECK_THROWS_AS((void)check_volume_ratio(gauss_ball, gtable, 0.35, 0.786,
                                           VolumeProposition::RicLowerPositive,
                                           ComparisonBranch::TauBound),
                  DomainError);
}

TEST_CASE("laplacian comparison across certified spaces") {
  const auto flat = spaces::flat();
  const auto ftable = polar_density(flat, kOrigin, 2.0, 100, fast_opts());
  auto frep = check_laplacian_comparison(
      flat, ftable, ComparisonProfile::tau_bound(0.0, 2, *flat.certified.distortion_bound));
  CHECK(frep.status == InequalityReport::Status::Pass);
  auto frep2 = check_laplacian_comparison(
      flat, ftable, ComparisonProfile::s_bound(0.0, 2, *flat.certified.s_curvature_alpha));
  CHECK(frep2.status == InequalityReport::Status::Pass);
  // mean-curvature branch with the sphere datum supplied as input
  auto frep3 = check_laplacian_comparison(flat, ftable,
                                          ComparisonProfile::mean_curv(0.0, 2, 1.0, 1.0));
  CHECK(frep3.status == InequalityReport::Status::Pass);

  const auto hyp = spaces::hyperbolic();
  const auto htable = polar_density(hyp, kOrigin, 2.0, 100, fast_opts());
  auto hrep = check_laplacian_comparison(hyp, htable,
                                         ComparisonProfile::tau_bound(-1.0, 2, 0.05));
  CHECK(hrep.status == InequalityReport::Status::Pass);

  const auto gauss = spaces::gaussian();
  const auto gtable = polar_density(gauss, kOrigin, 0.75, 75, fast_opts());
  auto grep = check_laplacian_comparison(gauss, gtable,
                                         ComparisonProfile::tau_bound(1.0, 2, 0.29));
  CHECK(grep.status == InequalityReport::Status::Pass);
}

TEST_CASE("gaussian laplacian of distance vanishes at r=1") {
  const auto gauss = spaces::gaussian();
  const auto table = polar_density(gauss, kOrigin, 1.5, 75, fast_opts());
  CHECK(std::abs(laplacian_of_distance(table, 0, 1.0)) <= 1e-3);
}

TEST_CASE("non-minimal samples are masked out") {
  const auto flat = spaces::flat();
  auto table = polar_density(flat, kOrigin, 1.0, 50, fast_opts());
  const double full = ball_volume(table, 1.0);
  for (int i = 30; i < 50; ++i) table.minimal[0][i] = 0;
  CHECK_THROWS_AS((void)laplacian_of_distance(table, 0, table.radii[40]), NonMinimal);
  CHECK(ball_volume(table, 1.0) < full);  // masked tail excluded
}
