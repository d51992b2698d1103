#include "finsler/comparison.hpp"

#include <cmath>
#include <limits>

#include "finsler/error.hpp"

namespace finsler {

double s_c(double c, double t) {
  if (t <= 0.0) throw DomainError("s_c requires t > 0");
  if (c > 0.0) {
    const double rc = std::sqrt(c);
    if (t >= M_PI / rc) throw DomainError("s_c: t >= pi/sqrt(c)");
    return std::sin(rc * t) / rc;
  }
  if (c == 0.0) return t;
  const double rc = std::sqrt(-c);
  return std::sinh(rc * t) / rc;
}

double ct_c(double c, double t) {
  if (t <= 0.0) throw DomainError("ct_c requires t > 0");
  if (c > 0.0) {
    const double rc = std::sqrt(c);
    if (t >= M_PI / rc) throw DomainError("ct_c: t >= pi/sqrt(c)");
    return rc / std::tan(rc * t);
  }
  if (c == 0.0) return 1.0 / t;
  const double rc = std::sqrt(-c);
  return rc / std::tanh(rc * t);
}

ComparisonProfile ComparisonProfile::s_bound(double K, int n, double alpha) {
  ComparisonProfile p;
  p.branch = ComparisonBranch::SBound;
  p.curvature_param = K;
  p.dimension = n;
  p.alpha = alpha;
  return p;
}

ComparisonProfile ComparisonProfile::tau_bound(double K, int n, double k) {
  ComparisonProfile p;
  p.branch = ComparisonBranch::TauBound;
  p.curvature_param = K;
  p.dimension = n;
  p.k = k;
  return p;
}

ComparisonProfile ComparisonProfile::mean_curv(double K, int n, double m0, double r0) {
  ComparisonProfile p;
  p.branch = ComparisonBranch::MeanCurv;
  p.curvature_param = K;
  p.dimension = n;
  p.m0 = m0;
  p.r0 = r0;
  return p;
}

double ComparisonProfile::valid_max() const {
  const double K = curvature_param;
  if (branch == ComparisonBranch::MeanCurv || K <= 0.0)
    return std::numeric_limits<double>::infinity();
  const double base = std::sqrt((dimension - 1) / K);
  return branch == ComparisonBranch::SBound ? 0.5 * M_PI * base : 0.25 * M_PI * base;
}

double ComparisonProfile::chi(double t) const {
  const double c = curvature_param / (dimension - 1);
  switch (branch) {
    case ComparisonBranch::SBound:
      if (t <= 0.0 || t >= valid_max()) throw DomainError("chi: t outside (0, (pi/2) sqrt((n-1)/K))");
      return std::pow(s_c(c, t), dimension - 1) * std::exp(alpha * t);
    case ComparisonBranch::TauBound:
      if (t <= 0.0 || t >= valid_max()) throw DomainError("chi: t outside (0, (pi/4) sqrt((n-1)/K))");
      return std::pow(s_c(c, t), dimension + 4.0 * k - 1.0);
    case ComparisonBranch::MeanCurv:
      if (t <= r0) throw DomainError("chi: t <= r0 in the mean-curvature branch");
      return std::exp(m0 * (t - r0) - 0.5 * curvature_param * (t - r0) * (t - r0));
  }
  return 0.0;
}

double ComparisonProfile::dlog_chi(double t) const {
  const double c = curvature_param / (dimension - 1);
  switch (branch) {
    case ComparisonBranch::SBound:
      if (t <= 0.0 || t >= valid_max()) throw DomainError("chi: t outside (0, (pi/2) sqrt((n-1)/K))");
      return (dimension - 1) * ct_c(c, t) + alpha;
    case ComparisonBranch::TauBound:
      if (t <= 0.0 || t >= valid_max()) throw DomainError("chi: t outside (0, (pi/4) sqrt((n-1)/K))");
      return (dimension + 4.0 * k - 1.0) * ct_c(c, t);
    case ComparisonBranch::MeanCurv:
      if (t <= r0) throw DomainError("chi: t <= r0 in the mean-curvature branch");
      return m0 - curvature_param * (t - r0);
  }
  return 0.0;
}

int PolarDensityTable::radius_index(double r) const {
  const int idx = static_cast<int>(std::round(r / dr)) - 1;
  if (idx < 0 || idx >= n_radii() || std::abs(radii[idx] - r) > 1e-9 * std::max(1.0, r))
    throw DomainError("query radius off the table grid");
  return idx;
}

namespace {

// Equal increments of the sector parameter psi(theta) =
// e^{Phi(x0)} int dtheta / F(x0, u(theta))^2 over the Euclidean angle.
std::vector<double> sector_spaced_angles(const MeasureSpace& space, const Vec& x0, int n,
                                         double& dparam) {
  const int fine = 4096;
  std::vector<double> psi(fine + 1, 0.0);
  const double w0 = space.weight(x0);
  auto dens = [&](double th) {
    const Vec u = vec2(std::cos(th), std::sin(th));
    const double F = space.metric.norm(x0, u);
    return w0 / (F * F);
  };
  const double h = 2.0 * M_PI / fine;
  for (int i = 0; i < fine; ++i)
    psi[i + 1] = psi[i] + 0.5 * h * (dens(i * h) + dens((i + 1) * h));
  const double total = psi.back();
  dparam = total / n;
  std::vector<double> angles(n);
  int j = 0;
  for (int i = 0; i < n; ++i) {
    const double target = total * i / n;
    while (j + 1 < fine && psi[j + 1] < target) ++j;
    const double seg = psi[j + 1] - psi[j];
    const double w = seg > 0 ? (target - psi[j]) / seg : 0.0;
    angles[i] = (j + w) * h;
  }
  return angles;
}

Vec sample_on_path(const GeodesicPath& path, double t, bool velocity) {
  const double h = path.t.size() > 1 ? path.t[1] - path.t[0] : 1.0;
  const int idx = static_cast<int>(std::round(t / h));
  if (idx < 0 || idx >= static_cast<int>(path.size()) || std::abs(path.t[idx] - t) > 1e-9)
    throw StepFailure("polar table: integrator samples missed the radius grid");
  return velocity ? path.v[idx] : path.x[idx];
}

}  // namespace

PolarDensityTable polar_density(const MeasureSpace& space, const Vec& base_point, double r_max,
                                int n_radii, const PolarOptions& opts) {
  PolarDensityTable table;
  table.base_point = base_point;
  table.dr = r_max / n_radii;
  table.radii.resize(n_radii);
  for (int i = 0; i < n_radii; ++i) table.radii[i] = (i + 1) * table.dr;

  const auto angles = sector_spaced_angles(space, base_point, opts.directions, table.dparam);
  table.directions.reserve(opts.directions);
  std::vector<GeodesicPath> shots;
  shots.reserve(opts.directions);
  for (double th : angles) {
    Vec u = vec2(std::cos(th), std::sin(th));
    u /= space.metric.norm(base_point, u);
    table.directions.push_back(u);
    shots.push_back(geodesic_shoot(space, base_point, u, r_max, table.dr / 4.0));
  }

  const int nd = opts.directions;
  table.sigma = Mat::Zero(nd, n_radii);
  table.minimal.assign(nd, std::vector<char>(n_radii, 1));
  for (int j = 0; j < nd; ++j) {
    const GeodesicPath& prev = shots[(j + nd - 1) % nd];
    const GeodesicPath& next = shots[(j + 1) % nd];
    const GeodesicPath& prev2 = shots[(j + nd - 2) % nd];
    const GeodesicPath& next2 = shots[(j + 2) % nd];
    for (int i = 0; i < n_radii; ++i) {
      const double r = table.radii[i];
      const Vec z = sample_on_path(shots[j], r, false);
      const Vec dz_dr = sample_on_path(shots[j], r, true);
      // fourth-order periodic stencil in the direction parameter
      const Vec dz_dp = (sample_on_path(prev2, r, false) -
                         8.0 * sample_on_path(prev, r, false) +
                         8.0 * sample_on_path(next, r, false) -
                         sample_on_path(next2, r, false)) /
                        (12.0 * table.dparam);
      const double det = dz_dr[0] * dz_dp[1] - dz_dr[1] * dz_dp[0];
      if (det <= 0.0) {
        // orientation flip: conjugate point reached, radial ray no longer minimal
        for (int ii = i; ii < n_radii; ++ii) table.minimal[j][ii] = 0;
        break;
      }
      table.sigma(j, i) = space.weight(z) * det;
    }
  }

  if (opts.verify_minimality && !space.metric.is_constant_coefficient()) {
    std::vector<Vec> endpoints;
    endpoints.reserve(nd);
    for (int j = 0; j < nd; ++j) endpoints.push_back(sample_on_path(shots[j], r_max, false));
    const auto dists = distance_batch(space, base_point, endpoints, opts.distance);
    for (int j = 0; j < nd; ++j) {
      if (dists[j] < r_max * (1.0 - opts.minimality_tol)) {
        // endpoint reachable by a shorter path; walk down the grid to find
        // the last radius that is still minimal
        int last_ok = -1;
        for (int i = n_radii - 1; i >= 0; --i) {
          const Vec z = sample_on_path(shots[j], table.radii[i], false);
          const double d = distance(space, base_point, z, opts.distance);
          if (d >= table.radii[i] * (1.0 - opts.minimality_tol)) {
            last_ok = i;
            break;
          }
        }
        for (int i = last_ok + 1; i < n_radii; ++i) table.minimal[j][i] = 0;
      }
    }
  }
  return table;
}

double ball_volume(const PolarDensityTable& table, double R) {
  if (R <= 0.0 || R > table.radii.back() + 1e-12)
    throw DomainError("ball radius outside the table range");
  double vol = 0.0;
  for (int j = 0; j < table.n_dirs(); ++j) {
    // trapezoid in r from 0 (sigma = 0) up the minimal part of the ray
    double acc = 0.0;
    double prev_r = 0.0, prev_s = 0.0;
    for (int i = 0; i < table.n_radii(); ++i) {
      if (!table.minimal[j][i]) break;
      const double r = table.radii[i];
      const double s = table.sigma(j, i);
      if (r <= R + 1e-12) {
        acc += 0.5 * (prev_s + s) * (r - prev_r);
        prev_r = r;
        prev_s = s;
      } else {
        const double w = (R - prev_r) / (r - prev_r);
        const double sR = prev_s + w * (s - prev_s);
        acc += 0.5 * (prev_s + sR) * (R - prev_r);
        break;
      }
    }
    vol += acc * table.dparam;
  }
  return vol;
}

double laplacian_of_distance(const PolarDensityTable& table, int dir_index, double r) {
  const int i = table.radius_index(r);
  if (i < 1 || i + 1 >= table.n_radii())
    throw DomainError("laplacian_of_distance needs interior grid radii");
  if (!table.minimal[dir_index][i + 1])
    throw NonMinimal("query point beyond the minimal part of the ray");
  const double sm = table.sigma(dir_index, i - 1);
  const double sp = table.sigma(dir_index, i + 1);
  return (std::log(sp) - std::log(sm)) / (2.0 * table.dr);
}

namespace {

double require_cert(const std::optional<double>& v, const char* what) {
  if (!v) throw PreconditionFailed(std::string("space lacks certified ") + what);
  return *v;
}

}  // namespace

InequalityReport check_volume_ratio(const MeasureSpace& space, const PolarDensityTable& table,
                                    double r1, double r2, VolumeProposition prop,
                                    ComparisonBranch branch, double tol) {
  if (branch == ComparisonBranch::MeanCurv)
    throw PreconditionFailed("volume ratios are stated for the S and tau branches only");
  if (!(0.0 < r1 && r1 < r2)) throw DomainError("need 0 < r1 < r2");
  const int n = space.dim();
  const double Ks = space.certified.ric_inf_lower;

  InequalityReport rep;
  rep.space = space.name;
  double density_exponent = 0.0, density_expfactor = 0.0;  // rhs = (r2/r1)^E e^{r2 X}
  double cap = table.radii.back() + 1e-12;

  if (prop == VolumeProposition::RicLowerNegative) {
    // convention: Ric_inf >= -K with K >= 0
    const double K = std::max(0.0, -Ks);
    rep.params["convention"] = "Ric_inf >= -K, K >= 0";
    rep.params["K"] = K;
    if (branch == ComparisonBranch::SBound) {
      const double alpha = require_cert(space.certified.s_curvature_alpha, "S >= -alpha bound");
      rep.ineq_id = "volume-ratio/S-bound/ric-neg";
      density_exponent = n - 1;
      density_expfactor = alpha + std::sqrt((n - 1) * K);
      rep.params["alpha"] = alpha;
    } else {
      const double k = require_cert(space.certified.distortion_bound, "|tau| <= k bound");
      rep.ineq_id = "volume-ratio/tau-bound/ric-neg";
      density_exponent = n + 4.0 * k - 1.0;
      density_expfactor = (n + 4.0 * k - 1.0) * std::sqrt(K / (n - 1));
      rep.params["k"] = k;
    }
  } else {
    if (!(Ks > 0.0))
      throw PreconditionFailed("positive-curvature volume ratios need certified Ric_inf > 0");
    const double K = Ks;
    rep.params["convention"] = "Ric_inf >= K > 0";
    rep.params["K"] = K;
    if (branch == ComparisonBranch::SBound) {
      const double alpha = require_cert(space.certified.s_curvature_alpha, "S >= -alpha bound");
      rep.ineq_id = "volume-ratio/S-bound/ric-pos";
      cap = std::min(cap, 0.5 * M_PI * std::sqrt((n - 1) / K));
      density_exponent = n - 1;
      density_expfactor = alpha;
      rep.params["alpha"] = alpha;
    } else {
      const double k = require_cert(space.certified.distortion_bound, "|tau| <= k bound");
      rep.ineq_id = "volume-ratio/tau-bound/ric-pos";
      cap = std::min(cap, 0.25 * M_PI * std::sqrt((n - 1) / K));
      density_exponent = n + 4.0 * k - 1.0;
      density_expfactor = 0.0;
      rep.params["k"] = k;
    }
    if (r2 >= cap) {
      throw DomainError("r2 >= min{R, " +
                        std::string(branch == ComparisonBranch::SBound ? "(pi/2)" : "(pi/4)") +
                        " sqrt((n-1)/K)} range cap for Ric_inf >= K > 0");
    }
  }
  if (r2 >= cap) throw DomainError("r2 exceeds the table range");

  rep.params["r1"] = r1;
  rep.params["r2"] = r2;
  rep.params["tol"] = tol;

  const double v1 = ball_volume(table, r1);
  const double v2 = ball_volume(table, r2);
  rep.lhs = v2 / v1;
  rep.rhs = std::pow(r2 / r1, density_exponent + 1.0) * std::exp(r2 * density_expfactor);
  rep.margin = rep.rhs - rep.lhs;

  // per-direction density ratios against the sigma-level bound
  const int i1 = table.radius_index(r1);
  const int i2 = table.radius_index(r2);
  const double sigma_rhs = std::pow(r2 / r1, density_exponent) * std::exp(r2 * density_expfactor);
  double worst_sigma_ratio = 0.0;
  for (int j = 0; j < table.n_dirs(); ++j) {
    if (!table.minimal[j][i2]) continue;
    worst_sigma_ratio = std::max(worst_sigma_ratio, table.sigma(j, i2) / table.sigma(j, i1));
  }
  rep.params["sigma_ratio_max"] = worst_sigma_ratio;
  rep.params["sigma_ratio_bound"] = sigma_rhs;

  const bool ok = rep.lhs <= rep.rhs * (1.0 + tol) && worst_sigma_ratio <= sigma_rhs * (1.0 + tol);
  rep.status = ok ? InequalityReport::Status::Pass : InequalityReport::Status::Fail;
  return rep;
}

InequalityReport check_laplacian_comparison(const MeasureSpace& space,
                                            const PolarDensityTable& table,
                                            const ComparisonProfile& profile, double tol) {
  InequalityReport rep;
  rep.ineq_id = "laplacian-comparison";
  rep.space = space.name;
  rep.params["branch"] = profile.branch == ComparisonBranch::SBound    ? "S-bound"
                         : profile.branch == ComparisonBranch::TauBound ? "tau-bound"
                                                                        : "mean-curv";
  rep.params["K"] = profile.curvature_param;
  rep.params["tol"] = tol;

  double worst = -std::numeric_limits<double>::infinity();
  int checked = 0;
  const double cap = profile.valid_max();
  for (int j = 0; j < table.n_dirs(); ++j) {
    for (int i = 1; i + 1 < table.n_radii(); ++i) {
      const double r = table.radii[i];
      if (r + table.dr >= cap) break;
      if (profile.branch == ComparisonBranch::MeanCurv && r - table.dr <= profile.r0) continue;
      if (!table.minimal[j][i + 1]) break;
      const double lap = laplacian_of_distance(table, j, r);
      // discretize the bound with the same central log-difference: the
      // pointwise lemma integrates to exactly this comparison on the grid
      const double bound =
          (std::log(profile.chi(r + table.dr)) - std::log(profile.chi(r - table.dr))) /
          (2.0 * table.dr);
      worst = std::max(worst, lap - bound);
      ++checked;
    }
  }
  rep.params["samples"] = checked;
  rep.lhs = worst;  // worst Delta r - d/dt ln chi over all minimal samples
  rep.rhs = tol;
  rep.margin = rep.rhs - rep.lhs;
  rep.status = (checked > 0 && worst <= tol) ? InequalityReport::Status::Pass
                                             : InequalityReport::Status::Fail;
  return rep;
}

}  // namespace finsler
