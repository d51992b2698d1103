#pragma once

#include <vector>

#include "finsler/geodesics.hpp"
#include "finsler/report.hpp"

namespace finsler {

/// Comparison model solutions of f'' + c f = 0 with f(0)=0, f'(0)=1, and
/// their logarithmic derivatives. Throw DomainError outside the valid range.
double s_c(double c, double t);
double ct_c(double c, double t);

enum class ComparisonBranch { SBound, TauBound, MeanCurv };

/// Laplacian-comparison profile chi(t) with d/dt ln chi bounding the
/// distance Laplacian. curvature_param is signed: Ric_inf >= K.
struct ComparisonProfile {
  ComparisonBranch branch = ComparisonBranch::TauBound;
  double curvature_param = 0.0;  // K
  int dimension = 2;
  double alpha = 0.0;  // SBound: S >= -alpha
  double k = 0.0;      // TauBound: |tau| <= k
  double m0 = 0.0;     // MeanCurv: sphere mean-curvature datum (input-only)
  double r0 = 0.0;     // MeanCurv: reference radius

  static ComparisonProfile s_bound(double K, int n, double alpha);
  static ComparisonProfile tau_bound(double K, int n, double k);
  static ComparisonProfile mean_curv(double K, int n, double m0, double r0);

  /// Upper end r_o of the valid range; +inf for K <= 0.
  double valid_max() const;
  double chi(double t) const;
  double dlog_chi(double t) const;
};

/// sigma(x, r, theta) sampled along radial geodesics. Directions are unit-F
/// vectors equally spaced in the invariant sector parameter at the base
/// point, which normalizes sigma -> r^{n-1} as r -> 0 for every norm.
struct PolarDensityTable {
  Vec base_point;
  std::vector<Vec> directions;
  std::vector<double> radii;  // uniform grid dr, 2dr, ..., r_max
  double dr = 0.0;
  double dparam = 0.0;  // direction-parameter spacing
  Mat sigma;            // directions x radii
  std::vector<std::vector<char>> minimal;

  int n_dirs() const { return static_cast<int>(directions.size()); }
  int n_radii() const { return static_cast<int>(radii.size()); }
  int radius_index(double r) const;  // throws DomainError off the grid
};

struct PolarOptions {
  int directions = 64;
  bool verify_minimality = true;
  double minimality_tol = 5e-3;
  DistanceOptions distance;
};

PolarDensityTable polar_density(const MeasureSpace& space, const Vec& base_point,
                                double r_max, int n_radii, const PolarOptions& opts = {});

/// m(B_R^+) by composite trapezoid over the table (non-minimal samples
/// excluded). R may sit between grid radii; the last cell is interpolated.
double ball_volume(const PolarDensityTable& table, double R);

/// Delta r = d/dr log sigma by central differences on the table.
double laplacian_of_distance(const PolarDensityTable& table, int dir_index, double r);

enum class VolumeProposition { RicLowerNegative, RicLowerPositive };

/// Bishop-Gromov style ratio check. The proposition selects the convention:
/// RicLowerNegative reads the certified bound as Ric_inf >= -K (K >= 0),
/// RicLowerPositive as Ric_inf >= K > 0 (with its range caps enforced).
InequalityReport check_volume_ratio(const MeasureSpace& space, const PolarDensityTable& table,
                                    double r1, double r2, VolumeProposition prop,
                                    ComparisonBranch branch, double tol = 5e-3);

/// Lemma-style check: at every minimal interior sample, Delta r <= d/dt ln chi
/// + tol for the profile branch. Reports the worst margin.
InequalityReport check_laplacian_comparison(const MeasureSpace& space,
                                            const PolarDensityTable& table,
                                            const ComparisonProfile& profile, double tol = 5e-3);

}  // namespace finsler
