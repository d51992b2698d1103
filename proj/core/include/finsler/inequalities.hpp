#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "finsler/geodesics.hpp"
#include "finsler/polynomial.hpp"
#include "finsler/report.hpp"
#include "finsler/solver.hpp"

namespace finsler {

/// Parameters shared by the harness checks. nu defaults to the explicit
/// value 4(n+4k)-2 with the space's certified k.
struct HarnessParams {
  double R = 1.0;
  double delta = 0.5;
  double delta_prime = 0.75;
  double p = 2.0;
  double nu = 0.0;  // 0: derive from certified k
  double tol = 5e-3;
  std::uint64_t seed = kDefaultSeed;

  double resolved_nu(const MeasureSpace& space) const;
};

/// Precomputed forward-ball machinery for one (space, mesh, base point):
/// nodal distances d(x0, .), ball-restricted quadrature, cutoffs, and the
/// module-1 uniformity constants of the metric.
class BallContext {
 public:
  BallContext(const MeasureSpace& space, const Mesh& mesh, Vec x0,
              const DistanceOptions& dist_opts = {});

  const MeasureSpace& space() const { return *space_; }
  const Mesh& mesh() const { return *mesh_; }
  const Vec& x0() const { return x0_; }
  const UniformityConstants& uniformity() const { return uniformity_; }
  double node_distance(int i) const { return node_dist_[i]; }

  bool node_in(int i, double rho) const { return node_dist_[i] <= rho * (1.0 + 1e-12); }
  bool cell_in(int c, double rho) const { return cell_dist_[c] < rho; }

  double ball_mass(double rho) const;
  /// integral over ball cells of the P1 interpolant pushed through fn
  /// (edge-midpoint rule).
  double integrate(const Vec& nodal, double rho,
                   const std::function<double(double)>& fn) const;
  double integrate_pow(const Vec& nodal, double p, double rho) const;
  /// Dirichlet energy restricted to ball cells.
  double energy(const Vec& nodal, double rho) const;
  double sup(const Vec& nodal, double rho) const;
  double inf(const Vec& nodal, double rho) const;
  /// measure of {x in B_rho : |v - vbar| >= t} via nodal dual volumes.
  double level_set_mass(const Vec& nodal, double vbar, double t, double rho) const;
  double ball_average(const Vec& nodal, double rho) const;

  /// Piecewise-linear-in-distance cutoff: 1 on B_{delta R}, 0 outside
  /// B_{delta' R}.
  Vec cutoff(double delta, double delta_prime, double R) const;

  /// Deterministic 40-function trial family on the R-ball (hats, cones,
  /// plateaus, harmonic solver outputs, seeded bumps).
  const std::vector<Vec>& trial_family(double R, std::uint64_t seed) const;

 private:
  const MeasureSpace* space_;
  const Mesh* mesh_;
  Vec x0_;
  Vec node_dist_;
  std::vector<double> cell_dist_;
  UniformityConstants uniformity_;
  mutable std::vector<Vec> family_;
  mutable double family_R_ = -1.0;
  mutable std::uint64_t family_seed_ = 0;
};

/// Rayleigh quotient int |u-ubar|^2 dm / int F*^2(du) dm maximized over the
/// trial family plus an inverse-iteration eigenpair of the Riemannian-part
/// form with local ascent under the true energy. Measured constant is
/// quotient / R^2.
InequalityReport poincare_quotient(const BallContext& ctx, const HarnessParams& prm);

/// Sobolev quotients of Eqs-(4.8)/(4.9) shape over the trial family;
/// measured constants for both variants.
InequalityReport sobolev_quotient(const BallContext& ctx, const HarnessParams& prm);

/// Helper: the (4.9)-shape quotient of a single function on the R-ball.
double sobolev_quotient_value(const BallContext& ctx, const Vec& u, double R, double nu,
                              bool centered);

/// Mean value inequality for nonnegative subsolutions (Delta u >= -fu).
InequalityReport mean_value_check(const BallContext& ctx, const HarnessParams& prm,
                                  const DiscreteFunction& u, const Vec& f);

/// Monotonicity of the raw measured constant across a decreasing delta grid.
InequalityReport mean_value_delta_monotonicity(const BallContext& ctx, const HarnessParams& prm,
                                               const DiscreteFunction& u, const Vec& f,
                                               const std::vector<double>& deltas);

/// Single-step Moser chain inequality iterated over the proof's delta
/// schedule (4 steps), with the Sobolev factor assembled from measured
/// constants; the final sup bound is checked in logs.
InequalityReport moser_chain_check(const BallContext& ctx, const HarnessParams& prm,
                                   const DiscreteFunction& u);

/// sup/inf Harnack ratio on B_{delta R} with scaling-invariance assertion.
InequalityReport harnack_check(const BallContext& ctx, const HarnessParams& prm,
                               const DiscreteFunction& u);

/// Lemma-style bound sup u^{-1} <= C m(B_R)^{-1} int u^{-1} for positive
/// supersolutions.
InequalityReport superharmonic_inf_check(const BallContext& ctx, const HarnessParams& prm,
                                         const DiscreteFunction& u);

/// Weak-L1 bound on log u oscillation plus the Dirichlet bound on
/// int F^2(grad log u), with constants assembled from measured Poincare
/// constants and the module-1 reversibility.
InequalityReport weak_l1_log_check(const BallContext& ctx, const HarnessParams& prm,
                                   const DiscreteFunction& u);

/// max{F(grad log u), F(grad(-log u))} over ball cells (measured), plus the
/// subsolution test of the F^2(grad u) field under the frozen-coefficient
/// weighted Laplacian.
InequalityReport gradient_estimate_check(const BallContext& ctx, const HarnessParams& prm,
                                         const DiscreteFunction& u);

/// Pointwise Bochner identity residual for closed-form u on flat-connection
/// spaces (Euclidean or constant-matrix Riemannian metric, polynomial
/// weight). Throws UnsupportedSpace otherwise.
double bochner_residual(const MeasureSpace& space, const Poly2& u, const std::vector<Vec>& points);

struct ProbeOptions {
  std::vector<double> radii = {1.0, 2.0, 4.0};
  int rings = 40;
  int sectors = 80;
  double delta = 0.5;
  bool use_solver = true;  // false: closed-form affine data per ball
  double drift_allowance = 0.10;
};

/// Cor-1.2 probe: gradient decay of harmonic functions with sublinear
/// boundary oscillation across growing balls. Refuses spaces without
/// certified Ric_inf >= 0.
InequalityReport liouville_probe(const MeasureSpace& space, const ProbeOptions& opts);

/// Cor-5.4 probe: Harnack ratios on B_{delta R_j} stay bounded as R_j grows.
InequalityReport global_harnack_probe(const MeasureSpace& space, const ProbeOptions& opts);

}  // namespace finsler
