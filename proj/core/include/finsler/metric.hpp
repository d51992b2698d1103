#pragma once

#include <cstdint>

#include "finsler/coefficients.hpp"
#include "finsler/sampling.hpp"
#include "finsler/types.hpp"

namespace finsler {

enum class MetricVariant { Euclidean, Riemannian, Randers };

/// Uniform smoothness/convexity constants and reversibility of a norm family:
///   kappa_star F^2(W) <= g_V(W,W) <= kappa F^2(W),  Lambda = sup F(y)/F(-y).
struct UniformityConstants {
  double kappa = 1.0;
  double kappa_star = 1.0;
  double lambda_rev = 1.0;

  bool valid() const {
    return kappa_star <= 1.0 + 1e-12 && kappa >= 1.0 - 1e-12 && lambda_rev >= 1.0 - 1e-12 &&
           lambda_rev <= std::min(std::sqrt(kappa), std::sqrt(1.0 / kappa_star)) + 1e-9;
  }
};

/// Closed-form Finsler norm family: Euclidean | Riemannian(a) | Randers(a, b).
/// All pointwise algebra (norm, fundamental and Cartan tensors, Legendre maps,
/// dual norm, spray coefficients) is assembled from per-variant closed forms.
class MetricDescriptor {
 public:
  static MetricDescriptor euclidean(int n);
  static MetricDescriptor riemannian(MatrixField a);
  static MetricDescriptor randers(MatrixField a, CovectorField b);

  MetricVariant variant() const { return variant_; }
  int dim() const { return dim_; }
  const MatrixField& a_field() const { return a_; }
  const CovectorField& b_field() const { return b_; }
  bool is_constant_coefficient() const;
  bool is_quadratic() const { return variant_ != MetricVariant::Randers; }

  /// Throws InvalidMetric if the descriptor is not a valid Finsler norm at x
  /// (a not SPD, or Randers drift with a-norm >= 1).
  void validate_at(const Vec& x) const;

  /// F(x, y); positively 1-homogeneous, F > 0 for y != 0.
  double norm(const Vec& x, const Vec& y) const;

  /// g_ij(x,y) = 1/2 (F^2)_{y^i y^j}. Throws ZeroVector at y = 0.
  Mat fundamental_tensor(const Vec& x, const Vec& y) const;

  /// C_ijk = 1/4 (F^2)_{y^i y^j y^k}. Vanishes identically iff quadratic.
  SymmetricTensor3 cartan_tensor(const Vec& x, const Vec& y) const;

  /// Legendre transform L(y) = g_y(y, .) with L(0) = 0.
  Vec legendre(const Vec& x, const Vec& y) const;

  /// Inverse Legendre transform by damped Newton on y -> L(y) - xi.
  /// Throws NoConvergence when the solve stalls (a metric-validity bug).
  Vec legendre_inverse(const Vec& x, const Vec& xi) const;

  /// Dual norm F*(x, xi) = sup_y xi(y)/F(x,y). Closed form for quadratic
  /// variants, via the inverse Legendre map for Randers.
  double dual_norm(const Vec& x, const Vec& xi) const;

  /// g*^{kl}(x, xi), the inverse of g at y = L^{-1}(xi). Throws ZeroCovector.
  Mat dual_tensor(const Vec& x, const Vec& xi) const;

  /// Spray coefficients G^i(x,y); geodesics solve xdd + 2G(x, xd) = 0.
  Vec spray(const Vec& x, const Vec& y) const;

  /// The reverse metric x -> F(x, -y).
  MetricDescriptor reversed() const;

  /// d(F^2)/dx at fixed y (closed form per coefficient family).
  Vec f2_x(const Vec& x, const Vec& y) const;

 private:
  MetricVariant variant_ = MetricVariant::Euclidean;
  int dim_ = 2;
  MatrixField a_;
  CovectorField b_;

  // y^k d^2(F^2)/dx^k dy^m, assembled per variant.
  Vec f2_xy_contract(const Vec& x, const Vec& y) const;
};

/// Sampled estimate over the unit sphere bundle of the region: a lower bound
/// for kappa, an upper bound for kappa_star, a lower bound for Lambda; the
/// results are clamped so the UniformityConstants invariants always hold.
UniformityConstants uniformity_constants(const MetricDescriptor& metric,
                                         const SampleRegion& region,
                                         int directions = 64,
                                         std::uint64_t seed = kDefaultSeed);

}  // namespace finsler
