#pragma once

#include <optional>
#include <string>

#include "finsler/metric.hpp"

namespace finsler {

/// Curvature metadata certified analytically per example space; asserted,
/// never derived. ric_inf_lower is the signed bound: Ric_inf >= K F^2.
struct CertifiedBounds {
  double ric_inf_lower = 0.0;
  std::optional<double> distortion_bound;   // |tau| <= k, k > 0
  std::optional<double> s_curvature_alpha;  // S >= -alpha, alpha > 0
};

/// Star-shaped working region around a center, kept inside the cut locus of
/// every built-in example.
struct WorkingDomain {
  Vec center;
  double radius = 1.0;

  bool contains(const Vec& x) const { return (x - center).norm() < radius; }
};

/// A Finsler norm family plus a smooth positive measure dm = e^{Phi} dx.
struct MeasureSpace {
  std::string name;
  MetricDescriptor metric;
  LogDensityField log_density;
  CertifiedBounds certified;
  std::optional<WorkingDomain> domain;

  int dim() const { return metric.dim(); }
  double log_density_at(const Vec& x) const { return log_density.eval(x, metric.a_field()); }
  Vec grad_log_density(const Vec& x) const { return log_density.grad(x, metric.a_field()); }
  double weight(const Vec& x) const { return std::exp(log_density_at(x)); }

  /// Distortion tau(x,y) = ln( sqrt(det g(x,y)) / e^{Phi(x)} ).
  double distortion(const Vec& x, const Vec& y) const;
};

/// Built-in certified examples (n = 2).
namespace spaces {

/// Euclidean metric + Lebesgue measure. Ric_inf = 0, tau = 0, S = 0.
MeasureSpace flat(double domain_radius = 5.0);

/// Euclidean metric, dm = e^{-|x|^2/2} dx. Ric_inf = 1, tau = |x|^2/2,
/// S(x,y) = <x,y> on unit vectors.
MeasureSpace gaussian(double domain_radius = 4.25);

/// Poincare disk (curvature -1) with its Riemannian volume. Ric_inf = -1,
/// tau = 0, S = 0. The domain radius is geodesic.
MeasureSpace hyperbolic(double geodesic_radius = 2.5);

/// Constant-coefficient Randers a = I, b = (drift, 0), Lebesgue measure.
/// Minkowski space: straight geodesics, Ric_inf = 0, S = 0.
MeasureSpace randers_const(double drift = 0.5, double domain_radius = 5.0);

}  // namespace spaces

}  // namespace finsler
