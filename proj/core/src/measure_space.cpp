#include "finsler/measure_space.hpp"

#include <cmath>

#include "finsler/error.hpp"

namespace finsler {

double MeasureSpace::distortion(const Vec& x, const Vec& y) const {
  const Mat g = metric.fundamental_tensor(x, y);  // throws ZeroVector for y = 0
  const Eigen::LLT<Mat> llt(g);
  double half_log_det = 0.0;
  for (int i = 0; i < dim(); ++i) half_log_det += std::log(llt.matrixL()(i, i));
  return half_log_det - log_density_at(x);
}

namespace spaces {

MeasureSpace flat(double domain_radius) {
  MeasureSpace s;
  s.name = "flat";
  s.metric = MetricDescriptor::euclidean(2);
  s.log_density = LogDensityField::lebesgue();
  s.certified.ric_inf_lower = 0.0;
  s.certified.distortion_bound = 0.05;
  s.certified.s_curvature_alpha = 0.05;
  s.domain = WorkingDomain{Vec::Zero(2), domain_radius};
  return s;
}

MeasureSpace gaussian(double domain_radius) {
  MeasureSpace s;
  s.name = "gaussian";
  s.metric = MetricDescriptor::euclidean(2);
  s.log_density = LogDensityField::gaussian(2);
  s.certified.ric_inf_lower = 1.0;
  // |tau| = |x|^2/2 and S = <x,y> on the working ball.
  s.certified.distortion_bound = 0.5 * domain_radius * domain_radius;
  s.certified.s_curvature_alpha = domain_radius;
  s.domain = WorkingDomain{Vec::Zero(2), domain_radius};
  return s;
}

MeasureSpace hyperbolic(double geodesic_radius) {
  MeasureSpace s;
  s.name = "hyperbolic";
  s.metric = MetricDescriptor::riemannian(MatrixField::poincare_disk(2));
  s.log_density = LogDensityField::riemannian_volume();
  s.certified.ric_inf_lower = -1.0;
  s.certified.distortion_bound = 0.05;
  s.certified.s_curvature_alpha = 0.05;
  // Stored in model coordinates: geodesic radius r maps to tanh(r/2).
  s.domain = WorkingDomain{Vec::Zero(2), std::tanh(0.5 * geodesic_radius)};
  return s;
}

MeasureSpace randers_const(double drift, double domain_radius) {
  MeasureSpace s;
  s.name = "randers";
  s.metric = MetricDescriptor::randers(MatrixField::identity(2),
                                       CovectorField::constant_covector(vec2(drift, 0.0)));
  s.log_density = LogDensityField::lebesgue();
  s.certified.ric_inf_lower = 0.0;
  // tau = (3/2) ln(F/alpha) for n=2, so |tau| <= (3/2) ln(1/(1-drift)).
  s.certified.distortion_bound = 1.5 * std::log(1.0 / (1.0 - drift)) + 0.01;
  s.certified.s_curvature_alpha = 0.05;
  s.domain = WorkingDomain{Vec::Zero(2), domain_radius};
  return s;
}

}  // namespace spaces

}  // namespace finsler
