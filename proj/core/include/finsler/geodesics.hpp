#pragma once

#include <vector>

#include "finsler/measure_space.hpp"

namespace finsler {

/// One integrated geodesic: samples (t, x(t), xd(t)) at the integrator steps.
struct GeodesicPath {
  std::vector<double> t;
  std::vector<Vec> x;
  std::vector<Vec> v;
  double speed = 0.0;  // F(x0, y0), constant along the path
  bool minimal = true;

  std::size_t size() const { return t.size(); }
  double constant_speed_drift(const MeasureSpace& space) const;
};

/// RK4 with fixed step, halving until the constant-speed drift is below
/// 1e-6 relative. Throws StepFailure on metric breakdown or step underflow.
GeodesicPath geodesic_shoot(const MeasureSpace& space, const Vec& x0, const Vec& y0,
                            double t_max, double step);

/// S(x,y) = d/dt tau(gamma(t), gammad(t)) at t = 0 by central differencing
/// along the shot geodesic. 1-homogeneous in y.
double s_curvature(const MeasureSpace& space, const Vec& x, const Vec& y);

struct DistanceOptions {
  int grid = 65;           // Dijkstra lattice resolution per axis
  int polyline_points = 33;
  int descent_iterations = 160;
};

/// Asymmetric distance d(x1, x2): coarse Dijkstra on a lattice with F-edge
/// weights, then path straightening by energy descent. Constant-coefficient
/// metrics short-circuit to the exact chord value F(x1, x2 - x1), which is
/// the descent fixed point for translation-invariant norms.
double distance(const MeasureSpace& space, const Vec& x1, const Vec& x2,
                const DistanceOptions& opts = {});

struct DistanceResult {
  double value = 0.0;
  std::vector<Vec> polyline;  // straightened minimizing path
};

DistanceResult distance_path(const MeasureSpace& space, const Vec& x1, const Vec& x2,
                             const DistanceOptions& opts = {});

/// Forward distances d(x0, p) for a batch of targets sharing one Dijkstra
/// pass over the lattice. Targets are snapped per-target with a final
/// polyline descent, so accuracy matches distance().
std::vector<double> distance_batch(const MeasureSpace& space, const Vec& x0,
                                   const std::vector<Vec>& targets,
                                   const DistanceOptions& opts = {});

/// Length of a polyline under F (Simpson per segment); used by tests and by
/// the straightening phase.
double path_length(const MeasureSpace& space, const std::vector<Vec>& pts);

}  // namespace finsler
