#pragma once

// Test-only oracles, kept independent of the library code paths they check:
// finite differences for derivative tensors, brute-force maximizers for dual
// norms, series evaluations for the comparison functions, and closed forms
// for the model spaces.

#include <cmath>
#include <functional>

#include "finsler/metric.hpp"

namespace oracles {

using finsler::Mat;
using finsler::MetricDescriptor;
using finsler::Vec;

// Central finite-difference Hessian of 1/2 F^2 in y.
inline Mat fd_fundamental_tensor(const MetricDescriptor& m, const Vec& x, const Vec& y) {
  const int n = m.dim();
  const double h = 1e-4 * (1.0 + y.norm());
  auto f = [&](const Vec& v) {
    const double F = m.norm(x, v);
    return 0.5 * F * F;
  };
  Mat H(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec ei = Vec::Zero(n), ej = Vec::Zero(n);
      ei[i] = h;
      ej[j] = h;
      H(i, j) = (f(y + ei + ej) - f(y + ei - ej) - f(y - ei + ej) + f(y - ei - ej)) /
                (4.0 * h * h);
    }
  return 0.5 * (H + H.transpose());
}

// Third-order central differences of F^2 with one Richardson step;
// C_ijk = 1/4 of the third derivative.
inline double fd_cartan_entry(const MetricDescriptor& m, const Vec& x, const Vec& y, int i,
                              int j, int k) {
  auto stencil = [&](double h) {
    auto f2 = [&](const Vec& v) {
      const double F = m.norm(x, v);
      return F * F;
    };
    Vec ei = Vec::Zero(m.dim()), ej = Vec::Zero(m.dim()), ek = Vec::Zero(m.dim());
    ei[i] = h;
    ej[j] = h;
    ek[k] = h;
    double acc = 0.0;
    for (int si = -1; si <= 1; si += 2)
      for (int sj = -1; sj <= 1; sj += 2)
        for (int sk = -1; sk <= 1; sk += 2)
          acc += si * sj * sk * f2(y + si * ei + sj * ej + sk * ek);
    return 0.25 * acc / (8.0 * h * h * h);
  };
  const double h = 2e-3 * (1.0 + y.norm());
  return (4.0 * stencil(0.5 * h) - stencil(h)) / 3.0;
}

// Brute-force dual norm sup xi(u)/F(u) over the circle, golden-polished.
inline double sphere_max_dual(const MetricDescriptor& m, const Vec& x, const Vec& xi,
                              int samples = 4096) {
  auto value = [&](double th) {
    const Vec u = finsler::vec2(std::cos(th), std::sin(th));
    return xi.dot(u) / m.norm(x, u);
  };
  double best = -1e300, best_th = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double th = 2.0 * M_PI * k / samples;
    const double v = value(th);
    if (v > best) {
      best = v;
      best_th = th;
    }
  }
  double lo = best_th - 2.0 * M_PI / samples, hi = best_th + 2.0 * M_PI / samples;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
  double fc = value(c), fd = value(d);
  for (int it = 0; it < 80; ++it) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - phi * (hi - lo);
      fc = value(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + phi * (hi - lo);
      fd = value(d);
    }
  }
  return std::max(fc, fd);
}

// Closed-form Randers dual (quadratic-equation route, independent of the
// Newton solve): F*(xi) = (sqrt(<xi,b>^2 + (1-|b|^2)|xi|^2) - <xi,b>)/(1-|b|^2)
// with the inner products taken in A^{-1}.
inline double randers_dual_closed_form(const Mat& A, const Vec& b, const Vec& xi) {
  const Mat Ainv = A.inverse();
  const double bb = b.dot(Ainv * b);
  const double xb = xi.dot(Ainv * b);
  const double xx = xi.dot(Ainv * xi);
  return (std::sqrt(xb * xb + (1.0 - bb) * xx) - xb) / (1.0 - bb);
}

// Taylor-series sinh and cosh, summed to machine precision.
inline double series_sinh(double t) {
  double term = t, sum = t;
  for (int k = 1; k < 60; ++k) {
    term *= t * t / ((2.0 * k) * (2.0 * k + 1.0));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

inline double series_cosh(double t) {
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    term *= t * t / ((2.0 * k - 1.0) * (2.0 * k));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

// Poincare-disk closed forms (curvature -1 model): geodesic distance and
// ball area.
inline double hyperbolic_distance(const Vec& p, const Vec& q) {
  const double num = 2.0 * (p - q).squaredNorm();
  const double den = (1.0 - p.squaredNorm()) * (1.0 - q.squaredNorm());
  return std::acosh(1.0 + num / den);
}

inline double hyperbolic_ball_area(double r) { return 2.0 * M_PI * (series_cosh(r) - 1.0); }

// Directional derivative by central differences, for gradient checks.
inline double fd_directional(const std::function<double(double)>& g, double t = 1e-5) {
  return (g(t) - g(-t)) / (2.0 * t);
}

}  // namespace oracles
