#include "finsler/metric.hpp"

#include <cmath>
#include <functional>

#include "finsler/error.hpp"

namespace finsler {

namespace {

constexpr double kZeroTol = 1e-300;

struct RandersParts {
  double alpha;   // sqrt(y^T A y)
  double beta;    // b . y
  double value;   // alpha + beta
  Vec ay;         // A y
  Vec ell;        // A y / alpha
  Vec b;
};

RandersParts randers_parts(const Mat& A, const Vec& b, const Vec& y) {
  RandersParts p;
  p.ay = A * y;
  p.alpha = std::sqrt(std::max(0.0, y.dot(p.ay)));
  p.beta = b.dot(y);
  p.value = p.alpha + p.beta;
  p.ell = p.alpha > 0 ? Vec(p.ay / p.alpha) : Vec(Vec::Zero(y.size()));
  p.b = b;
  return p;
}

double golden_max(const std::function<double(double)>& f, double lo, double hi, int iters) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return fc > fd ? fc : fd;
}

}  // namespace

MetricDescriptor MetricDescriptor::euclidean(int n) {
  MetricDescriptor m;
  m.variant_ = MetricVariant::Euclidean;
  m.dim_ = n;
  m.a_ = MatrixField::identity(n);
  m.b_ = CovectorField::zero(n);
  return m;
}

MetricDescriptor MetricDescriptor::riemannian(MatrixField a) {
  MetricDescriptor m;
  m.variant_ = MetricVariant::Riemannian;
  m.dim_ = a.dim;
  m.a_ = std::move(a);
  m.b_ = CovectorField::zero(m.dim_);
  return m;
}

MetricDescriptor MetricDescriptor::randers(MatrixField a, CovectorField b) {
  MetricDescriptor m;
  m.variant_ = MetricVariant::Randers;
  m.dim_ = a.dim;
  m.a_ = std::move(a);
  m.b_ = std::move(b);
  return m;
}

bool MetricDescriptor::is_constant_coefficient() const {
  return a_.is_constant() && b_.is_constant();
}

void MetricDescriptor::validate_at(const Vec& x) const {
  if (variant_ == MetricVariant::Euclidean) return;
  const Mat A = a_.eval(x);
  Eigen::LLT<Mat> llt(A);
  if (llt.info() != Eigen::Success)
    throw InvalidMetric("Riemannian part a(x) is not positive definite");
  if (variant_ == MetricVariant::Randers) {
    const Vec b = b_.eval(x);
    const double bnorm2 = b.dot(llt.solve(b));
    if (!(bnorm2 < 1.0))
      throw InvalidMetric("Randers drift has a-norm >= 1 at the queried point (F not positive)");
  }
}

double MetricDescriptor::norm(const Vec& x, const Vec& y) const {
  switch (variant_) {
    case MetricVariant::Euclidean:
      return y.norm();
    case MetricVariant::Riemannian: {
      const Mat A = a_.eval(x);
      return std::sqrt(std::max(0.0, y.dot(A * y)));
    }
    case MetricVariant::Randers: {
      validate_at(x);
      const RandersParts p = randers_parts(a_.eval(x), b_.eval(x), y);
      return p.value;
    }
  }
  return 0.0;
}

Mat MetricDescriptor::fundamental_tensor(const Vec& x, const Vec& y) const {
  if (y.norm() < kZeroTol) throw ZeroVector();
  switch (variant_) {
    case MetricVariant::Euclidean:
      return Mat::Identity(dim_, dim_);
    case MetricVariant::Riemannian:
      return a_.eval(x);
    case MetricVariant::Randers: {
      validate_at(x);
      const Mat A = a_.eval(x);
      const RandersParts p = randers_parts(A, b_.eval(x), y);
      const Vec lb = p.ell + p.b;
      return (p.value / p.alpha) * (A - p.ell * p.ell.transpose()) + lb * lb.transpose();
    }
  }
  return Mat::Identity(dim_, dim_);
}

SymmetricTensor3 MetricDescriptor::cartan_tensor(const Vec& x, const Vec& y) const {
  if (y.norm() < kZeroTol) throw ZeroVector();
  SymmetricTensor3 C;
  C.slices.assign(dim_, Mat::Zero(dim_, dim_));
  if (variant_ != MetricVariant::Randers) return C;
  validate_at(x);
  const Mat A = a_.eval(x);
  const RandersParts p = randers_parts(A, b_.eval(x), y);
  // C_ijk = 1/2 (h_ij d_k + h_ik d_j + h_jk d_i), with the angular metric
  // h = (A - l l^T)/alpha and d = b - (beta/alpha) l. Both h y = 0 and
  // d(y) = 0, so the contraction with y vanishes identically.
  const Mat h = (A - p.ell * p.ell.transpose()) / p.alpha;
  const Vec d = p.b - (p.beta / p.alpha) * p.ell;
  for (int k = 0; k < dim_; ++k)
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j)
        C.slices[k](i, j) = 0.5 * (h(i, j) * d[k] + h(i, k) * d[j] + h(j, k) * d[i]);
  return C;
}

Vec MetricDescriptor::legendre(const Vec& x, const Vec& y) const {
  if (y.norm() < kZeroTol) return Vec::Zero(dim_);
  switch (variant_) {
    case MetricVariant::Euclidean:
      return y;
    case MetricVariant::Riemannian:
      return a_.eval(x) * y;
    case MetricVariant::Randers: {
      validate_at(x);
      const RandersParts p = randers_parts(a_.eval(x), b_.eval(x), y);
      return p.value * (p.ell + p.b);
    }
  }
  return y;
}

Vec MetricDescriptor::legendre_inverse(const Vec& x, const Vec& xi) const {
  if (xi.norm() < kZeroTol) return Vec::Zero(dim_);
  if (variant_ == MetricVariant::Euclidean) return xi;
  const Mat A = a_.eval(x);
  Eigen::LLT<Mat> llt(A);
  if (llt.info() != Eigen::Success)
    throw InvalidMetric("Riemannian part a(x) is not positive definite");
  if (variant_ == MetricVariant::Riemannian) return llt.solve(xi);

  validate_at(x);
  // Solve at unit covector scale (the map is 1-homogeneous) so the Armijo
  // comparisons stay clear of floating-point noise, then scale back.
  const double sc = xi.norm();
  const Vec xin = xi / sc;
  const Vec b = b_.eval(x);

  // Damped Newton for the strictly convex phi(y) = F^2(y)/2 - xi(y), whose
  // gradient is L(y) - xi and Hessian is the fundamental tensor.
  const double tol = 1e-12;
  auto phi = [&](const Vec& v) {
    const RandersParts p = randers_parts(A, b, v);
    return 0.5 * p.value * p.value - xin.dot(v);
  };
  Vec y = llt.solve(xin);
  Vec res = legendre(x, y) - xin;
  for (int iter = 0; iter < 50 && res.norm() > tol; ++iter) {
    const Mat g = fundamental_tensor(x, y);
    const Vec step = g.ldlt().solve(-res);
    const double f0 = phi(y);
    const double slope = res.dot(step);  // = -res^T g^-1 res < 0
    double s = 1.0;
    bool moved = false;
    while (s > 1e-8) {
      const Vec cand = y + s * step;
      if (cand.norm() > kZeroTol) {
        const Vec res_c = legendre(x, cand) - xin;
        // Armijo on phi, or plain residual decrease once phi differences
        // fall below rounding
        if (phi(cand) <= f0 + 1e-4 * s * slope || res_c.norm() <= (1.0 - 1e-4 * s) * res.norm()) {
          y = cand;
          res = res_c;
          moved = true;
          break;
        }
      }
      s *= 0.5;
    }
    if (!moved) {
      // Rescale along the current ray: by 1-homogeneity L(t u) = t L(u),
      // the least-squares scale is explicit.
      const Vec Lu = legendre(x, y);
      const double t = Lu.dot(xin) / Lu.squaredNorm();
      if (t > 0 && std::isfinite(t) && std::abs(t - 1.0) > 1e-15) {
        y *= t;
        res = legendre(x, y) - xin;
      } else {
        break;
      }
    }
  }
  if (res.norm() <= 1e-10) return sc * y;
  throw NoConvergence("legendre_inverse Newton stalled (check metric validity)");
}

double MetricDescriptor::dual_norm(const Vec& x, const Vec& xi) const {
  if (xi.norm() < kZeroTol) return 0.0;
  switch (variant_) {
    case MetricVariant::Euclidean:
      return xi.norm();
    case MetricVariant::Riemannian: {
      const Mat A = a_.eval(x);
      return std::sqrt(std::max(0.0, xi.dot(A.llt().solve(xi))));
    }
    case MetricVariant::Randers:
      return norm(x, legendre_inverse(x, xi));
  }
  return xi.norm();
}

Mat MetricDescriptor::dual_tensor(const Vec& x, const Vec& xi) const {
  if (xi.norm() < kZeroTol) throw ZeroCovector();
  if (is_quadratic()) {
    const Mat A = a_.eval(x);
    return A.llt().solve(Mat::Identity(dim_, dim_));
  }
  const Vec y = legendre_inverse(x, xi);
  const Mat g = fundamental_tensor(x, y);
  return g.ldlt().solve(Mat::Identity(dim_, dim_));
}

Vec MetricDescriptor::f2_x(const Vec& x, const Vec& y) const {
  Vec out = Vec::Zero(dim_);
  if (is_constant_coefficient()) return out;
  switch (variant_) {
    case MetricVariant::Euclidean:
      return out;
    case MetricVariant::Riemannian: {
      for (int l = 0; l < dim_; ++l) out[l] = y.dot(a_.deriv(x, l) * y);
      return out;
    }
    case MetricVariant::Randers: {
      const RandersParts p = randers_parts(a_.eval(x), b_.eval(x), y);
      for (int l = 0; l < dim_; ++l) {
        const double dalpha = y.dot(a_.deriv(x, l) * y) / (2.0 * p.alpha);
        const double dbeta = b_.deriv(x, l).dot(y);
        out[l] = 2.0 * p.value * (dalpha + dbeta);
      }
      return out;
    }
  }
  return out;
}

Vec MetricDescriptor::f2_xy_contract(const Vec& x, const Vec& y) const {
  Vec out = Vec::Zero(dim_);
  if (is_constant_coefficient()) return out;
  switch (variant_) {
    case MetricVariant::Euclidean:
      return out;
    case MetricVariant::Riemannian: {
      for (int k = 0; k < dim_; ++k) out += 2.0 * y[k] * (a_.deriv(x, k) * y);
      return out;
    }
    case MetricVariant::Randers: {
      const RandersParts p = randers_parts(a_.eval(x), b_.eval(x), y);
      const Vec lb = p.ell + p.b;
      for (int k = 0; k < dim_; ++k) {
        const Mat Ak = a_.deriv(x, k);
        const Vec Bk = b_.deriv(x, k);
        const double Qk = y.dot(Ak * y);
        const double dalpha = Qk / (2.0 * p.alpha);
        const double dbeta = Bk.dot(y);
        const Vec term = 2.0 * (dalpha + dbeta) * lb +
                         2.0 * p.value * (Ak * y / p.alpha - Qk * p.ell / (2.0 * p.alpha * p.alpha) + Bk);
        out += y[k] * term;
      }
      return out;
    }
  }
  return out;
}

Vec MetricDescriptor::spray(const Vec& x, const Vec& y) const {
  if (is_constant_coefficient() || y.norm() < kZeroTol) return Vec::Zero(dim_);
  const Mat g = fundamental_tensor(x, y);
  const Vec rhs = 0.25 * (f2_xy_contract(x, y) - f2_x(x, y));
  return g.ldlt().solve(rhs);
}

MetricDescriptor MetricDescriptor::reversed() const {
  if (variant_ != MetricVariant::Randers) return *this;
  MetricDescriptor m = *this;
  m.b_ = CovectorField::constant_covector(-b_.constant);
  return m;
}

UniformityConstants uniformity_constants(const MetricDescriptor& metric,
                                         const SampleRegion& region, int directions,
                                         std::uint64_t seed) {
  const int n = metric.dim();
  const auto dirs = unit_directions(n, directions, seed);
  const auto points = region_points(region, seed);

  UniformityConstants out;
  double kappa = 1.0, kappa_star = 1.0, lambda = 1.0;
  Vec best_x;
  double best_v_angle = 0, best_w_angle = 0, worst_v_angle = 0, worst_w_angle = 0, lam_angle = 0;

  for (const Vec& x : points) {
    metric.validate_at(x);
    for (std::size_t iv = 0; iv < dirs.size(); ++iv) {
      const Mat g = metric.fundamental_tensor(x, dirs[iv]);
      const double Fv = metric.norm(x, dirs[iv]);
      const double Frev = metric.norm(x, -dirs[iv]);
      if (Fv / Frev > lambda) {
        lambda = Fv / Frev;
        if (n == 2) lam_angle = std::atan2(dirs[iv][1], dirs[iv][0]);
        best_x = x;
      }
      for (std::size_t iw = 0; iw < dirs.size(); ++iw) {
        const double Fw = metric.norm(x, dirs[iw]);
        const double ratio = dirs[iw].dot(g * dirs[iw]) / (Fw * Fw);
        if (ratio > kappa) {
          kappa = ratio;
          if (n == 2) {
            best_v_angle = std::atan2(dirs[iv][1], dirs[iv][0]);
            best_w_angle = std::atan2(dirs[iw][1], dirs[iw][0]);
          }
          best_x = x;
        }
        if (ratio < kappa_star) {
          kappa_star = ratio;
          if (n == 2) {
            worst_v_angle = std::atan2(dirs[iv][1], dirs[iv][0]);
            worst_w_angle = std::atan2(dirs[iw][1], dirs[iw][0]);
          }
          best_x = x;
        }
      }
    }
  }

  // Local polish around the grid extremizers (n = 2): alternate golden-section
  // sweeps in the V and W angles. Keeps the estimates tight enough that the
  // dual ellipticity sandwich holds with the returned constants.
  if (n == 2 && metric.variant() == MetricVariant::Randers && best_x.size() == 2) {
    const Vec x = best_x;
    auto ratio_at = [&](double av, double aw) {
      const Vec v = vec2(std::cos(av), std::sin(av));
      const Vec w = vec2(std::cos(aw), std::sin(aw));
      const Mat g = metric.fundamental_tensor(x, v);
      const double Fw = metric.norm(x, w);
      return w.dot(g * w) / (Fw * Fw);
    };
    const double dth = 2.0 * M_PI / directions;
    double av = best_v_angle, aw = best_w_angle;
    for (int round = 0; round < 4; ++round) {
      const double span = dth / (1 << round);
      kappa = std::max(kappa, golden_max([&](double a) { return ratio_at(a, aw); }, av - span, av + span, 24));
      kappa = std::max(kappa, golden_max([&](double a) { return ratio_at(av, a); }, aw - span, aw + span, 24));
    }
    av = worst_v_angle;
    aw = worst_w_angle;
    for (int round = 0; round < 4; ++round) {
      const double span = dth / (1 << round);
      kappa_star = std::min(kappa_star, -golden_max([&](double a) { return -ratio_at(a, aw); }, av - span, av + span, 24));
      kappa_star = std::min(kappa_star, -golden_max([&](double a) { return -ratio_at(av, a); }, aw - span, aw + span, 24));
    }
    auto lam_at = [&](double a) {
      const Vec v = vec2(std::cos(a), std::sin(a));
      return metric.norm(x, v) / metric.norm(x, -v);
    };
    lambda = std::max(lambda, golden_max(lam_at, lam_angle - dth, lam_angle + dth, 40));
  }

  // Enforce the exact relations the estimates are known to satisfy:
  // Lambda <= min(sqrt(kappa), sqrt(1/kappa*)), kappa* <= 1 <= kappa.
  out.lambda_rev = std::max(1.0, lambda);
  out.kappa = std::max({1.0, kappa, out.lambda_rev * out.lambda_rev});
  out.kappa_star = std::min({1.0, kappa_star, 1.0 / (out.lambda_rev * out.lambda_rev)});
  return out;
}

}  // namespace finsler
