#include "finsler/coefficients.hpp"

#include <cmath>

#include "finsler/error.hpp"

namespace finsler {

MatrixField MatrixField::identity(int n) {
  MatrixField f;
  f.family = MatrixFamily::Constant;
  f.dim = n;
  f.constant = Mat::Identity(n, n);
  return f;
}

MatrixField MatrixField::constant_matrix(const Mat& a) {
  MatrixField f;
  f.family = MatrixFamily::Constant;
  f.dim = static_cast<int>(a.rows());
  f.constant = a;
  return f;
}

MatrixField MatrixField::gaussian_conformal(int n, double c, const Vec& x0) {
  MatrixField f;
  f.family = MatrixFamily::GaussianConformal;
  f.dim = n;
  f.strength = c;
  f.center = x0;
  return f;
}

MatrixField MatrixField::poincare_disk(int n) {
  MatrixField f;
  f.family = MatrixFamily::PoincareDisk;
  f.dim = n;
  return f;
}

Mat MatrixField::eval(const Vec& x) const {
  switch (family) {
    case MatrixFamily::Constant:
      return constant;
    case MatrixFamily::GaussianConformal: {
      const double q = (x - center).squaredNorm();
      return std::exp(2.0 * strength * q) * Mat::Identity(dim, dim);
    }
    case MatrixFamily::PoincareDisk: {
      const double r2 = x.squaredNorm();
      if (r2 >= 1.0) throw DomainError("poincare-disk metric queried at |x| >= 1");
      const double lam = 2.0 / (1.0 - r2);
      return lam * lam * Mat::Identity(dim, dim);
    }
  }
  return constant;
}

Mat MatrixField::deriv(const Vec& x, int k) const {
  switch (family) {
    case MatrixFamily::Constant:
      return Mat::Zero(dim, dim);
    case MatrixFamily::GaussianConformal: {
      const double q = (x - center).squaredNorm();
      const double s2 = std::exp(2.0 * strength * q);
      return 4.0 * strength * (x[k] - center[k]) * s2 * Mat::Identity(dim, dim);
    }
    case MatrixFamily::PoincareDisk: {
      const double r2 = x.squaredNorm();
      if (r2 >= 1.0) throw DomainError("poincare-disk metric queried at |x| >= 1");
      const double lam = 2.0 / (1.0 - r2);
      // d(lam^2)/dx^k = 2 lam^3 x_k
      return 2.0 * lam * lam * lam * x[k] * Mat::Identity(dim, dim);
    }
  }
  return Mat::Zero(dim, dim);
}

double MatrixField::half_log_det(const Vec& x) const {
  switch (family) {
    case MatrixFamily::Constant: {
      Eigen::LLT<Mat> llt(constant);
      double logdet = 0.0;
      for (int i = 0; i < dim; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
      return 0.5 * logdet;
    }
    case MatrixFamily::GaussianConformal: {
      const double q = (x - center).squaredNorm();
      return dim * strength * q;
    }
    case MatrixFamily::PoincareDisk: {
      const double r2 = x.squaredNorm();
      if (r2 >= 1.0) throw DomainError("poincare-disk metric queried at |x| >= 1");
      return dim * std::log(2.0 / (1.0 - r2));
    }
  }
  return 0.0;
}

Vec MatrixField::grad_half_log_det(const Vec& x) const {
  switch (family) {
    case MatrixFamily::Constant:
      return Vec::Zero(dim);
    case MatrixFamily::GaussianConformal:
      return 2.0 * dim * strength * (x - center);
    case MatrixFamily::PoincareDisk: {
      const double r2 = x.squaredNorm();
      if (r2 >= 1.0) throw DomainError("poincare-disk metric queried at |x| >= 1");
      return (2.0 * dim / (1.0 - r2)) * x;
    }
  }
  return Vec::Zero(dim);
}

CovectorField CovectorField::zero(int n) {
  CovectorField f;
  f.constant = Vec::Zero(n);
  return f;
}

CovectorField CovectorField::constant_covector(const Vec& b) {
  CovectorField f;
  f.constant = b;
  return f;
}

LogDensityField LogDensityField::lebesgue() { return {}; }

LogDensityField LogDensityField::gaussian(int n, double strength) {
  LogDensityField f;
  f.family = DensityFamily::Gaussian;
  f.strength = strength;
  f.center = Vec::Zero(n);
  return f;
}

LogDensityField LogDensityField::riemannian_volume() {
  LogDensityField f;
  f.family = DensityFamily::RiemannianVolume;
  return f;
}

double LogDensityField::eval(const Vec& x, const MatrixField& a) const {
  switch (family) {
    case DensityFamily::Lebesgue:
      return 0.0;
    case DensityFamily::Gaussian:
      return -0.5 * strength * (x - center).squaredNorm();
    case DensityFamily::RiemannianVolume:
      return a.half_log_det(x);
  }
  return 0.0;
}

Vec LogDensityField::grad(const Vec& x, const MatrixField& a) const {
  switch (family) {
    case DensityFamily::Lebesgue:
      return Vec::Zero(x.size());
    case DensityFamily::Gaussian:
      return -strength * (x - center);
    case DensityFamily::RiemannianVolume:
      return a.grad_half_log_det(x);
  }
  return Vec::Zero(x.size());
}

std::string to_string(MatrixFamily f) {
  switch (f) {
    case MatrixFamily::Constant: return "constant";
    case MatrixFamily::GaussianConformal: return "gaussian-conformal";
    case MatrixFamily::PoincareDisk: return "poincare-disk";
  }
  return "constant";
}

std::string to_string(DensityFamily f) {
  switch (f) {
    case DensityFamily::Lebesgue: return "lebesgue";
    case DensityFamily::Gaussian: return "gaussian";
    case DensityFamily::RiemannianVolume: return "riemannian-volume";
  }
  return "lebesgue";
}

}  // namespace finsler
