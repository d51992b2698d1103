#pragma once

#include <string>

#include "finsler/types.hpp"

namespace finsler {

/// Coefficient families for the Riemannian part a(x). All carry closed-form
/// x-derivatives so that spray coefficients stay smooth for the integrators.
enum class MatrixFamily { Constant, GaussianConformal, PoincareDisk };

struct MatrixField {
  MatrixFamily family = MatrixFamily::Constant;
  int dim = 2;
  Mat constant;       // Constant: the SPD matrix (defaults to identity)
  double strength = 0.0;  // GaussianConformal: a(x) = exp(2c|x-x0|^2) I
  Vec center;         // GaussianConformal center x0

  static MatrixField identity(int n);
  static MatrixField constant_matrix(const Mat& a);
  static MatrixField gaussian_conformal(int n, double c, const Vec& x0);
  static MatrixField poincare_disk(int n);

  bool is_constant() const { return family == MatrixFamily::Constant; }

  Mat eval(const Vec& x) const;
  /// d a / d x^k
  Mat deriv(const Vec& x, int k) const;
  /// 0.5 * ln det a(x), the log of the Riemannian volume density.
  double half_log_det(const Vec& x) const;
  Vec grad_half_log_det(const Vec& x) const;
};

/// Drift covector field b(x) for Randers metrics. Constant-only for now.
struct CovectorField {
  Vec constant;

  static CovectorField zero(int n);
  static CovectorField constant_covector(const Vec& b);

  bool is_constant() const { return true; }
  Vec eval(const Vec&) const { return constant; }
  Vec deriv(const Vec&, int) const { return Vec::Zero(constant.size()); }
};

/// Measure density dm = e^{Phi} dx. RiemannianVolume ties Phi to the metric's
/// matrix field (canonical volume of the Riemannian part).
enum class DensityFamily { Lebesgue, Gaussian, RiemannianVolume };

struct LogDensityField {
  DensityFamily family = DensityFamily::Lebesgue;
  double strength = 1.0;  // Gaussian: Phi = -strength * |x-center|^2 / 2
  Vec center;

  static LogDensityField lebesgue();
  static LogDensityField gaussian(int n, double strength = 1.0);
  static LogDensityField riemannian_volume();

  double eval(const Vec& x, const MatrixField& a) const;
  Vec grad(const Vec& x, const MatrixField& a) const;
};

std::string to_string(MatrixFamily f);
std::string to_string(DensityFamily f);

}  // namespace finsler
