#pragma once

#include <Eigen/Dense>

namespace finsler {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Tangent vector y^i attached at a base point x.
struct TangentVector {
  Vec base_point;
  Vec components;
};

/// Covector xi_i attached at a base point x.
struct CotangentVector {
  Vec base_point;
  Vec components;
};

inline TangentVector tangent(const Vec& x, const Vec& y) { return {x, y}; }
inline CotangentVector cotangent(const Vec& x, const Vec& xi) { return {x, xi}; }

inline Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

/// Totally symmetric rank-3 tensor stored as n matrices (slice k = C(.,.,k)).
struct SymmetricTensor3 {
  std::vector<Mat> slices;

  int dim() const { return static_cast<int>(slices.size()); }
  double operator()(int i, int j, int k) const { return slices[k](i, j); }

  /// Contraction C(.,.,v) over the last slot.
  Mat contract(const Vec& v) const {
    Mat out = Mat::Zero(dim(), dim());
    for (int k = 0; k < dim(); ++k) out += v[k] * slices[k];
    return out;
  }

  double max_abs() const {
    double m = 0;
    for (const Mat& s : slices) m = std::max(m, s.cwiseAbs().maxCoeff());
    return m;
  }
};

}  // namespace finsler
