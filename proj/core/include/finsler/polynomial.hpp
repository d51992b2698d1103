#pragma once

#include <array>
#include <map>

#include "finsler/types.hpp"

namespace finsler {

/// Dense-enough bivariate polynomial with exact differentiation; carries the
/// closed-form test functions through the curvature identities.
class Poly2 {
 public:
  Poly2() = default;

  static Poly2 constant(double c) {
    Poly2 p;
    if (c != 0.0) p.terms_[{0, 0}] = c;
    return p;
  }
  static Poly2 var(int k) {
    Poly2 p;
    p.terms_[{k == 0 ? 1 : 0, k == 1 ? 1 : 0}] = 1.0;
    return p;
  }

  Poly2 operator+(const Poly2& o) const {
    Poly2 r = *this;
    for (const auto& [e, c] : o.terms_) r.add_term(e, c);
    return r;
  }
  Poly2 operator-(const Poly2& o) const {
    Poly2 r = *this;
    for (const auto& [e, c] : o.terms_) r.add_term(e, -c);
    return r;
  }
  Poly2 operator*(const Poly2& o) const {
    Poly2 r;
    for (const auto& [e1, c1] : terms_)
      for (const auto& [e2, c2] : o.terms_)
        r.add_term({e1[0] + e2[0], e1[1] + e2[1]}, c1 * c2);
    return r;
  }
  Poly2 operator*(double s) const {
    Poly2 r;
    for (const auto& [e, c] : terms_) r.add_term(e, c * s);
    return r;
  }

  Poly2 deriv(int k) const {
    Poly2 r;
    for (const auto& [e, c] : terms_) {
      if (e[k] == 0) continue;
      std::array<int, 2> e2 = e;
      e2[k] -= 1;
      r.add_term(e2, c * e[k]);
    }
    return r;
  }

  double eval(const Vec& x) const {
    double v = 0.0;
    for (const auto& [e, c] : terms_) v += c * std::pow(x[0], e[0]) * std::pow(x[1], e[1]);
    return v;
  }

  bool zero() const { return terms_.empty(); }

 private:
  std::map<std::array<int, 2>, double> terms_;

  void add_term(const std::array<int, 2>& e, double c) {
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      if (c != 0.0) terms_[e] = c;
    } else {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }
};

inline Poly2 operator*(double s, const Poly2& p) { return p * s; }

}  // namespace finsler
