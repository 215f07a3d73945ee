#pragma once

// The two fixed radial profiles of the construction.
//
//   f(x) = (x - 5/4) chi(x),  chi = 1 on [1, 3/2], chi = 0 outside (1/2, 2),
//   g(x) = exp(1 - 1/(1 - y^2)),  y = 4 (x - 5/4), zero for |y| >= 1.
//
// so f' = 1 on [1, 3/2] = supp g, supp f = [1/2, 2] and max g = g(5/4) = 1.
// Both are C-infinity; derivatives of any order come from jet arithmetic.

#include <array>
#include <stdexcept>

#include "inflation/jet.hpp"

namespace inflation {

namespace profile_detail {

using std::exp;

/// exp(-1/t) for t > 0, 0 otherwise.  Below t = 1/700 the value and every
/// derivative underflow anyway, so the jet is cut to zero there.
template <class T>
T flat_exp(const T& t) {
  if (value_of(t) < 1.0 / 700.0) return T(0.0);
  return exp(-1.0 / t);
}

/// Smooth step: 0 for t <= 0, 1 for t >= 1.
template <class T>
T smooth_step(const T& t) {
  const double tv = value_of(t);
  if (tv <= 0.0) return T(0.0);
  if (tv >= 1.0) return T(1.0);
  const T a = flat_exp(t);
  const T b = flat_exp(1.0 - t);
  return a / (a + b);
}

template <class T>
T plateau(const T& x) {
  const double xv = value_of(x);
  if (xv <= 0.5 || xv >= 2.0) return T(0.0);
  if (xv < 1.0) return smooth_step((x - 0.5) * 2.0);
  if (xv <= 1.5) return T(1.0);
  return smooth_step((2.0 - x) * 2.0);
}

template <class T>
T f_profile(const T& x) {
  const double xv = value_of(x);
  if (xv <= 0.5 || xv >= 2.0) return T(0.0);
  return (x - 1.25) * plateau(x);
}

template <class T>
T g_profile(const T& x) {
  const double xv = value_of(x);
  if (xv <= 1.0 || xv >= 1.5) return T(0.0);
  const T y = (x - 1.25) * 4.0;
  const T q = 1.0 - y * y;
  if (value_of(q) < 1.0 / 700.0) return T(0.0);
  return exp(1.0 - 1.0 / q);
}

}  // namespace profile_detail

class Profile {
 public:
  enum class Kind { f, g, zero };

  static constexpr int max_public_order = 4;

  explicit Profile(Kind kind) : kind_(kind) {}

  Kind kind() const { return kind_; }

  /// Closed support interval.
  std::array<double, 2> support() const {
    switch (kind_) {
      case Kind::f:
        return {0.5, 2.0};
      case Kind::g:
        return {1.0, 1.5};
      case Kind::zero:
        break;
    }
    return {0.0, 0.0};
  }

  bool vanishes_at(double x) const {
    if (kind_ == Kind::zero) return true;
    const auto s = support();
    return x <= s[0] || x >= s[1];
  }

  /// Derivative of the given order (0..4) at x.
  double eval(double x, int order = 0) const {
    if (order < 0 || order > max_public_order)
      throw std::out_of_range("profile derivative order must be in [0, 4]");
    const auto t = taylor<max_public_order>(x);
    return t[order] * detail::factorial(order);
  }

  /// Taylor coefficients c_k = h^(k)(x)/k!, k = 0..M, of h = profile^(Deriv).
  template <int M, int Deriv = 0>
  std::array<double, M + 1> taylor(double x) const {
    std::array<double, M + 1> out{};
    if (vanishes_at(x)) return out;
    using J = Jet<1, M + Deriv>;
    const J xj = J::variable(0, x);
    const J v = kind_ == Kind::f ? profile_detail::f_profile(xj) : profile_detail::g_profile(xj);
    for (int k = 0; k <= M; ++k) {
      // coefficient of h^k in the Deriv-th derivative
      double scale = 1.0;
      for (int i = 1; i <= Deriv; ++i) scale *= (k + i);
      out[k] = v[k + Deriv] * scale;
    }
    return out;
  }

 private:
  Kind kind_;
};

inline Profile make_f() { return Profile(Profile::Kind::f); }
inline Profile make_g() { return Profile(Profile::Kind::g); }

}  // namespace inflation
