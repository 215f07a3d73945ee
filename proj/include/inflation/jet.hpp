#pragma once

/// Truncated multivariate Taylor polynomials ("jets") for forward-mode
/// differentiation of closed-form fields.
///
/// A `Jet<D, N>` holds the Taylor coefficients of a scalar function of D
/// variables about a base point, truncated at total degree N.  Coefficients
/// are stored densely: the monomial x^a (multi-index a) lives at index
/// sum_i a_i (N+1)^i.  With that layout the index of a product monomial is the
/// sum of the factor indices, which keeps multiplication a flat loop over a
/// precomputed pair list.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace inflation {

namespace detail {

constexpr int ipow(int base, int exp) {
  int r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

template <int D, int N>
constexpr std::array<int, D> exponents_of(int idx) {
  std::array<int, D> a{};
  for (int i = 0; i < D; ++i) {
    a[i] = idx % (N + 1);
    idx /= (N + 1);
  }
  return a;
}

template <int D, int N>
constexpr int degree_of(int idx) {
  int d = 0;
  for (int i = 0; i < D; ++i) {
    d += idx % (N + 1);
    idx /= (N + 1);
  }
  return d;
}

template <int D, int N>
constexpr int count_pairs() {
  constexpr int dense = ipow(N + 1, D);
  int n = 0;
  for (int a = 0; a < dense; ++a)
    for (int b = 0; b < dense; ++b)
      if (degree_of<D, N>(a) + degree_of<D, N>(b) <= N) ++n;
  return n;
}

template <int D, int N>
struct JetTables {
  static constexpr int dense = ipow(N + 1, D);
  static constexpr int n_pairs = count_pairs<D, N>();
  struct Pair {
    int a;
    int b;
  };
  static constexpr std::array<Pair, n_pairs> make_pairs() {
    std::array<Pair, n_pairs> p{};
    int n = 0;
    for (int a = 0; a < dense; ++a)
      for (int b = 0; b < dense; ++b)
        if (degree_of<D, N>(a) + degree_of<D, N>(b) <= N) p[n++] = Pair{a, b};
    return p;
  }
  static constexpr std::array<Pair, n_pairs> pairs = make_pairs();
  static constexpr std::array<int, dense> make_degrees() {
    std::array<int, dense> d{};
    for (int i = 0; i < dense; ++i) d[i] = degree_of<D, N>(i);
    return d;
  }
  static constexpr std::array<int, dense> degrees = make_degrees();
};

constexpr double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace detail

template <int D, int N>
class Jet {
 public:
  static constexpr int dims = D;
  static constexpr int order = N;
  static constexpr int dense = detail::ipow(N + 1, D);
  using Tables = detail::JetTables<D, N>;

  Jet() { c_.fill(0.0); }
  Jet(double v) {  // NOLINT: implicit promotion of constants is intended
    c_.fill(0.0);
    c_[0] = v;
  }

  /// The jet of the coordinate function x_var about base value `v`.
  static Jet variable(int var, double v) {
    Jet j(v);
    if constexpr (N >= 1) j.c_[detail::ipow(N + 1, var)] = 1.0;
    return j;
  }

  double value() const { return c_[0]; }

  /// Coefficient of the monomial with the given exponents (zero if the
  /// total degree exceeds N).
  double coeff(const std::array<int, D>& a) const {
    int idx = 0, deg = 0;
    for (int i = 0; i < D; ++i) {
      if (a[i] < 0) return 0.0;
      idx += a[i] * detail::ipow(N + 1, i);
      deg += a[i];
    }
    return deg <= N ? c_[idx] : 0.0;
  }

  /// Partial derivative d^a f / dx^a at the base point.
  double derivative(const std::array<int, D>& a) const {
    double scale = 1.0;
    for (int i = 0; i < D; ++i) scale *= detail::factorial(a[i]);
    return coeff(a) * scale;
  }

  double& operator[](int i) { return c_[i]; }
  double operator[](int i) const { return c_[i]; }

  Jet& operator+=(const Jet& o) {
    for (int i = 0; i < dense; ++i) c_[i] += o.c_[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int i = 0; i < dense; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& x : c_) x *= s;
    return *this;
  }
  Jet& operator*=(const Jet& o) {
    *this = *this * o;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) {
    for (auto& x : a.c_) x = -x;
    return a;
  }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a *= (1.0 / s); }
  friend Jet operator+(Jet a, double s) {
    a.c_[0] += s;
    return a;
  }
  friend Jet operator+(double s, Jet a) { return a + s; }
  friend Jet operator-(Jet a, double s) {
    a.c_[0] -= s;
    return a;
  }
  friend Jet operator-(double s, const Jet& a) { return -a + s; }

  friend Jet operator*(const Jet& x, const Jet& y) {
    Jet r(0.0);
    for (const auto& p : Tables::pairs) r.c_[p.a + p.b] += x.c_[p.a] * y.c_[p.b];
    return r;
  }
  friend Jet operator/(const Jet& x, const Jet& y) { return x * reciprocal(y); }
  friend Jet operator/(double s, const Jet& y) { return s * reciprocal(y); }

  /// Evaluates sum_k taylor[k] (x - x0)^k, i.e. composes a univariate
  /// function given by its Taylor coefficients at x0 = x.value() with x.
  template <std::size_t M>
  friend Jet compose(const Jet& x, const std::array<double, M>& taylor) {
    static_assert(M >= static_cast<std::size_t>(N) + 1, "Taylor series too short");
    Jet h = x;
    h.c_[0] = 0.0;
    Jet r(taylor[N]);
    for (int k = N - 1; k >= 0; --k) {
      r = r * h;
      r.c_[0] += taylor[k];
    }
    return r;
  }

  friend Jet reciprocal(const Jet& x) {
    const double v = x.value();
    std::array<double, N + 1> t{};
    double p = 1.0 / v;
    for (int k = 0; k <= N; ++k) {
      t[k] = (k % 2 == 0 ? p : -p);
      p /= v;
    }
    return compose(x, t);
  }

  friend Jet sqrt(const Jet& x) {
    const double v = x.value();
    std::array<double, N + 1> t{};
    double binom = 1.0;
    for (int k = 0; k <= N; ++k) {
      t[k] = binom * std::pow(v, 0.5 - k);
      binom *= (0.5 - k) / (k + 1);
    }
    return compose(x, t);
  }

  friend Jet pow(const Jet& x, double e) {
    const double v = x.value();
    std::array<double, N + 1> t{};
    double binom = 1.0;
    for (int k = 0; k <= N; ++k) {
      t[k] = binom * std::pow(v, e - k);
      binom *= (e - k) / (k + 1);
    }
    return compose(x, t);
  }

  friend Jet exp(const Jet& x) {
    const double ev = std::exp(x.value());
    std::array<double, N + 1> t{};
    for (int k = 0; k <= N; ++k) t[k] = ev / detail::factorial(k);
    return compose(x, t);
  }

  friend Jet sin(const Jet& x) {
    const double s = std::sin(x.value()), c = std::cos(x.value());
    std::array<double, N + 1> t{};
    const double cyc[4] = {s, c, -s, -c};
    for (int k = 0; k <= N; ++k) t[k] = cyc[k % 4] / detail::factorial(k);
    return compose(x, t);
  }

  friend Jet cos(const Jet& x) {
    const double s = std::sin(x.value()), c = std::cos(x.value());
    std::array<double, N + 1> t{};
    const double cyc[4] = {c, -s, -c, s};
    for (int k = 0; k <= N; ++k) t[k] = cyc[k % 4] / detail::factorial(k);
    return compose(x, t);
  }

  const std::array<double, dense>& data() const { return c_; }

 private:
  std::array<double, dense> c_;
};

/// d/dx_var of a jet, one order lower.
template <int D, int N>
Jet<D, N - 1> partial(const Jet<D, N>& x, int var) {
  static_assert(N >= 1);
  Jet<D, N - 1> r(0.0);
  constexpr int lo = Jet<D, N - 1>::dense;
  for (int i = 0; i < lo; ++i) {
    auto a = detail::exponents_of<D, N - 1>(i);
    int deg = 0;
    for (int k = 0; k < D; ++k) deg += a[k];
    if (deg > N - 1) continue;
    const int m = a[var];
    a[var] += 1;
    r[i] = (m + 1) * x.coeff(a);
  }
  return r;
}

/// Drops all monomials above degree M.
template <int M, int D, int N>
Jet<D, M> truncate(const Jet<D, N>& x) {
  static_assert(M <= N);
  Jet<D, M> r(0.0);
  for (int i = 0; i < Jet<D, M>::dense; ++i) {
    const auto a = detail::exponents_of<D, M>(i);
    r[i] = x.coeff(a);
  }
  return r;
}

/// Substitutes jets (in other variables) for the two arguments of a bivariate
/// Taylor polynomial: returns p(u, v) where p is expanded about
/// (u.value(), v.value()).
template <int N, int D>
Jet<D, N> substitute(const Jet<2, N>& p, const Jet<D, N>& u, const Jet<D, N>& v) {
  Jet<D, N> du = u, dv = v;
  du[0] = 0.0;
  dv[0] = 0.0;
  std::array<Jet<D, N>, N + 1> upow, vpow;
  upow[0] = Jet<D, N>(1.0);
  vpow[0] = Jet<D, N>(1.0);
  for (int k = 1; k <= N; ++k) {
    upow[k] = upow[k - 1] * du;
    vpow[k] = vpow[k - 1] * dv;
  }
  Jet<D, N> r(0.0);
  for (int i = 0; i <= N; ++i)
    for (int j = 0; i + j <= N; ++j) {
      const double c = p.coeff({i, j});
      if (c != 0.0) r += c * (upow[i] * vpow[j]);
    }
  return r;
}

inline double value_of(double x) { return x; }
template <int D, int N>
double value_of(const Jet<D, N>& x) {
  return x.value();
}

}  // namespace inflation
