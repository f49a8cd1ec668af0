#pragma once

// Reference implementations used only by the tests. None of these share
// code with the library: they use different integration paths, extended
// precision, or closed forms from the literature.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>

namespace oracle {

using ld = long double;
using cld = std::complex<long double>;

constexpr ld kPi = 3.141592653589793238462643383279502884L;

template <typename F>
auto simpson(F&& f, ld a, ld b, long n) {
  if (n % 2) ++n;
  const ld h = (b - a) / n;
  auto sum = f(a) + f(b);
  for (long i = 1; i < n; ++i) sum += f(a + h * i) * ld(i % 2 ? 4 : 2);
  return sum * (h / 3);
}

struct Density {
  ld psi, dpsi, d2psi;
};

// SaS(sigma) density and derivatives from the contour-rotated Fourier
// integral psi(u) = (1/pi) Re int_0^inf exp(-t^alpha + i u t) dt with
// t = s e^{i theta}, alpha theta < pi/2, which turns the oscillatory
// integrand into an exponentially decaying one.
inline Density contour_density(double alpha, double sigma, double x) {
  const ld a = alpha;
  const ld u = std::fabs(ld(x) / sigma);
  const ld sign = x < 0 ? -1 : 1;
  Density d{};
  if (u == 0) {
    d.psi = std::tgamma(1 / a) / (a * kPi);
    d.dpsi = 0;
    d.d2psi = -std::tgamma(3 / a) / (a * kPi);
  } else {
    const ld theta = std::min<ld>(kPi / 3, 0.3L * kPi / a);
    const cld e = std::polar<ld>(1, theta);
    const cld ea = std::polar<ld>(1, a * theta);
    ld s_end = 1;
    while (std::pow(s_end, a) * std::cos(a * theta) + u * s_end * std::sin(theta) < 80) s_end *= 1.5L;
    const int m = 4;  // s = w^m smooths the s^alpha cusp at the origin
    const ld w_end = std::pow(s_end, ld(1) / m);
    struct Acc {
      cld p, d, dd;
      Acc operator+(const Acc& o) const { return {p + o.p, d + o.d, dd + o.dd}; }
      Acc& operator+=(const Acc& o) { return *this = *this + o; }
      Acc operator*(ld c) const { return {p * c, d * c, dd * c}; }
    };
    auto f = [&](ld w) -> Acc {
      if (w == 0) return {};
      const ld s = std::pow(w, ld(m));
      const cld t = s * e;
      const cld z = std::exp(-std::pow(s, a) * ea + cld(0, 1) * u * t) * e * (m * std::pow(w, ld(m - 1)));
      return {z, cld(0, 1) * t * z, -t * t * z};
    };
    const Acc r = simpson(f, 0, w_end, 400000);
    d.psi = r.p.real() / kPi;
    d.dpsi = r.d.real() / kPi;
    d.d2psi = r.dd.real() / kPi;
  }
  d.psi /= sigma;
  d.dpsi *= sign / (ld(sigma) * sigma);
  d.d2psi /= ld(sigma) * sigma * sigma;
  return d;
}

// Direct cosine integral on a fine uniform grid (unit scale).
inline ld brute_cosine_density(double alpha, double x, ld step = 2e-5L) {
  ld t_end = 1;
  while (std::exp(-std::pow(t_end, ld(alpha))) > 1e-22L) t_end *= 1.2L;
  const long n = static_cast<long>(t_end / step);
  return simpson([&](ld t) { return std::exp(-std::pow(t, ld(alpha))) * std::cos(t * ld(x)); }, 0, t_end, n) / kPi;
}

inline ld cauchy_cdf(ld x) { return std::atan(x) / kPi + 0.5L; }

// Modified Bessel I_nu(z) by its power series in long double.
inline ld bessel_i(ld nu, ld z) {
  ld term = std::pow(z / 2, nu) / std::tgamma(nu + 1);
  ld sum = term;
  for (int k = 1; k < 2000; ++k) {
    term *= (z / 2) * (z / 2) / (k * (k + nu));
    sum += term;
    if (std::fabs(term) < 1e-22L * std::fabs(sum)) break;
  }
  return sum;
}

// Gaussian-KE drift in the Bessel forms available for alpha = 1/2 and 3/2.
inline ld drift_bessel_half(ld v) {
  const ld h = v * v / 4;
  return std::pow(2.0L, 0.75L) * v / std::sqrt(kPi) * std::tgamma(0.75L) * std::tgamma(1.25L) *
         std::pow(v * v / 2, -0.25L) * std::exp(h) * bessel_i(0.25L, h);
}

inline ld drift_bessel_three_halves(ld v) {
  const ld h = v * v / 4;
  return std::pow(2.0L, 0.25L) * v / std::sqrt(kPi) * std::tgamma(1.25L) * std::tgamma(0.75L) * std::exp(h) *
         std::pow(v * v / 2, 0.25L) * (bessel_i(-0.25L, h) - bessel_i(0.75L, h));
}

// 1F1(a; b; z) from the Euler integral
//   Gamma(b)/(Gamma(a)Gamma(b-a)) int_0^1 e^{zt} t^{a-1} (1-t)^{b-a-1} dt,
// 0 < a < b. Split at 1/2; each endpoint singularity is removed by a power
// substitution.
inline ld kummer_integral(ld a, ld b, ld z) {
  const ld c = b - a;
  // t in [0, 1/2]: t = w^{1/a}, dt = (1/a) w^{1/a - 1} dw, t^{a-1} dt = (1/a) dw.
  auto left = [&](ld w) {
    const ld t = std::pow(w, 1 / a);
    return std::exp(z * t) * std::pow(1 - t, c - 1) / a;
  };
  // t in [1/2, 1]: 1 - t = w^{1/c}, (1-t)^{c-1} dt = (1/c) dw.
  auto right = [&](ld w) {
    const ld t = 1 - std::pow(w, 1 / c);
    return std::exp(z * t) * std::pow(t, a - 1) / c;
  };
  const ld s = simpson(left, 0, std::pow(0.5L, a), 200000) + simpson(right, 0, std::pow(0.5L, c), 200000);
  return std::tgamma(b) / (std::tgamma(a) * std::tgamma(c)) * s;
}

// 1F1 by its raw power series in long double, `terms` terms.
inline ld kummer_series(ld a, ld b, ld z, int terms = 200) {
  ld term = 1, sum = 1;
  for (int n = 0; n < terms; ++n) {
    term *= (a + n) / (b + n) * z / (n + 1);
    sum += term;
  }
  return sum;
}

}  // namespace oracle
