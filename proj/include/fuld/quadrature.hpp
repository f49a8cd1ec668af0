#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "fuld/error.hpp"

namespace fuld {

namespace detail {

inline double magnitude(double v) { return std::abs(v); }

template <typename Derived>
double magnitude(const Eigen::ArrayBase<Derived>& v) {
  return v.abs().maxCoeff();
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename T>
struct Panel {
  double a;
  double b;
  T value;
  double error;
  double floor;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <typename T, typename F>
Panel<T> gauss_kronrod_15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const T fc = f(center);
  T kronrod = fc * kKronrodWeights[7];
  T gauss = fc * kGaussWeights[3];
  double absolute = magnitude(fc) * kKronrodWeights[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const T f1 = f(center - dx);
    const T f2 = f(center + dx);
    const T fsum = f1 + f2;
    kronrod += fsum * kKronrodWeights[j];
    absolute += (magnitude(f1) + magnitude(f2)) * kKronrodWeights[j];
    if (j % 2 == 1) gauss += fsum * kGaussWeights[j / 2];
  }
  T value = kronrod * half;
  double error = magnitude(T((kronrod - gauss) * half));
  // Panels whose estimate is at the rounding floor cannot be improved.
  const double floor = 50.0 * std::numeric_limits<double>::epsilon() * absolute * std::abs(half);
  if (error <= floor) error = 0.0;
  return {a, b, std::move(value), error, floor};
}

}  // namespace detail

template <typename T>
struct QuadratureResult {
  T value;
  double error;
  int panels;
};

struct QuadratureTolerance {
  double absolute = 1e-14;
  double relative = 1e-12;
  int max_panels = 200000;
};

// Globally adaptive Gauss-Kronrod integration over the consecutive panels
// [breaks[i], breaks[i+1]]. The panel with the largest error estimate is
// bisected until the summed estimate meets max(absolute, relative*|value|).
// T is double or a fixed-size Eigen array (vector-valued integrands).
template <typename T, typename F>
QuadratureResult<T> integrate_panels(F&& f, std::span<const double> breaks,
                                     const QuadratureTolerance& tol = {}) {
  if (breaks.size() < 2) throw DomainError("integrate_panels: need at least two breakpoints");
  std::priority_queue<detail::Panel<T>> heap;
  const T zero = T(f(breaks[0])) * 0.0;
  T total = zero;
  double total_error = 0.0;
  // Summed rounding floors: heavy cancellation (|integral| << integral of
  // |f|) caps the attainable accuracy there.
  double total_floor = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    auto p = detail::gauss_kronrod_15<T>(f, breaks[i], breaks[i + 1]);
    total += p.value;
    total_error += p.error;
    total_floor += p.floor;
    heap.push(std::move(p));
  }
  int panels = static_cast<int>(heap.size());
  auto target = [&] {
    return std::max({tol.absolute, tol.relative * detail::magnitude(total), total_floor});
  };
  while (total_error > target()) {
    if (panels >= tol.max_panels) {
      char msg[128];
      std::snprintf(msg, sizeof msg, "integrate_panels: panel budget exhausted (error %.3e, target %.3e)",
                    total_error, target());
      throw NonConvergenceError(msg);
    }
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    auto left = detail::gauss_kronrod_15<T>(f, worst.a, mid);
    auto right = detail::gauss_kronrod_15<T>(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    total_floor += left.floor + right.floor - worst.floor;
    heap.push(std::move(left));
    heap.push(std::move(right));
    ++panels;
  }
  // Re-sum to shed the drift accumulated by incremental updates.
  T exact = zero;
  double err = 0.0;
  while (!heap.empty()) {
    exact += heap.top().value;
    err += heap.top().error + heap.top().floor;
    heap.pop();
  }
  return {exact, err, panels};
}

template <typename T, typename F>
QuadratureResult<T> integrate(F&& f, double a, double b, const QuadratureTolerance& tol = {}) {
  const double breaks[2] = {a, b};
  return integrate_panels<T>(std::forward<F>(f), std::span<const double>(breaks, 2), tol);
}

}  // namespace fuld
