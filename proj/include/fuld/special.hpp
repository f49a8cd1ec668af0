#pragma once

#include <Eigen/Core>

namespace fuld {

double gamma_fn(double x);

// Confluent hypergeometric 1F1(a; b; z) by its power series, using
// Kummer's transformation 1F1(a;b;z) = e^z 1F1(b-a;b;-z) for z < 0.
// Throws DomainError for b a non-positive integer, OverflowError when the
// result is not representable and NonConvergenceError past the term cap.
double kummer_1f1(double a, double b, double z);

// Velocity drift for the Gaussian kinetic energy,
//   c(v, alpha) = 2^{alpha/2} v / sqrt(pi) Gamma((alpha+1)/2) 1F1((2-alpha)/2; 3/2; v^2/2).
// Grows like exp(v^2/2) for alpha < 2; propagates OverflowError.
double gaussian_ke_drift(double v, double alpha);

template <typename Derived>
Eigen::VectorXd gaussian_ke_drift(const Eigen::MatrixBase<Derived>& v, double alpha) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = gaussian_ke_drift(v[i], alpha);
  return out;
}

// Samples of a function on the uniform grid origin + i*spacing,
// i = 0..n-1, with n a power of two. `periodic` marks samples of a
// periodic function over one period, which disables the edge-decay check.
struct GridFunction {
  double origin;
  double spacing;
  Eigen::VectorXd values;
  bool periodic = false;

  GridFunction(double origin, double spacing, Eigen::VectorXd values, bool periodic = false);

  // n points covering [lo, hi) with spacing (hi - lo)/n.
  template <typename F>
  static GridFunction sample(F&& f, double lo, double hi, Eigen::Index n, bool periodic = false) {
    const double h = (hi - lo) / static_cast<double>(n);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = f(lo + h * static_cast<double>(i));
    return GridFunction(lo, h, std::move(y), periodic);
  }

  Eigen::Index size() const { return values.size(); }
  double abscissa(Eigen::Index i) const { return origin + spacing * static_cast<double>(i); }
};

// Default Riesz grid: kRieszPoints samples on [-kRieszHalfWidth, kRieszHalfWidth).
inline constexpr Eigen::Index kRieszPoints = Eigen::Index{1} << 17;
inline constexpr double kRieszHalfWidth = 320.0;
inline constexpr double kRieszEdgeTolerance = 1e-6;
inline constexpr double kRieszImagTolerance = 1e-8;

// Spectral Riesz derivative F^{-1}{|w|^order F(f)} on the grid. The zero
// frequency is dropped for order != 0. Throws DomainError for order outside
// (-2, 2] or for non-periodic inputs whose edge magnitude exceeds
// kRieszEdgeTolerance * max|f|, and NumericalError when the inverse
// transform leaves an imaginary residue above kRieszImagTolerance.
GridFunction riesz_derivative(const GridFunction& f, double order);

}  // namespace fuld
