#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstddef>
#include <vector>

#include "fuld/random.hpp"

namespace fuld {

// Symmetric alpha-stable law SaS(sigma): characteristic function
// exp(-sigma^alpha |w|^alpha), 0 < alpha <= 2, sigma > 0.
struct AlphaStable {
  double alpha;
  double sigma;

  AlphaStable(double alpha, double sigma = 1.0);

  double characteristic(double omega) const;
};

struct DensityEval {
  double x;
  double psi;
  double dpsi;
  double d2psi;
};

enum class DensityRegime { quadrature, tail_series, closed_form };

// Draws `n` i.i.d. variates with the Chambers-Mallows-Stuck transform.
Eigen::VectorXd sample(const AlphaStable& dist, std::size_t n, RandomStream& rng);
double sample_one(const AlphaStable& dist, RandomStream& rng);

// Density and its first two derivatives. Uses the large-|x| series when
// |x|/sigma > kTailSwitch and its truncation bound is below kTailTolerance
// (relative), otherwise the cosine-integral quadrature; alpha = 2 is the
// Gaussian closed form.
DensityEval density(const AlphaStable& dist, double x);

// Same as density() but with the regime forced; used for cross-checks.
DensityEval density_quadrature(const AlphaStable& dist, double x);

// Regime density() picks at x.
DensityRegime density_regime(const AlphaStable& dist, double x);

inline constexpr double kTailSwitch = 8.0;
inline constexpr double kTailTolerance = 1e-10;

struct TailSeries {
  double value;             // partial sum for psi
  double derivative;        // partial sum for psi'
  double second_derivative; // partial sum for psi''
  double truncation_bound;  // magnitude bound of the first omitted term of psi
  int terms;
};

// Partial sum of the large-x expansion
//   psi(x) = (1/pi) sum_n (-1)^{n+1}/n! Gamma(1+alpha n) sin(pi alpha n / 2) x^{-alpha n - 1}
// on the unit scale, rescaled by sigma. Throws DomainError for alpha = 2 and
// RegimeError when the first `terms + 1` term magnitudes are not decreasing.
TailSeries tail_series(const AlphaStable& dist, double x, int terms);

// Unit-scale abscissa at which the series and the quadrature hand over; the
// two regimes are checked against each other there (NonConvergenceError if
// they differ by more than `tolerance`).
double verify_switchover(const AlphaStable& dist, double tolerance = 1e-6);

// CDF obtained by integrating density() with the trapezoid rule on
// [-R, R] (R = range_over_sigma * sigma) and the leading-term tail mass
// beyond R.
class StableCdf {
 public:
  explicit StableCdf(const AlphaStable& dist, double range_over_sigma = 200.0,
                     double step_over_sigma = 0.01);

  double operator()(double x) const;

  // Trapezoid mass on [0, R] and analytic mass on (R, inf), unit scale.
  double core_half_mass() const { return cumulative_.back(); }
  double tail_mass() const { return tail_mass_; }
  double total_mass() const { return 2.0 * (core_half_mass() + tail_mass_); }

 private:
  double tail_beyond(double u) const;

  AlphaStable dist_;
  double step_;
  double range_;
  double tail_mass_;
  std::vector<double> cumulative_;
};

}  // namespace fuld
