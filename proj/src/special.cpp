#include "fuld/special.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "fuld/error.hpp"

namespace fuld {

namespace {

constexpr int kMaxKummerTerms = 500;
constexpr double kKummerStop = 1e-16;

double kummer_series(double a, double b, double z) {
  double term = 1.0;
  double sum = 1.0;
  for (int n = 0; n < kMaxKummerTerms; ++n) {
    term *= (a + n) / (b + n) * z / (n + 1.0);
    sum += term;
    if (!std::isfinite(sum)) throw OverflowError("kummer_1f1: series overflow at z = " + std::to_string(z));
    if (term == 0.0 || std::abs(term) < kKummerStop * std::abs(sum)) return sum;
  }
  throw NonConvergenceError("kummer_1f1: series did not converge within 500 terms at z = " + std::to_string(z));
}

bool is_nonpositive_integer(double b) { return b <= 0.0 && b == std::floor(b); }

}  // namespace

double gamma_fn(double x) {
  const double g = std::tgamma(x);
  if (!std::isfinite(g)) throw OverflowError("gamma_fn: not finite at x = " + std::to_string(x));
  return g;
}

double kummer_1f1(double a, double b, double z) {
  if (is_nonpositive_integer(b)) throw DomainError("kummer_1f1: b must not be a non-positive integer");
  if (z == 0.0 || a == 0.0) return 1.0;
  if (z > 0.0) return kummer_series(a, b, z);
  const double scale = std::exp(z);
  const double result = scale * kummer_series(b - a, b, -z);
  if (!std::isfinite(result)) throw OverflowError("kummer_1f1: result overflow");
  return result;
}

double gaussian_ke_drift(double v, double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("gaussian_ke_drift: alpha must lie in (0, 2]");
  if (!std::isfinite(v)) throw DomainError("gaussian_ke_drift: v must be finite");
  if (v == 0.0) return 0.0;
  const double prefactor = std::pow(2.0, 0.5 * alpha) / std::sqrt(std::numbers::pi) * gamma_fn(0.5 * (alpha + 1.0));
  const double value = prefactor * v * kummer_1f1(0.5 * (2.0 - alpha), 1.5, 0.5 * v * v);
  if (!std::isfinite(value)) throw OverflowError("gaussian_ke_drift: overflow at v = " + std::to_string(v));
  return value;
}

GridFunction::GridFunction(double origin_, double spacing_, Eigen::VectorXd values_, bool periodic_)
    : origin(origin_), spacing(spacing_), values(std::move(values_)), periodic(periodic_) {
  const auto n = values.size();
  if (n < 2 || (n & (n - 1)) != 0) throw DomainError("GridFunction: size must be a power of two >= 2");
  if (!(spacing > 0.0)) throw DomainError("GridFunction: spacing must be positive");
  if (!values.allFinite()) throw DomainError("GridFunction: values must be finite");
}

GridFunction riesz_derivative(const GridFunction& f, double order) {
  if (!(order > -2.0 && order <= 2.0)) throw DomainError("riesz_derivative: order must lie in (-2, 2]");
  const Eigen::Index n = f.size();
  const double peak = f.values.cwiseAbs().maxCoeff();
  if (!f.periodic && peak > 0.0) {
    const double edge = std::max(std::abs(f.values[0]), std::abs(f.values[n - 1]));
    if (edge > kRieszEdgeTolerance * peak) {
      throw DomainError("riesz_derivative: edge magnitude " + std::to_string(edge / peak) +
                        " of max|f| would wrap around");
    }
  }

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  std::vector<std::complex<double>> input(f.values.data(), f.values.data() + n);
  fft.fwd(spectrum, input);

  const double base = 2.0 * std::numbers::pi / (static_cast<double>(n) * f.spacing);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index signed_k = (k <= n / 2) ? k : k - n;
    const double omega = base * static_cast<double>(std::abs(signed_k));
    double multiplier;
    if (order == 0.0) {
      multiplier = 1.0;
    } else if (omega == 0.0) {
      multiplier = 0.0;
    } else {
      multiplier = std::pow(omega, order);
    }
    spectrum[static_cast<std::size_t>(k)] *= multiplier;
  }

  std::vector<std::complex<double>> output;
  fft.inv(output, spectrum);

  Eigen::VectorXd real(n);
  double imag = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    real[i] = output[static_cast<std::size_t>(i)].real();
    imag = std::max(imag, std::abs(output[static_cast<std::size_t>(i)].imag()));
  }
  const double scale = std::max(1.0, real.cwiseAbs().maxCoeff());
  if (imag > kRieszImagTolerance * scale) {
    throw NumericalError("riesz_derivative: imaginary residue " + std::to_string(imag));
  }
  return GridFunction(f.origin, f.spacing, std::move(real), f.periodic);
}

}  // namespace fuld
