#include "fuld/stable.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fuld/error.hpp"
#include "fuld/quadrature.hpp"

namespace fuld {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxSeriesTerms = 400;

// psi, psi', psi'' packed for vector-valued quadrature.
using Triple = Eigen::Array3d;

// Upper end of the cosine integral: exp(-T^alpha) * max(1, T^2) < 1e-18.
double integration_limit(double alpha) {
  double t = std::pow(42.0, 1.0 / alpha);
  for (int i = 0; i < 4; ++i) t = std::pow(42.0 + 2.0 * std::log(std::max(t, 1.0)), 1.0 / alpha);
  return t;
}

// Unit-scale quadrature at u >= 0.
Triple unit_quadrature(double alpha, double u) {
  const double limit = integration_limit(alpha);
  std::vector<double> breaks{0.0};
  // Geometric refinement toward t = 0, where t^alpha has a cusp for alpha < 1.
  for (double b = 1.0 / 64.0; b < std::min(limit, 4.0); b *= 2.0) breaks.push_back(b);
  if (u > 0.0) {
    // Panels aligned with the zeros of cos(t u).
    const double period = kPi / u;
    for (double z = 0.5 * period; z < limit; z += period) {
      if (z > breaks.back()) breaks.push_back(z);
    }
  }
  if (breaks.back() < limit) breaks.push_back(limit);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  auto integrand = [alpha, u](double t) -> Triple {
    const double envelope = std::exp(-std::pow(t, alpha));
    const double c = std::cos(t * u);
    const double s = std::sin(t * u);
    return Triple(envelope * c, -t * envelope * s, -t * t * envelope * c);
  };
  QuadratureTolerance tol;
  tol.absolute = 1e-17;
  tol.relative = 1e-14;
  tol.max_panels = 4000000;
  const auto r = integrate_panels<Triple>(integrand, breaks, tol);
  return r.value / kPi;
}

// Magnitude of the n-th series coefficient without its sine factor,
// Gamma(1 + alpha n)/n! u^{-alpha n - 1} / pi, in log form.
double log_term_bound(double alpha, int n, double u) {
  return std::lgamma(1.0 + alpha * n) - std::lgamma(n + 1.0) - (alpha * n + 1.0) * std::log(u) -
         std::log(kPi);
}

struct SeriesSums {
  Triple sum = Triple::Zero();
  Triple next_bound = Triple::Zero();
  int terms = 0;
};

void add_term(double alpha, int n, double u, SeriesSums& s) {
  const double an = alpha * n;
  const double sign = (n % 2 == 1) ? 1.0 : -1.0;
  const double magnitude = std::exp(log_term_bound(alpha, n, u));
  const double term = sign * magnitude * std::sin(0.5 * kPi * an);
  s.sum += Triple(term, -term * (an + 1.0) / u, term * (an + 1.0) * (an + 2.0) / (u * u));
  s.terms = n;
}

Triple bound_of(double alpha, int n, double u) {
  const double an = alpha * n;
  const double m = std::exp(log_term_bound(alpha, n, u));
  return Triple(m, m * (an + 1.0) / u, m * (an + 1.0) * (an + 2.0) / (u * u));
}

// Sums the unit-scale series until every component's first omitted term is
// below kTailTolerance relative. Returns false when the terms stop
// decreasing before that happens (asymptotic regime exhausted).
bool auto_series(double alpha, double u, Triple& out) {
  SeriesSums s;
  double previous = log_term_bound(alpha, 1, u);
  for (int n = 1; n <= kMaxSeriesTerms; ++n) {
    add_term(alpha, n, u, s);
    const double next = log_term_bound(alpha, n + 1, u);
    const Triple bound = bound_of(alpha, n + 1, u);
    if ((bound <= kTailTolerance * s.sum.abs()).all()) {
      out = s.sum;
      return true;
    }
    if (next > previous) return false;
    previous = next;
  }
  return false;
}

DensityEval rescale(const AlphaStable& d, double x, const Triple& unit) {
  const double s = d.sigma;
  const double odd = (x < 0.0) ? -1.0 : 1.0;
  return {x, unit[0] / s, odd * unit[1] / (s * s), unit[2] / (s * s * s)};
}

}  // namespace

AlphaStable::AlphaStable(double alpha_, double sigma_) : alpha(alpha_), sigma(sigma_) {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    throw DomainError("AlphaStable: alpha must lie in (0, 2], got " + std::to_string(alpha));
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DomainError("AlphaStable: sigma must be positive, got " + std::to_string(sigma));
  }
}

double AlphaStable::characteristic(double omega) const {
  return std::exp(-std::pow(sigma * std::abs(omega), alpha));
}

double sample_one(const AlphaStable& dist, RandomStream& rng) {
  const double v = rng.uniform(-0.5 * kPi, 0.5 * kPi);
  if (dist.alpha == 1.0) return dist.sigma * std::tan(v);
  const double w = rng.exponential();
  const double a = dist.alpha;
  const double x = std::sin(a * v) / std::pow(std::cos(v), 1.0 / a) *
                   std::pow(std::cos((1.0 - a) * v) / w, (1.0 - a) / a);
  return dist.sigma * x;
}

Eigen::VectorXd sample(const AlphaStable& dist, std::size_t n, RandomStream& rng) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for (auto& x : out) x = sample_one(dist, rng);
  return out;
}

DensityRegime density_regime(const AlphaStable& dist, double x) {
  const double u = std::abs(x) / dist.sigma;
  if (dist.alpha == 2.0) return DensityRegime::closed_form;
  if (u <= kTailSwitch) return DensityRegime::quadrature;
  Triple unused;
  return auto_series(dist.alpha, u, unused) ? DensityRegime::tail_series : DensityRegime::quadrature;
}

DensityEval density(const AlphaStable& dist, double x) {
  if (!std::isfinite(x)) throw DomainError("density: x must be finite");
  const double u = std::abs(x) / dist.sigma;
  if (dist.alpha == 2.0) {
    // N(0, 2): the cosine integral has a closed form, and quadrature would
    // only add rounding noise to the exp(-u^2/4) tail.
    const double psi = std::exp(-0.25 * u * u) / (2.0 * std::sqrt(kPi));
    return rescale(dist, x, Triple(psi, -0.5 * u * psi, (0.25 * u * u - 0.5) * psi));
  }
  if (u > kTailSwitch) {
    Triple unit;
    if (auto_series(dist.alpha, u, unit)) return rescale(dist, x, unit);
  }
  return rescale(dist, x, unit_quadrature(dist.alpha, u));
}

DensityEval density_quadrature(const AlphaStable& dist, double x) {
  if (!std::isfinite(x)) throw DomainError("density: x must be finite");
  return rescale(dist, x, unit_quadrature(dist.alpha, std::abs(x) / dist.sigma));
}

TailSeries tail_series(const AlphaStable& dist, double x, int terms) {
  if (dist.alpha == 2.0) throw DomainError("tail_series: the expansion vanishes identically at alpha = 2");
  if (terms < 1) throw DomainError("tail_series: need at least one term");
  const double u = std::abs(x) / dist.sigma;
  if (!(u > 0.0) || !std::isfinite(u)) throw RegimeError("tail_series: x must be finite and nonzero");
  double previous = log_term_bound(dist.alpha, 1, u);
  for (int n = 1; n <= terms; ++n) {
    const double next = log_term_bound(dist.alpha, n + 1, u);
    if (!(next < previous)) {
      throw RegimeError("tail_series: |x|/sigma = " + std::to_string(u) +
                        " is below the validity threshold for " + std::to_string(terms) + " terms");
    }
    previous = next;
  }
  SeriesSums s;
  for (int n = 1; n <= terms; ++n) add_term(dist.alpha, n, u, s);
  const auto eval = rescale(dist, x, s.sum);
  return {eval.psi, eval.dpsi, eval.d2psi, std::exp(previous) / dist.sigma, terms};
}

double verify_switchover(const AlphaStable& dist, double tolerance) {
  if (dist.alpha == 2.0) return std::numeric_limits<double>::infinity();
  // First unit-scale abscissa past kTailSwitch where the series is accepted.
  double u = kTailSwitch * (1.0 + 1e-9);
  Triple series;
  while (!auto_series(dist.alpha, u, series)) {
    u *= 1.05;
    if (u > 1e6) throw NonConvergenceError("verify_switchover: series never reaches tolerance");
  }
  const Triple quad = unit_quadrature(dist.alpha, u);
  const double diff = (series - quad).abs().maxCoeff();
  if (!(diff <= tolerance)) {
    throw NonConvergenceError("density: quadrature and tail series disagree by " + std::to_string(diff) +
                              " at |x|/sigma = " + std::to_string(u));
  }
  return u;
}

StableCdf::StableCdf(const AlphaStable& dist, double range_over_sigma, double step_over_sigma)
    : dist_(dist), step_(step_over_sigma), range_(range_over_sigma) {
  const auto n = static_cast<std::size_t>(std::ceil(range_ / step_));
  range_ = static_cast<double>(n) * step_;
  const AlphaStable unit(dist.alpha, 1.0);
  cumulative_.assign(n + 1, 0.0);
  double prev = density(unit, 0.0).psi;
  for (std::size_t i = 1; i <= n; ++i) {
    const double cur = density(unit, static_cast<double>(i) * step_).psi;
    cumulative_[i] = cumulative_[i - 1] + 0.5 * step_ * (prev + cur);
    prev = cur;
  }
  tail_mass_ = tail_beyond(range_);
}

double StableCdf::tail_beyond(double u) const {
  const double a = dist_.alpha;
  if (a == 2.0) return 0.5 * std::erfc(u / 2.0);
  return std::tgamma(1.0 + a) * std::sin(0.5 * kPi * a) / (kPi * a) * std::pow(u, -a);
}

double StableCdf::operator()(double x) const {
  const double u = std::abs(x) / dist_.sigma;
  double upper;  // P(0 < X/sigma <= u)
  if (u >= range_) {
    upper = cumulative_.back() + tail_mass_ - tail_beyond(u);
  } else {
    const double pos = u / step_;
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    upper = cumulative_[i] + frac * (cumulative_[std::min(i + 1, cumulative_.size() - 1)] - cumulative_[i]);
  }
  const double half = cumulative_.back() + tail_mass_;
  // Normalize so that F(+inf) = 1 exactly.
  const double f = 0.5 * upper / half;
  return x >= 0.0 ? 0.5 + f : 0.5 - f;
}

}  // namespace fuld
