#include "fuld/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fuld/error.hpp"
#include "fuld/quadrature.hpp"

namespace fuld {

EmpiricalMeasure::EmpiricalMeasure(Eigen::VectorXd e) : edges(std::move(e)) {
  if (edges.size() < 2) throw DomainError("histogram needs at least two edges");
  for (Eigen::Index i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw DomainError("histogram edges must be strictly increasing");
  }
  weights = Eigen::VectorXd::Zero(edges.size() - 1);
}

Eigen::VectorXd EmpiricalMeasure::centers() const {
  return 0.5 * (edges.head(bins()) + edges.tail(bins()));
}

void EmpiricalMeasure::add(double x, double w) {
  if (!(x >= edges[0])) {
    underflow += w;  // also catches NaN
    return;
  }
  if (x >= edges[bins()]) {
    overflow += w;
    return;
  }
  auto it = std::upper_bound(edges.data(), edges.data() + edges.size(), x);
  weights[(it - edges.data()) - 1] += w;
}

void EmpiricalMeasure::merge(const EmpiricalMeasure& other) {
  if (other.edges.size() != edges.size() || other.edges != edges) throw DomainError("merge: bin edges differ");
  weights += other.weights;
  underflow += other.underflow;
  overflow += other.overflow;
}

double EmpiricalMeasure::outside_fraction() const {
  const double t = total();
  return t > 0.0 ? (underflow + overflow) / t : 0.0;
}

Eigen::VectorXd EmpiricalMeasure::probabilities() const {
  Eigen::VectorXd p(bins() + 2);
  p[0] = underflow;
  p.segment(1, bins()) = weights;
  p[bins() + 1] = overflow;
  const double t = total();
  if (t > 0.0) p /= t;
  return p;
}

Eigen::VectorXd uniform_edges(double lo, double hi, Eigen::Index bins) {
  if (bins < 1 || !(hi > lo)) throw DomainError("uniform_edges: need hi > lo and bins >= 1");
  return Eigen::VectorXd::LinSpaced(bins + 1, lo, hi);
}

EmpiricalMeasure histogram(const std::vector<Trajectory>& runs, const StepSchedule& schedule,
                           const Eigen::VectorXd& edges, int coordinate) {
  EmpiricalMeasure m(edges);
  for (const auto& t : runs) {
    if (coordinate < 0 || coordinate >= t.dim) throw DomainError("histogram: coordinate out of range");
    for (std::size_t r = 0; r < t.records(); ++r) {
      m.add(t.x[r * static_cast<std::size_t>(t.dim) + static_cast<std::size_t>(coordinate)], schedule.eta(t.k[r]));
    }
  }
  return m;
}

EmpiricalMeasure histogram(const Eigen::VectorXd& samples, const Eigen::VectorXd& weights,
                           const Eigen::VectorXd& edges) {
  if (weights.size() != samples.size()) throw DomainError("histogram: weights and samples differ in length");
  EmpiricalMeasure m(edges);
  for (Eigen::Index i = 0; i < samples.size(); ++i) m.add(samples[i], weights[i]);
  return m;
}

double ergodic_average(const std::vector<Trajectory>& runs, const StepSchedule& schedule, const TestFunction& h) {
  ErgodicAccumulator acc(schedule, h);
  PhaseState s;
  for (const auto& t : runs) {
    for (std::size_t r = 0; r < t.records(); ++r) {
      s.x = t.position(r);
      s.k = t.k[r];
      acc.add(s);
    }
  }
  if (!(acc.weight() > 0.0)) throw DomainError("ergodic_average: empty trajectory");
  return acc.value();
}

void ErgodicAccumulator::add(const PhaseState& s) {
  const double w = schedule_.eta(s.k);
  sum_ += w * h_(s.x);
  weight_ += w;
}

GibbsTarget::GibbsTarget(const Potential& potential, double beta) : potential_(potential), beta_(beta) {
  if (potential.dim != 1) throw DomainError("GibbsTarget: one-dimensional potentials only");
  if (!(beta > 0.0)) throw DomainError("GibbsTarget: beta must be positive");
  Eigen::VectorXd p(1);
  auto f = [&](double x) {
    p[0] = x;
    return potential_.value(p);
  };
  // Locate the minimum on a coarse scan so the integrand peaks at 1.
  shift_ = std::numeric_limits<double>::infinity();
  for (int i = -2000; i <= 2000; ++i) shift_ = std::min(shift_, f(0.005 * i));
  double peak = 0.0;
  for (int i = -2000; i <= 2000; ++i) peak = std::max(peak, unnormalized(0.005 * i));
  half_width_ = 1.0;
  while (std::max(unnormalized(half_width_), unnormalized(-half_width_)) >= 1e-14 * peak) {
    half_width_ *= 2.0;
    if (half_width_ > 1e12) throw NonConvergenceError("GibbsTarget: integrand does not decay");
  }
  z_ = 1.0;
  z_ = mass(-half_width_, half_width_);
}

double GibbsTarget::unnormalized(double x) const {
  Eigen::VectorXd p(1);
  p[0] = x;
  return std::exp(-beta_ * (potential_.value(p) - shift_));
}

double GibbsTarget::density(double x) const { return unnormalized(x) / z_; }

double GibbsTarget::mass(double lo, double hi) const {
  lo = std::max(lo, -half_width_);
  hi = std::min(hi, half_width_);
  if (!(hi > lo)) return 0.0;
  // Breaks at powers of two keep panels well scaled over long ranges.
  std::vector<double> breaks{lo};
  for (double b = 1.0; b < half_width_; b *= 2.0) {
    for (double c : {-b, b}) {
      if (c > lo && c < hi) breaks.push_back(c);
    }
  }
  if (0.0 > lo && 0.0 < hi) breaks.push_back(0.0);
  breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  QuadratureTolerance tol;
  tol.absolute = 1e-15;
  tol.relative = 1e-12;
  return integrate_panels<double>([this](double x) { return unnormalized(x); }, breaks, tol).value / z_;
}

Eigen::VectorXd GibbsTarget::bin_probabilities(const Eigen::VectorXd& edges) const {
  const Eigen::Index n = edges.size() - 1;
  Eigen::VectorXd q(n + 2);
  q[0] = mass(-half_width_, edges[0]);
  for (Eigen::Index i = 0; i < n; ++i) q[i + 1] = mass(edges[i], edges[i + 1]);
  q[n + 1] = mass(edges[n], half_width_);
  return q;
}

double GibbsTarget::expectation(const std::function<double(double)>& h) const {
  std::vector<double> breaks;
  for (double b = half_width_; b >= 1.0; b /= 2.0) breaks.push_back(-b);
  breaks.push_back(0.0);
  for (double b = 1.0; b <= half_width_; b *= 2.0) breaks.push_back(b);
  QuadratureTolerance tol;
  tol.absolute = 1e-15;
  tol.relative = 1e-12;
  return integrate_panels<double>([&](double x) { return h(x) * unnormalized(x); }, breaks, tol).value / z_;
}

double GibbsTarget::cdf(double x) const { return mass(-half_width_, x); }

double tv_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw DomainError("tv_distance: bin layouts differ");
  return 0.5 * (p - q).cwiseAbs().sum();
}

double tv_distance(const EmpiricalMeasure& m, const GibbsTarget& t) {
  return tv_distance(m.probabilities(), t.bin_probabilities(m.edges));
}

double tv_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.edges.size() != b.edges.size() || a.edges != b.edges) throw DomainError("tv_distance: bin edges differ");
  return tv_distance(a.probabilities(), b.probabilities());
}

std::vector<double> modes(const Eigen::VectorXd& centers, const Eigen::VectorXd& weights, double min_prominence) {
  const Eigen::Index n = weights.size();
  if (centers.size() != n) throw DomainError("modes: centers and weights differ in length");
  if (n == 0) return {};
  Eigen::VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - 2), hi = std::min<Eigen::Index>(n - 1, i + 2);
    s[i] = weights.segment(lo, hi - lo + 1).mean();
  }
  const double top = s.maxCoeff();
  if (!(top > 0.0)) return {};
  std::vector<double> out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool left_ok = i == 0 || s[i - 1] < s[i];
    const bool right_ok = i == n - 1 || s[i + 1] <= s[i];
    if (!left_ok || !right_ok) continue;
    double left_min = s[i], right_min = s[i];
    for (Eigen::Index j = i - 1; j >= 0 && s[j] <= s[i]; --j) left_min = std::min(left_min, s[j]);
    for (Eigen::Index j = i + 1; j < n && s[j] <= s[i]; ++j) right_min = std::min(right_min, s[j]);
    if (s[i] - std::max(left_min, right_min) >= min_prominence * top) out.push_back(centers[i]);
  }
  return out;
}

std::vector<double> modes(const EmpiricalMeasure& m, double min_prominence) {
  return modes(m.centers(), m.weights, min_prominence);
}

double ks_statistic(Eigen::VectorXd samples, const std::function<double(double)>& cdf) {
  const Eigen::Index n = samples.size();
  if (n < 100) throw DomainError("ks_statistic needs at least 100 samples");
  std::sort(samples.data(), samples.data() + n);
  double d = 0.0;
  const double nn = static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / nn - f, f - static_cast<double>(i) / nn});
  }
  return d;
}

}  // namespace fuld
