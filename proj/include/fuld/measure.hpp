#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

#include "fuld/dynamics.hpp"
#include "fuld/potential.hpp"

namespace fuld {

// Step-size-weighted 1-D histogram with underflow/overflow accumulators.
struct EmpiricalMeasure {
  Eigen::VectorXd edges;    // bins() + 1 strictly increasing edges
  Eigen::VectorXd weights;  // per-bin weight
  double underflow = 0.0;
  double overflow = 0.0;

  EmpiricalMeasure() = default;
  explicit EmpiricalMeasure(Eigen::VectorXd edges);

  Eigen::Index bins() const { return weights.size(); }
  Eigen::VectorXd centers() const;

  void add(double x, double weight);
  // Bin-by-bin sum; requires identical edges.
  void merge(const EmpiricalMeasure& other);

  // S_K: in-range plus out-of-range weight.
  double total() const { return weights.sum() + underflow + overflow; }
  double outside_fraction() const;
  bool overflow_warning() const { return outside_fraction() > 0.01; }

  // Per-bin mass normalized by total(): [underflow, bin_0..bin_{n-1}, overflow].
  Eigen::VectorXd probabilities() const;
};

Eigen::VectorXd uniform_edges(double lo, double hi, Eigen::Index bins);

// Histogram of coordinate `coordinate` of every recorded state; state k
// carries weight eta_k.
EmpiricalMeasure histogram(const std::vector<Trajectory>& runs, const StepSchedule& schedule,
                           const Eigen::VectorXd& edges, int coordinate = 0);
EmpiricalMeasure histogram(const Eigen::VectorXd& samples, const Eigen::VectorXd& weights,
                           const Eigen::VectorXd& edges);

using TestFunction = std::function<double(const Eigen::VectorXd&)>;

// (1/S_K) sum eta_k h(x^k).
double ergodic_average(const std::vector<Trajectory>& runs, const StepSchedule& schedule, const TestFunction& h);

// Streaming form of ergodic_average for runs that are not stored.
class ErgodicAccumulator {
 public:
  ErgodicAccumulator(StepSchedule schedule, TestFunction h) : schedule_(schedule), h_(std::move(h)) {}
  void add(const PhaseState& s);
  double value() const { return sum_ / weight_; }
  double weight() const { return weight_; }

 private:
  StepSchedule schedule_;
  TestFunction h_;
  double sum_ = 0.0;
  double weight_ = 0.0;
};

// x-marginal of the Gibbs measure, density e^{-beta f(x)} / Z for 1-D f.
class GibbsTarget {
 public:
  GibbsTarget(const Potential& potential, double beta);

  double beta() const { return beta_; }
  double normalization() const { return z_; }       // Z of the shifted integrand
  double truncation() const { return half_width_; }  // L
  double density(double x) const;
  double mass(double lo, double hi) const;
  // Same layout as EmpiricalMeasure::probabilities().
  Eigen::VectorXd bin_probabilities(const Eigen::VectorXd& edges) const;
  double expectation(const std::function<double(double)>& h) const;
  double cdf(double x) const;

 private:
  double unnormalized(double x) const;

  Potential potential_;
  double beta_;
  double shift_ = 0.0;  // min f over the scan, keeps the integrand <= 1
  double half_width_ = 1.0;
  double z_ = 1.0;
};

// 1/2 sum |p - q| over bins and the two out-of-range cells.
double tv_distance(const EmpiricalMeasure& m, const GibbsTarget& t);
double tv_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
double tv_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// Bin centers of local maxima of the 5-bin moving average whose
// topographic prominence is at least min_prominence * (largest smoothed value).
std::vector<double> modes(const EmpiricalMeasure& m, double min_prominence = 0.05);
std::vector<double> modes(const Eigen::VectorXd& centers, const Eigen::VectorXd& weights,
                          double min_prominence = 0.05);

// sup |F_n - F|; DomainError below 100 samples.
double ks_statistic(Eigen::VectorXd samples, const std::function<double(double)>& cdf);

}  // namespace fuld
