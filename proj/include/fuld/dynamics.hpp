#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "fuld/kinetic.hpp"
#include "fuld/potential.hpp"

namespace fuld {

inline constexpr double kDivergenceThreshold = 1e12;

struct PhaseState {
  Eigen::VectorXd x;
  Eigen::VectorXd v;
  std::int64_t k = 0;
};

// eta_k = eta0 (constant) or eta0 / (1 + k)^rho (polynomial, 0 <= rho < 1).
struct StepSchedule {
  enum class Kind { constant, polynomial };
  Kind kind = Kind::constant;
  double eta0 = 0.01;
  double rho = 0.0;

  static StepSchedule constant(double eta) { return {Kind::constant, eta, 0.0}; }
  static StepSchedule polynomial(double eta0, double rho) { return {Kind::polynomial, eta0, rho}; }

  double eta(std::int64_t k) const {
    return kind == Kind::constant ? eta0 : eta0 / std::pow(1.0 + static_cast<double>(k), rho);
  }
  void validate() const;
};

enum class Integrator { fuld, ud, overdamped };

// Velocity-side kinetic model: the SaS kinetic-energy table, or the
// Gaussian kinetic energy whose corrected drift is gaussian_ke_drift().
struct Kinetic {
  std::shared_ptr<const KineticTable> table;
  bool gaussian_ke = false;

  static Kinetic from_table(std::shared_ptr<const KineticTable> t) { return {std::move(t), false}; }
  static Kinetic gaussian() { return {nullptr, true}; }
};

struct SimConfig {
  Integrator integrator = Integrator::fuld;
  double gamma = 10.0;
  double beta = 1.0;
  double alpha = 1.0;
  StepSchedule schedule;
  Kinetic kinetic;
  Potential potential = quartic_well();
  std::uint64_t seed = 1;
  std::int64_t iterations = 50000;
  // Empty means the origin.
  Eigen::VectorXd x0;
  Eigen::VectorXd v0;
  // Record every `record_stride`-th state (the initial state is always recorded).
  std::int64_t record_stride = 1;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// One Euler step of the corrected dynamics:
//   v' = (1 - gamma eta) v - eta grad f(x) + (eta gamma / beta)^{1/alpha} s
//   x' = x + eta grad G(v')
// With the Gaussian kinetic energy the friction term becomes
// -eta gamma c(v, alpha) and the position update uses v' directly.
PhaseState fuld_step(const PhaseState& state, const SimConfig& cfg, const Eigen::VectorXd& noise);

// Uncorrected dynamics: noise scale ((2 gamma / beta) eta)^{1/alpha}, x' = x + eta v'.
PhaseState ud_step(const PhaseState& state, const SimConfig& cfg, const Eigen::VectorXd& noise);

// Gamma(alpha - 1) / Gamma(alpha / 2)^2; DomainError for alpha <= 1.
double overdamped_coefficient(double alpha);

// x' = x - eta c_alpha grad f(x) + eta^{1/alpha} beta^{-1/alpha} s at step index k.
Eigen::VectorXd overdamped_step(const Eigen::VectorXd& x, const SimConfig& cfg, const Eigen::VectorXd& noise,
                                std::int64_t k = 0);

struct SimSummary {
  std::int64_t steps = 0;
  bool diverged = false;
  std::int64_t divergence_index = -1;
  double wall_seconds = 0.0;
  double max_abs_x = 0.0;
  // max_k ||x^{k+1} - x^k||_inf and the same divided by eta_k.
  double max_step = 0.0;
  double max_step_over_eta = 0.0;
};

using Recorder = std::function<void(const PhaseState&)>;

// Runs cfg.iterations steps of trajectory `index` (its noise stream is
// RandomStream::for_trajectory(cfg.seed, index)). A divergence stops the run
// and is reported in the summary, not thrown.
SimSummary simulate(const SimConfig& cfg, const Recorder& recorder, std::uint64_t index = 0);

struct Trajectory {
  std::uint64_t id = 0;
  int dim = 1;
  std::vector<std::int64_t> k;
  std::vector<double> x;  // records * dim, row-major
  std::vector<double> v;
  SimSummary summary;

  std::size_t records() const { return k.size(); }
  Eigen::Map<const Eigen::VectorXd> position(std::size_t r) const {
    return {x.data() + r * static_cast<std::size_t>(dim), dim};
  }
};

// Trajectories 0..count-1 on up to `threads` workers; the result order and
// contents are independent of the thread count.
std::vector<Trajectory> simulate_ensemble(const SimConfig& cfg, std::size_t count, unsigned threads = 0);

void write_trajectories_csv(const std::vector<Trajectory>& runs, const std::filesystem::path& path);
void write_trajectories_binary(const std::vector<Trajectory>& runs, const std::filesystem::path& path);
std::vector<Trajectory> read_trajectories_binary(const std::filesystem::path& path);

struct FieldSample {
  double x, v;
  double ham_x, ham_v;    // Hamiltonian part
  double diss_x, diss_v;  // dissipative part
  double total_x, total_v;
  bool overflow = false;  // Gaussian-KE drift overflowed at this node
};

// Phase-plane vector field of the conformal Hamiltonian system for a 1-D
// potential over the grid xs x vs (x fastest). SaS kinetic energy:
// Hamiltonian (g'(v), -f'(x)), dissipative (0, -gamma v). Gaussian kinetic
// energy: Hamiltonian (v, -f'(x)), dissipative (0, -gamma c(v, alpha)).
std::vector<FieldSample> conformal_field(const Potential& potential, const Kinetic& kinetic, double gamma,
                                         double alpha, const Eigen::VectorXd& xs, const Eigen::VectorXd& vs);

}  // namespace fuld
