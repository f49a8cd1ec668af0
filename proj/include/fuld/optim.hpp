#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "fuld/dynamics.hpp"
#include "fuld/kinetic.hpp"
#include "fuld/stable.hpp"

namespace fuld {

struct OptimState {
  Eigen::VectorXd x;
  Eigen::VectorXd v;
  std::int64_t k = 0;
  StepSchedule schedule;
  double gamma = 0.9;
  std::shared_ptr<const KineticTable> table;

  double alpha() const { return table->alpha; }
};

// v' = (1 - gamma eta_k) v - eta_k grad;  x' = x + eta_k grad G(v').
// Requires eta_k gamma <= 1 (equality gives the memoryless form).
OptimState fuld_sgdm_step(const OptimState& state, const Eigen::VectorXd& grad);

// x' = x + eta grad G(-eta grad).
Eigen::VectorXd clipped_sgd_step(const Eigen::VectorXd& x, const Eigen::VectorXd& grad, double eta,
                                 const KineticTable& table);

// M^{-1} grad with M = diag((grad_i^2 + 1) / 2); equals grad G_1(grad).
template <typename Derived>
Eigen::VectorXd natural_gradient_diag(const Eigen::MatrixBase<Derived>& grad) {
  const Eigen::ArrayXd g = grad.array();
  return (g / ((g.square() + 1.0) / 2.0)).matrix();
}

// Classical momentum recursion in the change-of-variables form
//   w' = mu w - lr grad,  x' = x + w'.
struct SgdmState {
  Eigen::VectorXd x;
  Eigen::VectorXd w;
};
SgdmState sgdm_step(const SgdmState& s, const Eigen::VectorXd& grad, double mu, double lr);

struct Dataset {
  Eigen::MatrixXd inputs;               // n x d_in
  std::vector<int> labels;              // n
  Eigen::Index size() const { return inputs.rows(); }
};

// Two Gaussian clusters at (+-separation/2, 0) with unit-free spread
// `spread`, labels 0/1, in alternating order.
Dataset two_clusters(Eigen::Index n, std::uint64_t seed, double separation = 4.0, double spread = 0.7);

// d_in -> w (tanh) -> c softmax classifier with cross-entropy loss. All
// parameters live in one flat vector: W1 (w x d_in, column-major), b1, W2
// (c x w, column-major), b2.
class TinyMlp {
 public:
  TinyMlp(int inputs = 2, int hidden = 16, int classes = 2);

  int inputs() const { return in_; }
  int hidden() const { return hidden_; }
  int classes() const { return classes_; }
  Eigen::Index parameter_count() const { return params_.size(); }

  const Eigen::VectorXd& parameters() const { return params_; }
  void set_parameters(const Eigen::VectorXd& p);
  // Scaled Gaussian initialization (1/sqrt(fan_in)), zero biases.
  void initialize(std::uint64_t seed);

  // Mean cross-entropy over the rows in `rows` (all rows when empty);
  // gradient written to *grad when given.
  double loss(const Dataset& data, const std::vector<Eigen::Index>& rows, Eigen::VectorXd* grad = nullptr) const;
  double accuracy(const Dataset& data) const;
  int predict(const Eigen::VectorXd& input) const;

 private:
  int in_, hidden_, classes_;
  Eigen::VectorXd params_;
};

struct TrainConfig {
  double alpha = 2.0;   // kinetic-energy tail index (2 = classical SGDm)
  double gamma = 4.0;
  StepSchedule schedule = StepSchedule::constant(0.05);
  std::int64_t epochs = 200;
  Eigen::Index batch_size = 32;
  std::uint64_t seed = 1;
  // Optional SaS gradient noise, scaled by (eta gamma / beta)^{1/alpha_noise}.
  std::optional<AlphaStable> noise;
  double noise_beta = 1.0;
};

struct EpochMetrics {
  std::int64_t iteration = 0;
  double train_loss = 0.0, train_acc = 0.0, test_loss = 0.0, test_acc = 0.0;
};

struct TrainReport {
  std::vector<EpochMetrics> history;  // entry 0 holds the initial metrics
  bool diverged = false;
  std::int64_t divergence_iteration = -1;
  double max_abs_param = 0.0;
  double max_step_over_eta = 0.0;
};

// Minibatch FULD-SGDm training (batches drawn without replacement per
// epoch). A non-finite loss or parameter stops training and is reported.
TrainReport train(TinyMlp& model, const Dataset& train_set, const Dataset& test_set, const TrainConfig& cfg,
                  std::shared_ptr<const KineticTable> table);

}  // namespace fuld
