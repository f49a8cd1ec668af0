#include "fuld/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fuld/error.hpp"
#include "fuld/random.hpp"

namespace fuld {

OptimState fuld_sgdm_step(const OptimState& s, const Eigen::VectorXd& grad) {
  const double eta = s.schedule.eta(s.k);
  if (!(eta * s.gamma <= 1.0)) throw DomainError("fuld_sgdm_step: eta * gamma must not exceed 1");
  OptimState out = s;
  out.v = (1.0 - s.gamma * eta) * s.v - eta * grad;
  out.x = s.x + eta * grad_G(*s.table, out.v);
  out.k = s.k + 1;
  return out;
}

Eigen::VectorXd clipped_sgd_step(const Eigen::VectorXd& x, const Eigen::VectorXd& grad, double eta,
                                 const KineticTable& table) {
  if (!(eta > 0.0)) throw DomainError("clipped_sgd_step: eta must be positive");
  return x + eta * grad_G(table, -eta * grad);
}

SgdmState sgdm_step(const SgdmState& s, const Eigen::VectorXd& grad, double mu, double lr) {
  SgdmState out;
  out.w = mu * s.w - lr * grad;
  out.x = s.x + out.w;
  return out;
}

Dataset two_clusters(Eigen::Index n, std::uint64_t seed, double separation, double spread) {
  RandomStream rng(seed);
  Dataset d;
  d.inputs.resize(n, 2);
  d.labels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const double cx = (label ? 0.5 : -0.5) * separation;
    d.inputs(i, 0) = cx + spread * rng.normal();
    d.inputs(i, 1) = spread * rng.normal();
    d.labels[static_cast<std::size_t>(i)] = label;
  }
  return d;
}

TinyMlp::TinyMlp(int inputs, int hidden, int classes) : in_(inputs), hidden_(hidden), classes_(classes) {
  if (inputs < 1 || hidden < 1 || classes < 2) throw DomainError("TinyMlp: bad layer sizes");
  params_ = Eigen::VectorXd::Zero(hidden * inputs + hidden + classes * hidden + classes);
}

void TinyMlp::set_parameters(const Eigen::VectorXd& p) {
  if (p.size() != params_.size()) throw DomainError("TinyMlp: parameter count mismatch");
  params_ = p;
}

void TinyMlp::initialize(std::uint64_t seed) {
  RandomStream rng(seed);
  params_.setZero();
  Eigen::Index o = 0;
  for (Eigen::Index i = 0; i < hidden_ * in_; ++i) params_[o++] = rng.normal() / std::sqrt(double(in_));
  o += hidden_;
  for (Eigen::Index i = 0; i < classes_ * hidden_; ++i) params_[o++] = rng.normal() / std::sqrt(double(hidden_));
}

double TinyMlp::loss(const Dataset& data, const std::vector<Eigen::Index>& rows, Eigen::VectorXd* grad) const {
  using Map = Eigen::Map<const Eigen::MatrixXd>;
  using VMap = Eigen::Map<const Eigen::VectorXd>;
  const Map W1(params_.data(), hidden_, in_);
  const VMap b1(params_.data() + hidden_ * in_, hidden_);
  const Map W2(params_.data() + hidden_ * in_ + hidden_, classes_, hidden_);
  const VMap b2(params_.data() + hidden_ * in_ + hidden_ + classes_ * hidden_, classes_);

  const Eigen::Index n = rows.empty() ? data.size() : static_cast<Eigen::Index>(rows.size());
  if (n == 0) throw DomainError("TinyMlp::loss: empty batch");
  Eigen::MatrixXd X(in_, n);
  for (Eigen::Index j = 0; j < n; ++j) X.col(j) = data.inputs.row(rows.empty() ? j : rows[j]).transpose();

  const Eigen::MatrixXd H = ((W1 * X).colwise() + b1).array().tanh().matrix();
  Eigen::MatrixXd Z = (W2 * H).colwise() + b2;
  double total = 0.0;
  Eigen::MatrixXd P(classes_, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double m = Z.col(j).maxCoeff();
    const Eigen::ArrayXd e = (Z.col(j).array() - m).exp();
    const double s = e.sum();
    P.col(j) = (e / s).matrix();
    const int y = data.labels[static_cast<std::size_t>(rows.empty() ? j : rows[j])];
    total += -(Z(y, j) - m - std::log(s));
  }
  const double nn = static_cast<double>(n);
  if (grad) {
    Eigen::MatrixXd dZ = P;
    for (Eigen::Index j = 0; j < n; ++j) dZ(data.labels[static_cast<std::size_t>(rows.empty() ? j : rows[j])], j) -= 1.0;
    dZ /= nn;
    const Eigen::MatrixXd dW2 = dZ * H.transpose();
    const Eigen::VectorXd db2 = dZ.rowwise().sum();
    const Eigen::MatrixXd dA = ((W2.transpose() * dZ).array() * (1.0 - H.array().square())).matrix();
    const Eigen::MatrixXd dW1 = dA * X.transpose();
    const Eigen::VectorXd db1 = dA.rowwise().sum();
    grad->resize(params_.size());
    *grad << Eigen::Map<const Eigen::VectorXd>(dW1.data(), dW1.size()), db1,
        Eigen::Map<const Eigen::VectorXd>(dW2.data(), dW2.size()), db2;
  }
  return total / nn;
}

int TinyMlp::predict(const Eigen::VectorXd& input) const {
  const Eigen::Map<const Eigen::MatrixXd> W1(params_.data(), hidden_, in_);
  const Eigen::Map<const Eigen::VectorXd> b1(params_.data() + hidden_ * in_, hidden_);
  const Eigen::Map<const Eigen::MatrixXd> W2(params_.data() + hidden_ * in_ + hidden_, classes_, hidden_);
  const Eigen::Map<const Eigen::VectorXd> b2(params_.data() + hidden_ * in_ + hidden_ + classes_ * hidden_, classes_);
  const Eigen::VectorXd z = W2 * (W1 * input + b1).array().tanh().matrix() + b2;
  Eigen::Index best;
  z.maxCoeff(&best);
  return static_cast<int>(best);
}

double TinyMlp::accuracy(const Dataset& data) const {
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    hits += predict(data.inputs.row(i).transpose()) == data.labels[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

namespace {

EpochMetrics evaluate(const TinyMlp& m, const Dataset& tr, const Dataset& te, std::int64_t it) {
  return {it, m.loss(tr, {}), m.accuracy(tr), m.loss(te, {}), m.accuracy(te)};
}

}  // namespace

TrainReport train(TinyMlp& model, const Dataset& train_set, const Dataset& test_set, const TrainConfig& cfg,
                  std::shared_ptr<const KineticTable> table) {
  if (train_set.size() == 0 || test_set.size() == 0) throw DomainError("train: empty dataset");
  if (cfg.batch_size < 1) throw ConfigError("batch_size", "must be at least 1");
  if (cfg.epochs < 0) throw ConfigError("epochs", "must be non-negative");
  if (!table || table->alpha != cfg.alpha) throw ConfigError("alpha", "kinetic table does not match alpha");
  cfg.schedule.validate();

  TrainReport report;
  report.history.push_back(evaluate(model, train_set, test_set, 0));
  OptimState st{model.parameters(), Eigen::VectorXd::Zero(model.parameter_count()), 0, cfg.schedule, cfg.gamma, table};
  RandomStream shuffle_rng(RandomStream::splitmix64(cfg.seed));
  RandomStream noise_rng(RandomStream::splitmix64(cfg.seed ^ 0x6e6f697365ULL));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(train_set.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Eigen::VectorXd grad;
  report.max_abs_param = st.x.cwiseAbs().maxCoeff();
  for (std::int64_t epoch = 0; epoch < cfg.epochs && !report.diverged; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      const std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(b),
                                           order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), b + cfg.batch_size)));
      model.set_parameters(st.x);
      const double l = model.loss(train_set, rows, &grad);
      if (cfg.noise) {
        const double eta = cfg.schedule.eta(st.k);
        const double scale = std::pow(eta * cfg.gamma / cfg.noise_beta, 1.0 / cfg.noise->alpha);
        for (Eigen::Index i = 0; i < grad.size(); ++i) grad[i] += scale * sample_one(*cfg.noise, noise_rng);
      }
      const OptimState next = fuld_sgdm_step(st, grad);
      const double eta = cfg.schedule.eta(st.k);
      const bool finite = std::isfinite(l) && next.x.allFinite() && next.v.allFinite() &&
                          next.x.cwiseAbs().maxCoeff() <= kDivergenceThreshold;
      if (!finite) {
        report.diverged = true;
        report.divergence_iteration = next.k;
        break;
      }
      report.max_step_over_eta = std::max(report.max_step_over_eta, (next.x - st.x).cwiseAbs().maxCoeff() / eta);
      report.max_abs_param = std::max(report.max_abs_param, next.x.cwiseAbs().maxCoeff());
      st = next;
    }
    model.set_parameters(st.x);
    if (!report.diverged) report.history.push_back(evaluate(model, train_set, test_set, st.k));
  }
  model.set_parameters(st.x);
  return report;
}

}  // namespace fuld
