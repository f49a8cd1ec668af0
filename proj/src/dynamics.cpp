#include "fuld/dynamics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <string>
#include <thread>

#include "fuld/error.hpp"
#include "fuld/io.hpp"
#include "fuld/random.hpp"
#include "fuld/special.hpp"
#include "fuld/stable.hpp"

namespace fuld {

namespace {

constexpr std::string_view kTrajMagic = "FULDTRAJ";
constexpr std::uint32_t kTrajVersion = 1;

void check_finite(const PhaseState& s) {
  const double m = std::max(s.x.cwiseAbs().maxCoeff(), s.v.size() ? s.v.cwiseAbs().maxCoeff() : 0.0);
  if (!(m <= kDivergenceThreshold)) {
    throw DivergenceError(s.k, "state magnitude exceeded threshold at iteration " + std::to_string(s.k));
  }
}

void check_step(const SimConfig& cfg, double eta) {
  if (!(eta * cfg.gamma < 1.0)) throw DomainError("eta * gamma must be below 1");
}

Eigen::VectorXd initial(const Eigen::VectorXd& given, int dim) {
  return given.size() ? given : Eigen::VectorXd::Zero(dim);
}

}  // namespace

void StepSchedule::validate() const {
  if (!(eta0 > 0.0) || !std::isfinite(eta0)) throw ConfigError("eta", "must be positive");
  if (kind == Kind::polynomial && !(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho", "must lie in [0, 1)");
}

void SimConfig::validate() const {
  if (!(gamma > 0.0)) throw ConfigError("gamma", "must be positive");
  if (!(beta > 0.0)) throw ConfigError("beta", "must be positive");
  if (!(alpha > 0.0 && alpha <= 2.0)) throw ConfigError("alpha", "must lie in (0, 2]");
  if (integrator == Integrator::overdamped && !(alpha > 1.0)) {
    throw ConfigError("alpha", "overdamped dynamics need alpha > 1");
  }
  schedule.validate();
  if (integrator != Integrator::overdamped && !(schedule.eta0 * gamma < 1.0)) {
    throw ConfigError("eta", "eta * gamma must be below 1");
  }
  if (iterations < 0) throw ConfigError("iterations", "must be non-negative");
  if (record_stride < 1) throw ConfigError("record_stride", "must be at least 1");
  if (!potential.value || !potential.gradient) throw ConfigError("potential", "missing");
  if (x0.size() && x0.size() != potential.dim) throw ConfigError("x0", "dimension mismatch");
  if (v0.size() && v0.size() != potential.dim) throw ConfigError("v0", "dimension mismatch");
  if (integrator == Integrator::fuld && !kinetic.gaussian_ke) {
    if (!kinetic.table) throw ConfigError("kinetic", "no kinetic table");
    if (kinetic.table->alpha != alpha) throw ConfigError("kinetic", "table alpha differs from alpha");
  }
}

PhaseState fuld_step(const PhaseState& s, const SimConfig& cfg, const Eigen::VectorXd& noise) {
  const double eta = cfg.schedule.eta(s.k);
  check_step(cfg, eta);
  const double scale = std::pow(eta * cfg.gamma / cfg.beta, 1.0 / cfg.alpha);
  PhaseState out;
  out.k = s.k + 1;
  if (cfg.kinetic.gaussian_ke) {
    Eigen::VectorXd drift;
    try {
      drift = gaussian_ke_drift(s.v, cfg.alpha);
    } catch (const OverflowError&) {
      // The Gaussian-KE drift is explosive; report it as a divergence.
      throw DivergenceError(out.k, "Gaussian kinetic drift overflowed at iteration " + std::to_string(out.k));
    }
    out.v = s.v - eta * cfg.gamma * drift - eta * cfg.potential.gradient(s.x) + scale * noise;
    out.x = s.x + eta * out.v;
  } else {
    out.v = (1.0 - cfg.gamma * eta) * s.v - eta * cfg.potential.gradient(s.x) + scale * noise;
    out.x = s.x + eta * grad_G(*cfg.kinetic.table, out.v);
  }
  check_finite(out);
  return out;
}

PhaseState ud_step(const PhaseState& s, const SimConfig& cfg, const Eigen::VectorXd& noise) {
  const double eta = cfg.schedule.eta(s.k);
  check_step(cfg, eta);
  const double scale = std::pow(2.0 * cfg.gamma / cfg.beta * eta, 1.0 / cfg.alpha);
  PhaseState out;
  out.k = s.k + 1;
  out.v = (1.0 - cfg.gamma * eta) * s.v - eta * cfg.potential.gradient(s.x) + scale * noise;
  out.x = s.x + eta * out.v;
  check_finite(out);
  return out;
}

double overdamped_coefficient(double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw DomainError("overdamped dynamics need alpha in (1, 2]");
  const double g = gamma_fn(alpha / 2.0);
  return gamma_fn(alpha - 1.0) / (g * g);
}

Eigen::VectorXd overdamped_step(const Eigen::VectorXd& x, const SimConfig& cfg, const Eigen::VectorXd& noise,
                                std::int64_t k) {
  const double c = overdamped_coefficient(cfg.alpha);
  const double eta = cfg.schedule.eta(k);
  Eigen::VectorXd out = x - eta * c * cfg.potential.gradient(x) +
                        std::pow(eta, 1.0 / cfg.alpha) * std::pow(cfg.beta, -1.0 / cfg.alpha) * noise;
  if (!(out.cwiseAbs().maxCoeff() <= kDivergenceThreshold)) {
    throw DivergenceError(k + 1, "state magnitude exceeded threshold at iteration " + std::to_string(k + 1));
  }
  return out;
}

SimSummary simulate(const SimConfig& cfg, const Recorder& recorder, std::uint64_t index) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const int d = cfg.potential.dim;
  const AlphaStable unit(cfg.alpha, 1.0);
  RandomStream rng = RandomStream::for_trajectory(cfg.seed, index);

  PhaseState s{initial(cfg.x0, d), initial(cfg.v0, d), 0};
  if (cfg.integrator == Integrator::overdamped) s.v.setZero();
  SimSummary summary;
  summary.max_abs_x = s.x.cwiseAbs().maxCoeff();
  if (recorder) recorder(s);

  Eigen::VectorXd noise(d);
  for (std::int64_t k = 0; k < cfg.iterations; ++k) {
    for (int i = 0; i < d; ++i) noise[i] = sample_one(unit, rng);
    PhaseState next;
    try {
      switch (cfg.integrator) {
        case Integrator::fuld:
          next = fuld_step(s, cfg, noise);
          break;
        case Integrator::ud:
          next = ud_step(s, cfg, noise);
          break;
        case Integrator::overdamped:
          next.x = overdamped_step(s.x, cfg, noise, s.k);
          next.v = s.v;
          next.k = s.k + 1;
          break;
      }
    } catch (const DivergenceError& e) {
      summary.diverged = true;
      summary.divergence_index = e.iteration();
      break;
    }
    const double dx = (next.x - s.x).cwiseAbs().maxCoeff();
    summary.max_step = std::max(summary.max_step, dx);
    summary.max_step_over_eta = std::max(summary.max_step_over_eta, dx / cfg.schedule.eta(s.k));
    summary.max_abs_x = std::max(summary.max_abs_x, next.x.cwiseAbs().maxCoeff());
    s = std::move(next);
    ++summary.steps;
    if (recorder && s.k % cfg.record_stride == 0) recorder(s);
  }
  summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

std::vector<Trajectory> simulate_ensemble(const SimConfig& cfg, std::size_t count, unsigned threads) {
  cfg.validate();
  std::vector<Trajectory> runs(count);
  auto run_one = [&](std::size_t i) {
    Trajectory& t = runs[i];
    t.id = i;
    t.dim = cfg.potential.dim;
    const auto expected = static_cast<std::size_t>(cfg.iterations / cfg.record_stride + 1);
    t.k.reserve(expected);
    t.x.reserve(expected * static_cast<std::size_t>(t.dim));
    t.v.reserve(expected * static_cast<std::size_t>(t.dim));
    t.summary = simulate(
        cfg,
        [&t](const PhaseState& s) {
          t.k.push_back(s.k);
          t.x.insert(t.x.end(), s.x.data(), s.x.data() + s.x.size());
          t.v.insert(t.v.end(), s.v.data(), s.v.data() + s.v.size());
        },
        i);
  };
  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) run_one(i);
    return runs;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) run_one(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return runs;
}

void write_trajectories_csv(const std::vector<Trajectory>& runs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  const int d = runs.empty() ? 1 : runs.front().dim;
  out << "trajectory_id,k";
  for (int i = 0; i < d; ++i) out << ",x" << i;
  for (int i = 0; i < d; ++i) out << ",v" << i;
  out << '\n';
  for (const auto& t : runs) {
    for (std::size_t r = 0; r < t.records(); ++r) {
      out << t.id << ',' << t.k[r];
      for (int i = 0; i < d; ++i) out << ',' << io::format_double(t.x[r * d + i]);
      for (int i = 0; i < d; ++i) out << ',' << io::format_double(t.v[r * d + i]);
      out << '\n';
    }
  }
}

void write_trajectories_binary(const std::vector<Trajectory>& runs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  io::write_header(out, kTrajMagic, kTrajVersion);
  io::write_u32(out, static_cast<std::uint32_t>(runs.empty() ? 1 : runs.front().dim));
  io::write_u64(out, runs.size());
  for (const auto& t : runs) {
    io::write_u64(out, t.id);
    io::write_u64(out, t.records());
    for (auto k : t.k) io::write_u64(out, static_cast<std::uint64_t>(k));
    io::write_f64s(out, t.x);
    io::write_f64s(out, t.v);
  }
}

std::vector<Trajectory> read_trajectories_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  if (io::read_header(in, kTrajMagic) != kTrajVersion) throw FormatError("unsupported trajectory version");
  const int d = static_cast<int>(io::read_u32(in));
  std::vector<Trajectory> runs(io::read_u64(in));
  for (auto& t : runs) {
    t.dim = d;
    t.id = io::read_u64(in);
    const auto n = io::read_u64(in);
    t.k.resize(n);
    for (auto& k : t.k) k = static_cast<std::int64_t>(io::read_u64(in));
    t.x.resize(n * d);
    t.v.resize(n * d);
    io::read_f64s(in, t.x);
    io::read_f64s(in, t.v);
  }
  return runs;
}

std::vector<FieldSample> conformal_field(const Potential& potential, const Kinetic& kinetic, double gamma,
                                         double alpha, const Eigen::VectorXd& xs, const Eigen::VectorXd& vs) {
  if (potential.dim != 1) throw DomainError("conformal_field needs a one-dimensional potential");
  if (!kinetic.gaussian_ke && !kinetic.table) throw DomainError("conformal_field: no kinetic table");
  std::vector<FieldSample> out;
  out.reserve(static_cast<std::size_t>(xs.size() * vs.size()));
  Eigen::VectorXd point(1);
  for (Eigen::Index j = 0; j < vs.size(); ++j) {
    for (Eigen::Index i = 0; i < xs.size(); ++i) {
      FieldSample s{};
      s.x = xs[i];
      s.v = vs[j];
      point[0] = s.x;
      s.ham_v = -potential.gradient(point)[0];
      if (kinetic.gaussian_ke) {
        s.ham_x = s.v;
        try {
          s.diss_v = -gamma * gaussian_ke_drift(s.v, alpha);
        } catch (const OverflowError&) {
          s.overflow = true;
          s.diss_v = std::copysign(std::numeric_limits<double>::infinity(), -s.v);
        }
      } else {
        s.ham_x = kinetic.table->dg(s.v);
        s.diss_v = -gamma * s.v;
      }
      s.diss_x = 0.0;
      s.total_x = s.ham_x + s.diss_x;
      s.total_v = s.ham_v + s.diss_v;
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace fuld
