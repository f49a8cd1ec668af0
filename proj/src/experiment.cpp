#include "fuld/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <vector>

#include "fuld/dynamics.hpp"
#include "fuld/error.hpp"
#include "fuld/io.hpp"
#include "fuld/kinetic.hpp"
#include "fuld/measure.hpp"
#include "fuld/optim.hpp"
#include "fuld/potential.hpp"
#include "fuld/stable.hpp"

namespace fuld::cli {

namespace fs = std::filesystem;

namespace {

enum class Kind { real, integer, text, boolean, optional_real, optional_boolean };

struct Key {
  const char* name;
  Kind kind;
  json value;
  const char* help;
  std::vector<std::string> choices = {};
};

const std::vector<Key>& keys(Verb verb) {
  static const std::vector<Key> table{
      {"alpha", Kind::real, 1.5, "tail index in (0, 2]"},
      {"v_max", Kind::real, 100.0, "grid half-width"},
      {"points", Kind::integer, 200001, "grid points (odd)"},
  };
  static const std::vector<Key> simulate{
      {"integrator", Kind::text, "fuld", "fuld | ud | overdamped", {"fuld", "ud", "overdamped"}},
      {"kinetic", Kind::text, "stable", "kinetic energy for fuld: stable | gaussian", {"stable", "gaussian"}},
      {"alpha", Kind::real, 1.0, "tail index of the driving noise"},
      {"gamma", Kind::real, 10.0, "friction"},
      {"beta", Kind::real, 1.0, "inverse temperature"},
      {"eta", Kind::real, 0.01, "initial step size"},
      {"schedule", Kind::text, "constant", "constant | polynomial (eta/(1+k)^rho)", {"constant", "polynomial"}},
      {"rho", Kind::real, 0.0, "decay exponent in [0, 1)"},
      {"potential", Kind::text, "quartic-well", "registered potential"},
      {"dim", Kind::integer, 1, "dimension"},
      {"seed", Kind::integer, 1, "ensemble seed"},
      {"trajectories", Kind::integer, 20, "ensemble size"},
      {"iterations", Kind::integer, 50000, "steps per trajectory"},
      {"record_stride", Kind::integer, 1, "record every n-th state"},
      {"x0", Kind::real, 0.0, "initial position (every coordinate)"},
      {"v0", Kind::real, 0.0, "initial velocity (every coordinate)"},
      {"bins", Kind::integer, 201, "histogram bins"},
      {"hist_lo", Kind::optional_real, nullptr, "histogram lower edge (default -3, ud -10)"},
      {"hist_hi", Kind::optional_real, nullptr, "histogram upper edge (default 3, ud 10)"},
      {"expect_divergence", Kind::optional_boolean, nullptr, "divergence is not an error (default: ud only)"},
      {"trajectory_output", Kind::text, "none", "none | csv | binary", {"none", "csv", "binary"}},
      {"run_id", Kind::text, "run", "label in metrics.csv"},
      {"table_v_max", Kind::real, 100.0, "kinetic table half-width"},
      {"table_points", Kind::integer, 200001, "kinetic table points"},
  };
  static const std::vector<Key> field{
      {"kinetic", Kind::text, "gaussian", "stable | gaussian", {"stable", "gaussian"}},
      {"alpha", Kind::real, 1.7, "tail index"},
      {"gamma", Kind::real, 1.0, "friction"},
      {"potential", Kind::text, "pure-quartic", "registered one-dimensional potential"},
      {"x_lo", Kind::real, -2.0, "grid"},
      {"x_hi", Kind::real, 2.0, "grid"},
      {"nx", Kind::integer, 21, "grid"},
      {"v_lo", Kind::real, -2.0, "grid"},
      {"v_hi", Kind::real, 2.0, "grid"},
      {"nv", Kind::integer, 21, "grid"},
      {"table_v_max", Kind::real, 100.0, "kinetic table half-width"},
      {"table_points", Kind::integer, 200001, "kinetic table points"},
  };
  static const std::vector<Key> optimize{
      {"alpha", Kind::real, 1.5, "kinetic tail index (2 = classical momentum)"},
      {"gamma", Kind::real, 4.0, "friction"},
      {"eta", Kind::real, 0.05, "initial step size"},
      {"schedule", Kind::text, "constant", "constant | polynomial", {"constant", "polynomial"}},
      {"rho", Kind::real, 0.0, "decay exponent"},
      {"epochs", Kind::integer, 200, "passes over the training set"},
      {"batch_size", Kind::integer, 32, "minibatch size"},
      {"hidden", Kind::integer, 16, "hidden width"},
      {"train_size", Kind::integer, 500, "training points"},
      {"test_size", Kind::integer, 200, "held-out points"},
      {"separation", Kind::real, 4.0, "cluster distance"},
      {"spread", Kind::real, 0.7, "cluster standard deviation"},
      {"seed", Kind::integer, 1, "initialization, shuffling and noise seed"},
      {"data_seed", Kind::integer, 7, "dataset seed"},
      {"noise_alpha", Kind::real, 0.0, "injected gradient-noise tail index (0 = none)"},
      {"noise_beta", Kind::real, 1.0, "injected noise inverse temperature"},
      {"expect_divergence", Kind::boolean, false, "divergence is not an error"},
      {"table_v_max", Kind::real, 100.0, "kinetic table half-width"},
      {"table_points", Kind::integer, 200001, "kinetic table points"},
  };
  static const std::vector<Key> sampler{
      {"alpha", Kind::real, 1.5, "tail index"},
      {"sigma", Kind::real, 1.0, "scale"},
      {"samples", Kind::integer, 100000, "sample count"},
      {"seed", Kind::integer, 1, "stream seed"},
      {"threshold", Kind::real, 0.01, "maximal KS statistic"},
  };
  switch (verb) {
    case Verb::table:
      return table;
    case Verb::simulate:
      return simulate;
    case Verb::field:
      return field;
    case Verb::optimize:
      return optimize;
    case Verb::validate_sampler:
      return sampler;
  }
  return table;
}

const Key& find_key(Verb verb, const std::string& name) {
  for (const auto& k : keys(verb)) {
    if (name == k.name) return k;
  }
  throw ConfigError(name, "unknown key for '" + verb_name(verb) + "'");
}

json checked(const Key& k, const json& v) {
  auto bad = [&](const char* what) { return ConfigError(k.name, what); };
  switch (k.kind) {
    case Kind::real:
      if (!v.is_number()) throw bad("expected a number");
      if (!std::isfinite(v.get<double>())) throw bad("must be finite");
      return v.get<double>();
    case Kind::optional_real:
      if (v.is_null()) return v;
      if (!v.is_number() || !std::isfinite(v.get<double>())) throw bad("expected a number or null");
      return v.get<double>();
    case Kind::integer:
      if (v.is_number_integer()) return v.get<std::int64_t>();
      if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>() && std::abs(v.get<double>()) < 9e15) {
        return static_cast<std::int64_t>(v.get<double>());
      }
      throw bad("expected an integer");
    case Kind::text:
      if (!v.is_string()) throw bad("expected a string");
      if (!k.choices.empty() &&
          std::find(k.choices.begin(), k.choices.end(), v.get<std::string>()) == k.choices.end()) {
        throw bad("not one of the allowed values");
      }
      return v;
    case Kind::boolean:
      if (!v.is_boolean()) throw bad("expected true or false");
      return v;
    case Kind::optional_boolean:
      if (!v.is_boolean() && !v.is_null()) throw bad("expected true, false or null");
      return v;
  }
  return v;
}

// Tracks files written by a run so a failing run leaves nothing behind.
class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {
    if (!fs::exists(dir_)) {
      fs::create_directories(dir_);
      created_ = true;
    }
  }
  ~Artifacts() {
    if (keep_) return;
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
    if (created_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
  }
  fs::path file(const std::string& name) {
    files_.push_back(dir_ / name);
    return files_.back();
  }
  void keep() { keep_ = true; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
  bool created_ = false;
  bool keep_ = false;
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + p.string());
  return out;
}

std::string fmt(double x) { return io::format_double(x); }

std::string join_modes(const std::vector<double>& m) {
  std::string s;
  for (std::size_t i = 0; i < m.size(); ++i) s += (i ? ";" : "") + fmt(m[i]);
  return s;
}

StepSchedule schedule_from(const json& j) {
  return j.at("schedule") == "polynomial" ? StepSchedule::polynomial(j.at("eta"), j.at("rho"))
                                          : StepSchedule::constant(j.at("eta"));
}

std::shared_ptr<const KineticTable> table_for(double alpha, const json& j, const RunOptions& o) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw ConfigError("alpha", "must lie in (0, 2]");
  return std::make_shared<const KineticTable>(
      cached_table(alpha, o.cache_dir, j.at("table_v_max").get<double>(), j.at("table_points").get<Eigen::Index>()));
}

void run_table(const json& j, Artifacts& art, const RunOptions& o, std::ostream& log) {
  const double alpha = j.at("alpha");
  if (!(alpha > 0.0 && alpha <= 2.0)) throw ConfigError("alpha", "must lie in (0, 2]");
  const double v_max = j.at("v_max");
  if (!(v_max >= 20.0)) throw ConfigError("v_max", "must be at least 20");
  const Eigen::Index points = j.at("points");
  if (points < 4001) throw ConfigError("points", "must be at least 4001");
  const auto t = cached_table(alpha, o.cache_dir, v_max, points);
  export_table_csv(t, art.file("table.csv"));
  auto m = open_out(art.file("metrics.csv"));
  m << "alpha,sigma,v_max,points,lipschitz,tail_coefficient,dg_at_v_max,sup_abs_dg\n"
    << fmt(t.alpha) << ',' << fmt(t.sigma) << ',' << fmt(t.v_max) << ',' << t.size() << ',' << fmt(t.lipschitz)
    << ',' << fmt(t.tail_coefficient) << ',' << fmt(t.dg(t.v_max)) << ',' << fmt(t.sup_abs_dg()) << '\n';
  log << "table alpha=" << t.alpha << " lipschitz=" << t.lipschitz << " cache="
      << table_cache_path(o.cache_dir, alpha, v_max, points).string() << '\n';
}

void run_simulate(const json& j, Artifacts& art, const RunOptions& o, std::ostream& log) {
  SimConfig cfg;
  const std::string integrator = j.at("integrator");
  cfg.integrator = integrator == "ud" ? Integrator::ud
                   : integrator == "overdamped" ? Integrator::overdamped
                                                : Integrator::fuld;
  cfg.alpha = j.at("alpha");
  cfg.gamma = j.at("gamma");
  cfg.beta = j.at("beta");
  cfg.schedule = schedule_from(j);
  const int dim = j.at("dim");
  if (dim < 1) throw ConfigError("dim", "must be at least 1");
  cfg.potential = lookup_potential(j.at("potential"), dim);
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.iterations = j.at("iterations");
  cfg.record_stride = j.at("record_stride");
  cfg.x0 = Eigen::VectorXd::Constant(dim, j.at("x0").get<double>());
  cfg.v0 = Eigen::VectorXd::Constant(dim, j.at("v0").get<double>());
  const std::int64_t count = j.at("trajectories");
  if (count < 1) throw ConfigError("trajectories", "must be at least 1");
  const Eigen::Index bins = j.at("bins");
  if (bins < 1) throw ConfigError("bins", "must be at least 1");
  const double lo = j.at("hist_lo"), hi = j.at("hist_hi");
  if (!(hi > lo)) throw ConfigError("hist_hi", "must exceed hist_lo");
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 2.0)) throw ConfigError("alpha", "must lie in (0, 2]");
  if (cfg.integrator == Integrator::fuld) {
    cfg.kinetic = j.at("kinetic") == "gaussian" ? Kinetic::gaussian() : Kinetic::from_table(table_for(cfg.alpha, j, o));
  }
  cfg.validate();

  const auto start = std::chrono::steady_clock::now();
  const auto runs = simulate_ensemble(cfg, static_cast<std::size_t>(count), o.threads);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::int64_t diverged = 0, first = -1, steps = 0;
  double max_abs_x = 0.0, max_step = 0.0, max_ratio = 0.0;
  for (const auto& t : runs) {
    steps += t.summary.steps;
    max_abs_x = std::max(max_abs_x, t.summary.max_abs_x);
    max_step = std::max(max_step, t.summary.max_step);
    max_ratio = std::max(max_ratio, t.summary.max_step_over_eta);
    if (t.summary.diverged) {
      ++diverged;
      if (first < 0) first = static_cast<std::int64_t>(t.id);
    }
  }
  if (diverged && !j.at("expect_divergence").get<bool>()) {
    throw DivergenceError(runs[static_cast<std::size_t>(first)].summary.divergence_index,
                          std::to_string(diverged) + " trajectories diverged (first: trajectory " +
                              std::to_string(first) + ", iteration " +
                              std::to_string(runs[static_cast<std::size_t>(first)].summary.divergence_index) + ")");
  }

  const auto m = histogram(runs, cfg.schedule, uniform_edges(lo, hi, bins));
  const Eigen::VectorXd p = m.probabilities();
  // Registered potentials are separable, so every coordinate's marginal is
  // the one-dimensional Gibbs density.
  const GibbsTarget target(lookup_potential(j.at("potential"), 1), cfg.beta);
  const Eigen::VectorXd q = target.bin_probabilities(m.edges);
  const double tv = tv_distance(p, q);
  double ks = 0.0, fe = p[0];
  for (Eigen::Index i = 0; i <= bins; ++i) {
    ks = std::max(ks, std::abs(fe - target.cdf(m.edges[i])));
    if (i < bins) fe += p[i + 1];
  }
  const auto found = modes(m);
  const double mean_x = ergodic_average(runs, cfg.schedule, [](const Eigen::VectorXd& x) { return x[0]; });
  const double mean_x2 = ergodic_average(runs, cfg.schedule, [](const Eigen::VectorXd& x) { return x[0] * x[0]; });

  {
    auto h = open_out(art.file("histogram.csv"));
    h << "bin_center,empirical_weight,target_weight\n";
    const Eigen::VectorXd c = m.centers();
    for (Eigen::Index i = 0; i < bins; ++i) h << fmt(c[i]) << ',' << fmt(p[i + 1]) << ',' << fmt(q[i + 1]) << '\n';
  }
  {
    auto out = open_out(art.file("metrics.csv"));
    out << "run_id,integrator,kinetic,alpha,trajectories,steps,diverged_trajectories,tv,ks,n_modes,modes,"
           "max_abs_x,max_step,max_step_over_eta,underflow,overflow,mean_x,mean_x2,target_mean_x2\n";
    out << j.at("run_id").get<std::string>() << ',' << integrator << ','
        << (cfg.integrator == Integrator::fuld ? j.at("kinetic").get<std::string>() : "none") << ',' << fmt(cfg.alpha)
        << ',' << count << ',' << steps << ',' << diverged << ',' << fmt(tv) << ',' << fmt(ks) << ','
        << found.size() << ',' << join_modes(found) << ',' << fmt(max_abs_x) << ',' << fmt(max_step) << ','
        << fmt(max_ratio) << ',' << fmt(p[0]) << ',' << fmt(p[bins + 1]) << ',' << fmt(mean_x) << ','
        << fmt(mean_x2) << ',' << fmt(target.expectation([](double x) { return x * x; })) << '\n';
  }
  {
    auto out = open_out(art.file("trajectories.csv"));
    out << "trajectory_id,steps,diverged,divergence_index,max_abs_x,max_step\n";
    for (const auto& t : runs) {
      out << t.id << ',' << t.summary.steps << ',' << (t.summary.diverged ? 1 : 0) << ','
          << t.summary.divergence_index << ',' << fmt(t.summary.max_abs_x) << ',' << fmt(t.summary.max_step) << '\n';
    }
  }
  const std::string traj = j.at("trajectory_output");
  if (traj == "csv") write_trajectories_csv(runs, art.file("trajectory.csv"));
  if (traj == "binary") write_trajectories_binary(runs, art.file("trajectory.bin"));

  log << integrator << " alpha=" << cfg.alpha << " tv=" << tv << " modes=[" << join_modes(found)
      << "] max|x|=" << max_abs_x << " diverged=" << diverged << "/" << count << " wall=" << wall << "s\n";
  if (m.overflow_warning()) log << "warning: " << 100.0 * m.outside_fraction() << "% of the mass lies outside the histogram\n";
}

void run_field(const json& j, Artifacts& art, const RunOptions& o, std::ostream& log) {
  const double alpha = j.at("alpha");
  if (!(alpha > 0.0 && alpha <= 2.0)) throw ConfigError("alpha", "must lie in (0, 2]");
  const double gamma = j.at("gamma");
  if (!(gamma > 0.0)) throw ConfigError("gamma", "must be positive");
  const Eigen::Index nx = j.at("nx"), nv = j.at("nv");
  if (nx < 1) throw ConfigError("nx", "must be at least 1");
  if (nv < 1) throw ConfigError("nv", "must be at least 1");
  const double x_lo = j.at("x_lo"), x_hi = j.at("x_hi"), v_lo = j.at("v_lo"), v_hi = j.at("v_hi");
  if (!(x_hi >= x_lo)) throw ConfigError("x_hi", "must not be below x_lo");
  if (!(v_hi >= v_lo)) throw ConfigError("v_hi", "must not be below v_lo");
  const auto potential = lookup_potential(j.at("potential"), 1);
  const Kinetic kinetic =
      j.at("kinetic") == "gaussian" ? Kinetic::gaussian() : Kinetic::from_table(table_for(alpha, j, o));
  const auto f = conformal_field(potential, kinetic, gamma, alpha, Eigen::VectorXd::LinSpaced(nx, x_lo, x_hi),
                                 Eigen::VectorXd::LinSpaced(nv, v_lo, v_hi));
  std::size_t overflow = 0;
  {
    auto out = open_out(art.file("field.csv"));
    out << "x,v,ham_x,ham_v,diss_x,diss_v,total_x,total_v,overflow\n";
    for (const auto& s : f) {
      overflow += s.overflow;
      out << fmt(s.x) << ',' << fmt(s.v) << ',' << fmt(s.ham_x) << ',' << fmt(s.ham_v) << ',' << fmt(s.diss_x)
          << ',' << fmt(s.diss_v) << ',' << fmt(s.total_x) << ',' << fmt(s.total_v) << ',' << (s.overflow ? 1 : 0)
          << '\n';
    }
  }
  auto m = open_out(art.file("metrics.csv"));
  m << "nodes,overflow_nodes\n" << f.size() << ',' << overflow << '\n';
  log << "field nodes=" << f.size() << " overflow=" << overflow << '\n';
}

void run_optimize(const json& j, Artifacts& art, const RunOptions& o, std::ostream& log) {
  TrainConfig cfg;
  cfg.alpha = j.at("alpha");
  cfg.gamma = j.at("gamma");
  if (!(cfg.gamma > 0.0)) throw ConfigError("gamma", "must be positive");
  cfg.schedule = schedule_from(j);
  cfg.schedule.validate();
  if (!(cfg.schedule.eta0 * cfg.gamma <= 1.0)) throw ConfigError("eta", "eta * gamma must not exceed 1");
  cfg.epochs = j.at("epochs");
  cfg.batch_size = j.at("batch_size");
  cfg.seed = j.at("seed").get<std::uint64_t>();
  const double noise_alpha = j.at("noise_alpha");
  if (noise_alpha != 0.0) {
    if (!(noise_alpha > 0.0 && noise_alpha <= 2.0)) throw ConfigError("noise_alpha", "must be 0 or lie in (0, 2]");
    cfg.noise = AlphaStable(noise_alpha, 1.0);
  }
  cfg.noise_beta = j.at("noise_beta");
  if (!(cfg.noise_beta > 0.0)) throw ConfigError("noise_beta", "must be positive");
  const Eigen::Index train_size = j.at("train_size"), test_size = j.at("test_size");
  if (train_size < 1) throw ConfigError("train_size", "must be at least 1");
  if (test_size < 1) throw ConfigError("test_size", "must be at least 1");
  const int hidden = j.at("hidden");
  if (hidden < 1) throw ConfigError("hidden", "must be at least 1");

  const auto table = table_for(cfg.alpha, j, o);
  const std::uint64_t data_seed = j.at("data_seed");
  const auto train_set = two_clusters(train_size, data_seed, j.at("separation"), j.at("spread"));
  const auto test_set = two_clusters(test_size, data_seed + 1, j.at("separation"), j.at("spread"));
  TinyMlp model(2, hidden, 2);
  model.initialize(cfg.seed);
  const auto report = train(model, train_set, test_set, cfg, table);
  if (report.diverged && !j.at("expect_divergence").get<bool>()) {
    throw DivergenceError(report.divergence_iteration,
                          "training diverged at iteration " + std::to_string(report.divergence_iteration));
  }
  {
    auto out = open_out(art.file("metrics.csv"));
    out << "iteration,train_loss,train_acc,test_loss,test_acc\n";
    for (const auto& e : report.history) {
      out << e.iteration << ',' << fmt(e.train_loss) << ',' << fmt(e.train_acc) << ',' << fmt(e.test_loss) << ','
          << fmt(e.test_acc) << '\n';
    }
  }
  auto s = open_out(art.file("summary.csv"));
  s << "diverged,divergence_iteration,max_abs_param,max_step_over_eta\n"
    << (report.diverged ? 1 : 0) << ',' << report.divergence_iteration << ',' << fmt(report.max_abs_param) << ','
    << fmt(report.max_step_over_eta) << '\n';
  const auto& last = report.history.back();
  log << "optimize alpha=" << cfg.alpha << " train_acc=" << last.train_acc << " test_acc=" << last.test_acc
      << (report.diverged ? " (diverged)" : "") << '\n';
}

// Returns false when the KS statistic misses the threshold.
bool run_validate_sampler(const json& j, Artifacts& art, std::ostream& log) {
  const double alpha = j.at("alpha"), sigma = j.at("sigma"), threshold = j.at("threshold");
  if (!(alpha > 0.0 && alpha <= 2.0)) throw ConfigError("alpha", "must lie in (0, 2]");
  if (!(sigma > 0.0)) throw ConfigError("sigma", "must be positive");
  const std::int64_t n = j.at("samples");
  if (n < 100) throw ConfigError("samples", "must be at least 100");
  const AlphaStable dist(alpha, sigma);
  RandomStream rng(j.at("seed").get<std::uint64_t>());
  const Eigen::VectorXd xs = sample(dist, static_cast<std::size_t>(n), rng);
  const StableCdf cdf(dist);
  const double ks = ks_statistic(xs, [&](double x) { return cdf(x); });
  const bool ok = ks < threshold;
  auto out = open_out(art.file("metrics.csv"));
  out << "alpha,sigma,samples,ks,threshold,passed\n"
      << fmt(alpha) << ',' << fmt(sigma) << ',' << n << ',' << fmt(ks) << ',' << fmt(threshold) << ','
      << (ok ? 1 : 0) << '\n';
  log << "validate-sampler alpha=" << alpha << " ks=" << ks << (ok ? " PASS" : " FAIL") << '\n';
  return ok;
}

}  // namespace

Verb parse_verb(const std::string& name) {
  if (name == "table") return Verb::table;
  if (name == "simulate") return Verb::simulate;
  if (name == "field") return Verb::field;
  if (name == "optimize") return Verb::optimize;
  if (name == "validate-sampler") return Verb::validate_sampler;
  throw ConfigError("verb", "unknown verb '" + name + "'");
}

std::string verb_name(Verb verb) {
  switch (verb) {
    case Verb::table:
      return "table";
    case Verb::simulate:
      return "simulate";
    case Verb::field:
      return "field";
    case Verb::optimize:
      return "optimize";
    case Verb::validate_sampler:
      return "validate-sampler";
  }
  return "";
}

json defaults(Verb verb) {
  json j = json::object();
  for (const auto& k : keys(verb)) j[k.name] = k.value;
  return j;
}

json defaults_reference(Verb verb) {
  json j = json::object();
  for (const auto& k : keys(verb)) {
    j[k.name] = {{"default", k.value}, {"description", k.help}};
    if (!k.choices.empty()) j[k.name]["choices"] = k.choices;
  }
  return j;
}

json resolve(Verb verb, const json& user) {
  if (!user.is_object()) throw ConfigError("config", "expected a JSON object");
  json j = defaults(verb);
  for (const auto& [name, value] : user.items()) {
    if (name == "verb") {
      if (value != verb_name(verb)) throw ConfigError("verb", "config was written for another verb");
      continue;
    }
    j[name] = checked(find_key(verb, name), value);
  }
  if (verb == Verb::simulate) {
    const bool ud = j["integrator"] == "ud";
    if (j["hist_lo"].is_null()) j["hist_lo"] = ud ? -10.0 : -3.0;
    if (j["hist_hi"].is_null()) j["hist_hi"] = ud ? 10.0 : 3.0;
    if (j["expect_divergence"].is_null()) j["expect_divergence"] = ud;
  }
  j["verb"] = verb_name(verb);
  return j;
}

json parse_flag_value(Verb verb, const std::string& key, const std::string& text) {
  const Key& k = find_key(verb, key);
  auto number = [&](bool integral) -> json {
    std::size_t used = 0;
    try {
      if (integral) {
        const long long v = std::stoll(text, &used);
        if (used == text.size()) return v;
      } else {
        const double v = std::stod(text, &used);
        if (used == text.size()) return v;
      }
    } catch (const std::exception&) {
    }
    throw ConfigError(key, "cannot parse '" + text + "'");
  };
  switch (k.kind) {
    case Kind::real:
      return number(false);
    case Kind::integer:
      return number(true);
    case Kind::optional_real:
      return text == "auto" ? json(nullptr) : number(false);
    case Kind::text:
      return text;
    case Kind::boolean:
    case Kind::optional_boolean:
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      if (k.kind == Kind::optional_boolean && text == "auto") return nullptr;
      throw ConfigError(key, "expected true or false");
  }
  return text;
}

Outcome run(Verb verb, const json& resolved, const fs::path& out, const RunOptions& options, std::ostream& log) {
  try {
    Artifacts art(out);
    {
      auto c = open_out(art.file("config.json"));
      c << resolved.dump(2) << '\n';
    }
    bool passed = true;
    switch (verb) {
      case Verb::table:
        run_table(resolved, art, options, log);
        break;
      case Verb::simulate:
        run_simulate(resolved, art, options, log);
        break;
      case Verb::field:
        run_field(resolved, art, options, log);
        break;
      case Verb::optimize:
        run_optimize(resolved, art, options, log);
        break;
      case Verb::validate_sampler:
        passed = run_validate_sampler(resolved, art, log);
        break;
    }
    art.keep();
    if (!passed) return {kExitValidation, "numerical validation failed"};
    return {kExitOk, ""};
  } catch (const ConfigError& e) {
    return {kExitConfig, std::string("config error: ") + e.what()};
  } catch (const DivergenceError& e) {
    return {kExitDivergence, std::string("divergence: ") + e.what()};
  } catch (const NumericalError& e) {
    return {kExitValidation, std::string("numerical failure: ") + e.what()};
  } catch (const DomainError& e) {
    return {kExitConfig, std::string("invalid parameter: ") + e.what()};
  } catch (const FormatError& e) {
    return {kExitConfig, std::string("i/o error: ") + e.what()};
  } catch (const fs::filesystem_error& e) {
    return {kExitConfig, std::string("i/o error: ") + e.what()};
  }
}

Outcome compare(const fs::path& a, const fs::path& b, std::ostream& report) {
  try {
    const auto ha = io::read_csv(a / "histogram.csv");
    const auto hb = io::read_csv(b / "histogram.csv");
    const auto ma = io::read_csv(a / "metrics.csv");
    const auto mb = io::read_csv(b / "metrics.csv");
    if (ha.rows.size() != hb.rows.size()) throw ConfigError("bins", "bin mismatch: different bin counts");
    for (std::size_t i = 0; i < ha.rows.size(); ++i) {
      if (ha.number(i, "bin_center") != hb.number(i, "bin_center")) {
        throw ConfigError("bins", "bin mismatch at row " + std::to_string(i));
      }
    }
    // Empirical-vs-empirical distance including the out-of-range cells.
    const auto n = static_cast<Eigen::Index>(ha.rows.size());
    Eigen::VectorXd pa(n + 2), pb(n + 2);
    pa[0] = ma.number(0, "underflow");
    pb[0] = mb.number(0, "underflow");
    pa[n + 1] = ma.number(0, "overflow");
    pb[n + 1] = mb.number(0, "overflow");
    for (Eigen::Index i = 0; i < n; ++i) {
      pa[i + 1] = ha.number(static_cast<std::size_t>(i), "empirical_weight");
      pb[i + 1] = hb.number(static_cast<std::size_t>(i), "empirical_weight");
    }
    report << "metric,a,b,delta\n";
    for (const char* key : {"tv", "ks", "n_modes", "max_abs_x", "max_step", "diverged_trajectories", "mean_x2"}) {
      const double va = ma.number(0, key), vb = mb.number(0, key);
      report << key << ',' << fmt(va) << ',' << fmt(vb) << ',' << fmt(vb - va) << '\n';
    }
    report << "modes," << ma.rows[0][ma.column("modes")] << ',' << mb.rows[0][mb.column("modes")] << ",\n";
    report << "integrator," << ma.rows[0][ma.column("integrator")] << ',' << mb.rows[0][mb.column("integrator")]
           << ",\n";
    report << "tv_between,,," << fmt(tv_distance(pa, pb)) << '\n';
    return {kExitOk, ""};
  } catch (const ConfigError& e) {
    return {kExitConfig, std::string("config error: ") + e.what()};
  } catch (const Error& e) {
    return {kExitConfig, std::string("cannot compare: ") + e.what()};
  }
}

fs::path default_cache_dir() {
  if (const char* env = std::getenv("FULD_CACHE_DIR"); env && *env) return env;
  return ".fuld-cache";
}

}  // namespace fuld::cli
