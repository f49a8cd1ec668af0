#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "fuld/dynamics.hpp"
#include "fuld/error.hpp"
#include "fuld/random.hpp"
#include "fuld/stable.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kCache = FULD_TEST_CACHE;

std::shared_ptr<const fuld::KineticTable> table(double alpha) {
  return std::make_shared<const fuld::KineticTable>(fuld::cached_table(alpha, kCache));
}

fuld::SimConfig quartic(double alpha, fuld::Integrator integrator = fuld::Integrator::fuld) {
  fuld::SimConfig cfg;
  cfg.integrator = integrator;
  cfg.alpha = alpha;
  cfg.gamma = 10.0;
  cfg.beta = 1.0;
  cfg.schedule = fuld::StepSchedule::constant(0.01);
  cfg.kinetic = fuld::Kinetic::from_table(table(alpha));
  cfg.potential = fuld::quartic_well();
  return cfg;
}

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

double energy(const fuld::SimConfig& cfg, const fuld::PhaseState& s) {
  return cfg.potential.value(s.x) + 0.5 * s.v.squaredNorm();
}

}  // namespace

TEST_CASE("schedules") {
  const auto c = fuld::StepSchedule::constant(0.02);
  CHECK(c.eta(0) == 0.02);
  CHECK(c.eta(1000000) == 0.02);
  const auto p = fuld::StepSchedule::polynomial(0.2, 0.3);
  CHECK(p.eta(0) == 0.2);
  double prev = p.eta(0);
  for (std::int64_t k = 1; k < 100000; k = k * 3 + 1) {
    CHECK(p.eta(k) <= prev);
    prev = p.eta(k);
  }
  CHECK(p.eta(999) == doctest::Approx(0.2 / std::pow(1000.0, 0.3)));
  CHECK_THROWS_AS(fuld::StepSchedule::polynomial(0.2, 1.0).validate(), fuld::ConfigError);
  CHECK_THROWS_AS(fuld::StepSchedule::constant(0.0).validate(), fuld::ConfigError);
}

TEST_CASE("config validation names the field") {
  auto cfg = quartic(1.5);
  CHECK_NOTHROW(cfg.validate());
  auto field_of = [](const fuld::SimConfig& c) {
    try {
      c.validate();
    } catch (const fuld::ConfigError& e) {
      return e.field();
    }
    return std::string();
  };
  auto bad = cfg;
  bad.gamma = 0.0;
  CHECK(field_of(bad) == "gamma");
  bad = cfg;
  bad.beta = -1.0;
  CHECK(field_of(bad) == "beta");
  bad = cfg;
  bad.schedule = fuld::StepSchedule::constant(0.1);
  CHECK(field_of(bad) == "eta");
  bad = cfg;
  bad.alpha = 1.7;
  CHECK(field_of(bad) == "kinetic");
  bad = cfg;
  bad.x0 = vec({1.0, 2.0});
  CHECK(field_of(bad) == "x0");
  bad = quartic(1.5, fuld::Integrator::overdamped);
  bad.alpha = 1.0;
  CHECK(field_of(bad) == "alpha");
}

TEST_CASE("alpha = 2: FULD and UD agree once the noise scales are aligned") {
  auto f = quartic(2.0);
  auto u = quartic(2.0, fuld::Integrator::ud);
  // UD uses 2 gamma / beta; doubling beta matches FULD's gamma / beta.
  u.beta = 2.0 * f.beta;
  fuld::RandomStream rng(4);
  const fuld::AlphaStable unit(2.0);
  fuld::PhaseState a{vec({0.3}), vec({-0.2}), 0}, b = a;
  double worst = 0.0;
  for (int k = 0; k < 20000; ++k) {
    const Eigen::VectorXd s = fuld::sample(unit, 1, rng);
    a = fuld::fuld_step(a, f, s);
    b = fuld::ud_step(b, u, s);
    worst = std::max(worst, std::abs(a.x[0] - b.x[0]) / std::max(1.0, std::abs(a.x[0])));
  }
  CHECK(worst <= 1e-12);
  CHECK(a.k == 20000);
}

TEST_CASE("alpha = 2 FULD step is the classical underdamped Euler step") {
  const auto cfg = quartic(2.0);
  const fuld::PhaseState s{vec({1.3, -0.4}), vec({0.5, 2.0}), 7};
  auto c2 = cfg;
  c2.potential = fuld::quartic_well(2);
  const Eigen::VectorXd n = vec({0.25, -1.5});
  const auto out = fuld::fuld_step(s, c2, n);
  const double eta = 0.01;
  for (int i = 0; i < 2; ++i) {
    const double x = s.x[i];
    const double v = (1.0 - 10.0 * eta) * s.v[i] - eta * (x * x * x - x) + std::sqrt(eta * 10.0) * n[i];
    CHECK(out.v[i] == doctest::Approx(v).epsilon(1e-15));
    CHECK(out.x[i] == doctest::Approx(x + eta * v).epsilon(1e-15));
  }
  CHECK(out.k == 8);
}

TEST_CASE("fixed point without noise or force") {
  for (double alpha : {1.0, 1.5, 2.0}) {
    auto cfg = quartic(alpha);
    cfg.potential = fuld::pure_quartic(3);
    const fuld::PhaseState s{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), 0};
    const auto f = fuld::fuld_step(s, cfg, Eigen::VectorXd::Zero(3));
    CHECK(f.x == s.x);
    CHECK(f.v == s.v);
    const auto u = fuld::ud_step(s, cfg, Eigen::VectorXd::Zero(3));
    CHECK(u.x == s.x);
    CHECK(u.v == s.v);
  }
}

TEST_CASE("FULD position updates are bounded by eta sup|g'|") {
  SUBCASE("alpha = 1 on the quartic") {
    auto cfg = quartic(1.0);
    cfg.iterations = 50000;
    const auto sum = fuld::simulate(cfg, {});
    CHECK_FALSE(sum.diverged);
    // x + eta g'(v) rounds at the scale of |x|.
    const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, sum.max_abs_x);
    CHECK(sum.max_step <= 0.01 + slack);
  }
  SUBCASE("heavier tails and decaying steps") {
    for (double alpha : {0.5, 1.5, 1.9}) {
      CAPTURE(alpha);
      auto cfg = quartic(alpha);
      cfg.schedule = fuld::StepSchedule::polynomial(0.05, 0.3);
      cfg.gamma = 5.0;
      cfg.iterations = 20000;
      cfg.x0 = vec({2.0});
      const auto sum = fuld::simulate(cfg, {});
      CHECK_FALSE(sum.diverged);
      const double sup = cfg.kinetic.table->sup_abs_dg();
      CHECK(sum.max_step_over_eta <= sup * (1.0 + 1e-9) + 100.0 * std::numeric_limits<double>::epsilon() * sum.max_abs_x);
    }
  }
}

TEST_CASE("UD without noise is damped Hamiltonian descent") {
  auto fine = quartic(1.0, fuld::Integrator::ud);
  fine.gamma = 1.0;
  fine.schedule = fuld::StepSchedule::constant(1e-4);
  auto coarse = fine;
  coarse.schedule = fuld::StepSchedule::constant(1e-3);
  fuld::PhaseState c{vec({2.0}), vec({0.0}), 0}, f = c;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  double window_energy = energy(coarse, c);
  for (int block = 0; block < 100; ++block) {
    for (int k = 0; k < 100; ++k) {
      c = fuld::ud_step(c, coarse, zero);
      for (int j = 0; j < 10; ++j) f = fuld::ud_step(f, fine, zero);
    }
    const double e = energy(coarse, c);
    CHECK(e <= window_energy + 1e-6);
    window_energy = e;
    CHECK(std::abs(c.x[0] - f.x[0]) < 1e-2);
  }
  CHECK(energy(coarse, c) < energy(coarse, fuld::PhaseState{vec({2.0}), vec({0.0}), 0}));
}

TEST_CASE("zero-temperature FULD settles in the nearest minimum") {
  for (double alpha : {1.0, 1.5}) {
    CAPTURE(alpha);
    auto cfg = quartic(alpha);
    cfg.gamma = 2.0;
    auto fine = cfg;
    fine.schedule = fuld::StepSchedule::constant(0.001);
    cfg.schedule = fuld::StepSchedule::constant(0.01);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
    fuld::PhaseState a{vec({2.0}), vec({0.0}), 0}, b = a;
    for (int k = 0; k < 100000; ++k) {
      a = fuld::fuld_step(a, cfg, zero);
      for (int j = 0; j < 10; ++j) b = fuld::fuld_step(b, fine, zero);
    }
    CHECK(a.x[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(b.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("overdamped step") {
  CHECK(fuld::overdamped_coefficient(2.0) == 1.0);
  CHECK(fuld::overdamped_coefficient(1.5) == doctest::Approx(std::tgamma(0.5) / std::pow(std::tgamma(0.75), 2)));
  CHECK(fuld::overdamped_coefficient(1.5) == doctest::Approx(1.1803).epsilon(1e-4));
  CHECK_THROWS_AS(fuld::overdamped_coefficient(1.0), fuld::DomainError);

  auto cfg = quartic(2.0, fuld::Integrator::overdamped);
  cfg.potential = fuld::pure_quartic();
  CHECK(fuld::overdamped_step(vec({0.0}), cfg, vec({0.0})) == vec({0.0}));
  cfg.potential = fuld::quartic_well();
  cfg.beta = 4.0;
  const auto out = fuld::overdamped_step(vec({2.0}), cfg, vec({0.3}));
  CHECK(out[0] == doctest::Approx(2.0 - 0.01 * 6.0 + 0.1 * 0.5 * 0.3).epsilon(1e-14));

  cfg.alpha = 1.5;
  cfg.iterations = 5000;
  const auto sum = fuld::simulate(cfg, {});
  CHECK(sum.steps == 5000);
}

TEST_CASE("simulate: K = 0 records the initial state only") {
  auto cfg = quartic(1.5);
  cfg.iterations = 0;
  cfg.x0 = vec({0.7});
  int calls = 0;
  const auto sum = fuld::simulate(cfg, [&](const fuld::PhaseState& s) {
    ++calls;
    CHECK(s.k == 0);
    CHECK(s.x[0] == 0.7);
    CHECK(s.v[0] == 0.0);
  });
  CHECK(calls == 1);
  CHECK(sum.steps == 0);
  CHECK_FALSE(sum.diverged);
}

TEST_CASE("simulate: strided recording") {
  auto cfg = quartic(1.5);
  cfg.iterations = 1000;
  cfg.record_stride = 100;
  std::vector<std::int64_t> ks;
  fuld::simulate(cfg, [&](const fuld::PhaseState& s) { ks.push_back(s.k); });
  REQUIRE(ks.size() == 11);
  for (std::size_t i = 0; i < ks.size(); ++i) CHECK(ks[i] == static_cast<std::int64_t>(100 * i));
}

TEST_CASE("UD divergence is reported with its iteration") {
  auto cfg = quartic(0.6, fuld::Integrator::ud);
  cfg.schedule = fuld::StepSchedule::constant(0.05);
  cfg.iterations = 200000;
  bool any = false;
  for (std::uint64_t i = 0; i < 10 && !any; ++i) {
    const auto sum = fuld::simulate(cfg, {}, i);
    if (sum.diverged) {
      any = true;
      CHECK(sum.divergence_index == sum.steps + 1);
      CHECK(sum.divergence_index <= cfg.iterations);
    }
  }
  CHECK(any);
}

TEST_CASE("ensembles are deterministic across runs and thread counts") {
  auto cfg = quartic(1.5);
  cfg.iterations = 3000;
  cfg.record_stride = 7;
  const auto a = fuld::simulate_ensemble(cfg, 5, 1);
  const auto b = fuld::simulate_ensemble(cfg, 5, 3);
  const auto c = fuld::simulate_ensemble(cfg, 5, 1);
  REQUIRE(a.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(a[i].id == i);
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].v == b[i].v);
    CHECK(a[i].k == b[i].k);
    CHECK(a[i].x == c[i].x);
  }
  CHECK(a[0].x != a[1].x);
  cfg.seed = 2;
  const auto d = fuld::simulate_ensemble(cfg, 1, 1);
  CHECK(d[0].x != a[0].x);
}

TEST_CASE("binary trajectory round trip") {
  auto cfg = quartic(1.5);
  cfg.potential = fuld::quartic_well(2);
  cfg.iterations = 200;
  const auto runs = fuld::simulate_ensemble(cfg, 3, 1);
  const auto dir = fs::temp_directory_path() / "fuld_test_dynamics";
  fs::create_directories(dir);
  fuld::write_trajectories_binary(runs, dir / "t.bin");
  const auto back = fuld::read_trajectories_binary(dir / "t.bin");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].id == runs[i].id);
    CHECK(back[i].dim == 2);
    CHECK(back[i].k == runs[i].k);
    CHECK(back[i].x == runs[i].x);
    CHECK(back[i].v == runs[i].v);
  }
  CHECK(back[2].position(5) == runs[2].position(5));
  {
    std::ofstream out(dir / "bad.bin", std::ios::binary);
    out << "FULDTABLE nope";
  }
  CHECK_THROWS_AS(fuld::read_trajectories_binary(dir / "bad.bin"), fuld::FormatError);
}

TEST_CASE("conformal field") {
  const Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(9, -2.0, 2.0);
  const Eigen::VectorXd vs = Eigen::VectorXd::LinSpaced(7, -3.0, 3.0);
  SUBCASE("alpha = 2 is the classical conformal Hamiltonian field") {
    const auto field = fuld::conformal_field(fuld::pure_quartic(), fuld::Kinetic::from_table(table(2.0)), 1.5, 2.0, xs, vs);
    REQUIRE(field.size() == 63);
    for (const auto& s : field) {
      CHECK(s.total_x == s.v);
      CHECK(s.total_v == doctest::Approx(-s.x * s.x * s.x - 1.5 * s.v).epsilon(1e-14));
      CHECK(s.diss_x == 0.0);
    }
    CHECK(field[1].x == xs[1]);
    CHECK(field[9].v == vs[1]);
  }
  SUBCASE("the origin is an equilibrium") {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
    for (auto kin : {fuld::Kinetic::from_table(table(1.5)), fuld::Kinetic::gaussian()}) {
      const auto f = fuld::conformal_field(fuld::pure_quartic(), kin, 1.0, 1.5, zero, zero);
      CHECK(f[0].total_x == 0.0);
      CHECK(f[0].total_v == 0.0);
    }
  }
  SUBCASE("Gaussian kinetic energy: inward dissipation and explosive nodes") {
    const Eigen::VectorXd wide = Eigen::VectorXd::LinSpaced(5, -80.0, 80.0);
    const auto f = fuld::conformal_field(fuld::pure_quartic(), fuld::Kinetic::gaussian(), 1.0, 1.7, xs, wide);
    int overflow = 0;
    for (const auto& s : f) {
      if (s.overflow) {
        ++overflow;
        CHECK(std::abs(s.v) >= 40.0);
        continue;
      }
      if (s.v != 0.0) CHECK(s.diss_v * s.v < 0.0);
      // The corrected drift grows faster than the linear friction.
      if (std::abs(s.v) > 1.0) CHECK(std::abs(s.diss_v) > std::abs(s.v));
      CHECK(s.ham_x == s.v);
    }
    CHECK(overflow > 0);
  }
  SUBCASE("needs a one-dimensional potential") {
    CHECK_THROWS_AS(fuld::conformal_field(fuld::pure_quartic(2), fuld::Kinetic::gaussian(), 1.0, 1.7, xs, vs),
                    fuld::DomainError);
  }
}

TEST_CASE("Gaussian-KE FULD step reports overflow as divergence") {
  auto cfg = quartic(1.5);
  cfg.kinetic = fuld::Kinetic::gaussian();
  const fuld::PhaseState s{vec({0.0}), vec({80.0}), 3};
  CHECK_THROWS_AS(fuld::fuld_step(s, cfg, vec({0.0})), fuld::DivergenceError);
}

TEST_CASE("potentials") {
  for (const auto& name : fuld::potential_names()) {
    CAPTURE(name);
    const auto p = fuld::lookup_potential(name, 3);
    CHECK(p.dim == 3);
    CHECK(fuld::gradient_check(p) < 1e-5);
  }
  CHECK(fuld::quartic_well().value(vec({1.0})) == -0.25);
  CHECK(fuld::quartic_well().gradient(vec({1.0}))[0] == 0.0);
  CHECK_THROWS_AS(fuld::lookup_potential("no-such"), fuld::ConfigError);

  fuld::Potential wrong;
  wrong.name = "wrong-gradient";
  wrong.value = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  wrong.gradient = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(x); };
  CHECK_THROWS_AS(fuld::register_potential(wrong), fuld::ConfigError);

  fuld::Potential right = wrong;
  right.name = "bowl";
  right.gradient = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); };
  CHECK_NOTHROW(fuld::register_potential(right));
  CHECK(fuld::lookup_potential("bowl").value(vec({3.0})) == 9.0);
}
