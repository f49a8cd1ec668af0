#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fuld/error.hpp"
#include "fuld/io.hpp"
#include "fuld/kinetic.hpp"
#include "fuld/random.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kCache = FULD_TEST_CACHE;

const fuld::KineticTable& table(double alpha) {
  static std::map<double, fuld::KineticTable> built;
  auto it = built.find(alpha);
  if (it == built.end()) it = built.emplace(alpha, fuld::cached_table(alpha, kCache)).first;
  return it->second;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "fuld_test_kinetic";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("build_table validates its inputs") {
  CHECK_THROWS_AS(fuld::build_table(0.0), fuld::DomainError);
  CHECK_THROWS_AS(fuld::build_table(2.5), fuld::DomainError);
  CHECK_THROWS_AS(fuld::build_table(1.5, 10.0), fuld::DomainError);
  CHECK_THROWS_AS(fuld::build_table(1.5, 100.0, 1000), fuld::DomainError);
}

TEST_CASE("analytic bypasses") {
  const auto g = fuld::build_table(2.0);
  CHECK(g.kind == fuld::KineticKind::gaussian);
  CHECK(g.dg_values == g.grid);
  CHECK(fuld::grad_G(g, Eigen::Vector2d(3.0, -4.0)) == Eigen::VectorXd(Eigen::Vector2d(3.0, -4.0)));
  CHECK(fuld::lipschitz_bound(g) == 1.0);

  const auto c = fuld::build_table(1.0);
  CHECK(c.kind == fuld::KineticKind::cauchy);
  CHECK(c.dg(1.0) == 1.0);
  const Eigen::VectorXd r = fuld::grad_G(c, Eigen::Vector2d(1.0, 2.0));
  CHECK(r[0] == 1.0);
  CHECK(r[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(fuld::lipschitz_bound(c) == 2.0);
  CHECK(c.sup_abs_dg() == 1.0);
  for (Eigen::Index i = 0; i < c.size(); i += 997) CHECK(c.dg_values[i] == 2.0 * c.grid[i] / (1.0 + c.grid[i] * c.grid[i]));
}

TEST_CASE("tabulated gradient matches the exact -psi'/psi") {
  const auto& t = table(1.5);
  CHECK(t.kind == fuld::KineticKind::tabulated);
  CHECK(t.sigma == doctest::Approx(std::pow(1.5, -1.0 / 1.5)));
  for (double v : {0.0, 0.2, 1.0, 3.3, 7.0, 15.0, 60.0, 99.0}) {
    const auto d = oracle::contour_density(1.5, t.sigma, v);
    const double want = double(-d.dpsi / d.psi);
    CHECK(std::abs(fuld::kinetic_gradient_exact(1.5, v) - want) < 1e-9);
    // Interpolation error is O(h^2 g''') with h = 1e-3.
    CHECK(std::abs(t.dg(v) - want) < 1e-6);
  }
}

TEST_CASE("tail model beyond the grid") {
  const auto& t = table(1.5);
  const auto d = oracle::contour_density(1.5, t.sigma, 1000.0);
  const double want = double(-d.dpsi / d.psi);
  CHECK(want == doctest::Approx(0.0025).epsilon(0.01));
  CHECK(std::abs(t.dg(1000.0) - want) < 5e-3 * want);
  CHECK(t.dg(-1000.0) == -t.dg(1000.0));
  CHECK(t.tail_coefficient == doctest::Approx(2.5).epsilon(0.01));
  // Continuous at the edge.
  CHECK(std::abs(t.dg(t.v_max) - t.dg(std::nextafter(t.v_max, 0.0))) < 1e-12);
}

TEST_CASE("zero at the origin and oddness") {
  for (double alpha : {0.5, 1.5, 1.7, 1.9}) {
    CAPTURE(alpha);
    const auto& t = table(alpha);
    CHECK(fuld::grad_G(t, Eigen::Vector3d::Zero()) == Eigen::VectorXd(Eigen::Vector3d::Zero()));
    const Eigen::Index n = t.size();
    bool odd = true;
    for (Eigen::Index i = 0; i < n; ++i) odd = odd && t.dg_values[i] == -t.dg_values[n - 1 - i];
    CHECK(odd);
    for (double v : {0.37, 12.0, 150.0}) CHECK(t.dg(-v) == -t.dg(v));
  }
}

TEST_CASE("slopes are bounded by the recorded Lipschitz constant") {
  for (double alpha : {0.5, 1.0, 1.5, 1.9}) {
    CAPTURE(alpha);
    const auto& t = table(alpha);
    const double L = fuld::lipschitz_bound(t);
    CHECK(L == t.lipschitz);
    CHECK(std::isfinite(L));
    fuld::RandomStream rng(17);
    double worst = 0.0;
    for (int k = 0; k < 200000; ++k) {
      // Mix near-origin, grid-scale and tail-scale pairs.
      const double scale = k % 3 == 0 ? 2.0 : k % 3 == 1 ? 120.0 : 1e4;
      const double a = rng.uniform(-scale, scale);
      const double b = a + rng.uniform(-1.0, 1.0) * (k % 2 ? 1e-3 : 1.0);
      if (a == b) continue;
      worst = std::max(worst, std::abs(t.dg(a) - t.dg(b)) / std::abs(a - b));
    }
    CHECK(worst <= L * (1.0 + 1e-9));
  }
}

TEST_CASE("Lipschitz bound is stable under grid refinement") {
  const auto coarse = fuld::cached_table(1.5, kCache);
  const auto fine = fuld::cached_table(1.5, kCache, 100.0, 400001);
  CHECK(std::abs(fine.lipschitz - coarse.lipschitz) < 0.01 * coarse.lipschitz);
}

TEST_CASE("gradient vanishes at large speed and is linear near zero") {
  for (double alpha : {0.5, 1.0, 1.5, 1.9}) {
    CAPTURE(alpha);
    const auto& t = table(alpha);
    CHECK(std::abs(t.dg(t.v_max)) < 0.1);
    CHECK(std::abs(t.dg(1e8)) < 1e-7);
    const double ref = t.dg(1e-4) / 1e-4;
    CHECK(ref > 0.0);
    for (double v = 2e-4; v < 0.01; v *= 1.5) {
      CHECK(std::abs(t.dg(v) / v - ref) < 0.05 * ref);
      CHECK(std::abs(t.dg(-v) / -v - ref) < 0.05 * ref);
    }
  }
}

TEST_CASE("alpha close to 2 is close to the identity") {
  const auto& t = table(1.999);
  double worst = 0.0;
  for (double v = -5.0; v <= 5.0; v += 0.001) worst = std::max(worst, std::abs(t.dg(v) - v));
  CHECK(worst < 0.05);
}

TEST_CASE("alpha = 1.999: Gaussian core, power-law shoulder") {
  const auto& t = table(1.999);
  double core = 0.0;
  for (double v = -3.0; v <= 3.0; v += 0.001) core = std::max(core, std::abs(t.dg(v) - v));
  CHECK(core < 0.05);
  // Past |v| ~ 3.6 the (2 - alpha) tail term of psi overtakes the Gaussian
  // core and g' turns over towards (1 + alpha)/v; the oracle agrees.
  for (double v : {3.5, 4.0, 4.5, 5.0}) {
    const auto d = oracle::contour_density(1.999, t.sigma, v);
    CHECK(std::abs(t.dg(v) - double(-d.dpsi / d.psi)) < 1e-6);
  }
  CHECK(t.dg(5.0) < 2.0);
}

TEST_CASE("g' matches finite differences of g") {
  for (double alpha : {0.5, 1.5, 1.9}) {
    CAPTURE(alpha);
    const auto& t = table(alpha);
    const double h = t.spacing();
    double worst = 0.0;
    for (Eigen::Index i = 1; i + 1 < t.size(); ++i) {
      worst = std::max(worst, std::abs((t.g_values[i + 1] - t.g_values[i - 1]) / (2.0 * h) - t.dg_values[i]));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("cache round trip") {
  const auto t = fuld::build_table(1.3, 20.0, 4001);
  const auto path = scratch("t.bin");
  fuld::save_table(t, path);
  const auto back = fuld::load_table(path);
  CHECK(back.alpha == t.alpha);
  CHECK(back.sigma == t.sigma);
  CHECK(back.v_max == t.v_max);
  CHECK(back.grid == t.grid);
  CHECK(back.g_values == t.g_values);
  CHECK(back.dg_values == t.dg_values);
  CHECK(back.tail_coefficient == t.tail_coefficient);
  CHECK(back.lipschitz == t.lipschitz);

  SUBCASE("corrupt files are rejected") {
    {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      out << "NOTATABLE";
    }
    CHECK_THROWS_AS(fuld::load_table(path), fuld::FormatError);
    std::error_code ec;
    fs::resize_file(path, 0, ec);
    CHECK_THROWS_AS(fuld::load_table(path), fuld::FormatError);
  }
  SUBCASE("cached_table rebuilds a damaged entry") {
    const auto dir = scratch("cache");
    fs::remove_all(dir);
    const auto first = fuld::cached_table(1.3, dir, 20.0, 4001);
    const auto file = fuld::table_cache_path(dir, 1.3, 20.0, 4001);
    CHECK(fs::exists(file));
    fs::resize_file(file, 100);
    const auto second = fuld::cached_table(1.3, dir, 20.0, 4001);
    CHECK(second.dg_values == first.dg_values);
  }
}

TEST_CASE("CSV export") {
  const auto t = fuld::build_table(1.0, 20.0, 4001);
  const auto path = scratch("t.csv");
  fuld::export_table_csv(t, path);
  const auto csv = fuld::io::read_csv(path);
  REQUIRE(csv.header == std::vector<std::string>{"v", "g_alpha", "dg_alpha"});
  REQUIRE(csv.rows.size() == 4001);
  CHECK(csv.number(2000, "v") == 0.0);
  CHECK(csv.number(3000, "dg_alpha") == t.dg_values[3000]);
  CHECK(csv.number(17, "g_alpha") == t.g_values[17]);
}

TEST_CASE("thread count does not change the table") {
  const auto a = fuld::build_table(1.7, 20.0, 4001, 1);
  const auto b = fuld::build_table(1.7, 20.0, 4001, 3);
  CHECK(a.dg_values == b.dg_values);
  CHECK(a.g_values == b.g_values);
}
