#include "fuld/potential.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "fuld/error.hpp"
#include "fuld/random.hpp"

namespace fuld {

namespace {

template <typename F, typename DF>
Potential separable(std::string name, int dim, F f, DF df) {
  if (dim < 1) throw DomainError("potential dimension must be at least 1");
  Potential p;
  p.name = std::move(name);
  p.dim = dim;
  p.value = [f](const Eigen::VectorXd& x) { return x.unaryExpr(f).sum(); };
  p.gradient = [df](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x.unaryExpr(df); };
  return p;
}

struct Registry {
  std::mutex mutex;
  std::map<std::string, Potential> user;
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

Potential quartic_well(int dim) {
  return separable(
      "quartic-well", dim, [](double x) { return 0.25 * x * x * x * x - 0.5 * x * x; },
      [](double x) { return x * x * x - x; });
}

Potential pure_quartic(int dim) {
  return separable(
      "pure-quartic", dim, [](double x) { return 0.25 * x * x * x * x; }, [](double x) { return x * x * x; });
}

Potential cauchy_log(int dim) {
  return separable(
      "cauchy-log", dim, [](double x) { return std::log(std::numbers::pi * (x * x + 1.0)); },
      [](double x) { return 2.0 * x / (x * x + 1.0); });
}

double gradient_check(const Potential& p, int probes, double radius, std::uint64_t seed) {
  RandomStream rng(seed);
  double worst = 0.0;
  for (int k = 0; k < probes; ++k) {
    Eigen::VectorXd x(p.dim);
    for (int i = 0; i < p.dim; ++i) x[i] = rng.uniform(-radius, radius);
    const Eigen::VectorXd g = p.gradient(x);
    if (g.size() != p.dim) return std::numeric_limits<double>::infinity();
    for (int i = 0; i < p.dim; ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
      Eigen::VectorXd xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (p.value(xp) - p.value(xm)) / (2.0 * h);
      const double scale = std::max({1.0, std::abs(g[i]), std::abs(fd)});
      worst = std::max(worst, std::abs(fd - g[i]) / scale);
    }
  }
  return worst;
}

void register_potential(Potential p) {
  if (p.name.empty()) throw ConfigError("potential", "name must not be empty");
  if (!p.value || !p.gradient) throw ConfigError(p.name, "value and gradient are required");
  const double gap = gradient_check(p);
  if (!(gap <= 1e-5)) {
    throw ConfigError(p.name, "gradient disagrees with finite differences (relative gap " +
                                  std::to_string(gap) + ")");
  }
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  r.user[p.name] = std::move(p);
}

Potential lookup_potential(const std::string& name, int dim) {
  if (name == "quartic-well") return quartic_well(dim);
  if (name == "pure-quartic") return pure_quartic(dim);
  if (name == "cauchy-log") return cauchy_log(dim);
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  const auto it = r.user.find(name);
  if (it == r.user.end()) throw ConfigError("potential", "unknown potential '" + name + "'");
  if (it->second.dim != dim) {
    throw ConfigError("dim", "potential '" + name + "' has dimension " + std::to_string(it->second.dim));
  }
  return it->second;
}

std::vector<std::string> potential_names() {
  std::vector<std::string> out{"cauchy-log", "pure-quartic", "quartic-well"};
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  for (const auto& [name, _] : r.user) out.push_back(name);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace fuld
