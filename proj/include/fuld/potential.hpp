#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace fuld {

// Potential energy f : R^d -> R with its gradient.
struct Potential {
  std::string name;
  int dim = 1;
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  bool analytic = true;
};

// Separable potentials sum the 1-D profile over coordinates.
Potential quartic_well(int dim = 1);   // x^4/4 - x^2/2
Potential pure_quartic(int dim = 1);   // x^4/4
Potential cauchy_log(int dim = 1);     // -log(1/(pi (x^2 + 1)))

// Largest relative gap between `p.gradient` and central differences of
// `p.value` over `probes` random points in [-radius, radius]^d.
double gradient_check(const Potential& p, int probes = 32, double radius = 3.0, std::uint64_t seed = 1);

// Named registry. Registration runs gradient_check and throws ConfigError
// when the gap exceeds 1e-5.
void register_potential(Potential p);
Potential lookup_potential(const std::string& name, int dim = 1);
std::vector<std::string> potential_names();

}  // namespace fuld
