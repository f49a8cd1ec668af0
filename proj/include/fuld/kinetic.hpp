#pragma once

#include <Eigen/Core>

#include <filesystem>

namespace fuld {

// How g'_alpha is evaluated: closed forms exist at alpha = 1 (Cauchy,
// g' = 2v/(1+v^2)) and alpha = 2 (g' = v); all other tail indices go
// through the tabulated grid.
enum class KineticKind { tabulated, cauchy, gaussian };

inline constexpr double kDefaultVMax = 100.0;
inline constexpr Eigen::Index kDefaultTablePoints = 200001;

// SaS kinetic energy g_alpha = -log psi, psi the density of
// SaS(alpha^{-1/alpha}), tabulated on a uniform velocity grid. Immutable
// once built.
struct KineticTable {
  double alpha = 2.0;
  double sigma = 1.0;
  double v_max = kDefaultVMax;
  KineticKind kind = KineticKind::gaussian;
  Eigen::VectorXd grid;
  Eigen::VectorXd g_values;
  Eigen::VectorXd dg_values;
  // Beyond the grid g'(v) = sign(v) tail_coefficient / |v|, continuous at v_max.
  double tail_coefficient = 0.0;
  // Recorded lipschitz_bound(); sup |g''| estimate.
  double lipschitz = 1.0;

  Eigen::Index size() const { return grid.size(); }
  double spacing() const { return 2.0 * v_max / static_cast<double>(grid.size() - 1); }

  // g'_alpha(v): closed form, linear interpolation on the grid, or the tail model.
  double dg(double v) const;
  double g(double v) const;

  // sup_v |g'_alpha(v)|; infinite at alpha = 2.
  double sup_abs_dg() const;
};

// Scale of the kinetic-energy law, alpha^{-1/alpha}.
double kinetic_sigma(double alpha);

// g'_alpha(v) = -psi'/psi evaluated directly from the density (no table).
double kinetic_gradient_exact(double alpha, double v);

// Builds the table; alpha in {1, 2} fills the grid from the closed forms.
// Throws DomainError for alpha outside (0, 2], v_max < 20 or n_points < 4001
// (n_points is rounded up to the next odd count so that v = 0 is a node).
KineticTable build_table(double alpha, double v_max = kDefaultVMax,
                         Eigen::Index n_points = kDefaultTablePoints, unsigned threads = 0);

// Reads `cache_dir/<key>.bin` if present and matching, otherwise builds and
// writes it. Analytic tables bypass the cache.
KineticTable cached_table(double alpha, const std::filesystem::path& cache_dir,
                          double v_max = kDefaultVMax, Eigen::Index n_points = kDefaultTablePoints);

std::filesystem::path table_cache_path(const std::filesystem::path& cache_dir, double alpha,
                                       double v_max, Eigen::Index n_points);

void save_table(const KineticTable& table, const std::filesystem::path& path);
KineticTable load_table(const std::filesystem::path& path);

// Columns: v, g_alpha, dg_alpha.
void export_table_csv(const KineticTable& table, const std::filesystem::path& path);

// max over the grid of |(dg[i+1] - dg[i]) / h| together with the tail
// slope bound tail_coefficient / v_max^2; analytic values at alpha in {1, 2}.
double lipschitz_bound(const KineticTable& table);

// Coordinatewise g'_alpha.
template <typename Derived>
Eigen::VectorXd grad_G(const KineticTable& table, const Eigen::MatrixBase<Derived>& v) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = table.dg(v[i]);
  return out;
}

}  // namespace fuld
