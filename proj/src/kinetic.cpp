#include "fuld/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "fuld/error.hpp"
#include "fuld/io.hpp"
#include "fuld/stable.hpp"

namespace fuld {

namespace {

constexpr std::string_view kTableMagic = "FULDKTBL";
constexpr std::uint32_t kTableVersion = 1;

KineticKind kind_for(double alpha) {
  if (alpha == 2.0) return KineticKind::gaussian;
  if (alpha == 1.0) return KineticKind::cauchy;
  return KineticKind::tabulated;
}

void finalize(KineticTable& t) {
  const Eigen::Index n = t.size();
  t.tail_coefficient = (t.kind == KineticKind::gaussian) ? 0.0 : std::abs(t.dg_values[n - 1]) * t.v_max;
  t.lipschitz = lipschitz_bound(t);
}

}  // namespace

double kinetic_sigma(double alpha) { return std::pow(alpha, -1.0 / alpha); }

double kinetic_gradient_exact(double alpha, double v) {
  const auto d = density(AlphaStable(alpha, kinetic_sigma(alpha)), v);
  return -d.dpsi / d.psi;
}

double KineticTable::dg(double v) const {
  switch (kind) {
    case KineticKind::gaussian:
      return v;
    case KineticKind::cauchy:
      return 2.0 * v / (1.0 + v * v);
    case KineticKind::tabulated:
      break;
  }
  if (std::abs(v) >= v_max) return std::copysign(tail_coefficient / std::abs(v), v);
  const double h = spacing();
  const double pos = (v + v_max) / h;
  const Eigen::Index last = grid.size() - 1;
  const auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), last - 1);
  const double frac = pos - static_cast<double>(i);
  return dg_values[i] + frac * (dg_values[i + 1] - dg_values[i]);
}

double KineticTable::g(double v) const {
  switch (kind) {
    case KineticKind::gaussian:
      return 0.5 * std::log(2.0 * std::numbers::pi) + 0.5 * v * v;
    case KineticKind::cauchy:
      return std::log(std::numbers::pi * (1.0 + v * v));
    case KineticKind::tabulated:
      break;
  }
  const Eigen::Index last = grid.size() - 1;
  if (std::abs(v) >= v_max) return g_values[last] + tail_coefficient * std::log(std::abs(v) / v_max);
  const double pos = (v + v_max) / spacing();
  const auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), last - 1);
  const double frac = pos - static_cast<double>(i);
  return g_values[i] + frac * (g_values[i + 1] - g_values[i]);
}

double KineticTable::sup_abs_dg() const {
  switch (kind) {
    case KineticKind::gaussian:
      return std::numeric_limits<double>::infinity();
    case KineticKind::cauchy:
      return 1.0;
    case KineticKind::tabulated:
      break;
  }
  return dg_values.cwiseAbs().maxCoeff();
}

KineticTable build_table(double alpha, double v_max, Eigen::Index n_points, unsigned threads) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("build_table: alpha must lie in (0, 2]");
  if (!(v_max >= 20.0)) throw DomainError("build_table: v_max must be at least 20");
  if (n_points < 4001) throw DomainError("build_table: n_points must be at least 4001");
  if (n_points % 2 == 0) ++n_points;

  KineticTable t;
  t.alpha = alpha;
  t.sigma = kinetic_sigma(alpha);
  t.v_max = v_max;
  t.kind = kind_for(alpha);
  t.grid = Eigen::VectorXd::LinSpaced(n_points, -v_max, v_max);
  t.g_values.resize(n_points);
  t.dg_values.resize(n_points);
  const Eigen::Index mid = n_points / 2;
  t.grid[mid] = 0.0;

  if (t.kind != KineticKind::tabulated) {
    for (Eigen::Index i = 0; i < n_points; ++i) {
      t.g_values[i] = t.g(t.grid[i]);
      t.dg_values[i] = t.dg(t.grid[i]);
    }
    finalize(t);
    return t;
  }

  const AlphaStable law(alpha, t.sigma);
  verify_switchover(law);
  // Evaluate v >= 0 and mirror: g is even, g' odd.
  auto fill = [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index j = begin; j < end; ++j) {
      const Eigen::Index i = mid + j;
      const double v = static_cast<double>(j) * (v_max / static_cast<double>(mid));
      const auto d = density(law, v);
      if (!(d.psi > 0.0)) throw NumericalError("build_table: non-positive density at v = " + std::to_string(v));
      t.g_values[i] = -std::log(d.psi);
      t.dg_values[i] = -d.dpsi / d.psi;
      t.g_values[mid - j] = t.g_values[i];
      t.dg_values[mid - j] = -t.dg_values[i];
    }
  };
  const Eigen::Index count = mid + 1;
  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(count));
  if (workers <= 1) {
    fill(0, count);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
      // Interleaved blocks balance the expensive small-|v| quadrature points.
      pool.emplace_back([&, w] {
        try {
          for (Eigen::Index b = static_cast<Eigen::Index>(w) * 256; b < count;
               b += static_cast<Eigen::Index>(workers) * 256) {
            fill(b, std::min(count, b + 256));
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  t.dg_values[mid] = 0.0;
  finalize(t);
  return t;
}

double lipschitz_bound(const KineticTable& t) {
  switch (t.kind) {
    case KineticKind::gaussian:
      return 1.0;
    case KineticKind::cauchy:
      return 2.0;
    case KineticKind::tabulated:
      break;
  }
  const double h = t.spacing();
  const Eigen::Index n = t.size();
  const double grid_max =
      ((t.dg_values.tail(n - 1) - t.dg_values.head(n - 1)) / h).cwiseAbs().maxCoeff();
  return std::max(grid_max, t.tail_coefficient / (t.v_max * t.v_max));
}

std::filesystem::path table_cache_path(const std::filesystem::path& cache_dir, double alpha, double v_max,
                                       Eigen::Index n_points) {
  if (n_points % 2 == 0) ++n_points;
  char name[160];
  std::snprintf(name, sizeof name, "kinetic_a%.17g_v%.17g_n%lld.bin", alpha, v_max,
                static_cast<long long>(n_points));
  return cache_dir / name;
}

void save_table(const KineticTable& t, const std::filesystem::path& path) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp);
    io::write_header(out, kTableMagic, kTableVersion);
    io::write_f64(out, t.alpha);
    io::write_f64(out, t.sigma);
    io::write_f64(out, t.v_max);
    io::write_u64(out, static_cast<std::uint64_t>(t.size()));
    io::write_f64s(out, std::span<const double>(t.g_values.data(), static_cast<std::size_t>(t.size())));
    io::write_f64s(out, std::span<const double>(t.dg_values.data(), static_cast<std::size_t>(t.size())));
    if (!out) throw FormatError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

KineticTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const auto version = io::read_header(in, kTableMagic);
  if (version != kTableVersion) throw FormatError("unsupported table version " + std::to_string(version));
  KineticTable t;
  t.alpha = io::read_f64(in);
  t.sigma = io::read_f64(in);
  t.v_max = io::read_f64(in);
  const auto n = static_cast<Eigen::Index>(io::read_u64(in));
  if (n < 3 || n % 2 == 0) throw FormatError("bad table size");
  t.kind = kind_for(t.alpha);
  t.grid = Eigen::VectorXd::LinSpaced(n, -t.v_max, t.v_max);
  t.grid[n / 2] = 0.0;
  t.g_values.resize(n);
  t.dg_values.resize(n);
  io::read_f64s(in, std::span<double>(t.g_values.data(), static_cast<std::size_t>(n)));
  io::read_f64s(in, std::span<double>(t.dg_values.data(), static_cast<std::size_t>(n)));
  finalize(t);
  return t;
}

KineticTable cached_table(double alpha, const std::filesystem::path& cache_dir, double v_max,
                          Eigen::Index n_points) {
  if (kind_for(alpha) != KineticKind::tabulated) return build_table(alpha, v_max, n_points);
  const auto path = table_cache_path(cache_dir, alpha, v_max, n_points);
  if (std::filesystem::exists(path)) {
    try {
      auto t = load_table(path);
      if (t.alpha == alpha && t.v_max == v_max && t.size() == (n_points | 1)) return t;
    } catch (const FormatError&) {
      // Stale or truncated cache entry; rebuild below.
    }
  }
  auto t = build_table(alpha, v_max, n_points);
  save_table(t, path);
  return t;
}

void export_table_csv(const KineticTable& t, const std::filesystem::path& path) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "v,g_alpha,dg_alpha\n";
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    out << io::format_double(t.grid[i]) << ',' << io::format_double(t.g_values[i]) << ','
        << io::format_double(t.dg_values[i]) << '\n';
  }
}

}  // namespace fuld
