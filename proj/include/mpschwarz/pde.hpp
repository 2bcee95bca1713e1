#pragma once

// 5-point finite-difference discretization of
//   eta(x) u - div(alpha(x) grad u) + b(x) . grad u = f
// on the unit square with homogeneous Dirichlet boundary: centered diffusion
// with harmonic-mean face coefficients, first-order upwind advection per
// component, reaction on the diagonal. Upwinding keeps the M-matrix sign
// pattern at every mesh Peclet number; the six built-in coefficient sets
// produce nonsymmetric M-matrices (1-3) and Stieltjes matrices (4-6).

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include "mpschwarz/grid.hpp"
#include "mpschwarz/linalg.hpp"
#include "mpschwarz/sparse.hpp"

namespace mpschwarz {

struct ProblemSpec {
  int id = 0;
  std::function<double(double, double)> eta;
  std::function<double(double, double)> alpha;
  std::function<double(double, double)> b1;
  std::function<double(double, double)> b2;
  double beta = 0.0;
  bool symmetric = false;  // b identically zero

  static ProblemSpec preset(int id) {
    ProblemSpec s;
    s.id = id;
    auto zero = [](double, double) { return 0.0; };
    auto disk_alpha = [](double x1, double x2) {
      const double dx = x1 - 0.5, dy = x2 - 0.1;
      return std::sqrt(dx * dx + dy * dy) < 0.25 ? 1e6 : 1.0;
    };
    switch (id) {
      case 1:
        s.eta = [](double x1, double x2) {
          const double c = std::cos(x1 + x2);
          return x1 * x1 * c * c;
        };
        s.alpha = [](double x1, double x2) {
          return 20.0 * (x1 + x2) * (x1 + x2) * std::exp(x1 - x2);
        };
        s.b1 = [](double, double x2) { return x2 - 0.5; };
        s.b2 = [](double x1, double) { return x1 - 0.5; };
        break;
      case 2:
      case 3:
        s.beta = 100.0;
        s.eta = zero;
        if (id == 2)
          s.alpha = [](double, double) { return 1.0; };
        else
          s.alpha = disk_alpha;
        s.b1 = [beta = s.beta](double x1, double x2) {
          return beta * (x1 * (x1 - 1.0) * (1.0 - 2.0 * x2));
        };
        s.b2 = [beta = s.beta](double x1, double x2) {
          return -beta * (x2 * (x2 - 1.0) * (1.0 - 2.0 * x1));
        };
        break;
      case 4:
        s.eta = [](double x1, double x2) {
          const double c = std::cos(x1 + x2);
          return x1 * x1 * c * c;
        };
        s.alpha = [](double x1, double x2) {
          return (x1 + x2) * (x1 + x2) * std::exp(x1 - x2);
        };
        s.b1 = zero;
        s.b2 = zero;
        s.symmetric = true;
        break;
      case 5:
        s.eta = [](double x1, double x2) { return 500.0 * x1 + x2; };
        s.alpha = [](double x1, double x2) { return 1.0 + 9.0 * (x1 + x2); };
        s.b1 = zero;
        s.b2 = zero;
        s.symmetric = true;
        break;
      case 6:
        s.eta = zero;
        s.alpha = disk_alpha;
        s.b1 = zero;
        s.b2 = zero;
        s.symmetric = true;
        break;
      default:
        throw std::invalid_argument("ProblemSpec::preset: id must be 1..6");
    }
    return s;
  }
};

namespace detail {

// Commutative in (a, b), so symmetric problems assemble bitwise symmetric.
inline double harmonic_mean(double a, double b) { return 2.0 / (1.0 / a + 1.0 / b); }

}  // namespace detail

inline SparseMatrix discretize(const ProblemSpec& spec, const GridSpec& grid) {
  if (grid.n < 3) throw std::invalid_argument("discretize: need n >= 3");
  const double h = grid.h;
  const double inv_h2 = 1.0 / (h * h);
  // Coefficients are sampled at integer-indexed coordinates so that the two
  // rows sharing a face see bitwise-identical values (symmetry for b == 0).
  auto alpha_at = [&](int ix, int iy) {
    return spec.alpha((ix + 1) * h, (iy + 1) * h);
  };
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(grid.total) * 5);
  for (int iy = 0; iy < grid.n; ++iy) {
    for (int ix = 0; ix < grid.n; ++ix) {
      const double x1 = grid.x1(ix), x2 = grid.x2(iy);
      const int row = grid.index(ix, iy);
      double diag = spec.eta(x1, x2);

      const double ac = alpha_at(ix, iy);
      const double aw = detail::harmonic_mean(ac, alpha_at(ix - 1, iy));
      const double ae = detail::harmonic_mean(ac, alpha_at(ix + 1, iy));
      const double as = detail::harmonic_mean(ac, alpha_at(ix, iy - 1));
      const double an = detail::harmonic_mean(ac, alpha_at(ix, iy + 1));
      diag += (aw + ae + as + an) * inv_h2;
      if (ix > 0) t.push_back({row, grid.index(ix - 1, iy), -aw * inv_h2});
      if (ix < grid.n - 1) t.push_back({row, grid.index(ix + 1, iy), -ae * inv_h2});
      if (iy > 0) t.push_back({row, grid.index(ix, iy - 1), -as * inv_h2});
      if (iy < grid.n - 1) t.push_back({row, grid.index(ix, iy + 1), -an * inv_h2});

      const double b1 = spec.b1(x1, x2);
      if (b1 > 0.0) {
        diag += b1 / h;
        if (ix > 0) t.push_back({row, grid.index(ix - 1, iy), -b1 / h});
      } else if (b1 < 0.0) {
        diag += -b1 / h;
        if (ix < grid.n - 1) t.push_back({row, grid.index(ix + 1, iy), b1 / h});
      }
      const double b2 = spec.b2(x1, x2);
      if (b2 > 0.0) {
        diag += b2 / h;
        if (iy > 0) t.push_back({row, grid.index(ix, iy - 1), -b2 / h});
      } else if (b2 < 0.0) {
        diag += -b2 / h;
        if (iy < grid.n - 1) t.push_back({row, grid.index(ix, iy + 1), b2 / h});
      }

      t.push_back({row, row, diag});
    }
  }
  SparseMatrix A = SparseMatrix::from_triplets(grid.total, std::move(t));
  const MMatrixReport check = is_m_matrix(A, MMatrixCheckMode::Sufficient);
  if (!check.is_m_matrix)
    throw std::runtime_error(
        "discretize: scheme produced a matrix failing the M-matrix "
        "sufficient condition (problem " +
        std::to_string(spec.id) + ", n=" + std::to_string(grid.n) + ")");
  return A;
}

// Deterministic right-hand side and initial approximation with entries
// uniform in (0,1): f first, then u0, from one seeded stream.
inline std::pair<Vector, Vector> make_rhs_and_init(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(
      std::nextafter(0.0, 1.0), 1.0);
  Vector f(n), u0(n);
  for (int i = 0; i < n; ++i) f[i] = dist(rng);
  for (int i = 0; i < n; ++i) u0[i] = dist(rng);
  return {std::move(f), std::move(u0)};
}

}  // namespace mpschwarz
