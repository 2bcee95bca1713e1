#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "mpschwarz/decomp.hpp"
#include "mpschwarz/pde.hpp"

using namespace mpschwarz;

namespace {

// Hager-style 1-norm condition estimate.
double cond1_estimate(const SparseMatrix& A) {
  const int n = A.size();
  const LUFactors f = lu_factor(A);
  const LUFactors ft = lu_factor(A.transpose());
  Vector x = Vector::Constant(n, 1.0 / n);
  double est = 0.0;
  for (int sweep = 0; sweep < 6; ++sweep) {
    const Vector w = f.solve(x);
    est = std::max(est, w.lpNorm<1>());
    Vector xi(n);
    for (int i = 0; i < n; ++i) xi[i] = w[i] >= 0 ? 1.0 : -1.0;
    const Vector z = ft.solve(xi);
    int jmax = 0;
    z.cwiseAbs().maxCoeff(&jmax);
    if (z.lpNorm<Eigen::Infinity>() <= z.dot(x)) break;
    x = Vector::Zero(n);
    x[jmax] = 1.0;
  }
  return est * norms(A).one_norm;
}

ProblemSpec constant_diffusion() {
  ProblemSpec s;
  s.id = 0;
  s.eta = [](double, double) { return 0.0; };
  s.alpha = [](double, double) { return 1.0; };
  s.b1 = [](double, double) { return 0.0; };
  s.b2 = [](double, double) { return 0.0; };
  s.symmetric = true;
  return s;
}

}  // namespace

TEST_CASE("constant coefficients reduce to the 5-point Laplacian") {
  const GridSpec grid(4);
  const SparseMatrix A = discretize(constant_diffusion(), grid);
  const double s = 1.0 / (grid.h * grid.h);
  CHECK(A.coeff(0, 0) == Catch::Approx(4.0 * s));
  CHECK(A.coeff(0, 1) == Catch::Approx(-s));
  CHECK(A.coeff(0, 4) == Catch::Approx(-s));
  CHECK(A.coeff(0, 2) == 0.0);
  CHECK(A.coeff(5, 5) == Catch::Approx(4.0 * s));
  CHECK(A.coeff(5, 4) == Catch::Approx(-s));
  CHECK(A.coeff(5, 6) == Catch::Approx(-s));
  CHECK(A.coeff(5, 1) == Catch::Approx(-s));
  CHECK(A.coeff(5, 9) == Catch::Approx(-s));
  CHECK(A.is_symmetric());
}

TEST_CASE("advection stencil matches an independent per-node assembly") {
  const GridSpec grid(3);
  const ProblemSpec p2 = ProblemSpec::preset(2);
  const SparseMatrix A = discretize(p2, grid);
  const double h = grid.h;

  DenseMatrix oracle = DenseMatrix::Zero(9, 9);
  auto harm = [](double a, double b) { return 2.0 / (1.0 / a + 1.0 / b); };
  for (int iy = 0; iy < 3; ++iy) {
    for (int ix = 0; ix < 3; ++ix) {
      const int r = iy * 3 + ix;
      const double x = grid.x1(ix), y = grid.x2(iy);
      const double ac = p2.alpha(x, y);
      const double fw = harm(ac, p2.alpha(x - h, y)) / (h * h);
      const double fe = harm(ac, p2.alpha(x + h, y)) / (h * h);
      const double fs = harm(ac, p2.alpha(x, y - h)) / (h * h);
      const double fn = harm(ac, p2.alpha(x, y + h)) / (h * h);
      oracle(r, r) += fw + fe + fs + fn + p2.eta(x, y);
      if (ix > 0) oracle(r, r - 1) -= fw;
      if (ix < 2) oracle(r, r + 1) -= fe;
      if (iy > 0) oracle(r, r - 3) -= fs;
      if (iy < 2) oracle(r, r + 3) -= fn;
      const double b1 = p2.b1(x, y), b2 = p2.b2(x, y);
      oracle(r, r) += (std::fabs(b1) + std::fabs(b2)) / h;
      if (b1 > 0 && ix > 0) oracle(r, r - 1) -= b1 / h;
      if (b1 < 0 && ix < 2) oracle(r, r + 1) += b1 / h;
      if (b2 > 0 && iy > 0) oracle(r, r - 3) -= b2 / h;
      if (b2 < 0 && iy < 2) oracle(r, r + 3) += b2 / h;
    }
  }
  const DenseMatrix D = A.to_dense();
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j)
      CHECK(D(i, j) == Catch::Approx(oracle(i, j)).margin(1e-9));

  // Row sums of the advection part are nonnegative (upwinding).
  SparseMatrix diff_only = discretize(constant_diffusion(), grid);
  const DenseMatrix Adv = D - diff_only.to_dense();
  for (int i = 0; i < 9; ++i) CHECK(Adv.row(i).sum() >= -1e-9);
}

TEST_CASE("all six problems give M-matrices; 4-6 are Stieltjes") {
  for (int id = 1; id <= 6; ++id) {
    CAPTURE(id);
    for (int n : {5, 12}) {
      const SparseMatrix A = discretize(ProblemSpec::preset(id), GridSpec(n));
      CHECK(is_m_matrix(A, MMatrixCheckMode::Sufficient).is_m_matrix);
      if (id >= 4) {
        CHECK(A.is_symmetric());
        CHECK(symmetric_extremal_eigenvalues(A).lambda_min > 0.0);
      } else {
        CHECK_FALSE(A.is_symmetric());
      }
    }
  }
}

TEST_CASE("manufactured solution converges under refinement") {
  auto solve_error = [](const ProblemSpec& spec, int n, bool with_advection) {
    const GridSpec grid(n);
    const SparseMatrix A = discretize(spec, grid);
    Vector f(grid.total), u_exact(grid.total);
    const double pi = M_PI;
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const double x = grid.x1(ix), y = grid.x2(iy);
        const double u = std::sin(pi * x) * std::sin(pi * y);
        const double ux = pi * std::cos(pi * x) * std::sin(pi * y);
        u_exact[grid.index(ix, iy)] = u;
        f[grid.index(ix, iy)] =
            2.0 * pi * pi * u + (with_advection ? ux : 0.0);
      }
    const Vector uh = lu_factor(A).solve(f);
    return (uh - u_exact).lpNorm<Eigen::Infinity>();
  };

  // Pure diffusion: second order.
  const ProblemSpec diff = constant_diffusion();
  const double e8 = solve_error(diff, 8, false);
  const double e16 = solve_error(diff, 16, false);
  const double e32 = solve_error(diff, 32, false);
  CHECK(e8 / e16 > 3.5);
  CHECK(e16 / e32 > 3.5);

  // Upwind advection limits the order to one (or better).
  ProblemSpec adv = constant_diffusion();
  adv.b1 = [](double, double) { return 1.0; };
  adv.symmetric = false;
  const double a16 = solve_error(adv, 16, true);
  const double a32 = solve_error(adv, 32, true);
  const double a64 = solve_error(adv, 64, true);
  CHECK(a16 / a32 > 1.6);
  CHECK(a32 / a64 > 1.6);
}

TEST_CASE("rhs and initial guess: deterministic, in (0,1), uniform") {
  const auto [f1, u1] = make_rhs_and_init(1000, 42);
  const auto [f2, u2] = make_rhs_and_init(1000, 42);
  CHECK(f1 == f2);
  CHECK(u1 == u2);
  const auto [f3, u3] = make_rhs_and_init(1000, 43);
  CHECK(f1 != f3);
  for (int i = 0; i < 1000; ++i) {
    CHECK(f1[i] > 0.0);
    CHECK(f1[i] < 1.0);
    CHECK(u1[i] > 0.0);
    CHECK(u1[i] < 1.0);
  }

  // Kolmogorov-Smirnov sanity at N = 10^4, alpha = 0.01.
  const int N = 10000;
  const auto [f, u0] = make_rhs_and_init(N, 7);
  std::vector<double> s(f.begin(), f.end());
  std::sort(s.begin(), s.end());
  double d = 0.0;
  for (int i = 0; i < N; ++i) {
    d = std::max(d, std::fabs((i + 1.0) / N - s[i]));
    d = std::max(d, std::fabs(s[i] - double(i) / N));
  }
  CHECK(d < 1.628 / std::sqrt(double(N)));
}

TEST_CASE("discretize rejects tiny grids") {
  CHECK_THROWS_AS(discretize(ProblemSpec::preset(1), GridSpec(2)),
                  std::invalid_argument);
}

TEST_CASE("jump-coefficient subdomain conditioning sits in the expected window") {
  const GridSpec grid(50);
  const SparseMatrix A = discretize(ProblemSpec::preset(3), grid);
  const Partition part = two_domain_partition(grid, 1);
  for (int i = 0; i < 2; ++i) {
    const SubdomainBlocks b = subdomain_blocks(A, part, i);
    const double kappa = cond1_estimate(b.A_sub);
    CAPTURE(i, kappa);
    CHECK(kappa > 1e8);
    CHECK(kappa < 1e12);
  }
}
