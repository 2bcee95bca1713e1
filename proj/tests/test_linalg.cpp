#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mpschwarz/linalg.hpp"

using namespace mpschwarz;

namespace {

SparseMatrix tridiag(int n, double lo, double di, double hi) {
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) {
    if (i > 0) t.push_back({i, i - 1, lo});
    t.push_back({i, i, di});
    if (i < n - 1) t.push_back({i, i + 1, hi});
  }
  return SparseMatrix::from_triplets(n, std::move(t));
}

SparseMatrix random_dd_mmatrix(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> off(0.0, 1.0);
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) {
    double row_off = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      if (off(rng) < 4.0 / n) {
        const double v = off(rng);
        t.push_back({i, j, -v});
        row_off += v;
      }
    }
    t.push_back({i, i, row_off + 0.5 + off(rng)});
  }
  return SparseMatrix::from_triplets(n, std::move(t));
}

}  // namespace

TEST_CASE("lu_factor: identity, known inverse column, singular input") {
  const LUFactors id = lu_factor(SparseMatrix::identity(4));
  Vector b(4);
  b << 1, 2, 3, 4;
  CHECK((id.solve(b) - b).norm() == 0.0);

  const LUFactors f = lu_factor(tridiag(4, -1, 2, -1));
  Vector e1 = Vector::Zero(4);
  e1[0] = 1.0;
  const Vector col = f.solve(e1);
  CHECK(col[0] == Catch::Approx(0.8).epsilon(1e-13));
  CHECK(col[1] == Catch::Approx(0.6).epsilon(1e-13));
  CHECK(col[2] == Catch::Approx(0.4).epsilon(1e-13));
  CHECK(col[3] == Catch::Approx(0.2).epsilon(1e-13));

  // Duplicate rows: rank deficient.
  SparseMatrix dup = SparseMatrix::from_triplets(
      3, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 1.0}, {1, 1, 2.0}, {2, 2, 1.0}});
  CHECK_THROWS_AS(lu_factor(dup), SingularMatrixError);

  Vector wrong(3);
  wrong << 1, 2, 3;
  CHECK_THROWS_AS(f.solve(wrong), std::invalid_argument);
}

TEST_CASE("solve-after-factor residual on random well-conditioned instances") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 10 + trial * 7;
    const SparseMatrix A = random_dd_mmatrix(n, rng);
    const LUFactors f = lu_factor(A);
    Vector x_true(n);
    for (int i = 0; i < n; ++i) x_true[i] = dist(rng);
    const Vector b = A.apply(x_true);
    const Vector x = f.solve(b);
    const MatrixNorms nm = norms(A);
    CHECK((A.apply(x) - b).norm() <= 1e-12 * nm.one_norm * x.norm() + 1e-14);
  }
}

TEST_CASE("is_m_matrix classification") {
  const SparseMatrix I = SparseMatrix::identity(3);
  CHECK(is_m_matrix(I, MMatrixCheckMode::Sufficient).is_m_matrix);
  CHECK(is_m_matrix(I, MMatrixCheckMode::Exact).is_m_matrix);

  const SparseMatrix good = SparseMatrix::from_triplets(
      2, {{0, 0, 2.0}, {0, 1, -1.0}, {1, 0, -1.0}, {1, 1, 2.0}});
  const MMatrixReport exact = is_m_matrix(good, MMatrixCheckMode::Exact);
  CHECK(exact.is_m_matrix);
  CHECK(exact.inverse_checked);

  const SparseMatrix bad = SparseMatrix::from_triplets(
      2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 1, 1.0}});
  CHECK_FALSE(is_m_matrix(bad, MMatrixCheckMode::Sufficient).is_m_matrix);
  CHECK_FALSE(is_m_matrix(bad, MMatrixCheckMode::Exact).is_m_matrix);

  // Weakly dominant but irreducible: the 1-D Laplacian.
  const MMatrixReport lap = is_m_matrix(tridiag(8, -1, 2, -1));
  CHECK(lap.is_m_matrix);
  CHECK_FALSE(lap.strictly_dominant);
  CHECK(lap.irreducibly_dominant);

  // Sufficiency direction: Sufficient true implies Exact true.
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const SparseMatrix A = random_dd_mmatrix(20, rng);
    if (is_m_matrix(A, MMatrixCheckMode::Sufficient).is_m_matrix)
      CHECK(is_m_matrix(A, MMatrixCheckMode::Exact).is_m_matrix);
  }

  CHECK_THROWS_AS(is_m_matrix(random_dd_mmatrix(20, rng), MMatrixCheckMode::Exact,
                              /*dense_cap=*/10),
                  DenseCapExceeded);
}

TEST_CASE("spectral radius: diagonal, nilpotent, Jacobi of the 1-D Laplacian") {
  DenseMatrix d = DenseMatrix::Zero(2, 2);
  d(0, 0) = 0.5;
  d(1, 1) = -0.25;
  CHECK(spectral_radius_dense(d) == Catch::Approx(0.5));

  DenseMatrix nil = DenseMatrix::Zero(2, 2);
  nil(0, 1) = 1.0;
  CHECK(spectral_radius_dense(nil) <= 1e-8);

  const SparseMatrix A = tridiag(9, -1, 2, -1);
  DenseMatrix T = DenseMatrix::Identity(9, 9) - 0.5 * A.to_dense();
  CHECK(spectral_radius_dense(T) ==
        Catch::Approx(std::cos(M_PI / 10.0)).epsilon(1e-10));
}

TEST_CASE("spectral radius below one iff powers decay") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double target : {0.5, 1.4}) {
    const int n = 40;
    DenseMatrix M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = dist(rng) / std::sqrt(double(n));
    const double rho = spectral_radius_dense(M);
    M *= target / rho;
    CHECK(spectral_radius_dense(M) == Catch::Approx(target).epsilon(1e-8));
    Vector v = Vector::Ones(n);
    for (int k = 0; k < 300; ++k) v = M * v;
    if (target < 1.0)
      CHECK(v.norm() < 1e-6);
    else
      CHECK(v.norm() > 1e6);
  }
}

TEST_CASE("norms: identity, diagonal, SVD oracle") {
  const MatrixNorms id = norms(SparseMatrix::identity(5));
  CHECK(id.two_norm_est == Catch::Approx(1.0).epsilon(1e-6));
  CHECK(id.one_norm == 1.0);
  CHECK(id.inf_norm == 1.0);
  CHECK(id.frobenius == Catch::Approx(std::sqrt(5.0)));

  const SparseMatrix d =
      SparseMatrix::from_triplets(2, {{0, 0, 3.0}, {1, 1, -4.0}});
  const MatrixNorms dn = norms(d);
  CHECK(dn.two_norm_est == Catch::Approx(4.0).epsilon(1e-6));
  CHECK(dn.one_norm == 4.0);
  CHECK(dn.inf_norm == 4.0);
  CHECK(dn.frobenius == Catch::Approx(5.0));

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  DenseMatrix R(50, 50);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) R(i, j) = dist(rng);
  const SparseMatrix Rs = SparseMatrix::from_dense(R);
  const double oracle = two_norm_dense(R);
  CHECK(norms(Rs, 1e-8, 5000).two_norm_est ==
        Catch::Approx(oracle).epsilon(1e-5));
}

TEST_CASE("simulated LU: exact at working precision, close at low precision") {
  std::mt19937_64 rng(19);
  const SparseMatrix A = random_dd_mmatrix(12, rng);
  Vector b(12);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int i = 0; i < 12; ++i) b[i] = dist(rng);

  const Vector x_exact = lu_factor(A).solve(b);
  const LUFactors f64 =
      lu_factor_simulated(A, FloatFormat::from_name("fp64"));
  CHECK((f64.solve(b) - x_exact).norm() <= 1e-13 * x_exact.norm());

  const LUFactors f4 = lu_factor_simulated(A, FloatFormat::decimal(4));
  const Vector x4 = f4.solve(b);
  CHECK((x4 - x_exact).norm() <= 1e-2 * x_exact.norm());
  CHECK((x4 - x_exact).norm() > 0.0);

  CHECK_THROWS_AS(
      lu_factor_simulated(A, FloatFormat::decimal(4), /*cap=*/4),
      DenseCapExceeded);
}

TEST_CASE("symmetric extremal eigenvalues: dense and Lanczos paths agree") {
  const SparseMatrix A = tridiag(60, -1, 2, -1);
  const SymmetricExtremes dense = symmetric_extremal_eigenvalues(A);
  const double lmin = 2.0 - 2.0 * std::cos(M_PI / 61.0);
  const double lmax = 2.0 - 2.0 * std::cos(60.0 * M_PI / 61.0);
  CHECK(dense.lambda_min == Catch::Approx(lmin).epsilon(1e-9));
  CHECK(dense.lambda_max == Catch::Approx(lmax).epsilon(1e-9));

  const SymmetricExtremes lanczos =
      symmetric_extremal_eigenvalues(A, /*cap=*/10, 1e-10, 200);
  CHECK(lanczos.lambda_min == Catch::Approx(lmin).epsilon(1e-6));
  CHECK(lanczos.lambda_max == Catch::Approx(lmax).epsilon(1e-6));
}
