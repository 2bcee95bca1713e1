#pragma once

// Working-precision factorizations, solves, norms, spectral quantities and
// M-matrix classification. Dense eigenvalue/SVD work and the sparse LU are
// delegated to Eigen behind the interfaces here; everything dense is gated
// by an explicit size cap so that untenable exact checks fail loudly instead
// of silently stalling.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpschwarz/float_format.hpp"
#include "mpschwarz/sparse.hpp"

namespace mpschwarz {

inline constexpr int kDefaultDenseCap = 3000;

class DenseCapExceeded : public std::runtime_error {
 public:
  DenseCapExceeded(const std::string& what, int n, int cap)
      : std::runtime_error(what + ": dimension " + std::to_string(n) +
                           " exceeds dense cap " + std::to_string(cap)) {}
};

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Simulated low-precision arithmetic: every elementary operation is rounded
// back into fmt. Used by the fully simulated solve mode.

struct ChoppedArith {
  FloatFormat fmt;
  mutable long overflow_count = 0;

  double chop(double x) const {
    RoundResult r = round_scalar(x, fmt, RoundMode::Nearest);
    if (r.overflow) ++overflow_count;
    return r.value;
  }
  double add(double a, double b) const { return chop(a + b); }
  double sub(double a, double b) const { return chop(a - b); }
  double mul(double a, double b) const { return chop(a * b); }
  double div(double a, double b) const { return chop(a / b); }
};

// ---------------------------------------------------------------------------
// LU factorization. The working-precision path is a sparse LU with partial
// pivoting; the simulated path is a dense LU with every flop of the
// factorization and of the triangular solves rounded to the tagged format.

class LUFactors {
 public:
  LUFactors() = default;

  const FloatFormat& precision() const { return precision_; }
  int size() const { return n_; }

  Vector solve(const Vector& b) const {
    if (b.size() != n_)
      throw std::invalid_argument("LUFactors::solve: dimension mismatch");
    if (sparse_) {
      Vector x = sparse_->solve(b);
      if (sparse_->info() != Eigen::Success)
        throw SingularMatrixError("LUFactors::solve: backend solve failed");
      return x;
    }
    return solve_simulated(b);
  }

  DenseMatrix solve_dense(const DenseMatrix& B) const {
    if (B.rows() != n_)
      throw std::invalid_argument("LUFactors::solve_dense: dimension mismatch");
    if (sparse_) {
      DenseMatrix X = sparse_->solve(B);
      if (sparse_->info() != Eigen::Success)
        throw SingularMatrixError("LUFactors::solve_dense: backend solve failed");
      return X;
    }
    DenseMatrix X(n_, B.cols());
    for (int j = 0; j < B.cols(); ++j) X.col(j) = solve_simulated(B.col(j));
    return X;
  }

  static LUFactors factor(const SparseMatrix& M) {
    LUFactors f;
    f.n_ = M.size();
    f.precision_ = FloatFormat::from_name("fp64");
    f.sparse_ = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    Eigen::SparseMatrix<double> em = M.to_eigen();
    em.makeCompressed();
    f.sparse_->compute(em);
    if (f.sparse_->info() != Eigen::Success)
      throw SingularMatrixError("lu_factor: matrix is singular");
    return f;
  }

  // Dense LU with partial pivoting executed entirely in fmt arithmetic.
  static LUFactors factor_simulated(const SparseMatrix& M,
                                    const FloatFormat& fmt,
                                    int cap = kDefaultDenseCap) {
    const int n = M.size();
    if (n > cap) throw DenseCapExceeded("lu_factor_simulated", n, cap);
    LUFactors f;
    f.n_ = n;
    f.precision_ = fmt;
    f.arith_ = ChoppedArith{fmt};
    DenseMatrix lu = M.to_dense();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) lu(i, j) = f.arith_->chop(lu(i, j));
    f.perm_.resize(n);
    for (int i = 0; i < n; ++i) f.perm_[i] = i;
    for (int k = 0; k < n; ++k) {
      int piv = k;
      for (int i = k + 1; i < n; ++i)
        if (std::fabs(lu(i, k)) > std::fabs(lu(piv, k))) piv = i;
      if (lu(piv, k) == 0.0)
        throw SingularMatrixError(
            "lu_factor_simulated: zero pivot at column " + std::to_string(k));
      if (piv != k) {
        lu.row(piv).swap(lu.row(k));
        std::swap(f.perm_[piv], f.perm_[k]);
      }
      for (int i = k + 1; i < n; ++i) {
        const double lik = f.arith_->div(lu(i, k), lu(k, k));
        lu(i, k) = lik;
        if (lik == 0.0) continue;
        for (int j = k + 1; j < n; ++j)
          lu(i, j) = f.arith_->sub(lu(i, j), f.arith_->mul(lik, lu(k, j)));
      }
    }
    f.dense_lu_ = std::make_shared<DenseMatrix>(std::move(lu));
    return f;
  }

  long simulated_overflow_count() const {
    return arith_ ? arith_->overflow_count : 0;
  }

 private:
  Vector solve_simulated(const Vector& b) const {
    const DenseMatrix& lu = *dense_lu_;
    const ChoppedArith& a = *arith_;
    Vector x(n_);
    for (int i = 0; i < n_; ++i) x[i] = a.chop(b[perm_[i]]);
    for (int i = 0; i < n_; ++i) {
      double s = x[i];
      for (int j = 0; j < i; ++j) s = a.sub(s, a.mul(lu(i, j), x[j]));
      x[i] = s;
    }
    for (int i = n_ - 1; i >= 0; --i) {
      double s = x[i];
      for (int j = i + 1; j < n_; ++j) s = a.sub(s, a.mul(lu(i, j), x[j]));
      x[i] = a.div(s, lu(i, i));
    }
    return x;
  }

  int n_ = 0;
  FloatFormat precision_;
  std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> sparse_;
  std::shared_ptr<DenseMatrix> dense_lu_;
  std::vector<int> perm_;
  mutable std::optional<ChoppedArith> arith_;
};

inline LUFactors lu_factor(const SparseMatrix& M) { return LUFactors::factor(M); }

inline LUFactors lu_factor_simulated(const SparseMatrix& M,
                                     const FloatFormat& fmt,
                                     int cap = kDefaultDenseCap) {
  return LUFactors::factor_simulated(M, fmt, cap);
}

inline Vector solve(const LUFactors& f, const Vector& b) { return f.solve(b); }

// ---------------------------------------------------------------------------
// Norms.

struct MatrixNorms {
  double two_norm_est = 0.0;
  bool two_norm_converged = true;
  double one_norm = 0.0;
  double inf_norm = 0.0;
  double frobenius = 0.0;
};

// 1/inf/Frobenius exactly; 2-norm by power iteration on M^T M.
inline MatrixNorms norms(const SparseMatrix& M, double rel_tol = 1e-6,
                         int max_sweeps = 1000) {
  MatrixNorms out;
  const int n = M.size();
  std::vector<double> col_sums(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (int k = M.row_ptr()[i]; k < M.row_ptr()[i + 1]; ++k) {
      const double a = std::fabs(M.values()[k]);
      row_sum += a;
      col_sums[M.col_idx()[k]] += a;
      out.frobenius += M.values()[k] * M.values()[k];
    }
    out.inf_norm = std::max(out.inf_norm, row_sum);
  }
  for (double c : col_sums) out.one_norm = std::max(out.one_norm, c);
  out.frobenius = std::sqrt(out.frobenius);

  if (n == 0 || M.nnz() == 0) return out;
  const SparseMatrix Mt = M.transpose();
  Vector v = Vector::Ones(n) / std::sqrt(double(n));
  double sigma = 0.0;
  out.two_norm_converged = false;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    Vector w = Mt.apply(M.apply(v));
    const double nw = w.norm();
    if (nw == 0.0) {
      sigma = 0.0;
      out.two_norm_converged = true;
      break;
    }
    const double sigma_new = std::sqrt(nw);
    v = w / nw;
    if (std::fabs(sigma_new - sigma) <= rel_tol * sigma_new) {
      sigma = sigma_new;
      out.two_norm_converged = true;
      break;
    }
    sigma = sigma_new;
  }
  out.two_norm_est = sigma;
  return out;
}

inline double two_norm_dense(const DenseMatrix& M) {
  if (M.rows() == 0 || M.cols() == 0) return 0.0;
  Eigen::BDCSVD<DenseMatrix> svd(M);
  return svd.singularValues()(0);
}

// ---------------------------------------------------------------------------
// Spectral quantities (dense, cap-gated).

inline double spectral_radius_dense(const DenseMatrix& M,
                                    int cap = kDefaultDenseCap) {
  if (M.rows() != M.cols())
    throw std::invalid_argument("spectral_radius_dense: square input required");
  if (M.rows() > cap)
    throw DenseCapExceeded("spectral_radius_dense", int(M.rows()), cap);
  if (M.rows() == 0) return 0.0;
  Eigen::EigenSolver<DenseMatrix> es(M, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline double spectral_radius_dense(const SparseMatrix& M,
                                    int cap = kDefaultDenseCap) {
  if (M.size() > cap) throw DenseCapExceeded("spectral_radius_dense", M.size(), cap);
  return spectral_radius_dense(M.to_dense(), cap);
}

// Extremal eigenvalues of a symmetric matrix: dense below the cap, Lanczos
// with full reorthogonalization above it.
struct SymmetricExtremes {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  bool converged = true;
};

inline SymmetricExtremes symmetric_extremal_eigenvalues(
    const SparseMatrix& M, int cap = kDefaultDenseCap, double tol = 1e-8,
    int max_iters = 500) {
  const int n = M.size();
  if (n == 0) return {};
  if (n <= cap) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(M.to_dense(),
                                                  Eigen::EigenvaluesOnly);
    return {es.eigenvalues()(0), es.eigenvalues()(n - 1), true};
  }
  // Lanczos with full reorthogonalization; the extremal Ritz pairs converge
  // when their residual estimate |beta_j * (last Ritz-vector component)|
  // drops below tol relative to the eigenvalue scale.
  const int m = std::min(n, max_iters);
  std::vector<Vector> basis;
  basis.reserve(m);
  Vector v = Vector::Ones(n);
  for (int i = 0; i < n; ++i) v[i] += 1e-3 * std::sin(1.0 + i);
  v.normalize();
  std::vector<double> alpha, beta;
  SymmetricExtremes out;
  out.converged = false;
  for (int j = 0; j < m; ++j) {
    basis.push_back(v);
    Vector w = M.apply(v);
    alpha.push_back(v.dot(w));
    for (const Vector& q : basis) w -= q.dot(w) * q;
    for (const Vector& q : basis) w -= q.dot(w) * q;
    const double b = w.norm();
    const int k = j + 1;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(T);
    out.lambda_min = es.eigenvalues()(0);
    out.lambda_max = es.eigenvalues()(k - 1);
    const double scale =
        std::max({std::fabs(out.lambda_min), std::fabs(out.lambda_max), 1e-300});
    const double res_min = b * std::fabs(es.eigenvectors()(k - 1, 0));
    const double res_max = b * std::fabs(es.eigenvectors()(k - 1, k - 1));
    if (b == 0.0 || k == n ||
        std::max(res_min, res_max) <= tol * scale) {
      out.converged = true;
      break;
    }
    beta.push_back(b);
    v = w / b;
  }
  return out;
}

// ---------------------------------------------------------------------------
// M-matrix classification.

enum class MMatrixCheckMode { Sufficient, Exact };

struct MMatrixReport {
  bool is_m_matrix = false;
  bool sign_pattern_ok = false;      // nonpositive off-diagonal, positive diagonal
  bool strictly_dominant = false;    // strict row dominance everywhere
  bool irreducibly_dominant = false; // weak dominance, strict somewhere, irreducible
  bool inverse_nonneg = false;       // Exact mode only
  bool inverse_checked = false;
  std::string detail;
};

namespace detail {

inline bool strongly_connected(const SparseMatrix& M) {
  const int n = M.size();
  if (n <= 1) return true;
  auto reach_all = [n](const SparseMatrix& G) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      for (int k = G.row_ptr()[i]; k < G.row_ptr()[i + 1]; ++k) {
        const int j = G.col_idx()[k];
        if (!seen[j] && G.values()[k] != 0.0) {
          seen[j] = 1;
          ++count;
          stack.push_back(j);
        }
      }
    }
    return count == n;
  };
  return reach_all(M) && reach_all(M.transpose());
}

}  // namespace detail

// Sufficient mode accepts strict row diagonal dominance, or weak dominance
// with at least one strict row on an irreducible pattern; both are classical
// sufficient conditions given the sign pattern. Exact mode additionally
// verifies the inverse entrywise (dense, cap-gated).
inline MMatrixReport is_m_matrix(const SparseMatrix& M,
                                 MMatrixCheckMode mode = MMatrixCheckMode::Sufficient,
                                 int dense_cap = kDefaultDenseCap) {
  MMatrixReport rep;
  const int n = M.size();
  bool signs_ok = true, weak_all = true, strict_all = true, strict_any = false;
  for (int i = 0; i < n && signs_ok; ++i) {
    double diag = 0.0, off = 0.0;
    for (int k = M.row_ptr()[i]; k < M.row_ptr()[i + 1]; ++k) {
      const int j = M.col_idx()[k];
      const double v = M.values()[k];
      if (j == i) {
        diag = v;
      } else {
        if (v > 0.0) signs_ok = false;
        off += std::fabs(v);
      }
    }
    if (diag <= 0.0) signs_ok = false;
    // Dominance up to accumulation noise: exactly-zero row sums land within a
    // few ulps of either side after assembly.
    const double tau = 1e-14 * (diag + off);
    if (diag < off - tau) weak_all = false;
    if (diag <= off + tau) strict_all = false;
    if (diag > off + tau) strict_any = true;
  }
  rep.sign_pattern_ok = signs_ok;
  rep.strictly_dominant = signs_ok && strict_all && n > 0;
  rep.irreducibly_dominant = signs_ok && weak_all && strict_any &&
                             detail::strongly_connected(M);
  const bool sufficient = rep.strictly_dominant || rep.irreducibly_dominant;

  if (mode == MMatrixCheckMode::Sufficient) {
    rep.is_m_matrix = sufficient;
    rep.detail = sufficient ? "sufficient condition holds"
                            : "sufficient condition not established";
    return rep;
  }

  if (!signs_ok) {
    rep.is_m_matrix = false;
    rep.detail = "sign pattern violated";
    return rep;
  }
  if (n > dense_cap) throw DenseCapExceeded("is_m_matrix(Exact)", n, dense_cap);
  Eigen::PartialPivLU<DenseMatrix> lu(M.to_dense());
  const DenseMatrix inv = lu.inverse();
  if (!inv.allFinite())
    throw SingularMatrixError("is_m_matrix(Exact): singular matrix");
  const double tau_neg = 1e-12 * inv.cwiseAbs().maxCoeff();
  rep.inverse_checked = true;
  rep.inverse_nonneg = (inv.array() >= -tau_neg).all();
  rep.is_m_matrix = rep.inverse_nonneg;
  rep.detail = rep.is_m_matrix ? "inverse entrywise nonnegative"
                               : "inverse has negative entries";
  return rep;
}

}  // namespace mpschwarz
