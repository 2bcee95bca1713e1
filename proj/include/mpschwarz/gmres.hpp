#pragma once

// Left-preconditioned, restart-free GMRES with modified Gram-Schmidt Arnoldi
// and Givens-rotation least squares. Stops on the preconditioned relative
// residual; the true residual is available separately for diagnostics.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mpschwarz/schwarz.hpp"
#include "mpschwarz/sparse.hpp"

namespace mpschwarz {

struct GmresConfig {
  double tol = 1e-12;   // preconditioned relative residual
  int max_iters = 100;
  bool reorthogonalize = false;  // one extra MGS pass
};

struct GmresResult {
  Vector x;
  std::vector<double> residual_history;  // preconditioned, relative; entry 0 is 1
  int iters = 0;
  bool converged = false;
  bool breakdown = false;  // happy breakdown: exact solution reached
};

using PrecondAction = std::function<Vector(const Vector&)>;

inline GmresResult gmres_solve(const SparseMatrix& A, const PrecondAction& precond,
                               const Vector& f, const GmresConfig& cfg = {}) {
  if (cfg.tol <= 0.0 || cfg.max_iters < 1)
    throw std::invalid_argument("gmres_solve: bad config");
  const int n = A.size();
  if (f.size() != n) throw std::invalid_argument("gmres_solve: dimension mismatch");

  GmresResult out;
  out.x = Vector::Zero(n);
  const Vector r0 = precond(f);  // zero initial approximation
  const double beta = r0.norm();
  out.residual_history.push_back(1.0);
  if (beta == 0.0) {
    out.converged = true;
    return out;
  }

  const int m = cfg.max_iters;
  std::vector<Vector> basis;
  basis.reserve(m + 1);
  basis.push_back(r0 / beta);
  DenseMatrix H = DenseMatrix::Zero(m + 1, m);
  std::vector<double> cs(m, 0.0), sn(m, 0.0);
  Vector g = Vector::Zero(m + 1);
  g[0] = beta;

  int completed = 0;
  for (int j = 0; j < m; ++j) {
    Vector w = precond(A.apply(basis[j]));
    for (int i = 0; i <= j; ++i) {
      H(i, j) = basis[i].dot(w);
      w -= H(i, j) * basis[i];
    }
    if (cfg.reorthogonalize) {
      for (int i = 0; i <= j; ++i) {
        const double c = basis[i].dot(w);
        H(i, j) += c;
        w -= c * basis[i];
      }
    }
    H(j + 1, j) = w.norm();

    for (int i = 0; i < j; ++i) {
      const double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
      H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
      H(i, j) = t;
    }
    const double denom = std::hypot(H(j, j), H(j + 1, j));
    cs[j] = H(j, j) / denom;
    sn[j] = H(j + 1, j) / denom;
    H(j, j) = denom;
    g[j + 1] = -sn[j] * g[j];
    g[j] = cs[j] * g[j];

    const double rel = std::fabs(g[j + 1]) / beta;
    out.residual_history.push_back(rel);
    completed = j + 1;
    if (H(j + 1, j) == 0.0) {
      out.breakdown = true;
      out.converged = true;
      break;
    }
    basis.push_back(w / H(j + 1, j));
    if (rel <= cfg.tol) {
      out.converged = true;
      break;
    }
  }

  const int k = completed;
  out.iters = completed;
  if (k > 0) {
    Vector y(k);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int l = i + 1; l < k; ++l) s -= H(i, l) * y[l];
      y[i] = s / H(i, i);
    }
    for (int i = 0; i < k; ++i) out.x += y[i] * basis[i];
  }
  return out;
}

inline GmresResult gmres_solve(const SparseMatrix& A, const SchwarzOperator& precond,
                               const Vector& f, const GmresConfig& cfg = {}) {
  return gmres_solve(
      A, [&](const Vector& v) { return precond.apply_preconditioner(v); }, f, cfg);
}

// Unpreconditioned reference.
inline GmresResult gmres_solve_unpreconditioned(const SparseMatrix& A, const Vector& f,
                                                const GmresConfig& cfg = {}) {
  return gmres_solve(A, [](const Vector& v) { return v; }, f, cfg);
}

// True (unpreconditioned) relative residual.
inline double residual_check(const Vector& x, const SparseMatrix& A, const Vector& f) {
  const double fn = f.norm();
  if (fn == 0.0) return (A.apply(x)).norm();
  return (f - A.apply(x)).norm() / fn;
}

}  // namespace mpschwarz
