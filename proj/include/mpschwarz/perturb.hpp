#pragma once

// Perturbation analysis companions: the dense error matrix E between the
// full-precision and multiprecision preconditioned systems
// (M_mp^{-1}A = M^{-1}A + E), its structural assembly from the per-subdomain
// matrices script-E_i, the norm bound ||E_AS,theta|| <= 2 eps kappa(D_c)
// ||M^{-1}A||, the three-term decomposition of the multiplicative error, and
// the linear-convergence GMRES perturbation bound. Everything here is dense
// and cap-gated; this is an analysis path, not a production one.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mpschwarz/conditions.hpp"
#include "mpschwarz/linalg.hpp"
#include "mpschwarz/schwarz.hpp"

namespace mpschwarz {

inline constexpr int kPerturbDenseCap = 400;

namespace detail {

// Dense X = A_scaled^{-1} F for one subdomain.
inline DenseMatrix subdomain_inv_times_f(const SubdomainSolver& s) {
  Eigen::PartialPivLU<DenseMatrix> lu(s.rounded.A_scaled.to_dense());
  return lu.solve(s.rounded.F.to_dense());
}

// Rows of A belonging to W_i, as a dense N_i x N block (R_i A).
inline DenseMatrix restrict_rows_dense(const SparseMatrix& A,
                                       const Partition& part, int i) {
  const auto& w = part.overlapping[i];
  DenseMatrix R = DenseMatrix::Zero(w.size(), A.size());
  for (std::size_t r = 0; r < w.size(); ++r) {
    const int g = w[r];
    for (int k = A.row_ptr()[g]; k < A.row_ptr()[g + 1]; ++k)
      R(r, A.col_idx()[k]) = A.values()[k];
  }
  return R;
}

}  // namespace detail

struct SubdomainPerturb {
  double epsilon = 0.0;        // ||A_scaled^{-1} F||_2
  double kappa_d_col = 1.0;    // condition number of the column scaling
  DenseMatrix script_e;        // D_c ((I + A^{-1}F)^{-1} - I) D_c^{-1}
  double script_e_norm = 0.0;
};

// script-E_i = D_c ((I + A^{-1}F)^{-1} - I) D_c^{-1}, computed without the
// Neumann series as -D_c (I + X)^{-1} X D_c^{-1} with X = A_scaled^{-1} F.
inline SubdomainPerturb subdomain_perturb(const SubdomainSolver& s,
                                          int cap = kPerturbDenseCap) {
  const int n = s.rounded.A_scaled.size();
  if (n > cap) throw DenseCapExceeded("subdomain_perturb", n, cap);
  SubdomainPerturb out;
  const DenseMatrix X = detail::subdomain_inv_times_f(s);
  out.epsilon = two_norm_dense(X);
  out.kappa_d_col = s.scaling.kappa_d_col();
  const DenseMatrix M = (DenseMatrix::Identity(n, n) + X).lu().solve(X);
  out.script_e = DenseMatrix(-(s.scaling.d_col.asDiagonal() * M *
                               s.scaling.d_col.cwiseInverse().asDiagonal()));
  out.script_e_norm = two_norm_dense(out.script_e);
  return out;
}

// Columns of M^{-1}A obtained by applying the preconditioner to A e_j.
inline DenseMatrix probe_preconditioned_matrix(const SchwarzOperator& op,
                                               int cap = kPerturbDenseCap) {
  const int n = op.matrix().size();
  if (n > cap) throw DenseCapExceeded("probe_preconditioned_matrix", n, cap);
  DenseMatrix P(n, n);
  for (int j = 0; j < n; ++j) {
    Vector e = Vector::Zero(n);
    e[j] = 1.0;
    P.col(j) = op.apply_preconditioner(op.matrix().apply(e));
  }
  return P;
}

struct AdditivePerturbReport {
  DenseMatrix probed;                    // E = M_mp^{-1}A - M^{-1}A
  std::optional<DenseMatrix> structural; // theta-weighted scatter of script-E_i
  double agreement = std::numeric_limits<double>::infinity();  // 2-norm of difference
  double e_two_norm = 0.0;
  double epsilon = 0.0;       // max_i epsilon_i
  double kappa = 1.0;         // max_i kappa(D_i^c)
  double precond_norm = 0.0;  // ||M^{-1}A||_2 (full precision)
  double bound = 0.0;         // 2 eps kappa ||M^{-1}A||
  bool epsilon_below_half = false;
  bool bound_holds = false;
  std::vector<SubdomainPerturb> subdomains;
};

// E for the additive variants (AS/dAS/RAS), probed and cross-checked against
// the structural formula theta * sum_i R_i^T script-E_i A_i^{-1} R_i A (RAS
// scatters only the Wbar rows).
inline AdditivePerturbReport assemble_E_additive(const SchwarzOperator& op_full,
                                                 const SchwarzOperator& op_mp,
                                                 int cap = kPerturbDenseCap) {
  const SchwarzVariant variant = op_mp.config().variant;
  if (variant == SchwarzVariant::MS)
    throw std::invalid_argument("assemble_E_additive: additive variants only");
  const int n = op_mp.matrix().size();
  if (n > cap) throw DenseCapExceeded("assemble_E_additive", n, cap);

  AdditivePerturbReport rep;
  const DenseMatrix P_full = probe_preconditioned_matrix(op_full, cap);
  const DenseMatrix P_mp = probe_preconditioned_matrix(op_mp, cap);
  rep.probed = P_mp - P_full;
  rep.e_two_norm = two_norm_dense(rep.probed);
  rep.precond_norm = two_norm_dense(P_full);

  const Partition& part = op_mp.partition();
  for (int i = 0; i < part.p; ++i)
    rep.subdomains.push_back(subdomain_perturb(op_mp.subdomains()[i], cap));
  for (const auto& s : rep.subdomains) {
    rep.epsilon = std::max(rep.epsilon, s.epsilon);
    rep.kappa = std::max(rep.kappa, s.kappa_d_col);
  }
  rep.epsilon_below_half = rep.epsilon < 0.5;
  rep.bound = 2.0 * rep.epsilon * rep.kappa * rep.precond_norm;
  rep.bound_holds = rep.e_two_norm <= rep.bound;

  if (rep.epsilon_below_half) {
    const double theta = op_mp.config().effective_theta();
    DenseMatrix E = DenseMatrix::Zero(n, n);
    for (int i = 0; i < part.p; ++i) {
      const DenseMatrix RA = detail::restrict_rows_dense(op_mp.matrix(), part, i);
      const DenseMatrix W =
          lu_factor(op_mp.subdomains()[i].blocks.A_sub).solve_dense(RA);
      const DenseMatrix Y = rep.subdomains[i].script_e * W;
      const auto& idx = part.overlapping[i];
      const bool restricted = variant == SchwarzVariant::RAS;
      for (std::size_t r = 0; r < idx.size(); ++r) {
        if (restricted && !part.restricted_mask[i][r]) continue;
        E.row(idx[r]) += theta * Y.row(r);
      }
    }
    rep.structural = E;
    rep.agreement = two_norm_dense(E - rep.probed);
  }
  return rep;
}

struct MsPerturbReport {
  DenseMatrix probed;  // E_MS = M_mp^{-1}A - M^{-1}A
  DenseMatrix G1, G2, G3;
  double sum_agreement = 0.0;  // ||G1+G2+G3 - probed||_2
  double g1_norm = 0.0, g2_norm = 0.0, g3_norm = 0.0;
};

// Two-subdomain decomposition of the multiplicative error. With
// P_i = R_i^T A_i^{-1} R_i A and Q_i = R_i^T script-E_i A_i^{-1} R_i A:
//   E_MS = (I - P_2) Q_1 + Q_2 (I - P_1) - Q_2 Q_1.
inline MsPerturbReport decompose_E_ms(const SchwarzOperator& op_full,
                                      const SchwarzOperator& op_mp,
                                      int cap = kPerturbDenseCap) {
  const Partition& part = op_mp.partition();
  if (part.p != 2)
    throw std::invalid_argument("decompose_E_ms: requires exactly two subdomains");
  if (op_mp.config().variant != SchwarzVariant::MS)
    throw std::invalid_argument("decompose_E_ms: operator is not multiplicative");
  const int n = op_mp.matrix().size();
  if (n > cap) throw DenseCapExceeded("decompose_E_ms", n, cap);

  MsPerturbReport rep;
  rep.probed = probe_preconditioned_matrix(op_mp, cap) -
               probe_preconditioned_matrix(op_full, cap);

  DenseMatrix P[2], Q[2];
  for (int i = 0; i < 2; ++i) {
    const DenseMatrix RA = detail::restrict_rows_dense(op_mp.matrix(), part, i);
    const DenseMatrix W =
        lu_factor(op_mp.subdomains()[i].blocks.A_sub).solve_dense(RA);
    const SubdomainPerturb sp = subdomain_perturb(op_mp.subdomains()[i], cap);
    const DenseMatrix Y = sp.script_e * W;
    P[i] = DenseMatrix::Zero(n, n);
    Q[i] = DenseMatrix::Zero(n, n);
    const auto& idx = part.overlapping[i];
    for (std::size_t r = 0; r < idx.size(); ++r) {
      P[i].row(idx[r]) = W.row(r);
      Q[i].row(idx[r]) = Y.row(r);
    }
  }
  const DenseMatrix I = DenseMatrix::Identity(n, n);
  rep.G1 = (I - P[1]) * Q[0];
  rep.G2 = Q[1] * (I - P[0]);
  rep.G3 = -Q[1] * Q[0];
  rep.g1_norm = two_norm_dense(rep.G1);
  rep.g2_norm = two_norm_dense(rep.G2);
  rep.g3_norm = two_norm_dense(rep.G3);
  rep.sum_agreement = two_norm_dense(rep.G1 + rep.G2 + rep.G3 - rep.probed);
  return rep;
}

struct GmresLinearBoundReport {
  double rho_fit = 0.0;            // linear-phase convergence factor, full precision
  double a_inv_m_norm = 0.0;       // ||A^{-1} M||_2 = 1 / sigma_min(M^{-1}A)
  double e_frobenius = 0.0;
  std::vector<double> bound;       // bound[k] for k = 0..len-1 (bound[0] = 1)
  std::vector<double> actual;      // multiprecision residuals, relative
  bool holds_in_linear_phase = true;
  int linear_phase_end = 0;
};

namespace detail {

// Least-squares slope of log r_k over the window where the residual sits in
// [lo, hi]; returns exp(slope).
inline double fit_linear_rate(const std::vector<double>& residuals, double hi = 1e-2,
                              double lo = 1e-9) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < residuals.size(); ++k)
    if (residuals[k] <= hi && residuals[k] >= lo && residuals[k] > 0.0)
      pts.push_back({double(k), std::log(residuals[k])});
  if (pts.size() < 2) {
    // Fall back to the overall geometric rate.
    for (std::size_t k = residuals.size(); k-- > 1;)
      if (residuals[k] > 0.0)
        return std::pow(residuals[k], 1.0 / double(k));
    return 1.0;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = pts.size();
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return std::exp(slope);
}

}  // namespace detail

inline GmresLinearBoundReport check_gmres_linear_bound(
    const std::vector<double>& residuals_full,
    const std::vector<double>& residuals_mp, double a_inv_m_norm,
    double e_frobenius) {
  GmresLinearBoundReport rep;
  rep.rho_fit = detail::fit_linear_rate(residuals_full);
  rep.a_inv_m_norm = a_inv_m_norm;
  rep.e_frobenius = e_frobenius;
  rep.actual = residuals_mp;
  rep.bound.resize(residuals_mp.size(), 1.0);
  rep.linear_phase_end = 0;
  for (std::size_t k = 1; k < residuals_mp.size(); ++k) {
    const double base = rep.rho_fit + (1.0 / std::sqrt(double(k))) *
                                          (1.0 + rep.rho_fit) * a_inv_m_norm *
                                          e_frobenius;
    rep.bound[k] = std::pow(base, double(k));
    if (residuals_mp[k] >= 1e-9) rep.linear_phase_end = static_cast<int>(k);
  }
  for (int k = 1; k <= rep.linear_phase_end; ++k)
    if (rep.actual[k] > rep.bound[k]) rep.holds_in_linear_phase = false;
  return rep;
}

// ||A^{-1}M||_2 for a (full-precision) operator, via the smallest singular
// value of the probed preconditioned matrix.
inline double a_inverse_m_norm(const SchwarzOperator& op_full,
                               int cap = kPerturbDenseCap) {
  const DenseMatrix P = probe_preconditioned_matrix(op_full, cap);
  Eigen::BDCSVD<DenseMatrix> svd(P);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (smin == 0.0) throw SingularMatrixError("a_inverse_m_norm: singular system");
  return 1.0 / smin;
}

}  // namespace mpschwarz
