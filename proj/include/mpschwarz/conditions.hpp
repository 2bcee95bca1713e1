#pragma once

// Verifiers for the sufficient convergence conditions of the multiprecision
// Schwarz theory: the norm condition ||A_scaled^{-1} F|| < 1, the entrywise
// condition A_scaled^{-1} >= A_scaled^{-1} F A_scaled^{-1}, the weak-regular
// splitting pair for the rounded matrix, and the SPD/P-regular conditions
// with the Weyl cross-check. Entrywise checks need dense inverses and are
// cap-gated; above the cap only the norm condition is evaluated (1-norm),
// and every skipped check is reported as skipped rather than silently absent.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpschwarz/linalg.hpp"
#include "mpschwarz/rounding.hpp"
#include "mpschwarz/scaling.hpp"
#include "mpschwarz/schwarz.hpp"

namespace mpschwarz {

enum class NormSelector { Two, One, Frobenius };

inline std::string to_string(NormSelector n) {
  switch (n) {
    case NormSelector::Two: return "two";
    case NormSelector::One: return "one";
    case NormSelector::Frobenius: return "frobenius";
  }
  return "?";
}

enum class VerdictState { Passed, Failed, Skipped };

struct Verdict {
  VerdictState state = VerdictState::Skipped;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::string note = "skipped";

  bool passed() const { return state == VerdictState::Passed; }
  bool checked() const { return state != VerdictState::Skipped; }

  static Verdict pass(double v, std::string n = "") { return {VerdictState::Passed, v, std::move(n)}; }
  static Verdict fail(double v, std::string n = "") { return {VerdictState::Failed, v, std::move(n)}; }
  static Verdict skip(std::string n) {
    return {VerdictState::Skipped, std::numeric_limits<double>::quiet_NaN(), std::move(n)};
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["state"] = state == VerdictState::Passed   ? "passed"
                 : state == VerdictState::Failed ? "failed"
                                                 : "skipped";
    if (std::isfinite(value)) j["value"] = value;
    if (!note.empty()) j["note"] = note;
    return j;
  }
};

struct NormConditionResult {
  double value = std::numeric_limits<double>::quiet_NaN();
  bool passed = false;
  NormSelector norm_used = NormSelector::One;
  // All norms that were computed in the pass.
  std::optional<double> two_norm, one_norm, frobenius;
};

// ||A_scaled^{-1} F|| by solving against the nonzero columns of F. The
// 1-norm and Frobenius norm stream column by column; the 2-norm assembles
// the dense product and is therefore cap-gated by the caller.
inline NormConditionResult check_norm_condition(
    const RoundedSubdomain& sub, NormSelector norm = NormSelector::Two,
    int dense_cap = kDefaultDenseCap) {
  const int n = sub.A_scaled.size();
  const LUFactors lu = lu_factor(sub.A_scaled);
  const SparseMatrix Ft = sub.F.transpose();  // columns of F = rows of Ft

  NormConditionResult out;
  const bool want_two = norm == NormSelector::Two;
  if (want_two && n > dense_cap)
    throw DenseCapExceeded("check_norm_condition(two-norm)", n, dense_cap);

  DenseMatrix X;
  if (want_two) X = DenseMatrix::Zero(n, n);
  double one = 0.0, fro2 = 0.0;
  for (int j = 0; j < n; ++j) {
    if (Ft.row_ptr()[j] == Ft.row_ptr()[j + 1]) continue;  // zero column
    Vector col = Vector::Zero(n);
    for (int k = Ft.row_ptr()[j]; k < Ft.row_ptr()[j + 1]; ++k)
      col[Ft.col_idx()[k]] = Ft.values()[k];
    const Vector x = lu.solve(col);
    one = std::max(one, x.lpNorm<1>());
    fro2 += x.squaredNorm();
    if (want_two) X.col(j) = x;
  }
  out.one_norm = one;
  out.frobenius = std::sqrt(fro2);
  if (want_two) out.two_norm = two_norm_dense(X);

  out.norm_used = norm;
  switch (norm) {
    case NormSelector::Two: out.value = *out.two_norm; break;
    case NormSelector::One: out.value = *out.one_norm; break;
    case NormSelector::Frobenius: out.value = *out.frobenius; break;
  }
  out.passed = out.value < 1.0;
  return out;
}

struct EntrywiseConditionResult {
  double max_violation = std::numeric_limits<double>::quiet_NaN();
  bool passed = false;
};

// A_scaled^{-1} >= A_scaled^{-1} F A_scaled^{-1}, entrywise up to tau_neg.
inline EntrywiseConditionResult check_entrywise_condition(
    const RoundedSubdomain& sub, int dense_cap = kDefaultDenseCap) {
  const int n = sub.A_scaled.size();
  if (n > dense_cap) throw DenseCapExceeded("check_entrywise_condition", n, dense_cap);
  Eigen::PartialPivLU<DenseMatrix> lu(sub.A_scaled.to_dense());
  const DenseMatrix inv = lu.inverse();
  const DenseMatrix rhs = inv * sub.F.to_dense() * inv;
  const double scale = std::max(inv.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff());
  const double tau_neg = 1e-12 * scale;
  EntrywiseConditionResult out;
  out.max_violation = (rhs - inv).maxCoeff();
  out.passed = out.max_violation <= tau_neg;
  return out;
}

struct WeakRegularResult {
  bool inverse_nonneg = false;   // A_rounded^{-1} >= 0
  bool product_nonneg = false;   // A_rounded^{-1} F >= 0
  bool passed = false;
  double min_inverse_entry = 0.0;
  double min_product_entry = 0.0;
};

inline WeakRegularResult check_weak_regular(const RoundedSubdomain& sub,
                                            int dense_cap = kDefaultDenseCap) {
  const int n = sub.A_rounded.size();
  if (n > dense_cap) throw DenseCapExceeded("check_weak_regular", n, dense_cap);
  Eigen::PartialPivLU<DenseMatrix> lu(sub.A_rounded.to_dense());
  const DenseMatrix inv = lu.inverse();
  const DenseMatrix prod = inv * sub.F.to_dense();
  WeakRegularResult out;
  out.min_inverse_entry = inv.minCoeff();
  out.min_product_entry = prod.minCoeff();
  const double tau_inv = 1e-12 * inv.cwiseAbs().maxCoeff();
  const double tau_prod = 1e-12 * std::max(prod.cwiseAbs().maxCoeff(), 1e-300);
  out.inverse_nonneg = out.min_inverse_entry >= -tau_inv;
  out.product_nonneg = out.min_product_entry >= -tau_prod;
  out.passed = out.inverse_nonneg && out.product_nonneg;
  return out;
}

struct SpdConditionResult {
  bool pd_passed = false;          // lambda_min(A_rounded) > 0
  bool direct_passed = false;      // lambda_min(A_rounded) >= |lambda_-inf(F)|
  bool sufficient_passed = false;  // lambda_min(A_scaled) >= 2 |lambda_-inf(F)|
  bool weyl_holds = false;
  double lambda_min_scaled = 0.0;
  double lambda_min_rounded = 0.0;
  double lambda_neg_inf_F = 0.0;
};

inline SpdConditionResult check_spd_conditions(const RoundedSubdomain& sub,
                                               int dense_cap = kDefaultDenseCap,
                                               double lanczos_tol = 1e-8) {
  if (!sub.A_scaled.is_symmetric() || !sub.F.is_symmetric())
    throw std::invalid_argument("check_spd_conditions: input is not symmetric");
  SpdConditionResult out;
  out.lambda_min_scaled =
      symmetric_extremal_eigenvalues(sub.A_scaled, dense_cap, lanczos_tol).lambda_min;
  out.lambda_min_rounded =
      symmetric_extremal_eigenvalues(sub.A_rounded, dense_cap, lanczos_tol).lambda_min;
  out.lambda_neg_inf_F =
      symmetric_extremal_eigenvalues(sub.F, dense_cap, lanczos_tol).lambda_min;
  out.pd_passed = out.lambda_min_rounded > 0.0;
  out.direct_passed =
      out.lambda_min_rounded >= std::fabs(out.lambda_neg_inf_F) &&
      out.pd_passed;
  out.sufficient_passed =
      out.lambda_min_scaled >= 2.0 * std::fabs(out.lambda_neg_inf_F);
  const double scale = std::max({std::fabs(out.lambda_min_rounded),
                                 std::fabs(out.lambda_min_scaled), 1e-300});
  out.weyl_holds = out.lambda_min_rounded >=
                   out.lambda_min_scaled + out.lambda_neg_inf_F - 1e-9 * scale;
  return out;
}

// The unscaled pair (A_i, A_i tilde): A_tilde = mu^{-1} D_r^{-1} A_rounded
// D_c^{-1}. The weak-regular verdicts are invariant under this rescaling.
inline RoundedSubdomain unscale_rounded(const RoundedSubdomain& sub,
                                        const ScalingData& sd) {
  auto unscale = [&](const SparseMatrix& M) {
    SparseMatrix R = M;
    auto& vals = R.values();
    for (int i = 0; i < R.size(); ++i)
      for (int k = R.row_ptr()[i]; k < R.row_ptr()[i + 1]; ++k)
        vals[k] /= sd.mu * sd.d_row[i] * sd.d_col[R.col_idx()[k]];
    return R;
  };
  RoundedSubdomain out;
  out.A_scaled = unscale(sub.A_scaled);
  out.A_rounded = unscale(sub.A_rounded);
  out.F = unscale(sub.F);
  out.report = sub.report;
  return out;
}

// ---------------------------------------------------------------------------
// Full per-operator report.

struct SubdomainConditionReport {
  int subdomain = 0;
  int size = 0;
  NormSelector norm_used = NormSelector::Two;
  Verdict norm_condition;
  std::optional<double> norm_two, norm_one, norm_frobenius;
  Verdict f_nonneg;              // F >= 0 entrywise (exact)
  Verdict entrywise_condition;   // value: max violation
  Verdict nonneg_inverse;        // A_rounded^{-1} >= 0
  Verdict weak_regular;          // both weak-regular parts
  Verdict spd_pd;
  Verdict spd_eig;               // direct P-regular eigenvalue condition
  Verdict spd_eig_sufficient;    // 2|lambda_-inf(F)| form
  Verdict weyl;
  double lambda_min_scaled = std::numeric_limits<double>::quiet_NaN();
  double lambda_neg_inf_F = std::numeric_limits<double>::quiet_NaN();

  // The Theorem-4.1 hypothesis pair.
  bool certified_m_matrix() const {
    return norm_condition.passed() && entrywise_condition.passed();
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["subdomain"] = subdomain;
    j["size"] = size;
    j["norm_used"] = to_string(norm_used);
    j["norm_condition"] = norm_condition.to_json();
    if (norm_two) j["norm_two"] = *norm_two;
    if (norm_one) j["norm_one"] = *norm_one;
    if (norm_frobenius) j["norm_frobenius"] = *norm_frobenius;
    j["f_nonneg"] = f_nonneg.to_json();
    j["entrywise_condition"] = entrywise_condition.to_json();
    j["nonneg_inverse"] = nonneg_inverse.to_json();
    j["weak_regular"] = weak_regular.to_json();
    j["spd_pd"] = spd_pd.to_json();
    j["spd_eig"] = spd_eig.to_json();
    j["spd_eig_sufficient"] = spd_eig_sufficient.to_json();
    j["weyl"] = weyl.to_json();
    return j;
  }
};

struct ConditionReport {
  std::vector<SubdomainConditionReport> subdomains;

  bool all_certified_m_matrix() const {
    for (const auto& s : subdomains)
      if (!s.certified_m_matrix()) return false;
    return !subdomains.empty();
  }
  bool all_norm_passed() const {
    for (const auto& s : subdomains)
      if (!s.norm_condition.passed()) return false;
    return !subdomains.empty();
  }
  bool all_spd_passed() const {
    for (const auto& s : subdomains)
      if (!(s.spd_pd.passed() && s.spd_eig.passed())) return false;
    return !subdomains.empty();
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : subdomains) j.push_back(s.to_json());
    return j;
  }
};

inline ConditionReport check_conditions(const SchwarzOperator& op,
                                        int dense_cap = kDefaultDenseCap) {
  ConditionReport rep;
  for (int i = 0; i < op.partition().p; ++i) {
    const SubdomainSolver& s = op.subdomains()[i];
    SubdomainConditionReport r;
    r.subdomain = i;
    r.size = s.rounded.A_scaled.size();
    const bool under_cap = r.size <= dense_cap;

    r.norm_used = under_cap ? NormSelector::Two : NormSelector::One;
    const NormConditionResult nc =
        check_norm_condition(s.rounded, r.norm_used, dense_cap);
    r.norm_condition = nc.passed ? Verdict::pass(nc.value) : Verdict::fail(nc.value);
    r.norm_two = nc.two_norm;
    r.norm_one = nc.one_norm;
    r.norm_frobenius = nc.frobenius;

    double fmin = 0.0;
    for (double v : s.rounded.F.values()) fmin = std::min(fmin, v);
    r.f_nonneg = fmin >= 0.0 ? Verdict::pass(fmin) : Verdict::fail(fmin);

    if (under_cap) {
      const EntrywiseConditionResult ec = check_entrywise_condition(s.rounded, dense_cap);
      r.entrywise_condition = ec.passed ? Verdict::pass(ec.max_violation)
                                        : Verdict::fail(ec.max_violation);
      const WeakRegularResult wr = check_weak_regular(s.rounded, dense_cap);
      r.nonneg_inverse = wr.inverse_nonneg ? Verdict::pass(wr.min_inverse_entry)
                                           : Verdict::fail(wr.min_inverse_entry);
      r.weak_regular = wr.passed ? Verdict::pass(wr.min_product_entry)
                                 : Verdict::fail(wr.min_product_entry);
    } else {
      r.entrywise_condition = Verdict::skip("skipped: cap exceeded");
      r.nonneg_inverse = Verdict::skip("skipped: cap exceeded");
      r.weak_regular = Verdict::skip("skipped: cap exceeded");
    }

    if (s.rounded.A_scaled.is_symmetric() && s.rounded.F.is_symmetric()) {
      const SpdConditionResult sc = check_spd_conditions(s.rounded, dense_cap);
      r.spd_pd = sc.pd_passed ? Verdict::pass(sc.lambda_min_rounded)
                              : Verdict::fail(sc.lambda_min_rounded);
      r.spd_eig = sc.direct_passed
                      ? Verdict::pass(sc.lambda_min_rounded - std::fabs(sc.lambda_neg_inf_F))
                      : Verdict::fail(sc.lambda_min_rounded - std::fabs(sc.lambda_neg_inf_F));
      r.spd_eig_sufficient =
          sc.sufficient_passed
              ? Verdict::pass(sc.lambda_min_scaled - 2.0 * std::fabs(sc.lambda_neg_inf_F))
              : Verdict::fail(sc.lambda_min_scaled - 2.0 * std::fabs(sc.lambda_neg_inf_F));
      r.weyl = sc.weyl_holds ? Verdict::pass(0.0) : Verdict::fail(0.0);
      r.lambda_min_scaled = sc.lambda_min_scaled;
      r.lambda_neg_inf_F = sc.lambda_neg_inf_F;
    } else {
      r.spd_pd = Verdict::skip("skipped: not symmetric");
      r.spd_eig = Verdict::skip("skipped: not symmetric");
      r.spd_eig_sufficient = Verdict::skip("skipped: not symmetric");
      r.weyl = Verdict::skip("skipped: not symmetric");
    }
    rep.subdomains.push_back(std::move(r));
  }
  return rep;
}

}  // namespace mpschwarz
