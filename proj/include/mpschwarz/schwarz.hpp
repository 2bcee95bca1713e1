#pragma once

// The four Schwarz iterations -- additive (AS), damped additive (dAS),
// restricted additive (RAS) and multiplicative (MS) -- with subdomain solves
// carried out against low-precision-rounded subdomain matrices. Sweeps are
// realized residual-wise, so the true solution is a fixed point at every
// precision. Two solve modes: the factors of the rounded matrix applied in
// working precision (matches the convergence theory, which analyzes the exact
// inverse of the rounded matrix), or a fully simulated solve where every flop
// of the factorization and the triangular solves is rounded to the target
// format.

#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpschwarz/decomp.hpp"
#include "mpschwarz/float_format.hpp"
#include "mpschwarz/linalg.hpp"
#include "mpschwarz/rounding.hpp"
#include "mpschwarz/scaling.hpp"
#include "mpschwarz/sparse.hpp"

namespace mpschwarz {

enum class SchwarzVariant { AS, dAS, RAS, MS };

inline std::string to_string(SchwarzVariant v) {
  switch (v) {
    case SchwarzVariant::AS: return "AS";
    case SchwarzVariant::dAS: return "dAS";
    case SchwarzVariant::RAS: return "RAS";
    case SchwarzVariant::MS: return "MS";
  }
  return "?";
}

inline SchwarzVariant variant_from_string(const std::string& s) {
  if (s == "AS") return SchwarzVariant::AS;
  if (s == "dAS") return SchwarzVariant::dAS;
  if (s == "RAS") return SchwarzVariant::RAS;
  if (s == "MS") return SchwarzVariant::MS;
  throw std::invalid_argument("unknown Schwarz variant: " + s);
}

enum class SolveMode { RoundedMatrixExactSolve, FullySimulatedSolve };

inline std::string to_string(SolveMode m) {
  return m == SolveMode::RoundedMatrixExactSolve ? "rounded-matrix-exact-solve"
                                                 : "fully-simulated-solve";
}

struct SchwarzConfig {
  SchwarzVariant variant = SchwarzVariant::MS;
  double theta = 0.49;  // dAS damping; must stay below 1/q for the theory
  FloatFormat solve_format = FloatFormat::from_name("fp64");
  RoundingKind rounding = RoundingKind::MmatrixUp;
  SolveMode solve_mode = SolveMode::RoundedMatrixExactSolve;
  bool scaling_on = true;
  double nu = 0.1;
  double nu_hat = 0.1;
  int max_iters = 100;
  double stop_tol = 1e-12;
  int simulated_dense_cap = 2000;

  double effective_theta() const {
    return variant == SchwarzVariant::dAS ? theta : 1.0;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["variant"] = to_string(variant);
    j["theta"] = theta;
    j["solve_format"] = solve_format.name;
    j["rounding"] = to_string(rounding);
    j["solve_mode"] = to_string(solve_mode);
    j["scaling_on"] = scaling_on;
    j["nu"] = nu;
    j["nu_hat"] = nu_hat;
    j["max_iters"] = max_iters;
    j["stop_tol"] = stop_tol;
    return j;
  }
};

struct SubdomainSolver {
  SubdomainBlocks blocks;
  ScalingData scaling;
  RoundedSubdomain rounded;
  LUFactors factors;
  bool singular = false;
  std::string error;
};

class SchwarzOperator {
 public:
  SchwarzOperator(SparseMatrix A, Partition part, SchwarzConfig cfg)
      : A_(std::move(A)), part_(std::move(part)), cfg_(cfg) {
    if (A_.size() != part_.total_size)
      throw std::invalid_argument("SchwarzOperator: size mismatch");
    if (cfg_.variant == SchwarzVariant::dAS &&
        cfg_.theta >= 1.0 / part_.color_count)
      warnings_.push_back("theta >= 1/q: damped-AS convergence theory does not apply");
    build();
  }

  // Analysis/test hook: supply the per-subdomain scalings and rounded
  // matrices directly instead of running the scale+round pipeline.
  SchwarzOperator(SparseMatrix A, Partition part, SchwarzConfig cfg,
                  std::vector<ScalingData> scalings,
                  std::vector<RoundedSubdomain> rounded)
      : A_(std::move(A)), part_(std::move(part)), cfg_(cfg) {
    subdomains_.resize(part_.p);
    for (int i = 0; i < part_.p; ++i) {
      SubdomainSolver& s = subdomains_[i];
      s.blocks = subdomain_blocks(A_, part_, i);
      s.scaling = std::move(scalings[i]);
      s.rounded = std::move(rounded[i]);
      factorize(s);
    }
  }

  const SparseMatrix& matrix() const { return A_; }
  const Partition& partition() const { return part_; }
  const SchwarzConfig& config() const { return cfg_; }
  const std::vector<SubdomainSolver>& subdomains() const { return subdomains_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  bool any_singular() const {
    for (const auto& s : subdomains_)
      if (s.singular) return true;
    return false;
  }
  long overflow_event_count() const {
    long c = 0;
    for (const auto& s : subdomains_)
      c += static_cast<long>(s.rounded.report.overflow_entries.size());
    return c;
  }

  // Solution of the rounded subdomain problem: scale the right-hand side,
  // solve against the factors of the rounded matrix, unscale.
  Vector subdomain_solve(int i, const Vector& g) const {
    const SubdomainSolver& s = subdomains_[i];
    if (s.singular)
      throw SingularMatrixError("subdomain " + std::to_string(i) + ": " + s.error);
    if (g.size() != s.blocks.A_sub.size())
      throw std::invalid_argument("subdomain_solve: dimension mismatch");
    const ScaledRhs sr = scale_rhs(g, s.scaling);
    if (sr.zero_rhs) return Vector::Zero(g.size());
    Vector rhs = sr.b_hat;
    if (cfg_.solve_mode == SolveMode::FullySimulatedSolve)
      for (int k = 0; k < rhs.size(); ++k)
        rhs[k] = round_scalar(rhs[k], cfg_.solve_format, RoundMode::Nearest).value;
    const Vector v_hat = s.factors.solve(rhs);
    return unscale_solution(v_hat, s.scaling, sr.b_inf_norm);
  }

  Vector sweep(const Vector& u, const Vector& f) const {
    if (u.size() != A_.size() || f.size() != A_.size())
      throw std::invalid_argument("sweep: dimension mismatch");
    switch (cfg_.variant) {
      case SchwarzVariant::AS:
      case SchwarzVariant::dAS:
      case SchwarzVariant::RAS: {
        const bool restricted = cfg_.variant == SchwarzVariant::RAS;
        const Vector r = f - A_.apply(u);
        Vector acc = Vector::Zero(A_.size());
        // Fixed ascending-i reduction keeps results bitwise reproducible.
        for (int i = 0; i < part_.p; ++i)
          acc += prolong_from(subdomain_solve(i, restrict_to(r, part_, i)),
                              part_, i, restricted);
        return u + cfg_.effective_theta() * acc;
      }
      case SchwarzVariant::MS: {
        Vector v = u;
        for (int i = 0; i < part_.p; ++i) {
          const Vector r = f - A_.apply(v);
          v += prolong_from(subdomain_solve(i, restrict_to(r, part_, i)),
                            part_, i, false);
        }
        return v;
      }
    }
    throw std::logic_error("sweep: unknown variant");
  }

  // One sweep from zero: exactly the preconditioner action v -> M^{-1} v.
  Vector apply_preconditioner(const Vector& v) const {
    return sweep(Vector::Zero(A_.size()), v);
  }

  DenseMatrix assemble_dense_iteration_matrix(int cap = kDefaultDenseCap) const {
    const int n = A_.size();
    if (n > cap) throw DenseCapExceeded("assemble_dense_iteration_matrix", n, cap);
    DenseMatrix T(n, n);
    const Vector zero = Vector::Zero(n);
    for (int j = 0; j < n; ++j) {
      Vector e = Vector::Zero(n);
      e[j] = 1.0;
      T.col(j) = sweep(e, zero);
    }
    return T;
  }

 private:
  void build() {
    subdomains_.resize(part_.p);
    for (int i = 0; i < part_.p; ++i) {
      SubdomainSolver& s = subdomains_[i];
      s.blocks = subdomain_blocks(A_, part_, i);
      if (cfg_.scaling_on) {
        double nu = cfg_.nu;
        if (cfg_.rounding == RoundingKind::DiagExact &&
            cfg_.solve_format.kind == FormatKind::Binary) {
          // A power-of-two nu keeps mu (and with it the unit diagonal of the
          // scaled matrix) exactly representable in the target format.
          const double nu2 = std::exp2(std::round(std::log2(nu)));
          if (nu2 != nu) {
            nu = nu2;
            note_once("nu snapped to " + std::to_string(nu) +
                      " (power of two) for exact-diagonal rounding");
          }
        }
        ScaledSystem sc =
            s.blocks.A_sub.is_symmetric()
                ? scale_symmetric(s.blocks.A_sub, cfg_.solve_format, nu, cfg_.nu_hat)
                : scale_general(s.blocks.A_sub, cfg_.solve_format, nu, cfg_.nu_hat);
        s.scaling = std::move(sc.scaling);
        s.rounded = apply_rounding({cfg_.rounding, cfg_.solve_format}, sc.matrix);
      } else {
        s.scaling = ScalingData::identity(s.blocks.A_sub.size(), cfg_.nu_hat);
        s.rounded = apply_rounding({cfg_.rounding, cfg_.solve_format}, s.blocks.A_sub);
      }
      factorize(s);
    }
  }

  void factorize(SubdomainSolver& s) {
    try {
      s.factors = cfg_.solve_mode == SolveMode::FullySimulatedSolve
                      ? lu_factor_simulated(s.rounded.A_rounded, cfg_.solve_format,
                                            cfg_.simulated_dense_cap)
                      : lu_factor(s.rounded.A_rounded);
    } catch (const SingularMatrixError& e) {
      s.singular = true;
      s.error = e.what();
    }
  }

  void note_once(const std::string& msg) {
    for (const auto& w : warnings_)
      if (w == msg) return;
    warnings_.push_back(msg);
  }

  SparseMatrix A_;
  Partition part_;
  SchwarzConfig cfg_;
  std::vector<SubdomainSolver> subdomains_;
  std::vector<std::string> warnings_;
};

inline SchwarzOperator build_operator(const SparseMatrix& A, const Partition& part,
                                      const SchwarzConfig& cfg) {
  return SchwarzOperator(A, part, cfg);
}

// ---------------------------------------------------------------------------
// Stationary iteration driver.

struct IterationTrace {
  std::vector<double> err_norms;  // ||u - u_true||_2 per iteration (if known)
  std::vector<double> res_norms;  // ||f - A u||_2 per iteration
  std::vector<double> seconds;    // cumulative wall time
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
  std::optional<double> rho_conv;
  std::map<int, Vector> snapshots;  // error (or iterate) at requested sweeps

  nlohmann::json summary_json() const {
    nlohmann::json j;
    j["iterations"] = iterations;
    j["converged"] = converged;
    j["diverged"] = diverged;
    if (rho_conv) j["rho_conv"] = *rho_conv;
    return j;
  }
};

namespace detail {

// Geometric mean of the monitored-norm ratios over the last
// min(40, iters/2) iterations, skipping the first 10 (transient before the
// error aligns with the dominant eigenmode).
inline std::optional<double> estimate_rho_conv(const std::vector<double>& m) {
  const int last = static_cast<int>(m.size()) - 1;
  if (last < 2) return std::nullopt;
  int lo = std::max(10, last - std::min(40, last / 2));
  if (lo >= last) lo = last - 1;
  while (lo < last && m[lo] <= 0.0) ++lo;
  if (lo >= last || m[lo] <= 0.0 || m[last] <= 0.0) return std::nullopt;
  return std::pow(m[last] / m[lo], 1.0 / (last - lo));
}

}  // namespace detail

inline IterationTrace iterate(const SchwarzOperator& op, const Vector& u0,
                              const Vector& f,
                              const Vector* u_true = nullptr,
                              const std::vector<int>& snapshot_iters = {}) {
  const SchwarzConfig& cfg = op.config();
  IterationTrace tr;
  Vector u = u0;
  const auto t0 = std::chrono::steady_clock::now();
  auto record = [&](const Vector& v) {
    tr.res_norms.push_back((f - op.matrix().apply(v)).norm());
    if (u_true) tr.err_norms.push_back((v - *u_true).norm());
    tr.seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count());
  };
  record(u);
  const std::vector<double>& monitored = u_true ? tr.err_norms : tr.res_norms;
  const double initial = monitored[0];
  auto want_snapshot = [&](int it) {
    for (int s : snapshot_iters)
      if (s == it) return true;
    return false;
  };
  if (want_snapshot(0)) tr.snapshots[0] = u_true ? Vector(u - *u_true) : u;
  if (initial == 0.0) {
    tr.converged = true;
    return tr;
  }
  double running_min = initial;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    u = op.sweep(u, f);
    record(u);
    if (want_snapshot(it)) tr.snapshots[it] = u_true ? Vector(u - *u_true) : u;
    tr.iterations = it;
    const double m = monitored.back();
    running_min = std::min(running_min, m);
    if (m / initial <= cfg.stop_tol) {
      tr.converged = true;
      break;
    }
    if (m > 1e6 * running_min) {
      tr.diverged = true;
      break;
    }
  }
  tr.rho_conv = detail::estimate_rho_conv(monitored);
  return tr;
}

}  // namespace mpschwarz
