#pragma once

// Matrix rounding: the plain elementwise lift of round_scalar, and the
// structure-preserving routines that make the rounding error matrix
// F = A_rounded - A_scaled entrywise nonnegative (sign-informed round up)
// or keep the diagonal exact (for diagonally dominant symmetric input).

#include <string>
#include <utility>
#include <vector>

#include "mpschwarz/float_format.hpp"
#include "mpschwarz/sparse.hpp"

namespace mpschwarz {

struct MatrixRoundReport {
  long underflow_count = 0;
  std::vector<std::pair<int, int>> overflow_entries;  // saturated to +-x_max
  bool non_representable_diagonal = false;  // round_diag precondition failed
  bool ok() const { return overflow_entries.empty(); }
};

// Entrywise rounding; the sparsity pattern is preserved. Overflowing entries
// saturate to +-x_max and are listed in the report.
inline SparseMatrix round_matrix(const SparseMatrix& X, const FloatFormat& fmt,
                                 RoundMode mode, MatrixRoundReport* report = nullptr) {
  SparseMatrix R = X;
  auto& vals = R.values();
  for (int i = 0; i < R.size(); ++i) {
    for (int k = R.row_ptr()[i]; k < R.row_ptr()[i + 1]; ++k) {
      const RoundResult r = round_scalar(vals[k], fmt, mode);
      vals[k] = r.value;
      if (report) {
        if (r.overflow) report->overflow_entries.push_back({i, R.col_idx()[k]});
        if (r.underflow) ++report->underflow_count;
      }
    }
  }
  return R;
}

inline DenseMatrix round_matrix(const DenseMatrix& X, const FloatFormat& fmt,
                                RoundMode mode, MatrixRoundReport* report = nullptr) {
  DenseMatrix R = X;
  for (int i = 0; i < R.rows(); ++i) {
    for (int j = 0; j < R.cols(); ++j) {
      const RoundResult r = round_scalar(R(i, j), fmt, mode);
      R(i, j) = r.value;
      if (report) {
        if (r.overflow) report->overflow_entries.push_back({i, j});
        if (r.underflow) ++report->underflow_count;
      }
    }
  }
  return R;
}

enum class RoundingKind { MmatrixUp, DiagExact, PlainNearest };

inline std::string to_string(RoundingKind k) {
  switch (k) {
    case RoundingKind::MmatrixUp: return "mmatrix";
    case RoundingKind::DiagExact: return "diag";
    case RoundingKind::PlainNearest: return "nearest";
  }
  return "?";
}

struct RoundingRoutine {
  RoundingKind kind = RoundingKind::MmatrixUp;
  FloatFormat format;
};

struct RoundedSubdomain {
  SparseMatrix A_scaled;   // the input (already rescaled when scaling is on)
  SparseMatrix A_rounded;  // its low-precision representative
  SparseMatrix F;          // A_rounded - A_scaled, on the pattern of A_scaled
  MatrixRoundReport report;
};

namespace detail {

inline SparseMatrix entrywise_difference_same_pattern(const SparseMatrix& a,
                                                      const SparseMatrix& b) {
  SparseMatrix F = a;
  for (std::size_t k = 0; k < F.values().size(); ++k)
    F.values()[k] = a.values()[k] - b.values()[k];
  return F;
}

inline RoundedSubdomain finish(SparseMatrix scaled, SparseMatrix rounded,
                               MatrixRoundReport report) {
  RoundedSubdomain sub;
  sub.F = entrywise_difference_same_pattern(rounded, scaled);
  sub.A_scaled = std::move(scaled);
  sub.A_rounded = std::move(rounded);
  sub.report = std::move(report);
  return sub;
}

}  // namespace detail

// Sign-informed round up: positives away from zero, negatives toward zero,
// zeros unchanged. On an M-matrix sign pattern this yields F >= 0 exactly.
inline RoundedSubdomain round_mmatrix(const SparseMatrix& X,
                                      const FloatFormat& fmt) {
  SparseMatrix R = X;
  MatrixRoundReport report;
  auto& vals = R.values();
  for (int i = 0; i < R.size(); ++i) {
    for (int k = R.row_ptr()[i]; k < R.row_ptr()[i + 1]; ++k) {
      const double v = vals[k];
      if (v == 0.0) continue;
      const RoundMode mode =
          v > 0.0 ? RoundMode::AwayFromZero : RoundMode::TowardZero;
      const RoundResult r = round_scalar(v, fmt, mode);
      vals[k] = r.value;
      if (r.overflow) report.overflow_entries.push_back({i, R.col_idx()[k]});
      if (r.underflow) ++report.underflow_count;
    }
  }
  return detail::finish(X, std::move(R), std::move(report));
}

// Diagonal kept exact (in working precision), off-diagonals rounded toward
// zero; preserves a_ii >= |a_ij| and symmetry. If a diagonal entry is not
// representable in fmt the result mixes precisions and the report says so.
inline RoundedSubdomain round_diag(const SparseMatrix& X,
                                   const FloatFormat& fmt) {
  SparseMatrix R = X;
  MatrixRoundReport report;
  auto& vals = R.values();
  for (int i = 0; i < R.size(); ++i) {
    for (int k = R.row_ptr()[i]; k < R.row_ptr()[i + 1]; ++k) {
      if (R.col_idx()[k] == i) {
        if (round_scalar(vals[k], fmt, RoundMode::Nearest).value != vals[k])
          report.non_representable_diagonal = true;
        continue;
      }
      const RoundResult r = round_scalar(vals[k], fmt, RoundMode::TowardZero);
      vals[k] = r.value;
      if (r.underflow) ++report.underflow_count;
    }
  }
  return detail::finish(X, std::move(R), std::move(report));
}

// Nearest rounding of every entry; the experimental control.
inline RoundedSubdomain round_plain(const SparseMatrix& X,
                                    const FloatFormat& fmt) {
  MatrixRoundReport report;
  SparseMatrix R = round_matrix(X, fmt, RoundMode::Nearest, &report);
  return detail::finish(X, std::move(R), std::move(report));
}

inline RoundedSubdomain apply_rounding(const RoundingRoutine& routine,
                                       const SparseMatrix& X) {
  switch (routine.kind) {
    case RoundingKind::MmatrixUp: return round_mmatrix(X, routine.format);
    case RoundingKind::DiagExact: return round_diag(X, routine.format);
    case RoundingKind::PlainNearest: return round_plain(X, routine.format);
  }
  throw std::invalid_argument("apply_rounding: unknown kind");
}

}  // namespace mpschwarz
