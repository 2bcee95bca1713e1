#pragma once

// Overlapping/non-overlapping subspace decomposition: index sets, the
// restriction/prolongation actions, subdomain and coupling blocks, and the
// coloring count q.

#include <Eigen/SparseCore>
#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpschwarz/grid.hpp"
#include "mpschwarz/sparse.hpp"

namespace mpschwarz {

struct Partition {
  int total_size = 0;  // N
  int p = 0;
  std::vector<std::vector<int>> overlapping;     // W_i, sorted
  std::vector<std::vector<int>> nonoverlapping;  // Wbar_i, sorted
  int color_count = 1;                           // q
  // restricted_mask[i][k]: W_i[k] belongs to Wbar_i
  std::vector<std::vector<char>> restricted_mask;

  int subdomain_size(int i) const { return static_cast<int>(overlapping[i].size()); }
  int restricted_size(int i) const { return static_cast<int>(nonoverlapping[i].size()); }

  void finalize() {
    restricted_mask.assign(p, {});
    std::vector<char> seen(total_size, 0);
    for (int i = 0; i < p; ++i) {
      std::vector<char> in_bar(total_size, 0);
      for (int g : nonoverlapping[i]) {
        if (g < 0 || g >= total_size)
          throw std::invalid_argument("Partition: index out of range");
        if (seen[g]) throw std::invalid_argument("Partition: Wbar sets overlap");
        seen[g] = 1;
        in_bar[g] = 1;
      }
      restricted_mask[i].resize(overlapping[i].size());
      int covered = 0;
      for (std::size_t k = 0; k < overlapping[i].size(); ++k) {
        const int g = overlapping[i][k];
        if (g < 0 || g >= total_size)
          throw std::invalid_argument("Partition: index out of range");
        restricted_mask[i][k] = in_bar[g];
        covered += in_bar[g];
      }
      if (covered != restricted_size(i))
        throw std::invalid_argument("Partition: Wbar_i not contained in W_i");
      if (!std::is_sorted(overlapping[i].begin(), overlapping[i].end()))
        throw std::invalid_argument("Partition: W_i not sorted");
    }
    for (int g = 0; g < total_size; ++g)
      if (!seen[g])
        throw std::invalid_argument("Partition: Wbar sets do not cover 1..N");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["total_size"] = total_size;
    j["p"] = p;
    j["q"] = color_count;
    j["overlapping"] = overlapping;
    j["nonoverlapping"] = nonoverlapping;
    return j;
  }
};

inline Vector restrict_to(const Vector& v, const Partition& part, int i) {
  if (v.size() != part.total_size)
    throw std::invalid_argument("restrict_to: dimension mismatch");
  const auto& w = part.overlapping[i];
  Vector out(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) out[k] = v[w[k]];
  return out;
}

// Scatter a W_i-sized vector into an N-vector. With restricted=true only the
// Wbar_i positions are written (the RAS prolongation).
inline Vector prolong_from(const Vector& w, const Partition& part, int i,
                           bool restricted = false) {
  const auto& idx = part.overlapping[i];
  if (w.size() != static_cast<Eigen::Index>(idx.size()))
    throw std::invalid_argument("prolong_from: dimension mismatch");
  Vector out = Vector::Zero(part.total_size);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (restricted && !part.restricted_mask[i][k]) continue;
    out[idx[k]] = w[k];
  }
  return out;
}

namespace detail {

inline std::vector<int> column_band_indices(const GridSpec& grid, int col_lo,
                                            int col_hi) {
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(col_hi - col_lo + 1) * grid.n);
  for (int iy = 0; iy < grid.n; ++iy)
    for (int ix = col_lo; ix <= col_hi; ++ix) idx.push_back(grid.index(ix, iy));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

// p vertical strips of grid columns, each extended by overlap_lines columns
// on both interior sides. Interior overlap indices belong to the Wbar of the
// strip they geometrically lie in; a column on the midline goes to the
// lower-indexed strip.
inline Partition strip_partition(const GridSpec& grid, int p,
                                 int overlap_lines) {
  if (p < 1 || p > grid.n)
    throw std::invalid_argument("strip_partition: need 1 <= p <= n");
  if (overlap_lines < 0)
    throw std::invalid_argument("strip_partition: negative overlap");
  Partition part;
  part.total_size = grid.total;
  part.p = p;
  part.color_count = p >= 2 ? 2 : 1;
  for (int i = 0; i < p; ++i) {
    const int wb_lo = static_cast<int>((static_cast<long>(i) * grid.n + p - 1) / p);
    const int wb_hi = static_cast<int>((static_cast<long>(i + 1) * grid.n + p - 1) / p) - 1;
    if (wb_lo > wb_hi)
      throw std::invalid_argument("strip_partition: empty strip");
    const int w_lo = std::max(0, wb_lo - overlap_lines);
    const int w_hi = std::min(grid.n - 1, wb_hi + overlap_lines);
    if (overlap_lines > 0 && (w_lo == 0 && w_hi == grid.n - 1) && p > 1)
      throw std::invalid_argument("strip_partition: overlap exceeds domain");
    part.nonoverlapping.push_back(detail::column_band_indices(grid, wb_lo, wb_hi));
    part.overlapping.push_back(detail::column_band_indices(grid, w_lo, w_hi));
  }
  part.finalize();
  return part;
}

// Two overlapping strips split at the middle grid column, each extended by
// overlap_lines columns past the split.
inline Partition two_domain_partition(const GridSpec& grid,
                                      int overlap_lines = 1) {
  if (overlap_lines < 0)
    throw std::invalid_argument("two_domain_partition: negative overlap");
  const int split = (grid.n + 1) / 2;  // Wbar_1 columns [0, split)
  if (overlap_lines > 0 &&
      (split - 1 + overlap_lines >= grid.n - 1 || split - overlap_lines <= 0))
    throw std::invalid_argument("two_domain_partition: overlap exceeds domain");
  Partition part;
  part.total_size = grid.total;
  part.p = 2;
  part.color_count = 2;
  part.nonoverlapping.push_back(detail::column_band_indices(grid, 0, split - 1));
  part.nonoverlapping.push_back(detail::column_band_indices(grid, split, grid.n - 1));
  part.overlapping.push_back(
      detail::column_band_indices(grid, 0, split - 1 + overlap_lines));
  part.overlapping.push_back(
      detail::column_band_indices(grid, split - overlap_lines, grid.n - 1));
  part.finalize();
  return part;
}

struct SubdomainBlocks {
  SparseMatrix A_sub;                        // (W_i, W_i)
  Eigen::SparseMatrix<double> coupling;      // K_i: rows W_i, columns outside
  Eigen::SparseMatrix<double> coupling_in;   // L_i: rows outside, columns W_i
  std::vector<int> exterior;                 // global indices outside W_i
};

inline SubdomainBlocks subdomain_blocks(const SparseMatrix& A,
                                        const Partition& part, int i) {
  const auto& w = part.overlapping[i];
  SubdomainBlocks out;
  out.A_sub = A.submatrix(w);
  std::vector<int> pos(A.size(), -1);
  for (std::size_t k = 0; k < w.size(); ++k) pos[w[k]] = static_cast<int>(k);
  out.exterior.reserve(A.size() - w.size());
  std::vector<int> ext_pos(A.size(), -1);
  for (int g = 0; g < A.size(); ++g)
    if (pos[g] < 0) {
      ext_pos[g] = static_cast<int>(out.exterior.size());
      out.exterior.push_back(g);
    }
  std::vector<Eigen::Triplet<double>> tk, tl;
  for (int g = 0; g < A.size(); ++g) {
    for (int k = A.row_ptr()[g]; k < A.row_ptr()[g + 1]; ++k) {
      const int c = A.col_idx()[k];
      if (pos[g] >= 0 && pos[c] < 0)
        tk.emplace_back(pos[g], ext_pos[c], A.values()[k]);
      else if (pos[g] < 0 && pos[c] >= 0)
        tl.emplace_back(ext_pos[g], pos[c], A.values()[k]);
    }
  }
  const int ni = static_cast<int>(w.size());
  const int ne = static_cast<int>(out.exterior.size());
  out.coupling.resize(ni, ne);
  out.coupling.setFromTriplets(tk.begin(), tk.end());
  out.coupling_in.resize(ne, ni);
  out.coupling_in.setFromTriplets(tl.begin(), tl.end());
  return out;
}

}  // namespace mpschwarz
