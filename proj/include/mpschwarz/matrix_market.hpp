#pragma once

// Matrix Market coordinate I/O (ASCII, 1-based indices, real entries).

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpschwarz/sparse.hpp"

namespace mpschwarz {

inline void write_matrix_market(const SparseMatrix& M, std::ostream& os) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << M.size() << " " << M.size() << " " << M.nnz() << "\n";
  os.precision(17);
  for (int i = 0; i < M.size(); ++i)
    for (int k = M.row_ptr()[i]; k < M.row_ptr()[i + 1]; ++k)
      os << i + 1 << " " << M.col_idx()[k] + 1 << " " << M.values()[k] << "\n";
}

inline void write_matrix_market(const SparseMatrix& M,
                                const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_matrix_market(M, os);
}

inline SparseMatrix read_matrix_market(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("matrix market: empty stream");
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || object != "matrix" || format != "coordinate")
    throw std::runtime_error("matrix market: unsupported banner: " + line);
  if (field != "real" && field != "integer")
    throw std::runtime_error("matrix market: unsupported field: " + field);
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    throw std::runtime_error("matrix market: unsupported symmetry: " + symmetry);

  while (std::getline(is, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream sizes(line);
  long rows = 0, cols = 0, nnz = 0;
  if (!(sizes >> rows >> cols >> nnz))
    throw std::runtime_error("matrix market: bad size line");
  if (rows != cols) throw std::runtime_error("matrix market: matrix not square");

  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(nnz));
  for (long k = 0; k < nnz; ++k) {
    if (!std::getline(is, line))
      throw std::runtime_error("matrix market: truncated entry list");
    std::istringstream entry(line);
    int i = 0, j = 0;
    double v = 0.0;
    if (!(entry >> i >> j >> v))
      throw std::runtime_error("matrix market: bad entry: " + line);
    t.push_back({i - 1, j - 1, v});
    if (symmetric && i != j) t.push_back({j - 1, i - 1, v});
  }
  return SparseMatrix::from_triplets(static_cast<int>(rows), std::move(t));
}

inline SparseMatrix read_matrix_market(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return read_matrix_market(is);
}

}  // namespace mpschwarz
