#pragma once

// Uniform n-by-n interior grid on the unit square, Dirichlet boundary
// eliminated, lexicographic ordering with x1 fastest: index = iy*n + ix,
// node (ix, iy) at ((ix+1)h, (iy+1)h).

#include <stdexcept>

namespace mpschwarz {

struct GridSpec {
  int n = 0;          // interior points per side
  double h = 0.0;     // 1/(n+1)
  int total = 0;      // n*n

  explicit GridSpec(int n_points) : n(n_points) {
    if (n < 1) throw std::invalid_argument("GridSpec: n must be >= 1");
    h = 1.0 / (n + 1);
    total = n * n;
  }

  int index(int ix, int iy) const { return iy * n + ix; }
  double x1(int ix) const { return (ix + 1) * h; }
  double x2(int iy) const { return (iy + 1) * h; }
};

}  // namespace mpschwarz
