#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "mixbddc/decomposition.hpp"
#include "mixbddc/grid.hpp"
#include "mixbddc/system.hpp"

namespace testing {

inline mixbddc::Grid grid2(int nx, int ny) { return mixbddc::Grid(2, {nx, ny, 1}, {1.0, 1.0, 1.0}); }
inline mixbddc::Grid grid3(int nx, int ny, int nz) { return mixbddc::Grid(3, {nx, ny, nz}, {1.0, 1.0, 1.0}); }

/// Isotropic log-uniform field over `orders` decades centred at 1.
inline mixbddc::Permeability random_perm(const mixbddc::Grid& g, double orders, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-orders / 2, orders / 2);
  std::vector<double> k;
  for (int c = 0; c < g.num_cells(); ++c) {
    const double v = std::pow(10.0, u(rng));
    for (int a = 0; a < g.dim(); ++a) k.push_back(v);
  }
  return mixbddc::Permeability(g.dim(), k);
}

inline mixbddc::Decomposition split(const mixbddc::Grid& g, std::vector<int> s) {
  return mixbddc::regular_partition(g, s);
}

/// Assembled and rescaled system for the given partition.
inline mixbddc::SaddleSystem scaled_system(const mixbddc::Grid& g, const mixbddc::Permeability& k,
                                           const mixbddc::Decomposition& dec, mixbddc::Wells wells = {}) {
  return mixbddc::rescale(mixbddc::assemble_system(g, k, wells), dec);
}

inline double rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double n = b.norm();
  return n > 0 ? (a - b).norm() / n : (a - b).norm();
}

}  // namespace testing
