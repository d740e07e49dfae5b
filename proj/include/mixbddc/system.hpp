#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mixbddc/grid.hpp"

namespace mixbddc {

using SparseMatrix = Eigen::SparseMatrix<double>;

class Decomposition;

/// Point injection and production wells; the default sink is the last cell.
struct Wells {
  int source_cell = 0;
  int sink_cell = -1;
  double strength = 1.0;
};

/// The discrete mixed problem
///
///   [ A   B^T D ] [ u    ]   [ 0   ]
///   [ D B   0   ] [ pbar ] = [ D f ]
///
/// with boundary fluxes eliminated. `B` and `f` hold the row-scaled D*B and
/// D*f; before `rescale` D is the identity. Pressures are recovered as
/// p = D * pbar.
struct SaddleSystem {
  Grid grid;
  Permeability perm;
  MassMatrixKind mass_kind = MassMatrixKind::Exact;
  Wells wells;
  SparseMatrix A;
  SparseMatrix B;
  Eigen::VectorXd f;
  Eigen::VectorXd D;

  int num_flux() const { return static_cast<int>(A.rows()); }
  int num_pressure() const { return static_cast<int>(B.rows()); }
  Eigen::MatrixXd cell_mass_matrix(int cell) const;
  /// Sign of the flux unknown in the divergence row of a cell: -1 when the
  /// positive axis points out of the cell, +1 when it points in, 0 otherwise.
  int divergence_sign(int cell, int dof) const;
  Eigen::VectorXd unscale_pressure(const Eigen::VectorXd& pbar) const { return D.cwiseProduct(pbar); }
};

SaddleSystem assemble_system(const Grid& grid, const Permeability& perm, const Wells& wells = {},
                             MassMatrixKind kind = MassMatrixKind::Exact);

/// Block-constant pressure scaling: each subdomain gets the mean diagonal of
/// A over the flux unknowns touching it.
SaddleSystem rescale(const SaddleSystem& system, const Decomposition& decomposition);

/// Shifts p to zero volume-weighted mean.
void remove_mean(Eigen::VectorXd& p);

}  // namespace mixbddc
