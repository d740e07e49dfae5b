#pragma once

#include <Eigen/Dense>

#include "mixbddc/bddc.hpp"
#include "mixbddc/system.hpp"

namespace mixbddc {

struct DirectSolution {
  Eigen::VectorXd u;
  Eigen::VectorXd p;  // unscaled, zero volume-weighted mean
  double momentum_residual = 0.0;
  double mass_residual = 0.0;
};

/// Reference solve of the whole saddle system. The matrix is re-assembled
/// here from the grid, permeability, wells and pressure scaling alone; one
/// pressure is pinned and the result re-centred.
DirectSolution direct_solve(const SaddleSystem& system, int size_limit = 60000);

/// Eigenvalues (ascending) of the preconditioned interface operator on the
/// balanced subspace, from dense column-by-column assembly.
Eigen::VectorXd preconditioned_spectrum(const BddcSetup& setup, int size_limit = 4000);

}  // namespace mixbddc
