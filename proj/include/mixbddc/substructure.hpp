#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "mixbddc/decomposition.hpp"
#include "mixbddc/parallel.hpp"
#include "mixbddc/system.hpp"

namespace mixbddc {

/// Local flux field, pressure and pressure-mean multiplier of one subdomain.
/// Fluxes are in local order: interior unknowns first, then the interface.
struct LocalSolution {
  Eigen::VectorXd flux;
  Eigen::VectorXd pressure;
  double mean_multiplier = 0.0;
};

/// Local operators of one subdomain. The interior problem
///
///   [ A_II  B_I^T   0   ] [ x_I ]
///   [ B_I     0   C_Q^T ] [ p   ]
///   [  0     C_Q    0   ] [ mu  ]
///
/// is factored once; C_Q holds the cell volumes so that local pressures have
/// zero mean and the divergence of a harmonic extension is constant on the
/// subdomain. Read-only after construction (apart from the dense Schur cache).
class SubdomainOperator {
 public:
  SubdomainOperator(const SaddleSystem& system, const Decomposition& dec, int id);

  int id() const { return id_; }
  int num_interior() const { return static_cast<int>(interior_dofs_.size()); }
  int num_interface() const { return static_cast<int>(interface_.size()); }
  int num_local_flux() const { return num_interior() + num_interface(); }
  int num_cells() const { return static_cast<int>(cells_.size()); }

  /// Global flux unknowns in local order (interior, then interface).
  const std::vector<int>& flux_dofs() const { return flux_dofs_; }
  const std::vector<int>& interior_dofs() const { return interior_dofs_; }
  /// Interface indices (into Decomposition::interface()) in local order.
  const std::vector<int>& interface() const { return interface_; }
  const std::vector<int>& cells() const { return cells_; }
  /// +1/-1: orientation of each local interface unknown relative to the outward normal.
  const Eigen::VectorXd& outward_sign() const { return outward_; }
  const Eigen::VectorXd& volumes() const { return volumes_; }
  const SparseMatrix& A() const { return a_; }
  const SparseMatrix& B() const { return b_; }
  const Eigen::VectorXd& f() const { return f_; }
  double scale() const { return scale_; }

  /// Solves the interior problem with prescribed interface trace `trace`,
  /// interior momentum right-hand side `interior_rhs` and divergence
  /// right-hand side `pressure_rhs` (both may be empty for zero).
  LocalSolution solve_interior(const Eigen::VectorXd& trace, const Eigen::VectorXd& interior_rhs,
                               const Eigen::VectorXd& pressure_rhs) const;
  /// Stokes-harmonic extension: local energy minimiser with the given trace
  /// and constant divergence.
  LocalSolution harmonic_extend(const Eigen::VectorXd& trace) const;
  /// y = S x through one interior solve, or the cached dense S when present.
  Eigen::VectorXd schur_apply(const Eigen::VectorXd& x) const;
  /// Explicit Schur complement on the interface, assembled column by column.
  Eigen::MatrixXd schur_dense() const;
  /// Computes and keeps the dense Schur complement for later applications.
  void cache_dense_schur();
  bool has_dense_schur() const { return dense_schur_ != nullptr; }
  const Eigen::MatrixXd& dense_schur() const { return *dense_schur_; }

  /// Interface rows of A x + B^T p for a full local field.
  Eigen::VectorXd interface_residual(const Eigen::VectorXd& flux, const Eigen::VectorXd& pressure) const;
  /// b(w, 1) on this subdomain: the scaled negative net outflow of the trace.
  double net_divergence(const Eigen::VectorXd& trace) const;
  /// Dense copy of the interior problem matrix, for tests and condition estimates.
  Eigen::MatrixXd interior_kkt_dense() const;

 private:
  int id_;
  double scale_ = 1.0;
  std::vector<int> flux_dofs_;
  std::vector<int> interior_dofs_;
  std::vector<int> interface_;
  std::vector<int> cells_;
  Eigen::VectorXd outward_;
  Eigen::VectorXd volumes_;
  Eigen::VectorXd f_;
  SparseMatrix a_;
  SparseMatrix b_;
  SparseMatrix kkt_;
  std::shared_ptr<Eigen::SparseLU<SparseMatrix>> lu_;
  std::shared_ptr<Eigen::MatrixXd> dense_schur_;
};

std::vector<SubdomainOperator> build_subdomains(const SaddleSystem& system, const Decomposition& dec,
                                                Execution exec);

}  // namespace mixbddc
