#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "mixbddc/decomposition.hpp"
#include "mixbddc/parallel.hpp"
#include "mixbddc/substructure.hpp"

namespace mixbddc {

enum class ConstraintOrigin { Initial, Adaptive, Multiscale };

/// One flux coarse degree of freedom on the face between subdomains i < j.
/// The constraint is row . (w_i - w_j) = 0 on the face unknowns, with the row
/// written in the global (positive-axis) orientation. Subdomain i carries the
/// local row +row, subdomain j carries -row.
struct CoarseDof {
  int face = -1;
  int component = -1;        // face component, or -1 when the row spans the whole face
  std::vector<int> support;  // interface indices
  Eigen::VectorXd row;
  ConstraintOrigin origin = ConstraintOrigin::Initial;
};

class ConstraintSet {
 public:
  ConstraintSet() = default;
  explicit ConstraintSet(const Decomposition& dec);

  const std::vector<CoarseDof>& dofs() const { return dofs_; }
  int num_flux_coarse() const { return static_cast<int>(dofs_.size()); }
  /// Flux coarse dofs plus one pressure coarse dof per subdomain.
  int num_coarse() const { return num_flux_coarse() + num_subdomains_; }
  int count(ConstraintOrigin origin) const;

  /// Appends unconditionally.
  void add(CoarseDof dof);
  /// Appends unless the row is numerically dependent on the rows already on
  /// that face (relative residual below `tol`). Returns whether it was kept.
  bool add_if_independent(CoarseDof dof, double tol = 1e-10);

  const std::vector<int>& dofs_of_subdomain(int s) const { return by_subdomain_[s]; }
  const std::vector<int>& dofs_of_face(int f) const { return by_face_[f]; }
  /// +1 on the lower-numbered side of the coarse dof's face, -1 on the other.
  int sign(int s, int c) const;
  /// Rows of all coarse dofs on face f, dense over Face::dofs.
  Eigen::MatrixXd face_rows(int f) const;
  /// Local constraint rows C_U^s over the subdomain's interface ordering.
  Eigen::MatrixXd local_rows(int s) const;

 private:
  const Decomposition* dec_ = nullptr;
  int num_subdomains_ = 0;
  std::vector<CoarseDof> dofs_;
  std::vector<std::vector<int>> by_subdomain_;
  std::vector<std::vector<int>> by_face_;
};

/// Zero-net-flux constraint on every face component: entries are the
/// orientation of each unknown relative to the outward normal of face.i.
ConstraintSet initial_constraints(const Decomposition& dec);

/// Indices of rows of C that are (numerically) linearly dependent on the
/// preceding rows.
std::vector<int> dependent_rows(const Eigen::MatrixXd& rows, double tol = 1e-10);

/// Factored constrained local problem on one subdomain:
///
///   [ A   B^T  C^T  0   ] [ w   ]   [ r ]
///   [ B   0    0   C_Q^T] [ p   ] = [ 0 ]
///   [ C   0    0    0   ] [ lam ]   [ v ]
///   [ 0   C_Q  0    0   ] [ mu  ]   [ 0 ]
///
/// with C the flux constraint rows acting on the interface unknowns and r
/// supported on the interface.
class ConstrainedSolver {
 public:
  ConstrainedSolver(const SubdomainOperator& sub, Eigen::MatrixXd rows);

  int num_constraints() const { return static_cast<int>(rows_.rows()); }
  const Eigen::MatrixXd& rows() const { return rows_; }
  /// Returns the full local flux field; multipliers are written if requested.
  LocalSolution solve(const Eigen::VectorXd& interface_rhs, const Eigen::VectorXd& values,
                      Eigen::VectorXd* multipliers = nullptr) const;

 private:
  int subdomain_;
  int num_local_flux_;
  int num_interface_;
  int num_cells_;
  Eigen::MatrixXd rows_;
  std::shared_ptr<Eigen::SparseLU<SparseMatrix>> lu_;
};

/// Energy-minimal coarse basis of one subdomain: column c solves the
/// constrained problem with zero load and unit value of local coarse dof c.
struct LocalCoarseBasis {
  Eigen::MatrixXd trace;      // interface values, one column per local coarse dof
  Eigen::MatrixXd stiffness;  // Psi^T A Psi over full local fields
  Eigen::VectorXd divergence; // b(psi_c, 1) on the subdomain
};

LocalCoarseBasis coarse_basis(const SubdomainOperator& sub, const ConstrainedSolver& solver);

/// Coarse saddle problem on (flux coarse space, subdomain-wise constant
/// pressures), shared by the first solve step and the preconditioner. The
/// pressure constant is removed by pinning subdomain 0.
class CoarseSpace {
 public:
  CoarseSpace(const Decomposition& dec, const std::vector<SubdomainOperator>& subs, const ConstraintSet& constraints,
              Execution exec);

  int num_flux() const { return num_flux_; }
  int num_subdomains() const { return static_cast<int>(solvers_.size()); }
  const ConstrainedSolver& local_solver(int s) const { return solvers_[s]; }
  const LocalCoarseBasis& basis(int s) const { return bases_[s]; }
  /// Global coarse index and sign of each local coarse dof of subdomain s.
  const std::vector<int>& coarse_index(int s) const { return coarse_index_[s]; }
  const std::vector<int>& coarse_sign(int s) const { return coarse_sign_[s]; }
  const Eigen::MatrixXd& stiffness() const { return stiffness_; }
  const Eigen::MatrixXd& divergence() const { return divergence_; }

  struct Solution {
    Eigen::VectorXd flux;      // coarse coefficients
    Eigen::VectorXd pressure;  // one value per subdomain, zero volume-weighted mean after unscaling
  };
  /// Solves [S_Pi B0^T; B0 0] (w, p0) = (flux_rhs, pressure_rhs).
  Solution solve(const Eigen::VectorXd& flux_rhs, const Eigen::VectorXd& pressure_rhs) const;
  /// Broken interface vector of a coarse function.
  BrokenVector expand(const Eigen::VectorXd& coeffs) const;
  /// Transpose of `expand`.
  Eigen::VectorXd restrict_dual(const BrokenVector& r) const;

 private:
  int num_flux_ = 0;
  std::vector<ConstrainedSolver> solvers_;
  std::vector<LocalCoarseBasis> bases_;
  std::vector<std::vector<int>> coarse_index_;
  std::vector<std::vector<int>> coarse_sign_;
  Eigen::MatrixXd stiffness_;
  Eigen::MatrixXd divergence_;
  Eigen::VectorXd sub_scale_;
  Eigen::VectorXd sub_volume_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

}  // namespace mixbddc
