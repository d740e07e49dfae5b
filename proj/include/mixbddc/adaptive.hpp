#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mixbddc/coarse_space.hpp"
#include "mixbddc/decomposition.hpp"
#include "mixbddc/parallel.hpp"
#include "mixbddc/substructure.hpp"

namespace mixbddc {

struct EigenOptions {
  double deflation_tol = 1e-12;  // relative cut-off for the null space of the right-hand side operator
  bool clip_negative = true;
  /// Eliminate the unknowns off the shared face first (exact balanced
  /// energy minimisation); the nonzero spectrum is unchanged.
  bool reduce = true;
};

/// Generalized eigenproblem on the interface of a neighbouring pair. The pair
/// unknowns are the interface unknowns of i followed by those of j; E only
/// mixes the copies of unknowns shared by i and j.
struct PairProblem {
  int face = -1;
  int i = -1;
  int j = -1;
  int n_i = 0;
  std::vector<int> shared_i;  // pair positions of the shared unknowns on the i side (ordered as Face::dofs)
  std::vector<int> shared_j;
  Eigen::MatrixXd S;          // blockdiag(S_i, S_j)
  Eigen::MatrixXd E;
  Eigen::MatrixXd C;          // current coarse rows on this face, as jump rows
  Eigen::MatrixXd balance;    // outward signs of i (row 0) and j (row 1): zero net flux per side
  Eigen::MatrixXd Pi;         // orthogonal projector onto the null space of C and balance

  int size() const { return static_cast<int>(S.rows()); }
  /// Pi (I-E)^T S (I-E) Pi
  Eigen::MatrixXd lhs() const;
  /// Pi S Pi
  Eigen::MatrixXd rhs() const;
  /// (I-E)^T S (I-E) Pi w: constraint functionals supported on the shared
  /// face; as functionals on range(Pi) they agree with lhs() * w
  Eigen::MatrixXd functionals(const Eigen::MatrixXd& w) const;
};

struct PairEigen {
  int face = -1;
  int i = -1;
  int j = -1;
  Eigen::VectorXd lambda;        // descending
  Eigen::MatrixXd vectors;       // eigenvectors w, normalised in the right-hand side inner product
  Eigen::MatrixXd lhs_vectors;   // functionals(w), the candidate constraint rows
  int rank = 0;                  // dimension of the deflated right-hand side
};

/// Requires the dense Schur complements of both subdomains to be cached.
PairProblem build_pair(const Decomposition& dec, const std::vector<SubdomainOperator>& subs,
                       const WeightOperator& weights, const ConstraintSet& constraints, int face);

PairEigen pair_eig(const PairProblem& pair, const EigenOptions& options = {});

/// Largest eigenvalue, 0 for an empty spectrum.
double max_eigenvalue(const PairEigen& eig);

struct Selection {
  std::vector<Eigen::VectorXd> rows;  // new face rows over Face::dofs, unit max-norm
  double omega = 1.0;                 // max(lambda_{k+1}, 1)
  int k = 0;
};

/// Rows for all eigenvalues above tau.
Selection select_constraints(const PairProblem& pair, const PairEigen& eig, double tau);

/// Max of omega over pairs (1 when there are none).
double indicator(const std::vector<double>& omegas);

struct AdaptiveResult {
  std::vector<PairEigen> spectra;  // per face
  std::vector<double> omega;       // per face
  double omega_tilde = 1.0;
  int added = 0;
};

/// One pass: builds and solves every pair problem against the current
/// constraints, then appends the selected rows ordered by face.
AdaptiveResult enrich_adaptive(const Decomposition& dec, std::vector<SubdomainOperator>& subs,
                               const WeightOperator& weights, ConstraintSet& constraints, double tau,
                               const EigenOptions& options, Execution exec);

/// Interface traces of the pair Darcy problems driven by a source on one
/// side and a sink on the other, one row per face component.
int enrich_multiscale(const SaddleSystem& system, const Decomposition& dec, ConstraintSet& constraints, Execution exec);

/// Trace of the pair flow over Face::dofs (global orientation), for tests.
Eigen::VectorXd multiscale_trace(const SaddleSystem& system, const Decomposition& dec, int face);

}  // namespace mixbddc
