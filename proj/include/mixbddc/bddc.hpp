#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mixbddc/adaptive.hpp"
#include "mixbddc/coarse_space.hpp"
#include "mixbddc/decomposition.hpp"
#include "mixbddc/parallel.hpp"
#include "mixbddc/substructure.hpp"
#include "mixbddc/system.hpp"

namespace mixbddc {

/// Assembled interface Schur complement S = sum_i R_i^T S_i R_i.
class InterfaceOperator {
 public:
  InterfaceOperator(const std::vector<SubdomainOperator>& subs, const WeightOperator& weights, Execution exec)
      : subs_(&subs), weights_(&weights), exec_(exec) {}
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  int size() const { return weights_->decomposition().num_interface_dofs(); }

 private:
  const std::vector<SubdomainOperator>* subs_;
  const WeightOperator* weights_;
  Execution exec_;
};

/// Net divergence of interface vectors per subdomain (the B0 rows acting on
/// the interface) and the orthogonal projector onto their null space.
class BalanceProjector {
 public:
  BalanceProjector(const Decomposition& dec, const std::vector<SubdomainOperator>& subs);
  const SparseMatrix& matrix() const { return b0_; }
  Eigen::VectorXd net(const Eigen::VectorXd& v) const { return b0_ * v; }
  /// v - B0^T (B0 B0^T)^+ B0 v
  Eigen::VectorXd project(const Eigen::VectorXd& v) const;
  /// Minimum-norm v with B0 v = g (g must be compatible).
  Eigen::VectorXd particular(const Eigen::VectorXd& g) const;
  /// |B0 v| / (|B0|_F |v|); 0 for v = 0.
  double relative_imbalance(const Eigen::VectorXd& v) const;

 private:
  Eigen::VectorXd pinned_solve(const Eigen::VectorXd& g) const;
  SparseMatrix b0_;
  double norm_ = 0.0;
  Eigen::LDLT<Eigen::MatrixXd> gram_;
};

/// Two-level BDDC preconditioner: weighted distribution, coarse correction
/// and constrained local corrections, then averaging.
class BddcPreconditioner {
 public:
  BddcPreconditioner(const std::vector<SubdomainOperator>& subs, const WeightOperator& weights,
                     const CoarseSpace& coarse, Execution exec)
      : subs_(&subs), weights_(&weights), coarse_(&coarse), exec_(exec) {}
  Eigen::VectorXd apply(const Eigen::VectorXd& r) const;

 private:
  const std::vector<SubdomainOperator>* subs_;
  const WeightOperator* weights_;
  const CoarseSpace* coarse_;
  Execution exec_;
};

enum class ConstraintMode { Initial, Adaptive, Multiscale };

struct SolveConfig {
  double tau = std::numeric_limits<double>::infinity();
  WeightKind scaling = WeightKind::Multiplicity;
  double tol = 1e-6;
  int max_iterations = 10000;
  ConstraintMode constraints = ConstraintMode::Initial;
  Execution exec = Execution::Parallel;
  EigenOptions eigen;
  /// Throws invalid-argument for tau <= 1 or tol outside (0,1).
  void validate() const;
};

/// Everything the solver needs for one system and partition. Members refer
/// to each other, so the bundle is neither copyable nor movable.
struct BddcSetup {
  /// `base` replaces the initial constraints when given.
  BddcSetup(const SaddleSystem& system, const Decomposition& dec, const SolveConfig& config,
            std::optional<ConstraintSet> base = std::nullopt);
  BddcSetup(const BddcSetup&) = delete;
  BddcSetup& operator=(const BddcSetup&) = delete;

  const SaddleSystem* system;
  const Decomposition* dec;
  SolveConfig config;
  std::vector<SubdomainOperator> subs;
  WeightOperator weights;
  ConstraintSet constraints;
  std::optional<AdaptiveResult> adaptive;
  std::unique_ptr<CoarseSpace> coarse;
  std::unique_ptr<InterfaceOperator> op;
  std::unique_ptr<BddcPreconditioner> precond;
  std::unique_ptr<BalanceProjector> balance;
  std::vector<std::string> warnings;
};

}  // namespace mixbddc
