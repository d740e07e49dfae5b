#include "mixbddc/bddc.hpp"

#include <cmath>

#include "mixbddc/error.hpp"

namespace mixbddc {

Eigen::VectorXd InterfaceOperator::apply(const Eigen::VectorXd& v) const {
  const BrokenVector local = weights_->restrict(v);
  BrokenVector out(local.size());
  for_each_index(exec_, static_cast<int>(local.size()), [&](int s) { out[s] = (*subs_)[s].schur_apply(local[s]); });
  return weights_->assemble(out);
}

BalanceProjector::BalanceProjector(const Decomposition& dec, const std::vector<SubdomainOperator>& subs) {
  const int n = dec.num_subdomains();
  std::vector<Eigen::Triplet<double>> trip;
  for (int s = 0; s < n; ++s) {
    const auto& iface = subs[s].interface();
    for (std::size_t k = 0; k < iface.size(); ++k)
      trip.emplace_back(s, iface[k], -subs[s].scale() * subs[s].outward_sign()[static_cast<Eigen::Index>(k)]);
  }
  b0_.resize(n, dec.num_interface_dofs());
  b0_.setFromTriplets(trip.begin(), trip.end());
  norm_ = b0_.norm();
  if (n > 1) {
    const Eigen::MatrixXd gram = Eigen::MatrixXd(b0_ * b0_.transpose());
    gram_.compute(gram.bottomRightCorner(n - 1, n - 1));
    if (gram_.info() != Eigen::Success) throw Error(ErrorKind::NumericalFailure, "balance projector factorization failed");
  }
}

Eigen::VectorXd BalanceProjector::pinned_solve(const Eigen::VectorXd& g) const {
  const Eigen::Index n = g.size();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  if (n > 1) y.tail(n - 1) = gram_.solve(g.tail(n - 1));
  return y;
}

Eigen::VectorXd BalanceProjector::project(const Eigen::VectorXd& v) const {
  if (b0_.rows() < 2) return v;
  return v - b0_.transpose() * pinned_solve(b0_ * v);
}

Eigen::VectorXd BalanceProjector::particular(const Eigen::VectorXd& g) const {
  if (g.size() != b0_.rows()) throw Error(ErrorKind::InvalidArgument, "balance right-hand side has the wrong size");
  if (b0_.rows() < 2) return Eigen::VectorXd::Zero(b0_.cols());
  return b0_.transpose() * pinned_solve(g);
}

double BalanceProjector::relative_imbalance(const Eigen::VectorXd& v) const {
  const double vn = v.norm();
  if (vn == 0.0 || norm_ == 0.0) return 0.0;
  return (b0_ * v).norm() / (norm_ * vn);
}

Eigen::VectorXd BddcPreconditioner::apply(const Eigen::VectorXd& r) const {
  const BrokenVector rt = weights_->distribute(r);
  const int n = static_cast<int>(rt.size());
  const Eigen::VectorXd coarse_rhs = coarse_->restrict_dual(rt);
  const CoarseSpace::Solution cs = coarse_->solve(coarse_rhs, Eigen::VectorXd::Zero(n));
  BrokenVector w = coarse_->expand(cs.flux);
  for_each_index(exec_, n, [&](int s) {
    const ConstrainedSolver& solver = coarse_->local_solver(s);
    const LocalSolution loc = solver.solve(rt[s], Eigen::VectorXd::Zero(solver.num_constraints()));
    w[s] += loc.flux.tail((*subs_)[s].num_interface());
  });
  return weights_->average(w);
}

void SolveConfig::validate() const {
  if (!(tau > 1.0)) throw Error(ErrorKind::InvalidArgument, "tau must exceed 1");
  if (!(tol > 0.0 && tol < 1.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must lie in (0,1)");
  if (max_iterations < 1) throw Error(ErrorKind::InvalidArgument, "max iterations must be positive");
}

BddcSetup::BddcSetup(const SaddleSystem& sys, const Decomposition& decomposition, const SolveConfig& cfg,
                     std::optional<ConstraintSet> base)
    : system(&sys), dec(&decomposition), config(cfg) {
  config.validate();
  subs = build_subdomains(sys, decomposition, config.exec);
  weights = build_weights(decomposition, sys, config.scaling);
  if (config.scaling == WeightKind::Multiplicity && jumps_aligned_with_partition(sys.perm, decomposition))
    warnings.emplace_back("coefficient jumps are aligned with the partition; stiffness scaling is advisable");
  constraints = base ? std::move(*base) : initial_constraints(decomposition);
  if (config.constraints == ConstraintMode::Adaptive) {
    adaptive = enrich_adaptive(decomposition, subs, weights, constraints, config.tau, config.eigen, config.exec);
  } else if (config.constraints == ConstraintMode::Multiscale) {
    enrich_multiscale(sys, decomposition, constraints, config.exec);
  }
  coarse = std::make_unique<CoarseSpace>(decomposition, subs, constraints, config.exec);
  op = std::make_unique<InterfaceOperator>(subs, weights, config.exec);
  precond = std::make_unique<BddcPreconditioner>(subs, weights, *coarse, config.exec);
  balance = std::make_unique<BalanceProjector>(decomposition, subs);
}

}  // namespace mixbddc
