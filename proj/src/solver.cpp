#include "mixbddc/solver.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SparseCholesky>

namespace mixbddc {

std::pair<double, double> lanczos_extremes(const std::vector<double>& alpha, const std::vector<double>& beta) {
  const int m = static_cast<int>(alpha.size());
  if (m == 0) return {1.0, 1.0};
  Eigen::VectorXd diag(m);
  Eigen::VectorXd sub(std::max(m - 1, 0));
  for (int k = 0; k < m; ++k) {
    diag[k] = 1.0 / alpha[k];
    if (k > 0) diag[k] += beta[k - 1] / alpha[k - 1];
    if (k + 1 < m) sub[k] = std::sqrt(beta[k]) / alpha[k];
  }
  if (m == 1) return {diag[0], diag[0]};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  return {es.eigenvalues()[0], es.eigenvalues()[m - 1]};
}

PcgResult pcg(const LinearMap& op, const LinearMap& precond, const Eigen::VectorXd& rhs, double tol, int max_iterations,
              const LinearMap& project, const std::function<double(const Eigen::VectorXd&)>& imbalance) {
  auto proj = [&](Eigen::VectorXd v) { return project ? project(v) : v; };
  PcgResult res;
  res.x = Eigen::VectorXd::Zero(rhs.size());
  Eigen::VectorXd r = proj(rhs);
  const double r0 = r.norm();
  res.history.push_back(1.0);
  if (r0 == 0.0) {
    res.converged = true;
    res.history.back() = 0.0;
    return res;
  }
  auto precondition = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd z = precond ? precond(v) : v;
    if (imbalance) res.max_imbalance = std::max(res.max_imbalance, imbalance(z));
    return proj(std::move(z));
  };
  Eigen::VectorXd z = precondition(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  std::vector<double> alphas;
  std::vector<double> betas;
  for (int k = 1; k <= max_iterations; ++k) {
    const Eigen::VectorXd q = op(p);
    const double pq = p.dot(q);
    if (!(pq > 0.0)) {
      std::ostringstream msg;
      msg << "non-positive curvature " << pq << " at iteration " << k;
      throw Error(ErrorKind::Indefinite, msg.str());
    }
    const double alpha = rz / pq;
    alphas.push_back(alpha);
    res.x += alpha * p;
    if (imbalance) res.max_iterate_imbalance = std::max(res.max_iterate_imbalance, imbalance(res.x));
    r = proj(r - alpha * q);
    res.iterations = k;
    const double rel = r.norm() / r0;
    res.history.push_back(rel);
    if (rel <= tol) {
      res.converged = true;
      break;
    }
    z = precondition(r);
    const double rz_new = r.dot(z);
    const double beta = rz_new / rz;
    betas.push_back(beta);
    p = z + beta * p;
    rz = rz_new;
  }
  const auto [lmin, lmax] = lanczos_extremes(alphas, betas);
  res.lambda_min = lmin;
  res.lambda_max = lmax;
  res.kappa = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  return res;
}

NonConvergence::NonConvergence(SolveReport report)
    : Error(ErrorKind::NumericalFailure, "CG reached the iteration limit without converging"),
      report_(std::move(report)) {}

PressureRecovery recover_pressure(const Eigen::VectorXd& u, const SaddleSystem& system) {
  const int n = system.num_pressure();
  PressureRecovery out;
  const Eigen::VectorXd au = system.A * u;
  Eigen::VectorXd pbar = Eigen::VectorXd::Zero(n);
  if (n > 1) {
    const SparseMatrix gram = system.B * system.B.transpose();
    const SparseMatrix pinned = gram.bottomRightCorner(n - 1, n - 1);
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(pinned);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::NumericalFailure, "pressure recovery factorization failed");
    const Eigen::VectorXd g = -(system.B * au);
    pbar.tail(n - 1) = ldlt.solve(g.tail(n - 1));
  }
  const double an = au.norm();
  out.momentum_residual = an > 0.0 ? (au + system.B.transpose() * pbar).norm() / an : 0.0;
  out.p = system.unscale_pressure(pbar);
  remove_mean(out.p);
  return out;
}

RelativeErrors errors(const Eigen::VectorXd& u0, const Eigen::VectorXd& u_star, const Eigen::VectorXd& u_exact) {
  const double n = u_exact.norm();
  if (n == 0.0) throw Error(ErrorKind::InvalidArgument, "exact flux is zero");
  if (u0.size() != u_exact.size() || u_star.size() != u_exact.size())
    throw Error(ErrorKind::InvalidArgument, "flux vectors differ in size");
  return {(u0 - u_exact).norm() / n, (u_star - u_exact).norm() / n};
}

namespace {

Eigen::VectorXd local_block(const Eigen::VectorXd& global, const std::vector<int>& idx) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) v[static_cast<Eigen::Index>(k)] = global[idx[k]];
  return v;
}

// Global flux vector from per-subdomain full local fields.
Eigen::VectorXd scatter_flux(const std::vector<SubdomainOperator>& subs, const std::vector<Eigen::VectorXd>& local,
                             int num_flux) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(num_flux);
  for (std::size_t s = 0; s < subs.size(); ++s) {
    const auto& dofs = subs[s].flux_dofs();
    for (std::size_t k = 0; k < dofs.size(); ++k) u[dofs[k]] = local[s][static_cast<Eigen::Index>(k)];
  }
  return u;
}

}  // namespace

SolveReport solve(const BddcSetup& setup, const Eigen::VectorXd* u_exact) {
  const SaddleSystem& sys = *setup.system;
  const auto& subs = setup.subs;
  const WeightOperator& weights = setup.weights;
  const CoarseSpace& coarse = *setup.coarse;
  const Execution exec = setup.config.exec;
  const int n = static_cast<int>(subs.size());
  const int nu = sys.num_flux();
  SolveReport rep;
  rep.warnings = setup.warnings;
  rep.n_c = setup.constraints.num_coarse();
  if (setup.adaptive) rep.omega_tilde = setup.adaptive->omega_tilde;

  // step 1: coarse component
  Eigen::VectorXd f0(n);
  for (int s = 0; s < n; ++s) f0[s] = subs[s].f().sum();
  const CoarseSpace::Solution c0 = coarse.solve(Eigen::VectorXd::Zero(coarse.num_flux()), f0);
  const Eigen::VectorXd u0_gamma = weights.average(coarse.expand(c0.flux));
  const BrokenVector u0_local = weights.restrict(u0_gamma);

  // step 2: interior solves
  std::vector<Eigen::VectorXd> ext0(n);
  std::vector<Eigen::VectorXd> star(n);
  for_each_index(exec, n, [&](int s) {
    ext0[s] = subs[s].harmonic_extend(u0_local[s]).flux;
    star[s] = subs[s].solve_interior(u0_local[s], Eigen::VectorXd(), subs[s].f()).flux;
  });
  rep.u0 = scatter_flux(subs, ext0, nu);
  rep.u_star = scatter_flux(subs, star, nu);
  const Eigen::VectorXd defect = sys.f - sys.B * rep.u_star;
  const Eigen::VectorXd dinv = sys.D.cwiseInverse();
  const double fnorm = sys.f.cwiseProduct(dinv).norm();
  rep.conservation_defect = fnorm > 0.0 ? defect.cwiseProduct(dinv).norm() / fnorm : defect.cwiseProduct(dinv).norm();

  // step 3: correction
  std::vector<LocalSolution> zsol(n);
  BrokenVector r_local(n);
  for_each_index(exec, n, [&](int s) {
    const SubdomainOperator& sub = subs[s];
    const Eigen::VectorXd d_s = local_block(defect, sub.cells());
    const Eigen::VectorXd au = sub.A() * star[s];
    zsol[s] = sub.solve_interior(Eigen::VectorXd(), -au.head(sub.num_interior()), d_s);
    r_local[s] = -sub.interface_residual(star[s] + zsol[s].flux, zsol[s].pressure);
  });
  const Eigen::VectorXd r_gamma = weights.assemble(r_local);
  Eigen::VectorXd g0(n);
  for (int s = 0; s < n; ++s) g0[s] = local_block(defect, subs[s].cells()).sum();

  const BalanceProjector& bal = *setup.balance;
  const Eigen::VectorXd v_p = g0.norm() > 0.0 ? bal.particular(g0) : Eigen::VectorXd::Zero(r_gamma.size());
  const Eigen::VectorXd rhs = r_gamma - setup.op->apply(v_p);
  const PcgResult cg = pcg([&](const Eigen::VectorXd& v) { return setup.op->apply(v); },
                           [&](const Eigen::VectorXd& v) { return setup.precond->apply(v); }, rhs, setup.config.tol,
                           setup.config.max_iterations, [&](const Eigen::VectorXd& v) { return bal.project(v); },
                           [&](const Eigen::VectorXd& v) { return bal.relative_imbalance(v); });
  rep.iterations = cg.iterations;
  rep.kappa = cg.kappa;
  rep.history = cg.history;
  rep.converged = cg.converged;
  rep.max_imbalance = cg.max_imbalance;
  rep.max_iterate_imbalance = cg.max_iterate_imbalance;
  const Eigen::VectorXd v = v_p + cg.x;

  const BrokenVector v_local = weights.restrict(v);
  std::vector<Eigen::VectorXd> corr(n);
  for_each_index(exec, n, [&](int s) { corr[s] = subs[s].harmonic_extend(v_local[s]).flux + zsol[s].flux; });
  rep.u_corr = scatter_flux(subs, corr, nu);
  rep.u = rep.u_star + rep.u_corr;
  {
    const Eigen::VectorXd div = (sys.B * rep.u_corr - defect).cwiseProduct(dinv);
    SparseMatrix b_unscaled = dinv.asDiagonal() * sys.B;
    const double scale = b_unscaled.norm() * rep.u_corr.norm();
    rep.correction_divergence = scale > 0.0 ? div.norm() / scale : div.norm();
  }

  const PressureRecovery pr = recover_pressure(rep.u, sys);
  rep.p = pr.p;
  rep.momentum_residual = pr.momentum_residual;
  if (pr.momentum_residual > 10.0 * setup.config.tol) {
    std::ostringstream msg;
    msg << "accuracy warning: momentum residual " << pr.momentum_residual << " exceeds 10*tol";
    rep.warnings.push_back(msg.str());
  }
  if (u_exact != nullptr) {
    const RelativeErrors e = errors(rep.u0, rep.u_star, *u_exact);
    rep.eps0 = e.eps0;
    rep.eps_star = e.eps_star;
  }
  if (!rep.converged) throw NonConvergence(std::move(rep));
  return rep;
}

SolveReport solve(const SaddleSystem& system, const Decomposition& dec, const SolveConfig& config,
                  const Eigen::VectorXd* u_exact) {
  const BddcSetup setup(system, dec, config);
  return solve(setup, u_exact);
}

}  // namespace mixbddc
