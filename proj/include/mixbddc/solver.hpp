#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixbddc/bddc.hpp"
#include "mixbddc/error.hpp"

namespace mixbddc {

using LinearMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct PcgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double kappa = 1.0;
  double lambda_min = 1.0;
  double lambda_max = 1.0;
  std::vector<double> history;  // relative residual, starting with 1 at iteration 0
  bool converged = false;
  double max_imbalance = 0.0;   // worst relative imbalance of a raw preconditioned residual
  double max_iterate_imbalance = 0.0;  // worst relative imbalance of an iterate
};

/// Preconditioned CG from a zero initial guess. `project`, when given, is
/// applied to every residual and preconditioned residual (balanced
/// iteration); `imbalance` measures the raw preconditioner output.
PcgResult pcg(const LinearMap& op, const LinearMap& precond, const Eigen::VectorXd& rhs, double tol, int max_iterations,
              const LinearMap& project = nullptr,
              const std::function<double(const Eigen::VectorXd&)>& imbalance = nullptr);

/// Extreme eigenvalues of the Lanczos tridiagonal built from CG coefficients.
std::pair<double, double> lanczos_extremes(const std::vector<double>& alpha, const std::vector<double>& beta);

struct SolveReport {
  Eigen::VectorXd u;       // fluxes
  Eigen::VectorXd p;       // unscaled pressures, zero volume-weighted mean
  Eigen::VectorXd u0;      // coarse component with its harmonic extension
  Eigen::VectorXd u_star;  // after the interior solves
  Eigen::VectorXd u_corr;
  int iterations = 0;
  double kappa = 1.0;
  std::optional<double> omega_tilde;
  int n_c = 0;
  std::optional<double> eps0;
  std::optional<double> eps_star;
  std::vector<double> history;
  bool converged = false;
  double conservation_defect = 0.0;  // |B u* - f| / |f|
  double correction_divergence = 0.0;  // |B u_corr| / (|B| |u_corr|)
  double max_imbalance = 0.0;
  double max_iterate_imbalance = 0.0;
  double momentum_residual = 0.0;
  std::vector<std::string> warnings;
};

class NonConvergence : public Error {
 public:
  explicit NonConvergence(SolveReport report);
  const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

/// Three-step solve on a prepared setup. `u_exact`, when given, fills the
/// error columns. Throws NonConvergence if CG hits the iteration limit.
SolveReport solve(const BddcSetup& setup, const Eigen::VectorXd* u_exact = nullptr);
SolveReport solve(const SaddleSystem& system, const Decomposition& dec, const SolveConfig& config,
                  const Eigen::VectorXd* u_exact = nullptr);

struct PressureRecovery {
  Eigen::VectorXd p;  // unscaled, zero volume-weighted mean
  double momentum_residual = 0.0;
};

/// Least-squares pressure from (B B^T) pbar = -B A u, pinned and re-centred.
PressureRecovery recover_pressure(const Eigen::VectorXd& u, const SaddleSystem& system);

struct RelativeErrors {
  double eps0;
  double eps_star;
};

RelativeErrors errors(const Eigen::VectorXd& u0, const Eigen::VectorXd& u_star, const Eigen::VectorXd& u_exact);

}  // namespace mixbddc
