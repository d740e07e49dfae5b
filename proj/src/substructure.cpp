#include "mixbddc/substructure.hpp"

#include <unordered_map>

#include "mixbddc/error.hpp"

namespace mixbddc {

SubdomainOperator::SubdomainOperator(const SaddleSystem& system, const Decomposition& dec, int id) : id_(id) {
  const Grid& grid = system.grid;
  cells_ = dec.cells(id);
  interior_dofs_ = dec.interior_dofs(id);
  interface_ = dec.interface_of(id);
  const int ni = num_interior();
  const int ng = num_interface();
  const int nc = num_cells();

  flux_dofs_ = interior_dofs_;
  outward_.resize(ng);
  for (int k = 0; k < ng; ++k) {
    flux_dofs_.push_back(dec.interface()[interface_[k]].flux_dof);
    outward_[k] = dec.orientation(id, interface_[k]);
  }
  std::unordered_map<int, int> local;
  local.reserve(flux_dofs_.size() * 2);
  for (int k = 0; k < static_cast<int>(flux_dofs_.size()); ++k) local.emplace(flux_dofs_[k], k);

  scale_ = system.D[cells_.front()];
  volumes_ = Eigen::VectorXd::Constant(nc, grid.cell_volume());
  f_.resize(nc);
  const int nloc_faces = 2 * grid.dim();
  std::vector<Eigen::Triplet<double>> a_trip;
  std::vector<Eigen::Triplet<double>> b_trip;
  std::vector<int> ldofs(nloc_faces);
  for (int r = 0; r < nc; ++r) {
    const int c = cells_[r];
    f_[r] = system.f[c];
    const Eigen::MatrixXd m = system.cell_mass_matrix(c);
    for (int l = 0; l < nloc_faces; ++l) {
      const int d = grid.cell_face_dof(c, l);
      ldofs[l] = d < 0 ? -1 : local.at(d);
    }
    for (int l = 0; l < nloc_faces; ++l) {
      if (ldofs[l] < 0) continue;
      b_trip.emplace_back(r, ldofs[l], (l % 2 == 1 ? -1.0 : 1.0) * system.D[c]);
      for (int q = 0; q < nloc_faces; ++q)
        if (ldofs[q] >= 0 && m(l, q) != 0.0) a_trip.emplace_back(ldofs[l], ldofs[q], m(l, q));
    }
  }
  const int nloc = ni + ng;
  a_.resize(nloc, nloc);
  a_.setFromTriplets(a_trip.begin(), a_trip.end());
  b_.resize(nc, nloc);
  b_.setFromTriplets(b_trip.begin(), b_trip.end());

  // interior problem over (x_I, p, mu)
  std::vector<Eigen::Triplet<double>> k_trip;
  for (int col = 0; col < ni; ++col)
    for (SparseMatrix::InnerIterator it(a_, col); it; ++it)
      if (it.row() < ni) k_trip.emplace_back(static_cast<int>(it.row()), col, it.value());
  for (int col = 0; col < ni; ++col)
    for (SparseMatrix::InnerIterator it(b_, col); it; ++it) {
      k_trip.emplace_back(ni + static_cast<int>(it.row()), col, it.value());
      k_trip.emplace_back(col, ni + static_cast<int>(it.row()), it.value());
    }
  for (int r = 0; r < nc; ++r) {
    k_trip.emplace_back(ni + nc, ni + r, volumes_[r]);
    k_trip.emplace_back(ni + r, ni + nc, volumes_[r]);
  }
  const int nk = ni + nc + 1;
  kkt_.resize(nk, nk);
  kkt_.setFromTriplets(k_trip.begin(), k_trip.end());
  kkt_.makeCompressed();
  lu_ = std::make_shared<Eigen::SparseLU<SparseMatrix>>();
  lu_->compute(kkt_);
  if (lu_->info() != Eigen::Success) throw NumericalFailure(id, "interior factorization failed: " + lu_->lastErrorMessage());
}

LocalSolution SubdomainOperator::solve_interior(const Eigen::VectorXd& trace, const Eigen::VectorXd& interior_rhs,
                                                const Eigen::VectorXd& pressure_rhs) const {
  const int ni = num_interior();
  const int ng = num_interface();
  const int nc = num_cells();
  Eigen::VectorXd full_trace = Eigen::VectorXd::Zero(ni + ng);
  if (trace.size() > 0) full_trace.tail(ng) = trace;

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ni + nc + 1);
  const Eigen::VectorXd a_t = a_ * full_trace;
  rhs.head(ni) = -a_t.head(ni);
  if (interior_rhs.size() > 0) rhs.head(ni) += interior_rhs;
  rhs.segment(ni, nc) = -(b_ * full_trace);
  if (pressure_rhs.size() > 0) rhs.segment(ni, nc) += pressure_rhs;

  const Eigen::VectorXd x = lu_->solve(rhs);
  LocalSolution sol;
  sol.flux = full_trace;
  sol.flux.head(ni) = x.head(ni);
  sol.pressure = x.segment(ni, nc);
  sol.mean_multiplier = x[ni + nc];
  return sol;
}

LocalSolution SubdomainOperator::harmonic_extend(const Eigen::VectorXd& trace) const {
  return solve_interior(trace, Eigen::VectorXd(), Eigen::VectorXd());
}

Eigen::VectorXd SubdomainOperator::interface_residual(const Eigen::VectorXd& flux,
                                                      const Eigen::VectorXd& pressure) const {
  const Eigen::VectorXd r = a_ * flux + b_.transpose() * pressure;
  return r.tail(num_interface());
}

Eigen::VectorXd SubdomainOperator::schur_apply(const Eigen::VectorXd& x) const {
  if (dense_schur_) return (*dense_schur_) * x;
  const LocalSolution ext = harmonic_extend(x);
  return interface_residual(ext.flux, ext.pressure);
}

Eigen::MatrixXd SubdomainOperator::schur_dense() const {
  if (dense_schur_) return *dense_schur_;
  const int ni = num_interior();
  const int ng = num_interface();
  const int nc = num_cells();
  const SparseMatrix a_ig = a_.block(0, ni, ni, ng);
  const SparseMatrix b_g = b_.rightCols(ng);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(ni + nc + 1, ng);
  rhs.topRows(ni) = -Eigen::MatrixXd(a_ig);
  rhs.middleRows(ni, nc) = -Eigen::MatrixXd(b_g);
  const Eigen::MatrixXd x = lu_->solve(rhs);
  const SparseMatrix a_gi = a_.block(ni, 0, ng, ni);
  const SparseMatrix a_gg = a_.block(ni, ni, ng, ng);
  Eigen::MatrixXd s = Eigen::MatrixXd(a_gg) + a_gi * x.topRows(ni) + b_g.transpose() * x.middleRows(ni, nc);
  return s;
}

void SubdomainOperator::cache_dense_schur() {
  if (dense_schur_) return;
  Eigen::MatrixXd s = schur_dense();
  dense_schur_ = std::make_shared<Eigen::MatrixXd>(0.5 * (s + s.transpose()));
}

double SubdomainOperator::net_divergence(const Eigen::VectorXd& trace) const {
  return -scale_ * outward_.dot(trace);
}

Eigen::MatrixXd SubdomainOperator::interior_kkt_dense() const { return Eigen::MatrixXd(kkt_); }

std::vector<SubdomainOperator> build_subdomains(const SaddleSystem& system, const Decomposition& dec,
                                                Execution exec) {
  std::vector<std::unique_ptr<SubdomainOperator>> slots(dec.num_subdomains());
  for_each_index(exec, dec.num_subdomains(),
                 [&](int s) { slots[s] = std::make_unique<SubdomainOperator>(system, dec, s); });
  std::vector<SubdomainOperator> out;
  out.reserve(slots.size());
  for (auto& p : slots) out.push_back(std::move(*p));
  return out;
}

}  // namespace mixbddc
