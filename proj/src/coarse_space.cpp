#include "mixbddc/coarse_space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mixbddc/error.hpp"

namespace mixbddc {

ConstraintSet::ConstraintSet(const Decomposition& dec)
    : dec_(&dec),
      num_subdomains_(dec.num_subdomains()),
      by_subdomain_(dec.num_subdomains()),
      by_face_(dec.faces().size()) {}

int ConstraintSet::count(ConstraintOrigin origin) const {
  return static_cast<int>(std::count_if(dofs_.begin(), dofs_.end(), [&](const CoarseDof& d) { return d.origin == origin; }));
}

void ConstraintSet::add(CoarseDof dof) {
  if (dec_ == nullptr) throw Error(ErrorKind::InternalConsistency, "constraint set has no decomposition");
  if (dof.face < 0 || dof.face >= static_cast<int>(by_face_.size()))
    throw Error(ErrorKind::InvalidArgument, "coarse dof refers to an unknown face");
  if (dof.row.size() != static_cast<Eigen::Index>(dof.support.size()))
    throw Error(ErrorKind::InvalidArgument, "coarse dof row and support differ in size");
  const Face& face = dec_->faces()[dof.face];
  for (int g : dof.support) {
    const InterfaceDof& idof = dec_->interface()[g];
    const bool on_face = (idof.lower_sub == face.i && idof.upper_sub == face.j) ||
                         (idof.lower_sub == face.j && idof.upper_sub == face.i);
    if (!on_face) throw Error(ErrorKind::InvalidArgument, "coarse dof support leaves its face");
  }
  const int c = num_flux_coarse();
  by_subdomain_[face.i].push_back(c);
  by_subdomain_[face.j].push_back(c);
  by_face_[dof.face].push_back(c);
  dofs_.push_back(std::move(dof));
}

namespace {

Eigen::VectorXd dense_on_face(const Face& face, const CoarseDof& dof) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(face.dofs.size()));
  for (std::size_t k = 0; k < dof.support.size(); ++k) {
    const auto it = std::lower_bound(face.dofs.begin(), face.dofs.end(), dof.support[k]);
    v[it - face.dofs.begin()] = dof.row[static_cast<Eigen::Index>(k)];
  }
  return v;
}

}  // namespace

Eigen::MatrixXd ConstraintSet::face_rows(int f) const {
  const Face& face = dec_->faces()[f];
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(by_face_[f].size()), static_cast<Eigen::Index>(face.dofs.size()));
  for (std::size_t k = 0; k < by_face_[f].size(); ++k)
    rows.row(static_cast<Eigen::Index>(k)) = dense_on_face(face, dofs_[by_face_[f][k]]).transpose();
  return rows;
}

bool ConstraintSet::add_if_independent(CoarseDof dof, double tol) {
  const Face& face = dec_->faces()[dof.face];
  const Eigen::MatrixXd existing = face_rows(dof.face);
  const Eigen::VectorXd v = dense_on_face(face, dof);
  const double norm = v.norm();
  if (norm == 0.0) return false;
  if (existing.rows() > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(existing.transpose());
    qr.setThreshold(tol);
    const Eigen::Index rank = qr.rank();
    const Eigen::MatrixXd q = Eigen::MatrixXd(qr.householderQ()).leftCols(rank);
    const Eigen::VectorXd residual = v - q * (q.transpose() * v);
    if (residual.norm() <= tol * norm) return false;
  }
  add(std::move(dof));
  return true;
}

int ConstraintSet::sign(int s, int c) const { return dec_->faces()[dofs_[c].face].i == s ? 1 : -1; }

Eigen::MatrixXd ConstraintSet::local_rows(int s) const {
  const auto& list = by_subdomain_[s];
  const auto& iface = dec_->interface_of(s);
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(list.size()), static_cast<Eigen::Index>(iface.size()));
  for (std::size_t k = 0; k < list.size(); ++k) {
    const CoarseDof& dof = dofs_[list[k]];
    const double sgn = sign(s, list[k]);
    for (std::size_t e = 0; e < dof.support.size(); ++e)
      rows(static_cast<Eigen::Index>(k), dec_->local_position(s, dof.support[e])) = sgn * dof.row[static_cast<Eigen::Index>(e)];
  }
  return rows;
}

ConstraintSet initial_constraints(const Decomposition& dec) {
  ConstraintSet set(dec);
  const auto& faces = dec.faces();
  for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
    for (int k = 0; k < static_cast<int>(faces[f].components.size()); ++k) {
      CoarseDof dof;
      dof.face = f;
      dof.component = k;
      dof.support = faces[f].components[k];
      dof.row.resize(static_cast<Eigen::Index>(dof.support.size()));
      for (std::size_t e = 0; e < dof.support.size(); ++e)
        dof.row[static_cast<Eigen::Index>(e)] = dec.orientation(faces[f].i, dof.support[e]);
      dof.origin = ConstraintOrigin::Initial;
      set.add(std::move(dof));
    }
  }
  return set;
}

std::vector<int> dependent_rows(const Eigen::MatrixXd& rows, double tol) {
  std::vector<int> dependent;
  std::vector<Eigen::VectorXd> basis;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    Eigen::VectorXd v = rows.row(r).transpose();
    const double norm = v.norm();
    if (norm == 0.0) {
      dependent.push_back(static_cast<int>(r));
      continue;
    }
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) v -= b.dot(v) * b;
    const double res = v.norm();
    if (res <= tol * norm) {
      dependent.push_back(static_cast<int>(r));
    } else {
      basis.push_back(v / res);
    }
  }
  return dependent;
}

ConstrainedSolver::ConstrainedSolver(const SubdomainOperator& sub, Eigen::MatrixXd rows)
    : subdomain_(sub.id()),
      num_local_flux_(sub.num_local_flux()),
      num_interface_(sub.num_interface()),
      num_cells_(sub.num_cells()),
      rows_(std::move(rows)) {
  if (rows_.cols() != num_interface_) throw Error(ErrorKind::InvalidArgument, "constraint rows do not match the interface");
  const auto dependent = dependent_rows(rows_);
  if (!dependent.empty()) {
    std::ostringstream msg;
    msg << "subdomain " << subdomain_ << " has linearly dependent constraint rows:";
    for (int r : dependent) msg << ' ' << r;
    throw Error(ErrorKind::ConstraintRank, msg.str());
  }
  const int nf = num_local_flux_;
  const int ni = sub.num_interior();
  const int nc = num_cells_;
  const int m = static_cast<int>(rows_.rows());
  std::vector<Eigen::Triplet<double>> trip;
  const SparseMatrix& a = sub.A();
  const SparseMatrix& b = sub.B();
  for (int col = 0; col < a.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(a, col); it; ++it) trip.emplace_back(static_cast<int>(it.row()), col, it.value());
  for (int col = 0; col < b.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(b, col); it; ++it) {
      trip.emplace_back(nf + static_cast<int>(it.row()), col, it.value());
      trip.emplace_back(col, nf + static_cast<int>(it.row()), it.value());
    }
  for (int r = 0; r < m; ++r)
    for (int k = 0; k < num_interface_; ++k)
      if (rows_(r, k) != 0.0) {
        trip.emplace_back(nf + nc + r, ni + k, rows_(r, k));
        trip.emplace_back(ni + k, nf + nc + r, rows_(r, k));
      }
  const int mu = nf + nc + m;
  for (int r = 0; r < nc; ++r) {
    trip.emplace_back(mu, nf + r, sub.volumes()[r]);
    trip.emplace_back(nf + r, mu, sub.volumes()[r]);
  }
  SparseMatrix k(mu + 1, mu + 1);
  k.setFromTriplets(trip.begin(), trip.end());
  k.makeCompressed();
  lu_ = std::make_shared<Eigen::SparseLU<SparseMatrix>>();
  lu_->compute(k);
  if (lu_->info() != Eigen::Success)
    throw NumericalFailure(subdomain_, "constrained factorization failed: " + lu_->lastErrorMessage());
}

LocalSolution ConstrainedSolver::solve(const Eigen::VectorXd& interface_rhs, const Eigen::VectorXd& values,
                                       Eigen::VectorXd* multipliers) const {
  const int nf = num_local_flux_;
  const int ni = nf - num_interface_;
  const int nc = num_cells_;
  const int m = num_constraints();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf + nc + m + 1);
  if (interface_rhs.size() > 0) rhs.segment(ni, num_interface_) = interface_rhs;
  if (values.size() > 0) rhs.segment(nf + nc, m) = values;
  const Eigen::VectorXd x = lu_->solve(rhs);
  LocalSolution sol;
  sol.flux = x.head(nf);
  sol.pressure = x.segment(nf, nc);
  sol.mean_multiplier = x[nf + nc + m];
  if (multipliers != nullptr) *multipliers = x.segment(nf + nc, m);
  return sol;
}

LocalCoarseBasis coarse_basis(const SubdomainOperator& sub, const ConstrainedSolver& solver) {
  const int m = solver.num_constraints();
  LocalCoarseBasis basis;
  basis.trace.resize(sub.num_interface(), m);
  basis.divergence.resize(m);
  Eigen::MatrixXd full(sub.num_local_flux(), m);
  for (int c = 0; c < m; ++c) {
    const LocalSolution sol = solver.solve(Eigen::VectorXd(), Eigen::VectorXd::Unit(m, c));
    full.col(c) = sol.flux;
    basis.trace.col(c) = sol.flux.tail(sub.num_interface());
    basis.divergence[c] = sub.net_divergence(basis.trace.col(c));
  }
  const Eigen::MatrixXd s = full.transpose() * (sub.A() * full);
  basis.stiffness = 0.5 * (s + s.transpose());
  return basis;
}

CoarseSpace::CoarseSpace(const Decomposition& dec, const std::vector<SubdomainOperator>& subs,
                         const ConstraintSet& constraints, Execution exec)
    : num_flux_(constraints.num_flux_coarse()) {
  const int n = dec.num_subdomains();
  std::vector<std::unique_ptr<ConstrainedSolver>> slots(n);
  bases_.resize(n);
  coarse_index_.resize(n);
  coarse_sign_.resize(n);
  for_each_index(exec, n, [&](int s) {
    slots[s] = std::make_unique<ConstrainedSolver>(subs[s], constraints.local_rows(s));
    bases_[s] = coarse_basis(subs[s], *slots[s]);
  });
  solvers_.reserve(n);
  for (auto& p : slots) solvers_.push_back(std::move(*p));

  stiffness_ = Eigen::MatrixXd::Zero(num_flux_, num_flux_);
  divergence_ = Eigen::MatrixXd::Zero(n, num_flux_);
  sub_scale_.resize(n);
  sub_volume_.resize(n);
  for (int s = 0; s < n; ++s) {
    sub_scale_[s] = subs[s].scale();
    sub_volume_[s] = subs[s].volumes().sum();
    const auto& list = constraints.dofs_of_subdomain(s);
    coarse_index_[s] = list;
    coarse_sign_[s].resize(list.size());
    for (std::size_t a = 0; a < list.size(); ++a) coarse_sign_[s][a] = constraints.sign(s, list[a]);
    const auto& b = bases_[s];
    for (std::size_t a = 0; a < list.size(); ++a) {
      const auto ea = static_cast<Eigen::Index>(a);
      divergence_(s, list[a]) += coarse_sign_[s][a] * b.divergence[ea];
      for (std::size_t c = 0; c < list.size(); ++c)
        stiffness_(list[a], list[c]) += coarse_sign_[s][a] * coarse_sign_[s][c] * b.stiffness(ea, static_cast<Eigen::Index>(c));
    }
  }

  // pin the pressure of subdomain 0
  const int nk = num_flux_ + n - 1;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(nk, nk);
  k.topLeftCorner(num_flux_, num_flux_) = stiffness_;
  if (n > 1) {
    const Eigen::MatrixXd b0 = divergence_.bottomRows(n - 1);
    k.bottomLeftCorner(n - 1, num_flux_) = b0;
    k.topRightCorner(num_flux_, n - 1) = b0.transpose();
  }
  lu_.compute(k);
  if (nk > 0 && !(lu_.rcond() > 1e-14))
    throw Error(ErrorKind::Configuration, "coarse problem is singular; the coarse space is not adequate");
}

CoarseSpace::Solution CoarseSpace::solve(const Eigen::VectorXd& flux_rhs, const Eigen::VectorXd& pressure_rhs) const {
  const int n = num_subdomains();
  if (flux_rhs.size() != num_flux_ || pressure_rhs.size() != n)
    throw Error(ErrorKind::InvalidArgument, "coarse right-hand side has the wrong size");
  // the pressure block is solvable only for right-hand sides orthogonal to 1/d
  const Eigen::VectorXd kernel = sub_scale_.cwiseInverse();
  const double mismatch = std::abs(kernel.dot(pressure_rhs));
  if (mismatch > 1e-8 * (kernel.cwiseAbs().dot(pressure_rhs.cwiseAbs()) + 1e-300) && mismatch > 1e-300)
    throw Error(ErrorKind::CompatibilityViolation, "coarse pressure right-hand side is not compatible");

  Eigen::VectorXd rhs(num_flux_ + n - 1);
  rhs.head(num_flux_) = flux_rhs;
  rhs.tail(n - 1) = pressure_rhs.tail(n - 1);
  const Eigen::VectorXd x = lu_.solve(rhs);
  Solution sol;
  sol.flux = x.head(num_flux_);
  sol.pressure = Eigen::VectorXd::Zero(n);
  sol.pressure.tail(n - 1) = x.tail(n - 1);
  // shift along the kernel 1/d so that the unscaled pressure has zero mean
  const double mean = sub_volume_.dot(sub_scale_.cwiseProduct(sol.pressure)) / sub_volume_.sum();
  sol.pressure -= mean * kernel;
  return sol;
}

BrokenVector CoarseSpace::expand(const Eigen::VectorXd& coeffs) const {
  BrokenVector out(solvers_.size());
  for (std::size_t s = 0; s < solvers_.size(); ++s) {
    Eigen::VectorXd local(static_cast<Eigen::Index>(coarse_index_[s].size()));
    for (std::size_t a = 0; a < coarse_index_[s].size(); ++a)
      local[static_cast<Eigen::Index>(a)] = coarse_sign_[s][a] * coeffs[coarse_index_[s][a]];
    out[s] = bases_[s].trace * local;
  }
  return out;
}

Eigen::VectorXd CoarseSpace::restrict_dual(const BrokenVector& r) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(num_flux_);
  for (std::size_t s = 0; s < solvers_.size(); ++s) {
    const Eigen::VectorXd local = bases_[s].trace.transpose() * r[s];
    for (std::size_t a = 0; a < coarse_index_[s].size(); ++a)
      out[coarse_index_[s][a]] += coarse_sign_[s][a] * local[static_cast<Eigen::Index>(a)];
  }
  return out;
}

}  // namespace mixbddc
