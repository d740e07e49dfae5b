#include "mixbddc/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <unordered_map>

#include <Eigen/SparseLU>

#include "mixbddc/error.hpp"

namespace mixbddc {

namespace {

std::vector<int> face_positions(const PairProblem& pair) {
  std::vector<int> pos = pair.shared_i;
  pos.insert(pos.end(), pair.shared_j.begin(), pair.shared_j.end());
  return pos;
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& m, const std::vector<int>& rows, const std::vector<int>& cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(rows[r], cols[c]);
  return out;
}

// Orthonormal basis of the row space of `rows`.
Eigen::MatrixXd row_space(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) return Eigen::MatrixXd(rows.cols(), 0);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(rows.transpose());
  qr.setThreshold(1e-10);
  const Eigen::MatrixXd q = qr.householderQ();
  return q.leftCols(qr.rank());
}

// Energy-minimal reduction of the symmetric block `s` onto `keep`, over
// vectors orthogonal to `sign`. When positions remain off `keep` the
// constraint is absorbed into the extension; otherwise it is returned as a
// row on the kept positions.
struct Reduction {
  Eigen::MatrixXd schur;
  std::vector<int> rest;
  Eigen::MatrixXd extension;
  Eigen::VectorXd face_row;  // empty unless rest is empty
};

Reduction reduce_onto(const Eigen::MatrixXd& s, const Eigen::VectorXd& sign, const std::vector<int>& keep) {
  std::vector<char> kept(static_cast<std::size_t>(s.rows()), 0);
  for (int k : keep) kept[k] = 1;
  Reduction out;
  for (int k = 0; k < s.rows(); ++k)
    if (!kept[k]) out.rest.push_back(k);
  out.schur = gather(s, keep, keep);
  const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
  Eigen::VectorXd sk(m);
  for (Eigen::Index a = 0; a < m; ++a) sk[a] = sign[keep[a]];
  if (out.rest.empty()) {
    out.face_row = sk;
    return out;
  }
  Eigen::VectorXd sr(static_cast<Eigen::Index>(out.rest.size()));
  for (Eigen::Index a = 0; a < sr.size(); ++a) sr[a] = sign[out.rest[a]];
  const Eigen::MatrixXd skr = gather(s, keep, out.rest);
  const Eigen::MatrixXd srr = gather(s, out.rest, out.rest);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(srr);
  if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::NumericalFailure, "pair elimination failed");
  const Eigen::MatrixXd x = -ldlt.solve(skr.transpose());
  const Eigen::VectorXd y = ldlt.solve(sr);
  const double alpha = sr.dot(y);
  if (!(alpha > 0.0)) throw Error(ErrorKind::NumericalFailure, "pair elimination failed");
  // sr^T w_r = -sk^T w_k
  const Eigen::RowVectorXd mu = (sk.transpose() + sr.transpose() * x) / alpha;
  out.extension = x - y * mu;
  Eigen::MatrixXd full(s.rows(), m);
  for (Eigen::Index a = 0; a < m; ++a) full.row(keep[a]) = Eigen::RowVectorXd::Unit(m, a);
  for (std::size_t a = 0; a < out.rest.size(); ++a) full.row(out.rest[a]) = out.extension.row(static_cast<Eigen::Index>(a));
  out.schur = full.transpose() * s * full;
  out.schur = 0.5 * (out.schur + out.schur.transpose());
  return out;
}

struct GeneralizedResult {
  Eigen::VectorXd lambda;
  Eigen::MatrixXd vectors;
  int rank = 0;
};

// L w = lambda R w with R symmetric positive semidefinite: deflate null(R),
// then solve the standard problem in the range of R.
GeneralizedResult generalized_eig(const Eigen::MatrixXd& l, const Eigen::MatrixXd& r, const EigenOptions& options,
                                  int face) {
  GeneralizedResult out;
  const Eigen::Index n = r.rows();
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rs(0.5 * (r + r.transpose()));
  if (rs.info() != Eigen::Success) throw NumericalFailure(face, "pair eigensolver did not converge");
  const Eigen::VectorXd& sigma = rs.eigenvalues();
  const double smax = sigma.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < n; ++k)
    if (sigma[k] > options.deflation_tol * smax) keep.push_back(k);
  out.rank = static_cast<int>(keep.size());
  if (keep.empty()) return out;
  Eigen::MatrixXd z(n, out.rank);
  for (int k = 0; k < out.rank; ++k) z.col(k) = rs.eigenvectors().col(keep[k]) / std::sqrt(sigma[keep[k]]);
  Eigen::MatrixXd g = z.transpose() * l * z;
  g = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gs(g);
  if (gs.info() != Eigen::Success) throw NumericalFailure(face, "pair eigensolver did not converge");
  out.lambda = gs.eigenvalues().reverse();
  out.vectors = z * gs.eigenvectors().rowwise().reverse();
  if (options.clip_negative) out.lambda = out.lambda.cwiseMax(0.0);
  return out;
}

}  // namespace

Eigen::MatrixXd PairProblem::lhs() const {
  const Eigen::MatrixXd ie = Eigen::MatrixXd::Identity(size(), size()) - E;
  const Eigen::MatrixXd iep = ie * Pi;
  Eigen::MatrixXd l = iep.transpose() * S * iep;
  return 0.5 * (l + l.transpose());
}

Eigen::MatrixXd PairProblem::rhs() const {
  Eigen::MatrixXd r = Pi * S * Pi;
  return 0.5 * (r + r.transpose());
}

Eigen::MatrixXd PairProblem::functionals(const Eigen::MatrixXd& w) const {
  const Eigen::MatrixXd ie = Eigen::MatrixXd::Identity(size(), size()) - E;
  return ie.transpose() * (S * (ie * (Pi * w)));
}

PairProblem build_pair(const Decomposition& dec, const std::vector<SubdomainOperator>& subs,
                       const WeightOperator& weights, const ConstraintSet& constraints, int face) {
  const Face& f = dec.faces().at(face);
  if (f.dofs.empty()) throw Error(ErrorKind::InvalidArgument, "pair has no shared face");
  const SubdomainOperator& si = subs[f.i];
  const SubdomainOperator& sj = subs[f.j];
  if (!si.has_dense_schur() || !sj.has_dense_schur())
    throw Error(ErrorKind::InternalConsistency, "pair problem needs the dense Schur complements");
  PairProblem pair;
  pair.face = face;
  pair.i = f.i;
  pair.j = f.j;
  pair.n_i = si.num_interface();
  const int n = pair.n_i + sj.num_interface();
  pair.S = Eigen::MatrixXd::Zero(n, n);
  pair.S.topLeftCorner(pair.n_i, pair.n_i) = si.dense_schur();
  pair.S.bottomRightCorner(n - pair.n_i, n - pair.n_i) = sj.dense_schur();
  pair.E = Eigen::MatrixXd::Identity(n, n);
  for (int g : f.dofs) {
    const int pi = dec.local_position(f.i, g);
    const int pj = pair.n_i + dec.local_position(f.j, g);
    pair.shared_i.push_back(pi);
    pair.shared_j.push_back(pj);
    const double di = weights.weight(f.i, g);
    const double dj = weights.weight(f.j, g);
    pair.E(pi, pi) = di;
    pair.E(pi, pj) = dj;
    pair.E(pj, pi) = di;
    pair.E(pj, pj) = dj;
  }
  const Eigen::MatrixXd rows = constraints.face_rows(face);
  const int m = static_cast<int>(f.dofs.size());
  pair.C = Eigen::MatrixXd::Zero(rows.rows(), n);
  Eigen::MatrixXd compact(rows.rows(), 2 * m);
  for (int k = 0; k < m; ++k) {
    pair.C.col(pair.shared_i[k]) = rows.col(k);
    pair.C.col(pair.shared_j[k]) = -rows.col(k);
    compact.col(k) = rows.col(k);
    compact.col(m + k) = -rows.col(k);
  }
  pair.balance = Eigen::MatrixXd::Zero(2, n);
  pair.balance.row(0).head(pair.n_i) = si.outward_sign().transpose();
  pair.balance.row(1).tail(n - pair.n_i) = sj.outward_sign().transpose();
  Eigen::MatrixXd all(pair.C.rows() + 2, n);
  all << pair.C, pair.balance;
  const Eigen::MatrixXd q = row_space(all);
  pair.Pi = Eigen::MatrixXd::Identity(n, n) - q * q.transpose();
  return pair;
}

PairEigen pair_eig(const PairProblem& pair, const EigenOptions& options) {
  PairEigen out;
  out.face = pair.face;
  out.i = pair.i;
  out.j = pair.j;
  const int n = pair.size();
  if (!options.reduce) {
    const GeneralizedResult g = generalized_eig(pair.lhs(), pair.rhs(), options, pair.face);
    out.lambda = g.lambda;
    out.rank = g.rank;
    out.vectors = pair.Pi * g.vectors;
    out.lhs_vectors = pair.functionals(g.vectors);
    return out;
  }
  // (I-E) vanishes off the shared positions, so the left operator lives
  // there; the right operator is replaced by the balanced energy-minimal
  // reduction onto them.
  const std::vector<int> pos = face_positions(pair);
  const int m = static_cast<int>(pair.shared_i.size());
  std::vector<int> keep_i(pair.shared_i.begin(), pair.shared_i.end());
  std::vector<int> keep_j;
  for (int p : pair.shared_j) keep_j.push_back(p - pair.n_i);
  const Reduction red_i =
      reduce_onto(pair.S.topLeftCorner(pair.n_i, pair.n_i), pair.balance.row(0).head(pair.n_i).transpose(), keep_i);
  const Reduction red_j = reduce_onto(pair.S.bottomRightCorner(n - pair.n_i, n - pair.n_i),
                                      pair.balance.row(1).tail(n - pair.n_i).transpose(), keep_j);

  std::vector<int> c_rows(static_cast<std::size_t>(pair.C.rows()));
  for (int r = 0; r < pair.C.rows(); ++r) c_rows[r] = r;
  Eigen::MatrixXd rows = gather(pair.C, c_rows, pos);
  auto append = [&](const Eigen::VectorXd& v, int offset) {
    if (v.size() == 0) return;
    rows.conservativeResize(rows.rows() + 1, Eigen::NoChange);
    rows.row(rows.rows() - 1).setZero();
    rows.row(rows.rows() - 1).segment(offset, m) = v.transpose();
  };
  append(red_i.face_row, 0);
  append(red_j.face_row, m);
  const Eigen::MatrixXd q = row_space(rows);
  const Eigen::MatrixXd pi = Eigen::MatrixXd::Identity(2 * m, 2 * m) - q * q.transpose();
  const Eigen::MatrixXd ie = Eigen::MatrixXd::Identity(2 * m, 2 * m) - gather(pair.E, pos, pos);
  const Eigen::MatrixXd s_face = gather(pair.S, pos, pos);
  const Eigen::MatrixXd iep = ie * pi;
  Eigen::MatrixXd l = iep.transpose() * s_face * iep;
  l = 0.5 * (l + l.transpose());
  Eigen::MatrixXd s_hat = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  s_hat.topLeftCorner(m, m) = red_i.schur;
  s_hat.bottomRightCorner(m, m) = red_j.schur;
  const Eigen::MatrixXd r = pi * s_hat * pi;

  const GeneralizedResult g = generalized_eig(l, r, options, pair.face);
  out.lambda = g.lambda;
  out.rank = g.rank;
  const Eigen::MatrixXd pw = pi * g.vectors;
  const Eigen::MatrixXd cw = ie.transpose() * (s_face * (ie * pw));
  out.vectors = Eigen::MatrixXd::Zero(n, g.rank);
  out.lhs_vectors = Eigen::MatrixXd::Zero(n, g.rank);
  for (int a = 0; a < 2 * m; ++a) {
    out.vectors.row(pos[a]) = pw.row(a);
    out.lhs_vectors.row(pos[a]) = cw.row(a);
  }
  // off the face the eigenvectors carry their balanced energy-minimal extension
  if (!red_i.rest.empty()) {
    const Eigen::MatrixXd ext = red_i.extension * pw.topRows(m);
    for (std::size_t a = 0; a < red_i.rest.size(); ++a) out.vectors.row(red_i.rest[a]) = ext.row(static_cast<Eigen::Index>(a));
  }
  if (!red_j.rest.empty()) {
    const Eigen::MatrixXd ext = red_j.extension * pw.bottomRows(m);
    for (std::size_t a = 0; a < red_j.rest.size(); ++a)
      out.vectors.row(pair.n_i + red_j.rest[a]) = ext.row(static_cast<Eigen::Index>(a));
  }
  return out;
}

double max_eigenvalue(const PairEigen& eig) { return eig.lambda.size() == 0 ? 0.0 : eig.lambda[0]; }

Selection select_constraints(const PairProblem& pair, const PairEigen& eig, double tau) {
  Selection sel;
  const int count = static_cast<int>(eig.lambda.size());
  while (sel.k < count && eig.lambda[sel.k] > tau) ++sel.k;
  sel.omega = sel.k < count ? std::max(eig.lambda[sel.k], 1.0) : 1.0;
  const int m = static_cast<int>(pair.shared_i.size());
  std::vector<char> shared(static_cast<std::size_t>(pair.size()), 0);
  for (int p : pair.shared_i) shared[p] = 1;
  for (int p : pair.shared_j) shared[p] = 1;
  for (int l = 0; l < sel.k; ++l) {
    const Eigen::VectorXd c = eig.lhs_vectors.col(l);
    const double cmax = c.cwiseAbs().maxCoeff();
    if (cmax == 0.0) continue;
    for (int p = 0; p < pair.size(); ++p)
      if (!shared[p] && std::abs(c[p]) > 1e-10 * cmax)
        throw Error(ErrorKind::InternalConsistency, "constraint functional leaves the shared face");
    Eigen::VectorXd row(m);
    for (int k = 0; k < m; ++k) {
      const double ci = c[pair.shared_i[k]];
      const double cj = c[pair.shared_j[k]];
      if (std::abs(ci + cj) > 1e-8 * cmax)
        throw Error(ErrorKind::InternalConsistency, "constraint functional is not a jump functional");
      row[k] = ci;
    }
    sel.rows.push_back(row / row.cwiseAbs().maxCoeff());
  }
  return sel;
}

double indicator(const std::vector<double>& omegas) {
  double w = 1.0;
  for (double o : omegas) w = std::max(w, o);
  return w;
}

AdaptiveResult enrich_adaptive(const Decomposition& dec, std::vector<SubdomainOperator>& subs,
                               const WeightOperator& weights, ConstraintSet& constraints, double tau,
                               const EigenOptions& options, Execution exec) {
  if (!(tau > 1.0)) throw Error(ErrorKind::InvalidArgument, "tau must exceed 1");
  for_each_index(exec, static_cast<int>(subs.size()), [&](int s) { subs[s].cache_dense_schur(); });
  const int nf = static_cast<int>(dec.faces().size());
  AdaptiveResult out;
  out.spectra.resize(nf);
  out.omega.assign(nf, 1.0);
  std::vector<Selection> selections(nf);
  for_each_index(exec, nf, [&](int f) {
    const PairProblem pair = build_pair(dec, subs, weights, constraints, f);
    out.spectra[f] = pair_eig(pair, options);
    selections[f] = select_constraints(pair, out.spectra[f], tau);
    out.omega[f] = selections[f].omega;
  });
  for (int f = 0; f < nf; ++f) {
    for (const auto& row : selections[f].rows) {
      CoarseDof dof;
      dof.face = f;
      dof.support = dec.faces()[f].dofs;
      dof.row = row;
      dof.origin = ConstraintOrigin::Adaptive;
      if (constraints.add_if_independent(std::move(dof))) ++out.added;
    }
  }
  out.omega_tilde = indicator(out.omega);
  return out;
}

Eigen::VectorXd multiscale_trace(const SaddleSystem& system, const Decomposition& dec, int face) {
  const Face& f = dec.faces().at(face);
  const Grid& grid = system.grid;
  std::vector<int> dofs = dec.interior_dofs(f.i);
  dofs.insert(dofs.end(), dec.interior_dofs(f.j).begin(), dec.interior_dofs(f.j).end());
  const int n_int = static_cast<int>(dofs.size());
  for (int g : f.dofs) dofs.push_back(dec.interface()[g].flux_dof);
  std::unordered_map<int, int> local;
  for (int k = 0; k < static_cast<int>(dofs.size()); ++k) local.emplace(dofs[k], k);
  std::vector<int> cells = dec.cells(f.i);
  const int n_cells_i = static_cast<int>(cells.size());
  cells.insert(cells.end(), dec.cells(f.j).begin(), dec.cells(f.j).end());
  const int nu = static_cast<int>(dofs.size());
  const int nc = static_cast<int>(cells.size());

  // normalised source on each side: the wells when the subdomain holds a net
  // well rate, a uniform density otherwise
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nc);
  auto fill = [&](int begin, int end, double side) {
    double total = 0.0;
    double scale = 0.0;
    for (int r = begin; r < end; ++r) {
      total += system.f[cells[r]] / system.D[cells[r]];
      scale += std::abs(system.f[cells[r]] / system.D[cells[r]]);
    }
    const bool well = scale > 0.0 && std::abs(total) > 1e-12 * scale;
    const double volume = grid.cell_volume() * (end - begin);
    for (int r = begin; r < end; ++r) {
      const double share = well ? (system.f[cells[r]] / system.D[cells[r]]) / total : grid.cell_volume() / volume;
      rhs[r] = -side * share;
    }
  };
  fill(0, n_cells_i, 1.0);
  fill(n_cells_i, nc, -1.0);

  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < nu; ++c)
    for (SparseMatrix::InnerIterator it(system.A, dofs[c]); it; ++it) {
      const auto found = local.find(static_cast<int>(it.row()));
      if (found != local.end()) trip.emplace_back(found->second, c, it.value());
    }
  const int nloc = 2 * grid.dim();
  for (int r = 0; r < nc; ++r)
    for (int l = 0; l < nloc; ++l) {
      const int d = grid.cell_face_dof(cells[r], l);
      if (d < 0) continue;
      const auto found = local.find(d);
      if (found == local.end()) continue;
      const double b = l % 2 == 1 ? -1.0 : 1.0;
      trip.emplace_back(nu + r, found->second, b);
      trip.emplace_back(found->second, nu + r, b);
    }
  for (int r = 0; r < nc; ++r) {
    trip.emplace_back(nu + nc, nu + r, grid.cell_volume());
    trip.emplace_back(nu + r, nu + nc, grid.cell_volume());
  }
  SparseMatrix k(nu + nc + 1, nu + nc + 1);
  k.setFromTriplets(trip.begin(), trip.end());
  k.makeCompressed();
  Eigen::SparseLU<SparseMatrix> lu(k);
  if (lu.info() != Eigen::Success) throw NumericalFailure(f.i, "pair flow factorization failed");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(nu + nc + 1);
  b.segment(nu, nc) = rhs;
  const Eigen::VectorXd x = lu.solve(b);
  return x.segment(n_int, static_cast<Eigen::Index>(f.dofs.size()));
}

int enrich_multiscale(const SaddleSystem& system, const Decomposition& dec, ConstraintSet& constraints,
                      Execution exec) {
  const int nf = static_cast<int>(dec.faces().size());
  std::vector<Eigen::VectorXd> traces(nf);
  for_each_index(exec, nf, [&](int f) { traces[f] = multiscale_trace(system, dec, f); });
  int added = 0;
  for (int f = 0; f < nf; ++f) {
    const Face& face = dec.faces()[f];
    for (int comp = 0; comp < static_cast<int>(face.components.size()); ++comp) {
      CoarseDof dof;
      dof.face = f;
      dof.component = comp;
      dof.support = face.components[comp];
      dof.row.resize(static_cast<Eigen::Index>(dof.support.size()));
      for (std::size_t e = 0; e < dof.support.size(); ++e) {
        const auto it = std::lower_bound(face.dofs.begin(), face.dofs.end(), dof.support[e]);
        dof.row[static_cast<Eigen::Index>(e)] = traces[f][it - face.dofs.begin()];
      }
      const double mx = dof.row.cwiseAbs().maxCoeff();
      if (mx == 0.0) continue;
      dof.row /= mx;
      dof.origin = ConstraintOrigin::Multiscale;
      if (constraints.add_if_independent(std::move(dof))) ++added;
    }
  }
  return added;
}

}  // namespace mixbddc
