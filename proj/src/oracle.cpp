#include "mixbddc/oracle.hpp"

#include <array>
#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "mixbddc/error.hpp"

namespace mixbddc {

namespace {

// Own enumeration of interior faces: axis-major, then x-fastest over the
// face lattice of that axis.
struct FaceNumbering {
  std::array<int, 3> n{1, 1, 1};
  int dim = 0;
  std::array<std::vector<int>, 3> id;

  explicit FaceNumbering(const Grid& grid) : dim(grid.dim()) {
    for (int a = 0; a < 3; ++a) n[a] = grid.count(a);
    int next = 0;
    for (int a = 0; a < dim; ++a) {
      std::array<int, 3> m = n;
      m[a] += 1;
      id[a].assign(static_cast<std::size_t>(m[0]) * m[1] * m[2], -1);
      for (int k = 0; k < m[2]; ++k)
        for (int j = 0; j < m[1]; ++j)
          for (int i = 0; i < m[0]; ++i) {
            const std::array<int, 3> x{i, j, k};
            if (x[a] == 0 || x[a] == n[a]) continue;
            id[a][i + m[0] * (j + m[1] * k)] = next++;
          }
    }
    count = next;
  }
  int at(int a, int i, int j, int k) const {
    std::array<int, 3> m = n;
    m[a] += 1;
    return id[a][i + m[0] * (j + m[1] * k)];
  }
  int count = 0;
};

}  // namespace

DirectSolution direct_solve(const SaddleSystem& system, int size_limit) {
  const Grid& grid = system.grid;
  const FaceNumbering faces(grid);
  const int nu = faces.count;
  const int nc = grid.num_cells();
  if (nu + nc > size_limit)
    throw Error(ErrorKind::SizeLimit, "direct solve limited to " + std::to_string(size_limit) +
                                          " unknowns; use a smaller grid for reference solutions");
  const int dim = grid.dim();
  const std::array<int, 3> n{grid.count(0), grid.count(1), grid.count(2)};
  const std::array<double, 3> h = grid.sizes();
  const Eigen::VectorXd& D = system.D;

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nu + nc);
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const int c = i + n[0] * (j + n[1] * k);
        for (int a = 0; a < dim; ++a) {
          double area = 1.0;
          for (int b = 0; b < dim; ++b)
            if (b != a) area *= h[b];
          const double w = h[a] / (area * system.perm(c, a));
          std::array<int, 3> hi{i, j, k};
          hi[a] += 1;
          const int lo_dof = faces.at(a, i, j, k);
          const int hi_dof = faces.at(a, hi[0], hi[1], hi[2]);
          const double diag = system.mass_kind == MassMatrixKind::Exact ? w / 3.0 : w / 2.0;
          const double off = system.mass_kind == MassMatrixKind::Exact ? w / 6.0 : 0.0;
          if (lo_dof >= 0) {
            trip.emplace_back(lo_dof, lo_dof, diag);
            trip.emplace_back(nu + c, lo_dof, D[c]);
            trip.emplace_back(lo_dof, nu + c, D[c]);
          }
          if (hi_dof >= 0) {
            trip.emplace_back(hi_dof, hi_dof, diag);
            trip.emplace_back(nu + c, hi_dof, -D[c]);
            trip.emplace_back(hi_dof, nu + c, -D[c]);
          }
          if (lo_dof >= 0 && hi_dof >= 0 && off != 0.0) {
            trip.emplace_back(lo_dof, hi_dof, off);
            trip.emplace_back(hi_dof, lo_dof, off);
          }
        }
      }
  const int sink = system.wells.sink_cell < 0 ? nc - 1 : system.wells.sink_cell;
  rhs[nu + system.wells.source_cell] -= system.wells.strength * D[system.wells.source_cell];
  rhs[nu + sink] += system.wells.strength * D[sink];

  SparseMatrix full(nu + nc, nu + nc);
  full.setFromTriplets(trip.begin(), trip.end());
  // pin the first pressure by dropping its row and column
  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(nu + nc - 1));
  for (int r = 0; r < nu + nc; ++r)
    if (r != nu) keep.push_back(r);
  std::vector<int> map(nu + nc, -1);
  for (std::size_t r = 0; r < keep.size(); ++r) map[keep[r]] = static_cast<int>(r);
  std::vector<Eigen::Triplet<double>> pinned;
  for (int col = 0; col < full.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(full, col); it; ++it)
      if (map[it.row()] >= 0 && map[col] >= 0) pinned.emplace_back(map[it.row()], map[col], it.value());
  const int m = static_cast<int>(keep.size());
  SparseMatrix k(m, m);
  k.setFromTriplets(pinned.begin(), pinned.end());
  k.makeCompressed();
  Eigen::SparseLU<SparseMatrix> lu(k);
  if (lu.info() != Eigen::Success) throw Error(ErrorKind::NumericalFailure, "direct factorization failed");
  Eigen::VectorXd b(m);
  for (int r = 0; r < m; ++r) b[r] = rhs[keep[r]];
  const Eigen::VectorXd y = lu.solve(b);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(nu + nc);
  for (int r = 0; r < m; ++r) x[keep[r]] = y[r];

  DirectSolution out;
  out.u = x.head(nu);
  const Eigen::VectorXd pbar = x.tail(nc);
  const Eigen::VectorXd res = full * x - rhs;
  const double mom = (full.topLeftCorner(nu, nu) * out.u).norm();
  out.momentum_residual = mom > 0.0 ? res.head(nu).norm() / mom : res.head(nu).norm();
  const double fn = rhs.tail(nc).norm();
  out.mass_residual = fn > 0.0 ? res.tail(nc).norm() / fn : res.tail(nc).norm();
  out.p = D.cwiseProduct(pbar);
  out.p.array() -= out.p.mean();
  return out;
}

Eigen::VectorXd preconditioned_spectrum(const BddcSetup& setup, int size_limit) {
  const int n = setup.op->size();
  if (n > size_limit)
    throw Error(ErrorKind::SizeLimit, "dense spectrum limited to " + std::to_string(size_limit) + " interface unknowns");
  Eigen::MatrixXd s(n, n);
  Eigen::MatrixXd m(n, n);
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd e = Eigen::VectorXd::Unit(n, k);
    s.col(k) = setup.op->apply(e);
    m.col(k) = setup.precond->apply(e);
  }
  const Eigen::MatrixXd b0 = Eigen::MatrixXd(setup.balance->matrix());
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(b0.transpose());
  qr.setThreshold(1e-12);
  const Eigen::Index r = qr.rank();
  const Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd z = q.rightCols(n - r);
  Eigen::MatrixXd sh = z.transpose() * s * z;
  Eigen::MatrixXd mh = z.transpose() * m * z;
  sh = 0.5 * (sh + sh.transpose());
  mh = 0.5 * (mh + mh.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(sh);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NumericalFailure, "balanced Schur complement is not definite");
  const Eigen::MatrixXd l = llt.matrixL();
  Eigen::MatrixXd g = l.transpose() * mh * l;
  g = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace mixbddc
