#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "mixbddc/substructure.hpp"
#include "support.hpp"

using namespace mixbddc;

namespace {

struct Fixture {
  Grid g = testing::grid2(8, 6);
  Decomposition dec = testing::split(g, {2, 2});
  SaddleSystem sys = testing::scaled_system(g, testing::random_perm(g, 5, 17), dec);
  std::vector<SubdomainOperator> subs = build_subdomains(sys, dec, Execution::Serial);
};

// Schur complement by dense elimination of everything but the interface
// from the full local saddle matrix with the pressure-mean row.
Eigen::MatrixXd schur_by_elimination(const SubdomainOperator& sub) {
  const int ni = sub.num_interior();
  const int ng = sub.num_interface();
  const int nc = sub.num_cells();
  const Eigen::MatrixXd a(sub.A());
  const Eigen::MatrixXd b(sub.B());
  const int n = ni + nc + 1;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  k.topLeftCorner(ni, ni) = a.topLeftCorner(ni, ni);
  k.block(0, ni, ni, nc) = b.leftCols(ni).transpose();
  k.block(ni, 0, nc, ni) = b.leftCols(ni);
  k.block(ni, ni + nc, nc, 1) = sub.volumes();
  k.block(ni + nc, ni, 1, nc) = sub.volumes().transpose();
  Eigen::MatrixXd coupling = Eigen::MatrixXd::Zero(n, ng);
  coupling.topRows(ni) = a.topRightCorner(ni, ng);
  coupling.middleRows(ni, nc) = b.rightCols(ng);
  return a.bottomRightCorner(ng, ng) - coupling.transpose() * k.fullPivLu().solve(coupling);
}

Eigen::VectorXd random_vector(Eigen::Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd v(n);
  for (Eigen::Index k = 0; k < n; ++k) v[k] = nd(rng);
  return v;
}

}  // namespace

TEST_CASE("local Schur complement matches dense elimination") {
  Fixture fx;
  for (const auto& sub : fx.subs) {
    const Eigen::MatrixXd s = sub.schur_dense();
    const Eigen::MatrixXd ref = schur_by_elimination(sub);
    CHECK((s - ref).norm() <= 1e-10 * ref.norm());
    CHECK((s - s.transpose()).norm() <= 1e-12 * s.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("matrix-free and dense Schur applications agree") {
  Fixture fx;
  for (auto& sub : fx.subs) {
    const Eigen::VectorXd x = random_vector(sub.num_interface(), 3 + sub.id());
    const Eigen::VectorXd y = sub.schur_apply(x);
    sub.cache_dense_schur();
    REQUIRE(sub.has_dense_schur());
    CHECK(testing::rel(sub.schur_apply(x), y) <= 1e-11);
  }
}

TEST_CASE("harmonic extension energy and divergence") {
  Fixture fx;
  for (const auto& sub : fx.subs) {
    const Eigen::VectorXd x = random_vector(sub.num_interface(), 40 + sub.id());
    const LocalSolution ext = sub.harmonic_extend(x);
    CHECK(testing::rel(ext.flux.tail(sub.num_interface()), x) == 0.0);
    // energy of the extension equals x^T S x
    const double energy = ext.flux.dot(sub.A() * ext.flux);
    CHECK(energy == doctest::Approx(x.dot(sub.schur_apply(x))).epsilon(1e-10));
    // divergence per cell is constant and sums to the net divergence
    const Eigen::VectorXd div = sub.B() * ext.flux;
    const double mean = div.mean();
    CHECK((div.array() - mean).abs().maxCoeff() <= 1e-10 * (div.cwiseAbs().maxCoeff() + 1e-300));
    CHECK(div.sum() == doctest::Approx(sub.net_divergence(x)).epsilon(1e-10));
    // local pressures have zero mean
    CHECK(std::abs(sub.volumes().dot(ext.pressure)) <= 1e-10 * ext.pressure.cwiseAbs().sum() + 1e-300);
  }
}

TEST_CASE("interior solve satisfies its equations") {
  Fixture fx;
  const auto& sub = fx.subs[1];
  const int ni = sub.num_interior();
  const Eigen::VectorXd trace = random_vector(sub.num_interface(), 5);
  const Eigen::VectorXd rhs_i = random_vector(ni, 6);
  Eigen::VectorXd rhs_p = random_vector(sub.num_cells(), 7);
  rhs_p.array() -= rhs_p.mean();
  // compatibility: the load must match the divergence of the trace
  const double net = sub.net_divergence(trace);
  rhs_p.array() += net / sub.num_cells();
  const LocalSolution sol = sub.solve_interior(trace, rhs_i, rhs_p);
  const Eigen::VectorXd mom = (sub.A() * sol.flux + sub.B().transpose() * sol.pressure).head(ni);
  CHECK(testing::rel(mom, rhs_i) <= 1e-10);
  const Eigen::VectorXd div = sub.B() * sol.flux;
  CHECK(testing::rel(div, rhs_p) <= 1e-10);
}

TEST_CASE("serial and parallel construction agree bitwise") {
  Fixture fx;
  const auto par = build_subdomains(fx.sys, fx.dec, Execution::Parallel);
  for (std::size_t s = 0; s < par.size(); ++s) {
    const Eigen::MatrixXd a = par[s].schur_dense();
    const Eigen::MatrixXd b = fx.subs[s].schur_dense();
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }
}
