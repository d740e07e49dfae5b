#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "mixbddc/adaptive.hpp"
#include "mixbddc/error.hpp"
#include "support.hpp"

using namespace mixbddc;

namespace {

struct Fixture {
  explicit Fixture(double orders = 5.0, unsigned seed = 31, WeightKind kind = WeightKind::Multiplicity)
      : k(testing::random_perm(g, orders, seed)),
        sys(testing::scaled_system(g, k, dec)),
        subs(build_subdomains(sys, dec, Execution::Serial)),
        weights(build_weights(dec, sys, kind)),
        cs(initial_constraints(dec)) {
    for (auto& s : subs) s.cache_dense_schur();
  }
  Grid g = testing::grid2(10, 8);
  Decomposition dec = testing::split(g, {2, 2});
  Permeability k;
  SaddleSystem sys;
  std::vector<SubdomainOperator> subs;
  WeightOperator weights;
  ConstraintSet cs;
};

// Generalized eigenvalues of (L, R) restricted to range(Pi), where R is
// positive definite, by the Cholesky-based dense solver.
Eigen::VectorXd reference_spectrum(const PairProblem& pair) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ps(pair.Pi);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index k = 0; k < ps.eigenvalues().size(); ++k)
    if (ps.eigenvalues()[k] > 0.5) cols.push_back(k);
  Eigen::MatrixXd q(pair.size(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) q.col(static_cast<Eigen::Index>(c)) = ps.eigenvectors().col(cols[c]);
  const Eigen::MatrixXd l = q.transpose() * pair.lhs() * q;
  const Eigen::MatrixXd r = q.transpose() * pair.S * q;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(0.5 * (l + l.transpose()), 0.5 * (r + r.transpose()));
  return ges.eigenvalues().reverse();
}

}  // namespace

TEST_CASE("pair operators are projections") {
  Fixture fx;
  for (int f = 0; f < static_cast<int>(fx.dec.faces().size()); ++f) {
    const PairProblem pair = build_pair(fx.dec, fx.subs, fx.weights, fx.cs, f);
    const auto n = pair.size();
    CHECK((pair.Pi * pair.Pi - pair.Pi).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK((pair.Pi - pair.Pi.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((pair.E * pair.E - pair.E).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((pair.C * pair.Pi).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((pair.balance * pair.Pi).cwiseAbs().maxCoeff() <= 1e-12);
    // Pi leaves constrained, balanced vectors alone
    const Eigen::VectorXd v = pair.Pi * Eigen::VectorXd::Random(n);
    CHECK((pair.Pi * v - v).cwiseAbs().maxCoeff() <= 1e-13);
    // the functionals are jump rows on the shared face
    std::vector<char> shared(static_cast<std::size_t>(n), 0);
    for (int p : pair.shared_i) shared[p] = 1;
    for (int p : pair.shared_j) shared[p] = 1;
    const Eigen::VectorXd c = pair.functionals(Eigen::VectorXd::Random(n));
    for (int a = 0; a < n; ++a)
      if (!shared[a]) CHECK(c[a] == 0.0);
    for (std::size_t k = 0; k < pair.shared_i.size(); ++k)
      CHECK(std::abs(c[pair.shared_i[k]] + c[pair.shared_j[k]]) <= 1e-12 * c.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("pair spectrum matches a dense reference") {
  Fixture fx;
  for (int f = 0; f < static_cast<int>(fx.dec.faces().size()); ++f) {
    const PairProblem pair = build_pair(fx.dec, fx.subs, fx.weights, fx.cs, f);
    const Eigen::VectorXd ref = reference_spectrum(pair);
    for (bool reduce : {true, false}) {
      EigenOptions opt;
      opt.reduce = reduce;
      const PairEigen eig = pair_eig(pair, opt);
      const double top = ref[0];
      const int count = std::min<int>(5, static_cast<int>(eig.lambda.size()));
      for (int k = 0; k < count; ++k) CHECK(eig.lambda[k] == doctest::Approx(ref[k]).epsilon(1e-7).scale(top));
      CHECK(eig.lambda.minCoeff() >= 0.0);
      // eigenvectors satisfy L w = lambda R w
      const Eigen::MatrixXd l = pair.lhs();
      const Eigen::MatrixXd r = pair.rhs();
      for (int k = 0; k < count; ++k) {
        const Eigen::VectorXd w = eig.vectors.col(k);
        const Eigen::VectorXd res = l * w - eig.lambda[k] * (r * w);
        if (eig.lambda[k] <= 1e-8 * top) continue;
        CHECK(res.norm() <= 1e-7 * top * (r * w).norm());
        CHECK(testing::rel(pair.Pi * w, w) <= 1e-10);
        CHECK(testing::rel(pair.Pi * eig.lhs_vectors.col(k), l * w) <= 1e-9);
        // normalised in the right-hand side inner product
        CHECK(w.dot(r * w) == doctest::Approx(1.0).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("enrichment bounds every pair spectrum by tau") {
  for (double tau : {50.0, 10.0, 3.0}) {
    Fixture fx;
    const AdaptiveResult res =
        enrich_adaptive(fx.dec, fx.subs, fx.weights, fx.cs, tau, EigenOptions{}, Execution::Serial);
    CHECK(res.added == fx.cs.count(ConstraintOrigin::Adaptive));
    CHECK(res.omega_tilde <= tau);
    CHECK(res.omega_tilde == indicator(res.omega));
    for (int f = 0; f < static_cast<int>(fx.dec.faces().size()); ++f) {
      const PairProblem pair = build_pair(fx.dec, fx.subs, fx.weights, fx.cs, f);
      CHECK(max_eigenvalue(pair_eig(pair)) <= tau * (1.0 + 1e-8));
    }
  }
}

TEST_CASE("constraint count grows as tau decreases") {
  Fixture fx;
  const PairProblem pair = build_pair(fx.dec, fx.subs, fx.weights, fx.cs, 0);
  const PairEigen eig = pair_eig(pair);
  int last = 0;
  for (double tau : {1e6, 1e3, 100.0, 30.0, 10.0, 5.0, 2.0, 1.1}) {
    const Selection sel = select_constraints(pair, eig, tau);
    CHECK(sel.k >= last);
    CHECK(static_cast<int>(sel.rows.size()) == sel.k);
    CHECK(sel.omega <= std::max(tau, 1.0));
    CHECK(sel.omega >= 1.0);
    for (const auto& row : sel.rows) CHECK(row.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
    last = sel.k;
  }
  CHECK(last > 0);
}

TEST_CASE("infinite tau adds nothing") {
  Fixture fx;
  const int before = fx.cs.num_flux_coarse();
  const AdaptiveResult res = enrich_adaptive(fx.dec, fx.subs, fx.weights, fx.cs,
                                             std::numeric_limits<double>::infinity(), EigenOptions{}, Execution::Serial);
  CHECK(res.added == 0);
  CHECK(fx.cs.num_flux_coarse() == before);
  CHECK(res.spectra.size() == fx.dec.faces().size());
}

TEST_CASE("a fully constrained face has no spectrum above zero") {
  Fixture fx;
  const Face& face = fx.dec.faces()[0];
  for (std::size_t k = 0; k < face.dofs.size(); ++k) {
    CoarseDof d;
    d.face = 0;
    d.component = -1;
    d.support = {face.dofs[k]};
    d.row = Eigen::VectorXd::Ones(1);
    d.origin = ConstraintOrigin::Adaptive;
    fx.cs.add_if_independent(std::move(d));
  }
  const PairProblem pair = build_pair(fx.dec, fx.subs, fx.weights, fx.cs, 0);
  const PairEigen eig = pair_eig(pair);
  CHECK(max_eigenvalue(eig) <= 1e-10);
  const Selection sel = select_constraints(pair, eig, 2.0);
  CHECK(sel.k == 0);
  CHECK(sel.omega == 1.0);
}

TEST_CASE("homogeneous pairs are well conditioned with the initial constraints") {
  Fixture fx(0.0);
  for (int f = 0; f < static_cast<int>(fx.dec.faces().size()); ++f) {
    const PairEigen eig = pair_eig(build_pair(fx.dec, fx.subs, fx.weights, fx.cs, f));
    CHECK(max_eigenvalue(eig) < 10.0);
  }
}

TEST_CASE("indicator floor") {
  CHECK(indicator({}) == 1.0);
  CHECK(indicator({0.2, 0.7}) == 1.0);
  CHECK(indicator({0.2, 3.5, 2.0}) == 3.5);
}

TEST_CASE("serial and parallel enrichment agree bitwise") {
  Fixture a;
  Fixture b;
  const AdaptiveResult ra = enrich_adaptive(a.dec, a.subs, a.weights, a.cs, 5.0, EigenOptions{}, Execution::Serial);
  const AdaptiveResult rb = enrich_adaptive(b.dec, b.subs, b.weights, b.cs, 5.0, EigenOptions{}, Execution::Parallel);
  CHECK(ra.added == rb.added);
  CHECK(ra.omega == rb.omega);
  REQUIRE(a.cs.num_flux_coarse() == b.cs.num_flux_coarse());
  for (int c = 0; c < a.cs.num_flux_coarse(); ++c) CHECK(a.cs.dofs()[c].row == b.cs.dofs()[c].row);
}

TEST_CASE("multiscale trace of a homogeneous pair is uniform") {
  const Grid g = testing::grid2(8, 5);
  const Decomposition dec = testing::split(g, {2, 1});
  // source and sink in the same subdomain: no net well rate on either side
  Wells wells;
  wells.source_cell = 0;
  wells.sink_cell = 1;
  const SaddleSystem sys = testing::scaled_system(g, Permeability::constant(g, 3.0), dec, wells);
  const Eigen::VectorXd t = multiscale_trace(sys, dec, 0);
  REQUIRE(t.size() == 5);
  // unit flow from i to j, split evenly by symmetry
  for (Eigen::Index k = 0; k < t.size(); ++k) CHECK(t[k] == doctest::Approx(1.0 / 5.0).epsilon(1e-10));
  ConstraintSet cs = initial_constraints(dec);
  CHECK(enrich_multiscale(sys, dec, cs, Execution::Serial) == 0);

  // a source well in i concentrates the flow near it, but the total stays one
  Wells bottom;
  bottom.source_cell = 0;
  bottom.sink_cell = 7;
  const SaddleSystem wsys = testing::scaled_system(g, Permeability::constant(g, 3.0), dec, bottom);
  const Eigen::VectorXd tw = multiscale_trace(wsys, dec, 0);
  CHECK(tw.sum() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(tw[0] > tw[4]);
}

TEST_CASE("multiscale rows on a heterogeneous medium") {
  Fixture fx;
  const int added = enrich_multiscale(fx.sys, fx.dec, fx.cs, Execution::Serial);
  CHECK(added == fx.dec.num_face_components());
  CHECK(fx.cs.count(ConstraintOrigin::Multiscale) == added);
  for (const auto& d : fx.cs.dofs())
    if (d.origin == ConstraintOrigin::Multiscale) CHECK(d.row.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
  // the total flux of the pair flow through the face is one
  for (int f = 0; f < static_cast<int>(fx.dec.faces().size()); ++f)
    CHECK(multiscale_trace(fx.sys, fx.dec, f).dot(fx.cs.face_rows(f).row(0)) ==
          doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("pair problem requires cached Schur complements") {
  const Grid g = testing::grid2(6, 4);
  const Decomposition dec = testing::split(g, {2, 1});
  const SaddleSystem sys = testing::scaled_system(g, Permeability::constant(g, 1.0), dec);
  const auto subs = build_subdomains(sys, dec, Execution::Serial);
  const WeightOperator w = build_weights(dec, sys, WeightKind::Multiplicity);
  CHECK_THROWS_AS(build_pair(dec, subs, w, initial_constraints(dec), 0), Error);
}
