#include <doctest.h>

#include <sstream>

#include "mixbddc/error.hpp"
#include "support.hpp"

using namespace mixbddc;

namespace {

int coarse_count(const Decomposition& dec) { return dec.num_face_components() + dec.num_subdomains(); }

}  // namespace

TEST_CASE("interface sizes of the regular benchmark partitions") {
  const Grid g = testing::grid2(60, 220);
  const auto a = testing::split(g, {2, 7});
  CHECK(a.faces().size() == 19);
  CHECK(a.num_interface_dofs() == 580);
  CHECK(coarse_count(a) == 33);
  CHECK(a.max_faces_per_subdomain() == 3);
  const auto b = testing::split(g, {6, 22});
  CHECK(b.faces().size() == 236);
  CHECK(b.num_interface_dofs() == 2360);
  CHECK(coarse_count(b) == 368);
  CHECK(b.max_faces_per_subdomain() == 4);

  const Grid g3 = testing::grid3(30, 30, 30);
  const auto c = testing::split(g3, {3, 3, 3});
  CHECK(c.faces().size() == 54);
  CHECK(c.num_interface_dofs() == 5400);
  CHECK(coarse_count(c) == 81);
  CHECK(c.max_faces_per_subdomain() == 6);
}

TEST_CASE("strip boundaries of the regular partition") {
  const Grid g = testing::grid2(7, 1);
  const auto dec = testing::split(g, {3, 1});
  // floor(t*7/3) = 0, 2, 4, 7
  CHECK(dec.cells(0).size() == 2);
  CHECK(dec.cells(1).size() == 2);
  CHECK(dec.cells(2).size() == 3);
  CHECK_THROWS_AS(testing::split(g, {8, 1}), Error);
}

TEST_CASE("interface unknowns know both sides") {
  const Grid g = testing::grid2(6, 6);
  const auto dec = testing::split(g, {2, 3});
  for (int gi = 0; gi < dec.num_interface_dofs(); ++gi) {
    const InterfaceDof& d = dec.interface()[gi];
    const FluxDof& fd = g.flux_dof(d.flux_dof);
    CHECK(dec.owner(fd.lower_cell) == d.lower_sub);
    CHECK(dec.owner(fd.upper_cell) == d.upper_sub);
    CHECK(dec.orientation(d.lower_sub, gi) == 1);
    CHECK(dec.orientation(d.upper_sub, gi) == -1);
    CHECK(dec.interface_of(d.lower_sub)[d.lower_pos] == gi);
    CHECK(dec.interface_of(d.upper_sub)[d.upper_pos] == gi);
    CHECK(dec.interface_index(d.flux_dof) == gi);
  }
  int interior = 0;
  for (int s = 0; s < dec.num_subdomains(); ++s) interior += static_cast<int>(dec.interior_dofs(s).size());
  CHECK(interior + dec.num_interface_dofs() == g.num_flux_dofs());
}

TEST_CASE("faces split into vertex-connected components in 2D") {
  // bottom row is 0, the centre cell 2, the inverted U around it 1:
  // 0 and 1 touch at two separate places
  const Grid g = testing::grid2(3, 3);
  const std::vector<int> ids{0, 0, 0, 1, 2, 1, 1, 1, 1};
  const Decomposition dec(g, ids);
  const int f = dec.face_between(0, 1);
  REQUIRE(f >= 0);
  CHECK(dec.faces()[f].dofs.size() == 2);
  CHECK(dec.faces()[f].components.size() == 2);
  CHECK(dec.face_between(0, 2) >= 0);
  CHECK(dec.faces()[dec.face_between(1, 2)].components.size() == 1);
  CHECK(dec.faces()[dec.face_between(1, 2)].dofs.size() == 3);
}

TEST_CASE("faces split into edge-connected components in 3D") {
  // two columns of subdomain 1 that meet subdomain 0 only along a line
  const Grid g = testing::grid3(2, 2, 2);
  std::vector<int> ids(8, 0);
  for (int c = 0; c < 8; ++c) {
    const auto ijk = g.cell_coords(c);
    ids[c] = ijk[2] == 1 ? 1 : 0;
  }
  const Decomposition dec(g, ids);
  CHECK(dec.faces().size() == 1);
  CHECK(dec.faces()[0].dofs.size() == 4);
  CHECK(dec.faces()[0].components.size() == 1);

  // a diagonal pair of cells above subdomain 0 whose shared faces touch
  // only at a corner point, not along an edge
  const Grid g2 = testing::grid3(2, 2, 2);
  std::vector<int> ids2(8, 2);
  for (int c = 0; c < 8; ++c) {
    const auto ijk = g2.cell_coords(c);
    if (ijk[2] == 0) ids2[c] = 0;
    if (ijk[2] == 1 && ijk[0] == ijk[1]) ids2[c] = 1;
  }
  std::vector<std::string> warnings;
  const Decomposition dec2 = partition_from_ids(g2, ids2, &warnings);
  // the diagonal cells are not face-connected, so they are split
  CHECK(dec2.num_subdomains() == 5);
  CHECK(warnings.size() == 2);
}

TEST_CASE("disconnected subdomains are split with a warning") {
  const Grid g = testing::grid2(4, 1);
  const std::vector<int> ids{0, 1, 1, 0};
  std::vector<std::string> warnings;
  const Decomposition dec = partition_from_ids(g, ids, &warnings);
  CHECK(dec.num_subdomains() == 3);
  CHECK(warnings.size() == 1);
  CHECK(dec.owner(0) != dec.owner(3));
}

TEST_CASE("partition files round trip") {
  const Grid g = testing::grid2(5, 4);
  const auto dec = testing::split(g, {2, 2});
  std::ostringstream out;
  write_partition(out, dec);
  std::istringstream in(out.str());
  const Decomposition back = import_partition(in, g);
  CHECK(back.cell_owner() == dec.cell_owner());
  std::istringstream bad("PART 2 3\n0\n1\n1\n");
  CHECK_THROWS_AS(import_partition(bad, g), Error);
  std::istringstream short_list("PART 2 20\n0 1 1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0\n");
  CHECK_THROWS_AS(import_partition(short_list, g), Error);
  std::istringstream negative("PART 2 20\n-1 1 1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0\n");
  CHECK_THROWS_AS(import_partition(negative, g), Error);
}

TEST_CASE("multiplicity weights") {
  const Grid g = testing::grid2(6, 6);
  const auto dec = testing::split(g, {3, 2});
  const SaddleSystem sys = testing::scaled_system(g, testing::random_perm(g, 6, 1), dec);
  const WeightOperator w = build_weights(dec, sys, WeightKind::Multiplicity);
  for (int gi = 0; gi < dec.num_interface_dofs(); ++gi) {
    CHECK(w.weights(gi)[0] == 0.5);
    CHECK(w.weights(gi)[1] == 0.5);
  }
}

TEST_CASE("stiffness weights favour the low-permeability side") {
  const Grid g = testing::grid2(4, 2);
  std::vector<double> k;
  for (int c = 0; c < g.num_cells(); ++c) {
    const double v = g.cell_coords(c)[0] < 2 ? 1.0 : 1e6;
    k.push_back(v);
    k.push_back(v);
  }
  const auto dec = testing::split(g, {2, 1});
  const SaddleSystem sys = testing::scaled_system(g, Permeability(2, k), dec);
  const WeightOperator w = build_weights(dec, sys, WeightKind::Stiffness);
  CHECK(jumps_aligned_with_partition(sys.perm, dec));
  // the diagonal of each side is proportional to 1/k, so
  // d_low/(d_low + d_high) = 1/(1 + 1e-6)
  for (int gi = 0; gi < dec.num_interface_dofs(); ++gi) {
    CHECK(w.weight(0, gi) == doctest::Approx(1.0 / (1.0 + 1e-6)).epsilon(1e-9));
    CHECK(w.weight(1, gi) == doctest::Approx(1e-6 / (1.0 + 1e-6)).epsilon(1e-9));
    CHECK(w.weight(0, gi) + w.weight(1, gi) == doctest::Approx(1.0).epsilon(1e-15));
  }
  const SaddleSystem homogeneous = testing::scaled_system(g, Permeability::constant(g, 1.0), dec);
  CHECK_FALSE(jumps_aligned_with_partition(homogeneous.perm, dec));
}

TEST_CASE("averaging operator properties") {
  const Grid g = testing::grid2(8, 6);
  const auto dec = testing::split(g, {2, 3});
  const SaddleSystem sys = testing::scaled_system(g, testing::random_perm(g, 6, 5), dec);
  for (WeightKind kind : {WeightKind::Multiplicity, WeightKind::Stiffness}) {
    const WeightOperator e = build_weights(dec, sys, kind);
    BrokenVector w = zeros_like(dec);
    std::mt19937 rng(7);
    std::normal_distribution<double> nd;
    for (auto& b : w)
      for (Eigen::Index k = 0; k < b.size(); ++k) b[k] = nd(rng);
    const BrokenVector ew = e.apply_E(w);
    const BrokenVector eew = e.apply_E(ew);
    double diff = 0.0;
    for (std::size_t s = 0; s < w.size(); ++s) diff = std::max(diff, (eew[s] - ew[s]).cwiseAbs().maxCoeff());
    CHECK(diff <= 1e-14);
    // (I - E) annihilates continuous vectors
    const BrokenVector iew = e.apply_I_minus_E(ew);
    for (const auto& b : iew) CHECK(b.cwiseAbs().maxCoeff() <= 1e-14);
    // distribute is the transpose of average
    Eigen::VectorXd r(dec.num_interface_dofs());
    for (Eigen::Index k = 0; k < r.size(); ++k) r[k] = nd(rng);
    const BrokenVector rt = e.distribute(r);
    double lhs = 0.0;
    for (std::size_t s = 0; s < w.size(); ++s) lhs += rt[s].dot(w[s]);
    CHECK(lhs == doctest::Approx(r.dot(e.average(w))).epsilon(1e-12));
    // assemble is the transpose of restrict
    const BrokenVector rr = e.restrict(r);
    double lhs2 = 0.0;
    for (std::size_t s = 0; s < w.size(); ++s) lhs2 += rr[s].dot(w[s]);
    CHECK(lhs2 == doctest::Approx(r.dot(e.assemble(w))).epsilon(1e-12));
  }
}
