#include "mixbddc/system.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "mixbddc/decomposition.hpp"
#include "mixbddc/error.hpp"

namespace mixbddc {

Eigen::MatrixXd SaddleSystem::cell_mass_matrix(int cell) const {
  const int dim = grid.dim();
  std::array<double, 3> h = grid.sizes();
  std::array<double, 3> k{};
  for (int a = 0; a < dim; ++a) k[a] = perm(cell, a);
  return element_mass_matrix(std::span<const double>(h.data(), dim), std::span<const double>(k.data(), dim),
                             mass_kind);
}

int SaddleSystem::divergence_sign(int cell, int dof) const {
  const FluxDof& d = grid.flux_dof(dof);
  if (d.lower_cell == cell) return -1;
  if (d.upper_cell == cell) return 1;
  return 0;
}

SaddleSystem assemble_system(const Grid& grid, const Permeability& perm, const Wells& wells, MassMatrixKind kind) {
  if (perm.dim() != grid.dim() || perm.num_cells() != grid.num_cells())
    throw Error(ErrorKind::InvalidArgument, "permeability does not match the grid");

  SaddleSystem sys;
  sys.grid = grid;
  sys.perm = perm;
  sys.mass_kind = kind;
  sys.wells = wells;
  const int ncells = grid.num_cells();
  if (sys.wells.sink_cell < 0) sys.wells.sink_cell = ncells - 1;
  if (sys.wells.source_cell < 0 || sys.wells.source_cell >= ncells || sys.wells.sink_cell >= ncells)
    throw Error(ErrorKind::InvalidArgument, "well cell out of range");

  const int nu = grid.num_flux_dofs();
  const int nloc = 2 * grid.dim();
  std::vector<Eigen::Triplet<double>> a_trip;
  std::vector<Eigen::Triplet<double>> b_trip;
  a_trip.reserve(static_cast<size_t>(ncells) * nloc * 2);
  b_trip.reserve(static_cast<size_t>(ncells) * nloc);
  std::vector<int> dofs(nloc);
  for (int c = 0; c < ncells; ++c) {
    const Eigen::MatrixXd m = sys.cell_mass_matrix(c);
    for (int l = 0; l < nloc; ++l) dofs[l] = grid.cell_face_dof(c, l);
    for (int r = 0; r < nloc; ++r) {
      if (dofs[r] < 0) continue;
      // outward flux through the high face is +u, through the low face -u;
      // the divergence row carries minus the outward sum
      b_trip.emplace_back(c, dofs[r], (r % 2 == 1) ? -1.0 : 1.0);
      for (int s = 0; s < nloc; ++s) {
        if (dofs[s] < 0 || m(r, s) == 0.0) continue;
        a_trip.emplace_back(dofs[r], dofs[s], m(r, s));
      }
    }
  }
  sys.A.resize(nu, nu);
  sys.A.setFromTriplets(a_trip.begin(), a_trip.end());
  sys.B.resize(ncells, nu);
  sys.B.setFromTriplets(b_trip.begin(), b_trip.end());
  sys.A.makeCompressed();
  sys.B.makeCompressed();

  sys.f = Eigen::VectorXd::Zero(ncells);
  sys.f[sys.wells.source_cell] -= sys.wells.strength;
  sys.f[sys.wells.sink_cell] += sys.wells.strength;
  if (std::abs(sys.f.sum()) > 1e-12 * sys.f.lpNorm<1>())
    throw Error(ErrorKind::CompatibilityViolation, "sources do not sum to zero");
  sys.D = Eigen::VectorXd::Ones(ncells);
  return sys;
}

SaddleSystem rescale(const SaddleSystem& system, const Decomposition& dec) {
  if (static_cast<int>(dec.cell_owner().size()) != system.num_pressure())
    throw Error(ErrorKind::InvalidArgument, "decomposition does not cover the grid");
  const int nsub = dec.num_subdomains();
  std::vector<double> sum(nsub, 0.0);
  std::vector<int> count(nsub, 0);
  const Eigen::VectorXd diag = system.A.diagonal();
  for (int s = 0; s < nsub; ++s) {
    for (int d : dec.interior_dofs(s)) {
      sum[s] += diag[d];
      ++count[s];
    }
    for (int g : dec.interface_of(s)) {
      sum[s] += diag[dec.interface()[g].flux_dof];
      ++count[s];
    }
  }

  SaddleSystem out = system;
  Eigen::VectorXd scale(system.num_pressure());
  for (int c = 0; c < system.num_pressure(); ++c) {
    const int s = dec.owner(c);
    // a lone cell enclosed by the boundary touches no flux unknown
    const double mean = count[s] > 0 ? sum[s] / count[s] : 1.0;
    scale[c] = mean / system.D[c];
  }
  out.D = system.D.cwiseProduct(scale);
  out.B = scale.asDiagonal() * system.B;
  out.B.makeCompressed();
  out.f = system.f.cwiseProduct(scale);
  return out;
}

void remove_mean(Eigen::VectorXd& p) {
  if (p.size() > 0) p.array() -= p.mean();
}

}  // namespace mixbddc
