#include "mixbddc/decomposition.hpp"

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "mixbddc/error.hpp"

namespace mixbddc {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

// Keys of the (dim-2)-dimensional entities bounding a face: vertices in 2D,
// edges in 3D. Two interface faces sharing one are edge-connected.
std::vector<std::int64_t> face_boundary_keys(const Grid& grid, const FluxDof& dof) {
  const auto n = grid.counts();
  const int face_axis = dof.axis;
  std::array<int, 3> ijk = grid.cell_coords(dof.upper_cell);
  auto vertex = [&](std::array<int, 3> v) -> std::int64_t {
    return v[0] + static_cast<std::int64_t>(n[0] + 1) * (v[1] + static_cast<std::int64_t>(n[1] + 1) * v[2]);
  };
  std::vector<std::int64_t> keys;
  if (grid.dim() == 2) {
    const int t = 1 - face_axis;
    std::array<int, 3> v = ijk;
    keys.push_back(vertex(v));
    v[t] += 1;
    keys.push_back(vertex(v));
  } else {
    int t[2];
    int m = 0;
    for (int a = 0; a < 3; ++a)
      if (a != face_axis) t[m++] = a;
    for (int e = 0; e < 2; ++e) {
      const int along = t[e];
      const int across = t[1 - e];
      for (int shift = 0; shift < 2; ++shift) {
        std::array<int, 3> v = ijk;
        v[across] += shift;
        keys.push_back(vertex(v) * 3 + along);
      }
    }
  }
  return keys;
}

}  // namespace

Decomposition::Decomposition(const Grid& grid, std::vector<int> cell_owner) : cell_owner_(std::move(cell_owner)) {
  const int ncells = grid.num_cells();
  if (static_cast<int>(cell_owner_.size()) != ncells)
    throw Error(ErrorKind::InvalidArgument, "partition covers " + std::to_string(cell_owner_.size()) +
                                                " cells, grid has " + std::to_string(ncells));
  int nsub = 0;
  for (int id : cell_owner_) {
    if (id < 0) throw Error(ErrorKind::InvalidArgument, "negative subdomain id");
    nsub = std::max(nsub, id + 1);
  }
  cells_.assign(nsub, {});
  for (int c = 0; c < ncells; ++c) cells_[cell_owner_[c]].push_back(c);
  for (int s = 0; s < nsub; ++s)
    if (cells_[s].empty()) throw Error(ErrorKind::InvalidArgument, "subdomain " + std::to_string(s) + " is empty");

  interior_.assign(nsub, {});
  sub_interface_.assign(nsub, {});
  dof_to_interface_.assign(grid.num_flux_dofs(), -1);
  std::map<std::pair<int, int>, std::vector<int>> shared;
  for (int d = 0; d < grid.num_flux_dofs(); ++d) {
    const FluxDof& fd = grid.flux_dof(d);
    const int lo = cell_owner_[fd.lower_cell];
    const int up = cell_owner_[fd.upper_cell];
    if (lo == up) {
      interior_[lo].push_back(d);
      continue;
    }
    InterfaceDof idof;
    idof.flux_dof = d;
    idof.lower_sub = lo;
    idof.upper_sub = up;
    idof.lower_pos = static_cast<int>(sub_interface_[lo].size());
    idof.upper_pos = static_cast<int>(sub_interface_[up].size());
    const int g = static_cast<int>(interface_.size());
    dof_to_interface_[d] = g;
    sub_interface_[lo].push_back(g);
    sub_interface_[up].push_back(g);
    interface_.push_back(idof);
    shared[{std::min(lo, up), std::max(lo, up)}].push_back(g);
  }

  sub_faces_.assign(nsub, {});
  for (auto& [key, dofs] : shared) {
    Face face;
    face.i = key.first;
    face.j = key.second;
    face.dofs = std::move(dofs);

    const int m = static_cast<int>(face.dofs.size());
    DisjointSets sets(m);
    std::unordered_map<std::int64_t, int> first_touch;
    for (int a = 0; a < m; ++a) {
      for (std::int64_t k : face_boundary_keys(grid, grid.flux_dof(interface_[face.dofs[a]].flux_dof))) {
        auto [it, inserted] = first_touch.emplace(k, a);
        if (!inserted) sets.unite(a, it->second);
      }
    }
    std::map<int, int> root_to_component;
    for (int a = 0; a < m; ++a) {
      const int r = sets.find(a);
      auto [it, inserted] = root_to_component.emplace(r, static_cast<int>(face.components.size()));
      if (inserted) face.components.emplace_back();
      face.components[it->second].push_back(face.dofs[a]);
    }
    const int index = static_cast<int>(faces_.size());
    sub_faces_[face.i].push_back(index);
    sub_faces_[face.j].push_back(index);
    faces_.push_back(std::move(face));
  }
}

int Decomposition::face_between(int i, int j) const {
  if (i > j) std::swap(i, j);
  for (int f : sub_faces_[i])
    if (faces_[f].i == i && faces_[f].j == j) return f;
  return -1;
}

int Decomposition::num_face_components() const {
  int total = 0;
  for (const Face& f : faces_) total += static_cast<int>(f.components.size());
  return total;
}

int Decomposition::max_faces_per_subdomain() const {
  size_t best = 0;
  for (const auto& f : sub_faces_) best = std::max(best, f.size());
  return static_cast<int>(best);
}

Decomposition regular_partition(const Grid& grid, std::span<const int> splits) {
  if (static_cast<int>(splits.size()) != grid.dim())
    throw Error(ErrorKind::InvalidArgument, "expected one split count per axis");
  std::array<std::vector<int>, 3> strip;
  std::array<int, 3> s{1, 1, 1};
  for (int a = 0; a < 3; ++a) {
    if (a < grid.dim()) s[a] = splits[a];
    const int n = grid.count(a);
    if (s[a] < 1 || s[a] > n)
      throw Error(ErrorKind::InvalidArgument, "split count must lie between 1 and the cell count");
    strip[a].resize(n);
    for (int t = 0; t < s[a]; ++t) {
      const int begin = static_cast<int>(static_cast<long long>(t) * n / s[a]);
      const int end = static_cast<int>(static_cast<long long>(t + 1) * n / s[a]);
      for (int c = begin; c < end; ++c) strip[a][c] = t;
    }
  }
  std::vector<int> owner(grid.num_cells());
  for (int c = 0; c < grid.num_cells(); ++c) {
    const auto ijk = grid.cell_coords(c);
    owner[c] = strip[0][ijk[0]] + s[0] * (strip[1][ijk[1]] + s[1] * strip[2][ijk[2]]);
  }
  return Decomposition(grid, std::move(owner));
}

Decomposition partition_from_ids(const Grid& grid, std::span<const int> ids, std::vector<std::string>* warnings) {
  if (static_cast<int>(ids.size()) != grid.num_cells())
    throw Error(ErrorKind::FormatError, "partition lists " + std::to_string(ids.size()) + " ids, grid has " +
                                            std::to_string(grid.num_cells()) + " cells");
  std::map<int, int> compact;
  for (int id : ids) {
    if (id < 0) throw Error(ErrorKind::FormatError, "negative subdomain id " + std::to_string(id));
    compact.emplace(id, 0);
  }
  int next = 0;
  for (auto& [id, value] : compact) value = next++;

  // split subdomains that are not face-connected
  DisjointSets sets(grid.num_cells());
  for (int d = 0; d < grid.num_flux_dofs(); ++d) {
    const FluxDof& fd = grid.flux_dof(d);
    if (ids[fd.lower_cell] == ids[fd.upper_cell]) sets.unite(fd.lower_cell, fd.upper_cell);
  }
  std::map<int, int> root_to_sub;
  std::vector<int> pieces(next, 0);
  std::vector<int> owner(grid.num_cells());
  for (int c = 0; c < grid.num_cells(); ++c) {
    auto [it, inserted] = root_to_sub.emplace(sets.find(c), static_cast<int>(root_to_sub.size()));
    if (inserted) ++pieces[compact[ids[c]]];
    owner[c] = it->second;
  }
  for (int s = 0; s < next; ++s) {
    if (pieces[s] > 1 && warnings != nullptr) {
      std::ostringstream msg;
      msg << "subdomain " << s << " is disconnected; split into " << pieces[s] << " pieces";
      warnings->push_back(msg.str());
    }
  }
  if (static_cast<int>(root_to_sub.size()) == next) {
    for (int c = 0; c < grid.num_cells(); ++c) owner[c] = compact[ids[c]];
  }
  return Decomposition(grid, std::move(owner));
}

Decomposition import_partition(std::istream& in, const Grid& grid, std::vector<std::string>* warnings) {
  std::string tag;
  long long declared = 0;
  long long ncells = 0;
  if (!(in >> tag >> declared >> ncells) || tag != "PART")
    throw Error(ErrorKind::FormatError, "partition file must start with 'PART <N> <ncells>'");
  if (ncells != grid.num_cells())
    throw Error(ErrorKind::FormatError, "partition header lists " + std::to_string(ncells) + " cells, grid has " +
                                            std::to_string(grid.num_cells()));
  std::vector<int> ids;
  ids.reserve(grid.num_cells());
  long long id = 0;
  while (in >> id) ids.push_back(static_cast<int>(id));
  if (!in.eof()) throw Error(ErrorKind::FormatError, "unparsable entry in partition file");
  return partition_from_ids(grid, ids, warnings);
}

void write_partition(std::ostream& out, const Decomposition& dec) {
  out << "PART " << dec.num_subdomains() << ' ' << dec.cell_owner().size() << '\n';
  for (int id : dec.cell_owner()) out << id << '\n';
}

WeightOperator::WeightOperator(const Decomposition& dec, WeightKind kind, std::vector<std::array<double, 2>> weights)
    : dec_(&dec), kind_(kind), weights_(std::move(weights)) {
  if (static_cast<int>(weights_.size()) != dec.num_interface_dofs())
    throw Error(ErrorKind::InvalidArgument, "one weight pair per interface unknown expected");
}

double WeightOperator::weight(int s, int g) const {
  return dec_->interface()[g].lower_sub == s ? weights_[g][0] : weights_[g][1];
}

Eigen::VectorXd WeightOperator::average(const BrokenVector& w) const {
  const auto& itf = dec_->interface();
  Eigen::VectorXd u(itf.size());
  for (size_t g = 0; g < itf.size(); ++g) {
    const InterfaceDof& d = itf[g];
    u[g] = weights_[g][0] * w[d.lower_sub][d.lower_pos] + weights_[g][1] * w[d.upper_sub][d.upper_pos];
  }
  return u;
}

BrokenVector WeightOperator::restrict(const Eigen::VectorXd& u) const {
  BrokenVector w = zeros_like(*dec_);
  const auto& itf = dec_->interface();
  for (size_t g = 0; g < itf.size(); ++g) {
    w[itf[g].lower_sub][itf[g].lower_pos] = u[g];
    w[itf[g].upper_sub][itf[g].upper_pos] = u[g];
  }
  return w;
}

BrokenVector WeightOperator::distribute(const Eigen::VectorXd& r) const {
  BrokenVector w = zeros_like(*dec_);
  const auto& itf = dec_->interface();
  for (size_t g = 0; g < itf.size(); ++g) {
    w[itf[g].lower_sub][itf[g].lower_pos] = weights_[g][0] * r[g];
    w[itf[g].upper_sub][itf[g].upper_pos] = weights_[g][1] * r[g];
  }
  return w;
}

Eigen::VectorXd WeightOperator::assemble(const BrokenVector& w) const {
  const auto& itf = dec_->interface();
  Eigen::VectorXd u(itf.size());
  for (size_t g = 0; g < itf.size(); ++g)
    u[g] = w[itf[g].lower_sub][itf[g].lower_pos] + w[itf[g].upper_sub][itf[g].upper_pos];
  return u;
}

BrokenVector WeightOperator::apply_I_minus_E(const BrokenVector& w) const {
  BrokenVector e = apply_E(w);
  for (size_t s = 0; s < w.size(); ++s) e[s] = w[s] - e[s];
  return e;
}

WeightOperator build_weights(const Decomposition& dec, const SaddleSystem& system, WeightKind kind) {
  std::vector<std::array<double, 2>> weights(dec.num_interface_dofs(), {0.5, 0.5});
  if (kind == WeightKind::Stiffness) {
    const Grid& grid = system.grid;
    for (int g = 0; g < dec.num_interface_dofs(); ++g) {
      const FluxDof& fd = grid.flux_dof(dec.interface()[g].flux_dof);
      // the face is the high face of the lower cell and the low face of the upper cell
      const double d_lower = system.cell_mass_matrix(fd.lower_cell)(2 * fd.axis + 1, 2 * fd.axis + 1);
      const double d_upper = system.cell_mass_matrix(fd.upper_cell)(2 * fd.axis, 2 * fd.axis);
      weights[g] = {d_lower / (d_lower + d_upper), d_upper / (d_lower + d_upper)};
    }
  }
  return WeightOperator(dec, kind, std::move(weights));
}

BrokenVector zeros_like(const Decomposition& dec) {
  BrokenVector w(dec.num_subdomains());
  for (int s = 0; s < dec.num_subdomains(); ++s) w[s] = Eigen::VectorXd::Zero(dec.interface_of(s).size());
  return w;
}

bool jumps_aligned_with_partition(const Permeability& perm, const Decomposition& dec) {
  const int dim = perm.dim();
  std::vector<std::vector<double>> per_sub(dec.num_subdomains());
  for (int s = 0; s < dec.num_subdomains(); ++s) {
    const int first = dec.cells(s).front();
    for (int c : dec.cells(s))
      for (int a = 0; a < dim; ++a)
        if (perm(c, a) != perm(first, a)) return false;
    for (int a = 0; a < dim; ++a) per_sub[s].push_back(perm(first, a));
  }
  for (int s = 1; s < dec.num_subdomains(); ++s)
    if (per_sub[s] != per_sub[0]) return true;
  return false;
}

}  // namespace mixbddc
