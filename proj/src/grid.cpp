#include "mixbddc/grid.hpp"

#include <cmath>
#include <string>

#include "mixbddc/error.hpp"

namespace mixbddc {

Grid::Grid(int dim, std::array<int, 3> counts, std::array<double, 3> sizes)
    : dim_(dim), n_(counts), h_(sizes) {
  if (dim != 2 && dim != 3) throw Error(ErrorKind::InvalidArgument, "grid dimension must be 2 or 3");
  for (int a = 0; a < 3; ++a) {
    if (a >= dim) {
      n_[a] = 1;
      h_[a] = 1.0;
      continue;
    }
    if (n_[a] < 1) throw Error(ErrorKind::InvalidArgument, "cell counts must be at least 1");
    if (!(h_[a] > 0.0) || !std::isfinite(h_[a]))
      throw Error(ErrorKind::InvalidArgument, "cell sizes must be positive");
  }

  face_offset_[0] = 0;
  for (int a = 0; a < 3; ++a) {
    int faces = 0;
    if (a < dim) {
      faces = 1;
      for (int b = 0; b < 3; ++b) faces *= (b == a) ? n_[b] + 1 : n_[b];
    }
    face_offset_[a + 1] = face_offset_[a] + faces;
  }

  face_to_dof_.assign(face_offset_[3], -1);
  for (int a = 0; a < dim; ++a) {
    std::array<int, 3> m = n_;
    m[a] += 1;
    for (int k = 0; k < m[2]; ++k)
      for (int j = 0; j < m[1]; ++j)
        for (int i = 0; i < m[0]; ++i) {
          std::array<int, 3> ijk{i, j, k};
          if (ijk[a] == 0 || ijk[a] == n_[a]) continue;
          const int face = face_index(a, ijk);
          std::array<int, 3> low = ijk;
          low[a] -= 1;
          FluxDof dof;
          dof.face = face;
          dof.axis = a;
          dof.lower_cell = cell_index(low[0], low[1], low[2]);
          dof.upper_cell = cell_index(i, j, k);
          face_to_dof_[face] = static_cast<int>(dofs_.size());
          dofs_.push_back(dof);
        }
  }
}

std::array<int, 3> Grid::cell_coords(int cell) const {
  const int i = cell % n_[0];
  const int rest = cell / n_[0];
  return {i, rest % n_[1], rest / n_[1]};
}

int Grid::face_index(int axis, std::array<int, 3> ijk) const {
  std::array<int, 3> m = n_;
  m[axis] += 1;
  return face_offset_[axis] + ijk[0] + m[0] * (ijk[1] + m[1] * ijk[2]);
}

int Grid::cell_face_dof(int cell, int local_face) const {
  const int axis = local_face / 2;
  std::array<int, 3> ijk = cell_coords(cell);
  ijk[axis] += local_face % 2;
  return face_to_dof_[face_index(axis, ijk)];
}

double Grid::face_area(int axis) const {
  double area = 1.0;
  for (int b = 0; b < dim_; ++b)
    if (b != axis) area *= h_[b];
  return area;
}

std::array<double, 3> Grid::cell_center(int cell) const {
  const auto ijk = cell_coords(cell);
  std::array<double, 3> x{};
  for (int a = 0; a < 3; ++a) x[a] = (ijk[a] + 0.5) * h_[a];
  return x;
}

Grid build_grid(int dim, std::span<const int> counts, std::span<const double> sizes) {
  if (static_cast<int>(counts.size()) != dim || static_cast<int>(sizes.size()) != dim)
    throw Error(ErrorKind::InvalidArgument,
                "expected " + std::to_string(dim) + " cell counts and sizes");
  std::array<int, 3> n{1, 1, 1};
  std::array<double, 3> h{1.0, 1.0, 1.0};
  for (int a = 0; a < dim; ++a) {
    n[a] = counts[a];
    h[a] = sizes[a];
  }
  return Grid(dim, n, h);
}

Permeability::Permeability(int dim, std::vector<double> values) : dim_(dim), values_(std::move(values)) {
  if (dim != 2 && dim != 3) throw Error(ErrorKind::InvalidArgument, "permeability dimension must be 2 or 3");
  if (values_.size() % dim != 0)
    throw Error(ErrorKind::InvalidArgument, "permeability value count is not a multiple of the dimension");
  for (double v : values_)
    if (!(v > 0.0) || !std::isfinite(v))
      throw Error(ErrorKind::InvalidArgument, "permeability values must be positive and finite");
}

Permeability Permeability::constant(const Grid& grid, double k) {
  return Permeability(grid.dim(), std::vector<double>(static_cast<size_t>(grid.num_cells()) * grid.dim(), k));
}

Eigen::MatrixXd element_mass_matrix(std::span<const double> sizes, std::span<const double> k,
                                    MassMatrixKind kind) {
  const int dim = static_cast<int>(sizes.size());
  if (static_cast<int>(k.size()) != dim)
    throw Error(ErrorKind::InvalidArgument, "permeability and size dimensions differ");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * dim, 2 * dim);
  for (int a = 0; a < dim; ++a) {
    if (!(sizes[a] > 0.0)) throw Error(ErrorKind::InvalidArgument, "cell sizes must be positive");
    if (!(k[a] > 0.0) || !std::isfinite(k[a]))
      throw Error(ErrorKind::InvalidArgument, "permeability must be positive and finite");
    double area = 1.0;
    for (int b = 0; b < dim; ++b)
      if (b != a) area *= sizes[b];
    const double scale = sizes[a] / (6.0 * area * k[a]);
    if (kind == MassMatrixKind::Exact) {
      m(2 * a, 2 * a) = m(2 * a + 1, 2 * a + 1) = 2.0 * scale;
      m(2 * a, 2 * a + 1) = m(2 * a + 1, 2 * a) = scale;
    } else {
      m(2 * a, 2 * a) = m(2 * a + 1, 2 * a + 1) = 3.0 * scale;
    }
  }
  return m;
}

}  // namespace mixbddc
