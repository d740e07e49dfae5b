#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mixbddc {

/// An interior face carrying one RT0 flux unknown: the total flux through the
/// face oriented along the positive coordinate axis.
struct FluxDof {
  int face = -1;
  int axis = 0;
  int lower_cell = -1;  // cell on the negative side of the face
  int upper_cell = -1;  // cell on the positive side
};

/// Uniform Cartesian grid in 2D or 3D. Cells are numbered x-fastest; faces
/// are numbered x-faces first, then y-faces, then z-faces, each x-fastest.
/// Boundary faces carry zero normal flux and get no unknown.
class Grid {
 public:
  Grid() = default;
  Grid(int dim, std::array<int, 3> counts, std::array<double, 3> sizes);

  int dim() const { return dim_; }
  int count(int axis) const { return n_[axis]; }
  double size(int axis) const { return h_[axis]; }
  std::array<int, 3> counts() const { return n_; }
  std::array<double, 3> sizes() const { return h_; }

  int num_cells() const { return n_[0] * n_[1] * n_[2]; }
  int num_faces() const { return face_offset_[3]; }
  int num_faces(int axis) const { return face_offset_[axis + 1] - face_offset_[axis]; }
  int num_flux_dofs() const { return static_cast<int>(dofs_.size()); }
  int num_boundary_faces() const { return num_faces() - num_flux_dofs(); }
  /// All faces plus all cells, the count used for reporting problem sizes.
  int total_dofs() const { return num_faces() + num_cells(); }

  int cell_index(int i, int j, int k = 0) const { return i + n_[0] * (j + n_[1] * k); }
  std::array<int, 3> cell_coords(int cell) const;
  /// Face on the low side (along `axis`) of the cell at (i,j,k); the index
  /// along `axis` may equal the cell count to address the last face.
  int face_index(int axis, std::array<int, 3> ijk) const;
  /// Flux unknown of a face, or -1 on the domain boundary.
  int face_dof(int face) const { return face_to_dof_[face]; }
  const FluxDof& flux_dof(int dof) const { return dofs_[dof]; }
  /// Flux unknown on local face 2*axis+side of a cell (side 0 = low, 1 = high), or -1.
  int cell_face_dof(int cell, int local_face) const;

  double cell_volume() const { return h_[0] * h_[1] * h_[2]; }
  /// Area of a face normal to `axis` (a length in 2D).
  double face_area(int axis) const;
  std::array<double, 3> cell_center(int cell) const;

 private:
  int dim_ = 0;
  std::array<int, 3> n_{1, 1, 1};
  std::array<double, 3> h_{1.0, 1.0, 1.0};
  std::array<int, 4> face_offset_{};
  std::vector<int> face_to_dof_;
  std::vector<FluxDof> dofs_;
};

/// Validates counts (>= 1) and sizes (> 0) and fixes the dof enumeration.
Grid build_grid(int dim, std::span<const int> counts, std::span<const double> sizes);

/// Cell-wise diagonal permeability (kx, ky[, kz]); viscosity is taken as 1.
class Permeability {
 public:
  Permeability() = default;
  Permeability(int dim, std::vector<double> values);
  static Permeability constant(const Grid& grid, double k);

  int dim() const { return dim_; }
  int num_cells() const { return dim_ == 0 ? 0 : static_cast<int>(values_.size()) / dim_; }
  double operator()(int cell, int axis) const { return values_[cell * dim_ + axis]; }
  std::span<const double> values() const { return values_; }

 private:
  int dim_ = 0;
  std::vector<double> values_;
};

enum class MassMatrixKind { Exact, Lumped };

/// RT0 mass matrix of one cell for the inverse permeability, local faces
/// ordered (x-low, x-high, y-low, y-high[, z-low, z-high]). Per axis the
/// exact block is k^-1 * h_a / (6 * area_a) * [[2,1],[1,2]]; axes decouple.
Eigen::MatrixXd element_mass_matrix(std::span<const double> sizes, std::span<const double> k,
                                    MassMatrixKind kind = MassMatrixKind::Exact);

}  // namespace mixbddc
