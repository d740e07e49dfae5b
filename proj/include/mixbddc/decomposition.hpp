#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixbddc/grid.hpp"
#include "mixbddc/system.hpp"

namespace mixbddc {

/// One flux unknown on the interface. It is shared by exactly two
/// subdomains: the owner of the cell below it and the owner of the cell
/// above it (along the face axis). `*_pos` is its position in that
/// subdomain's local interface ordering.
struct InterfaceDof {
  int flux_dof = -1;
  int lower_sub = -1;
  int upper_sub = -1;
  int lower_pos = -1;
  int upper_pos = -1;
};

/// All interface unknowns shared by subdomains i < j, split into
/// edge-connected components. Entries are interface indices.
struct Face {
  int i = -1;
  int j = -1;
  std::vector<int> dofs;
  std::vector<std::vector<int>> components;
};

/// Nonoverlapping partition of the cells together with its interface
/// topology. Immutable after construction.
class Decomposition {
 public:
  Decomposition() = default;
  /// Ids must lie in [0, num_subdomains) and every subdomain must be nonempty.
  Decomposition(const Grid& grid, std::vector<int> cell_owner);

  int num_subdomains() const { return static_cast<int>(cells_.size()); }
  int owner(int cell) const { return cell_owner_[cell]; }
  const std::vector<int>& cell_owner() const { return cell_owner_; }
  const std::vector<int>& cells(int s) const { return cells_[s]; }
  const std::vector<int>& interior_dofs(int s) const { return interior_[s]; }
  /// Interface indices of subdomain s, ordered by flux unknown.
  const std::vector<int>& interface_of(int s) const { return sub_interface_[s]; }
  const std::vector<InterfaceDof>& interface() const { return interface_; }
  int num_interface_dofs() const { return static_cast<int>(interface_.size()); }
  /// Interface index of a flux unknown, or -1 if it is interior to a subdomain.
  int interface_index(int flux_dof) const { return dof_to_interface_[flux_dof]; }
  /// +1 if the positive axis of interface unknown g points out of subdomain s, -1 otherwise.
  int orientation(int s, int g) const { return interface_[g].lower_sub == s ? 1 : -1; }
  /// Position of interface unknown g inside subdomain s.
  int local_position(int s, int g) const {
    return interface_[g].lower_sub == s ? interface_[g].lower_pos : interface_[g].upper_pos;
  }

  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<int>& faces_of(int s) const { return sub_faces_[s]; }
  /// Index of the face shared by i and j, or -1 if they are not adjacent.
  int face_between(int i, int j) const;
  int num_face_components() const;
  int max_faces_per_subdomain() const;

 private:
  std::vector<int> cell_owner_;
  std::vector<std::vector<int>> cells_;
  std::vector<std::vector<int>> interior_;
  std::vector<std::vector<int>> sub_interface_;
  std::vector<InterfaceDof> interface_;
  std::vector<int> dof_to_interface_;
  std::vector<Face> faces_;
  std::vector<std::vector<int>> sub_faces_;
};

/// Near-equal geometric strips per axis; subdomains numbered x-fastest.
Decomposition regular_partition(const Grid& grid, std::span<const int> splits);

/// Reads `PART <N> <ncells>` followed by one id per cell. Ids are compacted
/// to 0..N-1. A subdomain that is not face-connected is split into its
/// connected pieces and a warning is appended to `warnings`.
Decomposition import_partition(std::istream& in, const Grid& grid, std::vector<std::string>* warnings = nullptr);

/// Same as above from an in-memory id list.
Decomposition partition_from_ids(const Grid& grid, std::span<const int> ids,
                                 std::vector<std::string>* warnings = nullptr);

void write_partition(std::ostream& out, const Decomposition& dec);

/// Interface vector with one block per subdomain (local interface ordering);
/// shared unknowns appear twice.
using BrokenVector = std::vector<Eigen::VectorXd>;

enum class WeightKind { Multiplicity, Stiffness };

/// Weighted averaging E of broken interface vectors. Holds a pointer to the
/// decomposition, which must outlive it.
class WeightOperator {
 public:
  WeightOperator() = default;
  WeightOperator(const Decomposition& dec, WeightKind kind, std::vector<std::array<double, 2>> weights);

  WeightKind kind() const { return kind_; }
  /// (lower-side, upper-side) weights of interface unknown g.
  const std::array<double, 2>& weights(int g) const { return weights_[g]; }
  double weight(int s, int g) const;

  /// Continuous interface vector with value d_i w_i + d_j w_j per unknown.
  Eigen::VectorXd average(const BrokenVector& w) const;
  /// Copies a continuous vector into both subdomain blocks.
  BrokenVector restrict(const Eigen::VectorXd& u) const;
  /// Transpose of `average`: block s receives weight(s,g) * r_g.
  BrokenVector distribute(const Eigen::VectorXd& r) const;
  /// Sum of both copies (transpose of `restrict`).
  Eigen::VectorXd assemble(const BrokenVector& w) const;

  BrokenVector apply_E(const BrokenVector& w) const { return restrict(average(w)); }
  BrokenVector apply_I_minus_E(const BrokenVector& w) const;

  const Decomposition& decomposition() const { return *dec_; }

 private:
  const Decomposition* dec_ = nullptr;
  WeightKind kind_ = WeightKind::Multiplicity;
  std::vector<std::array<double, 2>> weights_;
};

/// Multiplicity: 1/2 per side. Stiffness: d_i / (d_i + d_j) with d_i the
/// diagonal of the subdomain-local flux matrix at that unknown.
WeightOperator build_weights(const Decomposition& dec, const SaddleSystem& system, WeightKind kind);

BrokenVector zeros_like(const Decomposition& dec);

/// True when the permeability is constant inside every subdomain but not
/// across subdomains, the situation in which stiffness weights are advisable.
bool jumps_aligned_with_partition(const Permeability& perm, const Decomposition& dec);

}  // namespace mixbddc
