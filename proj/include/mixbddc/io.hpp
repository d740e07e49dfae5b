#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mixbddc/grid.hpp"
#include "mixbddc/solver.hpp"

namespace mixbddc {

/// Cell-wise permeability together with the grid dimensions it was written for.
struct PermField {
  int dim = 2;
  std::array<int, 3> counts{1, 1, 1};
  Permeability perm;
};

/// `PERM dim nx ny [nz]` followed by one line `kx ky [kz]` per cell, x-fastest.
PermField read_perm(std::istream& in);
/// Shortest round-trip decimal form, so read/write cycles are byte-identical.
void write_perm(std::ostream& out, const PermField& field);
PermField load_perm(const std::string& path);
void save_perm(const std::string& path, const PermField& field);

/// Part of the 60 x 220 x 85 SPE10 model 2 grid: either one layer (2D, the
/// horizontal permeabilities) or a box (3D). Layers are 1-based; box offsets
/// are 0-based.
struct Spe10Slice {
  static constexpr std::array<int, 3> full{60, 220, 85};
  std::optional<int> layer;
  std::array<int, 3> offset{0, 0, 0};
  std::array<int, 3> size{60, 220, 85};
};

/// Reads the raw file (all kx, then all ky, then all kz; x-fastest) and cuts
/// out the slice. Values are copied verbatim.
PermField convert_spe10(std::istream& raw, const Spe10Slice& slice);

enum class FieldKind { Constant, Checkerboard, LogUniform, Smooth, Channelized };

struct FieldParams {
  FieldKind kind = FieldKind::Constant;
  double value = 1.0;                 // constant
  double contrast = 1e6;              // checkerboard: high/low
  std::array<int, 3> block{1, 1, 1};  // checkerboard block size in cells
  double orders = 6.0;                // log-uniform and smooth: decades spanned
  double correlation = 8.0;           // smooth: correlation length in cells
  int channels = 4;                   // channelized: number of channels
  int channel_width = 3;              // channelized: width in cells
  double channel_k = 1e2;             // channelized: channel permeability
  double background_k = 1e-3;         // channelized: median background permeability
  std::uint64_t seed = 42;
};

/// Deterministic given the parameters (including the seed). Isotropic.
PermField synthetic_field(int dim, std::array<int, 3> counts, const FieldParams& params);

/// Irregular partition into `parts` connected subdomains: nearest of random
/// seed cells under a graph metric (breadth-first growth from the seeds).
std::vector<int> random_partition(const Grid& grid, int parts, std::uint64_t seed);

struct ReportRow {
  std::string tau;  // "inf", a number, or "ms"
  std::optional<double> eps0;
  std::optional<double> eps_star;
  std::optional<double> omega_tilde;
  int n_c = 0;
  int iterations = 0;
  double kappa = 0.0;
};

ReportRow make_report_row(const SolveConfig& config, const SolveReport& report);
/// Header `tau,eps0,eps_star,omega_tilde,n_c,it,kappa`; missing values are empty.
void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);
/// Header `iter,relres`.
void write_history_csv(std::ostream& out, const std::vector<double>& history);
/// Header `i,j,rank,lambda`, one line per eigenvalue.
void write_eigen_csv(std::ostream& out, const std::vector<PairEigen>& spectra);

/// Writes to a temporary file next to `path` and renames it into place.
void write_file_atomic(const std::string& path, const std::string& contents);

/// Parses a comma-separated list such as "60,220".
std::vector<int> parse_int_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);
/// "inf" or a number.
double parse_tau(const std::string& text);
std::string format_double(double v);

}  // namespace mixbddc
