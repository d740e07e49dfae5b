#include "mixbddc/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>

#include "mixbddc/error.hpp"

namespace mixbddc {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

PermField read_perm(std::istream& in) {
  std::string tag;
  PermField field;
  if (!(in >> tag) || tag != "PERM") throw Error(ErrorKind::FormatError, "permeability file must start with PERM");
  if (!(in >> field.dim) || (field.dim != 2 && field.dim != 3))
    throw Error(ErrorKind::FormatError, "permeability dimension must be 2 or 3");
  for (int a = 0; a < field.dim; ++a)
    if (!(in >> field.counts[a]) || field.counts[a] < 1)
      throw Error(ErrorKind::FormatError, "bad grid size in permeability header");
  const long long n = static_cast<long long>(field.counts[0]) * field.counts[1] * field.counts[2] * field.dim;
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n));
  double v = 0.0;
  while (static_cast<long long>(values.size()) < n && in >> v) values.push_back(v);
  if (static_cast<long long>(values.size()) != n) {
    std::ostringstream msg;
    msg << "expected " << n << " permeability values, got " << values.size();
    throw Error(ErrorKind::FormatError, msg.str());
  }
  if (in >> tag) throw Error(ErrorKind::FormatError, "trailing data after permeability values");
  field.perm = Permeability(field.dim, std::move(values));
  return field;
}

void write_perm(std::ostream& out, const PermField& field) {
  out << "PERM " << field.dim;
  for (int a = 0; a < field.dim; ++a) out << ' ' << field.counts[a];
  out << '\n';
  const auto values = field.perm.values();
  const int n = field.perm.num_cells();
  for (int c = 0; c < n; ++c) {
    for (int a = 0; a < field.dim; ++a) {
      if (a > 0) out << ' ';
      out << format_double(values[static_cast<std::size_t>(c) * field.dim + a]);
    }
    out << '\n';
  }
}

PermField load_perm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open " + path);
  return read_perm(in);
}

void save_perm(const std::string& path, const PermField& field) {
  std::ostringstream out;
  write_perm(out, field);
  write_file_atomic(path, out.str());
}

PermField convert_spe10(std::istream& raw, const Spe10Slice& slice) {
  const auto& full = Spe10Slice::full;
  const long long cells = static_cast<long long>(full[0]) * full[1] * full[2];
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(3 * cells));
  double v = 0.0;
  while (raw >> v) values.push_back(v);
  if (!raw.eof()) throw Error(ErrorKind::FormatError, "unreadable value in SPE10 file");
  if (static_cast<long long>(values.size()) != 3 * cells) {
    std::ostringstream msg;
    msg << "expected " << 3 * cells << " values, got " << values.size();
    throw Error(ErrorKind::FormatError, msg.str());
  }
  PermField field;
  std::array<int, 3> offset = slice.offset;
  std::array<int, 3> size = slice.size;
  if (slice.layer) {
    if (*slice.layer < 1 || *slice.layer > full[2]) throw Error(ErrorKind::InvalidArgument, "layer out of range");
    field.dim = 2;
    offset = {0, 0, *slice.layer - 1};
    size = {full[0], full[1], 1};
  } else {
    field.dim = 3;
  }
  for (int a = 0; a < 3; ++a)
    if (size[a] < 1 || offset[a] < 0 || offset[a] + size[a] > full[a])
      throw Error(ErrorKind::InvalidArgument, "slice exceeds the 60x220x85 grid");
  field.counts = {size[0], size[1], field.dim == 3 ? size[2] : 1};
  std::vector<double> k;
  k.reserve(static_cast<std::size_t>(size[0]) * size[1] * size[2] * field.dim);
  for (int z = 0; z < size[2]; ++z)
    for (int y = 0; y < size[1]; ++y)
      for (int x = 0; x < size[0]; ++x) {
        const long long c = (offset[0] + x) + static_cast<long long>(full[0]) * ((offset[1] + y) + full[1] * (offset[2] + z));
        for (int a = 0; a < field.dim; ++a) k.push_back(values[static_cast<std::size_t>(a * cells + c)]);
      }
  field.perm = Permeability(field.dim, std::move(k));
  return field;
}

namespace {

// Unit-variance Gaussian random field sampled at cell centres, from a sum of
// random cosines with a Gaussian spectrum.
std::vector<double> gaussian_field(int dim, std::array<int, 3> n, double correlation, std::mt19937_64& rng) {
  constexpr int modes = 128;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<std::array<double, 4>> wave(modes);
  for (auto& w : wave) {
    for (int a = 0; a < 3; ++a) w[a] = a < dim ? normal(rng) / correlation : 0.0;
    w[3] = phase(rng);
  }
  const std::size_t total = static_cast<std::size_t>(n[0]) * n[1] * n[2];
  std::vector<double> g(total);
  for (int z = 0; z < n[2]; ++z)
    for (int y = 0; y < n[1]; ++y)
      for (int x = 0; x < n[0]; ++x) {
        double s = 0.0;
        for (const auto& w : wave) s += std::cos(w[0] * (x + 0.5) + w[1] * (y + 0.5) + w[2] * (z + 0.5) + w[3]);
        g[x + static_cast<std::size_t>(n[0]) * (y + static_cast<std::size_t>(n[1]) * z)] = s;
      }
  double mean = 0.0;
  for (double v : g) mean += v;
  mean /= static_cast<double>(total);
  double var = 0.0;
  for (double v : g) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(total));
  for (double& v : g) v = sd > 0.0 ? (v - mean) / sd : 0.0;
  return g;
}

}  // namespace

PermField synthetic_field(int dim, std::array<int, 3> counts, const FieldParams& params) {
  if (dim != 2 && dim != 3) throw Error(ErrorKind::InvalidArgument, "dimension must be 2 or 3");
  PermField field;
  field.dim = dim;
  field.counts = counts;
  if (dim == 2) field.counts[2] = 1;
  const std::array<int, 3>& n = field.counts;
  for (int a = 0; a < 3; ++a)
    if (n[a] < 1) throw Error(ErrorKind::InvalidArgument, "grid sizes must be positive");
  const std::size_t total = static_cast<std::size_t>(n[0]) * n[1] * n[2];
  std::vector<double> cell(total, params.value);
  std::mt19937_64 rng(params.seed);
  switch (params.kind) {
    case FieldKind::Constant:
      if (!(params.value > 0.0)) throw Error(ErrorKind::InvalidArgument, "permeability must be positive");
      break;
    case FieldKind::Checkerboard: {
      if (!(params.contrast > 0.0)) throw Error(ErrorKind::InvalidArgument, "contrast must be positive");
      for (int a = 0; a < 3; ++a)
        if (params.block[a] < 1) throw Error(ErrorKind::InvalidArgument, "block sizes must be positive");
      for (int z = 0; z < n[2]; ++z)
        for (int y = 0; y < n[1]; ++y)
          for (int x = 0; x < n[0]; ++x) {
            const int parity = (x / params.block[0] + y / params.block[1] + z / params.block[2]) % 2;
            cell[x + static_cast<std::size_t>(n[0]) * (y + static_cast<std::size_t>(n[1]) * z)] =
                parity == 0 ? 1.0 : params.contrast;
          }
      break;
    }
    case FieldKind::LogUniform: {
      std::uniform_real_distribution<double> u(-params.orders / 2.0, params.orders / 2.0);
      for (double& v : cell) v = std::pow(10.0, u(rng));
      break;
    }
    case FieldKind::Smooth: {
      const auto g = gaussian_field(dim, n, params.correlation, rng);
      // about 95% of the cells fall inside the requested decades
      for (std::size_t c = 0; c < total; ++c) cell[c] = std::pow(10.0, g[c] * params.orders / 4.0);
      break;
    }
    case FieldKind::Channelized: {
      const auto noise = gaussian_field(dim, n, 2.0, rng);
      for (std::size_t c = 0; c < total; ++c) cell[c] = params.background_k * std::pow(10.0, 0.5 * noise[c]);
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      for (int ch = 0; ch < params.channels; ++ch) {
        const double x0 = u01(rng) * n[0];
        const double amplitude = (0.1 + 0.2 * u01(rng)) * n[0];
        const double wavelength = (0.3 + 0.5 * u01(rng)) * n[1];
        const double phi = 2.0 * std::numbers::pi * u01(rng);
        const int z0 = static_cast<int>(u01(rng) * n[2]);
        const int z1 = std::min(n[2], z0 + std::max(1, n[2] / 3));
        for (int z = dim == 3 ? z0 : 0; z < (dim == 3 ? z1 : 1); ++z)
          for (int y = 0; y < n[1]; ++y) {
            const double centre = x0 + amplitude * std::sin(2.0 * std::numbers::pi * y / wavelength + phi);
            for (int x = 0; x < n[0]; ++x)
              if (std::abs(x + 0.5 - centre) <= 0.5 * params.channel_width)
                cell[x + static_cast<std::size_t>(n[0]) * (y + static_cast<std::size_t>(n[1]) * z)] =
                    params.channel_k * std::pow(10.0, 0.25 * noise[x + static_cast<std::size_t>(n[0]) *
                                                                           (y + static_cast<std::size_t>(n[1]) * z)]);
          }
      }
      break;
    }
  }
  std::vector<double> k;
  k.reserve(total * dim);
  for (double v : cell)
    for (int a = 0; a < dim; ++a) k.push_back(v);
  field.perm = Permeability(dim, std::move(k));
  return field;
}

std::vector<int> random_partition(const Grid& grid, int parts, std::uint64_t seed) {
  const int n = grid.num_cells();
  if (parts < 1 || parts > n) throw Error(ErrorKind::InvalidArgument, "number of parts out of range");
  std::vector<int> cells(n);
  for (int c = 0; c < n; ++c) cells[c] = c;
  std::mt19937_64 rng(seed);
  for (int k = 0; k < parts; ++k) {
    std::uniform_int_distribution<int> pick(k, n - 1);
    std::swap(cells[k], cells[pick(rng)]);
  }
  std::vector<int> owner(n, -1);
  std::queue<int> front;
  for (int k = 0; k < parts; ++k) {
    owner[cells[k]] = k;
    front.push(cells[k]);
  }
  while (!front.empty()) {
    const int c = front.front();
    front.pop();
    const auto ijk = grid.cell_coords(c);
    for (int a = 0; a < grid.dim(); ++a)
      for (int step : {-1, 1}) {
        auto nb = ijk;
        nb[a] += step;
        if (nb[a] < 0 || nb[a] >= grid.count(a)) continue;
        const int d = grid.cell_index(nb[0], nb[1], nb[2]);
        if (owner[d] >= 0) continue;
        owner[d] = owner[c];
        front.push(d);
      }
  }
  return owner;
}

ReportRow make_report_row(const SolveConfig& config, const SolveReport& report) {
  ReportRow row;
  switch (config.constraints) {
    case ConstraintMode::Multiscale:
      row.tau = "ms";
      break;
    case ConstraintMode::Adaptive:
      row.tau = format_double(config.tau);
      row.omega_tilde = report.omega_tilde;
      break;
    case ConstraintMode::Initial:
      row.tau = "inf";
      break;
  }
  row.eps0 = report.eps0;
  row.eps_star = report.eps_star;
  row.n_c = report.n_c;
  row.iterations = report.iterations;
  row.kappa = report.kappa;
  return row;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  out << "tau,eps0,eps_star,omega_tilde,n_c,it,kappa\n";
  for (const auto& r : rows)
    out << r.tau << ',' << opt(r.eps0) << ',' << opt(r.eps_star) << ',' << opt(r.omega_tilde) << ',' << r.n_c << ','
        << r.iterations << ',' << format_double(r.kappa) << '\n';
}

void write_history_csv(std::ostream& out, const std::vector<double>& history) {
  out << "iter,relres\n";
  for (std::size_t k = 0; k < history.size(); ++k) out << k << ',' << format_double(history[k]) << '\n';
}

void write_eigen_csv(std::ostream& out, const std::vector<PairEigen>& spectra) {
  out << "i,j,rank,lambda\n";
  for (const auto& s : spectra)
    for (Eigen::Index k = 0; k < s.lambda.size(); ++k)
      out << s.i << ',' << s.j << ',' << s.rank << ',' << format_double(s.lambda[k]) << '\n';
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + tmp.string());
    out << contents;
    if (!out) throw Error(ErrorKind::InvalidArgument, "write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size())
      throw Error(ErrorKind::InvalidArgument, "not an integer list: " + text);
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorKind::InvalidArgument, "empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size())
      throw Error(ErrorKind::InvalidArgument, "not a number list: " + text);
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorKind::InvalidArgument, "empty list");
  return out;
}

double parse_tau(const std::string& text) {
  if (text == "inf" || text == "Inf" || text == "infinity") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw Error(ErrorKind::InvalidArgument, "tau must be a number or inf");
  if (!(v > 1.0)) throw Error(ErrorKind::InvalidArgument, "tau must exceed 1");
  return v;
}

}  // namespace mixbddc
