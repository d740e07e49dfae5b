#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "mixbddc/error.hpp"
#include "mixbddc/io.hpp"
#include "support.hpp"

using namespace mixbddc;

namespace {

std::vector<double> vals(const PermField& f) { return {f.perm.values().begin(), f.perm.values().end()}; }

int count_lines(const std::string& text) { return static_cast<int>(std::count(text.begin(), text.end(), '\n')); }

// Synthetic raw SPE10 file whose value encodes (component, cell).
const std::string& fake_spe10() {
  static const std::string raw = [] {
    const auto& f = Spe10Slice::full;
    const long long cells = static_cast<long long>(f[0]) * f[1] * f[2];
    std::string out;
    out.reserve(static_cast<std::size_t>(3 * cells * 9));
    for (int a = 0; a < 3; ++a)
      for (long long c = 0; c < cells; ++c) {
        out += std::to_string(a * 10000000LL + c);
        out += (c % 6 == 5) ? '\n' : ' ';
      }
    return out;
  }();
  return raw;
}

bool connected(const Grid& g, const std::vector<int>& owner, int part) {
  std::vector<int> cells;
  for (int c = 0; c < g.num_cells(); ++c)
    if (owner[c] == part) cells.push_back(c);
  if (cells.empty()) return false;
  std::set<int> seen{cells[0]};
  std::vector<int> stack{cells[0]};
  while (!stack.empty()) {
    const int c = stack.back();
    stack.pop_back();
    const auto ijk = g.cell_coords(c);
    for (int a = 0; a < g.dim(); ++a)
      for (int step : {-1, 1}) {
        auto nb = ijk;
        nb[a] += step;
        if (nb[a] < 0 || nb[a] >= g.count(a)) continue;
        const int d = g.cell_index(nb[0], nb[1], nb[2]);
        if (owner[d] == part && seen.insert(d).second) stack.push_back(d);
      }
  }
  return seen.size() == cells.size();
}

}  // namespace

TEST_CASE("permeability files round trip byte for byte") {
  FieldParams p;
  p.kind = FieldKind::LogUniform;
  p.orders = 8;
  const PermField field = synthetic_field(2, {7, 5, 1}, p);
  std::ostringstream a;
  write_perm(a, field);
  std::istringstream in(a.str());
  const PermField back = read_perm(in);
  CHECK(back.dim == 2);
  CHECK(back.counts == field.counts);
  CHECK(vals(back) == vals(field));
  std::ostringstream b;
  write_perm(b, back);
  CHECK(a.str() == b.str());
  CHECK(count_lines(a.str()) == 1 + 35);

  const auto path = std::filesystem::temp_directory_path() / "mixbddc_perm_test.txt";
  save_perm(path.string(), field);
  CHECK(vals(load_perm(path.string())) == vals(field));
  std::filesystem::remove(path);
}

TEST_CASE("malformed permeability files") {
  std::istringstream no_tag("2 1 1\n1 1\n");
  CHECK_THROWS_AS(read_perm(no_tag), Error);
  std::istringstream short_file("PERM 2 2 1\n1 1\n");
  try {
    (void)read_perm(short_file);
    FAIL("expected a format error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FormatError);
    CHECK(std::string(e.what()).find("expected 4") != std::string::npos);
  }
  std::istringstream negative("PERM 2 1 1\n1 -1\n");
  CHECK_THROWS_AS(read_perm(negative), Error);
  std::istringstream extra("PERM 2 1 1\n1 1\n7\n");
  CHECK_THROWS_AS(read_perm(extra), Error);
}

TEST_CASE("SPE10 slices") {
  {
    std::istringstream raw(fake_spe10());
    Spe10Slice s;
    s.layer = 85;
    const PermField f = convert_spe10(raw, s);
    CHECK(f.dim == 2);
    CHECK(f.counts == std::array<int, 3>{60, 220, 1});
    std::ostringstream out;
    write_perm(out, f);
    CHECK(count_lines(out.str()) == 1 + 13200);
    // first cell of layer 85, then the y component of the second cell
    const long long base = 84LL * 60 * 220;
    CHECK(vals(f)[0] == static_cast<double>(base));
    CHECK(vals(f)[3] == static_cast<double>(10000000LL + base + 1));
  }
  {
    std::istringstream raw(fake_spe10());
    Spe10Slice s;
    s.offset = {0, 0, 55};
    s.size = {30, 30, 30};
    const PermField f = convert_spe10(raw, s);
    CHECK(f.dim == 3);
    std::ostringstream out;
    write_perm(out, f);
    CHECK(count_lines(out.str()) == 1 + 27000);
    const long long first = 55LL * 60 * 220;
    CHECK(vals(f)[2] == static_cast<double>(20000000LL + first));
    // last cell of the box: (29, 29, 84)
    const long long last = 29 + 60LL * (29 + 220LL * 84);
    CHECK(vals(f).back() == static_cast<double>(20000000LL + last));
  }
  {
    std::istringstream raw("1 2 3\n");
    try {
      (void)convert_spe10(raw, Spe10Slice{});
      FAIL("expected a format error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::FormatError);
      CHECK(std::string(e.what()).find("expected 3366000 values, got 3") != std::string::npos);
    }
  }
  {
    std::istringstream raw(fake_spe10());
    Spe10Slice s;
    s.offset = {40, 0, 0};
    s.size = {30, 30, 30};
    CHECK_THROWS_AS(convert_spe10(raw, s), Error);
  }
}

TEST_CASE("synthetic fields") {
  for (FieldKind kind :
       {FieldKind::Constant, FieldKind::Checkerboard, FieldKind::LogUniform, FieldKind::Smooth, FieldKind::Channelized}) {
    FieldParams p;
    p.kind = kind;
    p.seed = 5;
    const PermField a = synthetic_field(2, {24, 16, 1}, p);
    const PermField b = synthetic_field(2, {24, 16, 1}, p);
    CHECK(vals(a) == vals(b));
    CHECK(vals(a).size() == 2 * 24 * 16);
    const auto va = vals(a);
    for (double v : va) CHECK(v > 0.0);
    // isotropic
    for (std::size_t c = 0; c < va.size(); c += 2) CHECK(va[c] == va[c + 1]);
  }
  FieldParams chk;
  chk.kind = FieldKind::Checkerboard;
  chk.contrast = 1e6;
  chk.block = {2, 2, 1};
  const auto v = vals(synthetic_field(2, {4, 4, 1}, chk));
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  CHECK(*hi / *lo == doctest::Approx(1e6));

  FieldParams lu;
  lu.kind = FieldKind::LogUniform;
  lu.orders = 6;
  const auto w = vals(synthetic_field(2, {30, 30, 1}, lu));
  const auto [wl, wh] = std::minmax_element(w.begin(), w.end());
  CHECK(std::log10(*wh / *wl) <= 6.0 + 1e-12);
  CHECK(std::log10(*wh / *wl) >= 5.0);

  FieldParams other = lu;
  other.seed = 43;
  CHECK(vals(synthetic_field(2, {30, 30, 1}, other)) != w);
}

TEST_CASE("random partitions are connected and deterministic") {
  const Grid g = testing::grid2(20, 15);
  const auto a = random_partition(g, 9, 3);
  CHECK(a == random_partition(g, 9, 3));
  std::set<int> ids(a.begin(), a.end());
  CHECK(ids.size() == 9);
  for (int p = 0; p < 9; ++p) CHECK(connected(g, a, p));
  std::vector<std::string> warnings;
  const Decomposition dec = partition_from_ids(g, a, &warnings);
  CHECK(warnings.empty());
  CHECK(dec.num_subdomains() == 9);
  CHECK_THROWS_AS(random_partition(g, 0, 1), Error);
}

TEST_CASE("report formats") {
  SolveConfig cfg;
  SolveReport rep;
  rep.n_c = 33;
  rep.iterations = 8;
  rep.kappa = 2.5;
  rep.eps0 = 0.25;
  std::vector<ReportRow> rows{make_report_row(cfg, rep)};
  cfg.constraints = ConstraintMode::Adaptive;
  cfg.tau = 10.0;
  rep.omega_tilde = 9.5;
  rows.push_back(make_report_row(cfg, rep));
  cfg.constraints = ConstraintMode::Multiscale;
  rows.push_back(make_report_row(cfg, rep));
  std::ostringstream out;
  write_report_csv(out, rows);
  CHECK(out.str() ==
        "tau,eps0,eps_star,omega_tilde,n_c,it,kappa\n"
        "inf,0.25,,,33,8,2.5\n"
        "10,0.25,,9.5,33,8,2.5\n"
        "ms,0.25,,,33,8,2.5\n");

  std::ostringstream hist;
  write_history_csv(hist, {1.0, 0.5});
  CHECK(hist.str() == "iter,relres\n0,1\n1,0.5\n");

  PairEigen e;
  e.i = 1;
  e.j = 2;
  e.rank = 3;
  e.lambda = Eigen::Vector2d(4.0, 0.5);
  std::ostringstream eig;
  write_eigen_csv(eig, {e});
  CHECK(eig.str() == "i,j,rank,lambda\n1,2,3,4\n1,2,3,0.5\n");
}

TEST_CASE("list and tau parsing") {
  CHECK(parse_int_list("60,220") == std::vector<int>{60, 220});
  CHECK(parse_double_list("1,0.5,2e3") == std::vector<double>{1.0, 0.5, 2000.0});
  CHECK_THROWS_AS(parse_int_list("6,x"), Error);
  CHECK(std::isinf(parse_tau("inf")));
  CHECK(parse_tau("10") == 10.0);
  CHECK_THROWS_WITH(parse_tau("0.5"), doctest::Contains("tau must exceed 1"));
  CHECK_THROWS_AS(parse_tau("abc"), Error);
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("atomic writes replace the file") {
  const auto path = std::filesystem::temp_directory_path() / "mixbddc_atomic_test.csv";
  write_file_atomic(path.string(), "a\n");
  write_file_atomic(path.string(), "b\n");
  std::ifstream in(path);
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(s == "b\n");
  std::filesystem::remove(path);
}
