#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mixbddc/io.hpp"
#include "mixbddc/oracle.hpp"
#include "mixbddc/solver.hpp"

using namespace mixbddc;

namespace {

struct ProblemOptions {
  std::string grid;
  std::string cell_size;
  std::string perm;
  std::string partition;
  std::string splits;
  std::string scaling = "multiplicity";
  std::string tau = "inf";
  std::string constraints = "initial";
  double tol = 1e-6;
  int maxit = 10000;
  int src_cell = 0;
  int sink_cell = -1;
  double well_strength = 1.0;
  bool serial = false;
  bool lumped = false;
};

void add_problem_options(CLI::App* app, ProblemOptions& o) {
  app->add_option("--grid", o.grid, "cell counts nx,ny[,nz] (taken from --perm when omitted)");
  app->add_option("--cell-size", o.cell_size, "cell sizes hx,hy[,hz] (default 1)");
  app->add_option("--perm", o.perm, "PERM file (default: k = 1)");
  auto* part = app->add_option("--partition", o.partition, "PART file");
  auto* splits = app->add_option("--splits", o.splits, "regular partition sx,sy[,sz]");
  part->excludes(splits);
  app->add_option("--scaling", o.scaling, "multiplicity|stiffness")->check(CLI::IsMember({"multiplicity", "stiffness"}));
  app->add_option("--tau", o.tau, "target condition number T or inf; a comma list runs a sweep");
  app->add_option("--constraints", o.constraints, "initial|adaptive|multiscale")
      ->check(CLI::IsMember({"initial", "adaptive", "multiscale"}));
  app->add_option("--tol", o.tol, "relative residual tolerance");
  app->add_option("--maxit", o.maxit, "maximum CG iterations");
  app->add_option("--src-cell", o.src_cell, "source cell index");
  app->add_option("--sink-cell", o.sink_cell, "sink cell index (default: last cell)");
  app->add_option("--well-strength", o.well_strength, "well rate");
  app->add_flag("--serial", o.serial, "disable thread parallelism");
  app->add_flag("--lumped", o.lumped, "lumped flux mass matrix");
}

struct Problem {
  SaddleSystem system;
  Decomposition dec;
  std::vector<std::string> warnings;
};

Problem build_problem(const ProblemOptions& o) {
  std::optional<PermField> field;
  if (!o.perm.empty()) field = load_perm(o.perm);
  std::vector<int> counts;
  if (!o.grid.empty()) {
    counts = parse_int_list(o.grid);
  } else if (field) {
    counts.assign(field->counts.begin(), field->counts.begin() + field->dim);
  } else {
    throw Error(ErrorKind::InvalidArgument, "either --grid or --perm is required");
  }
  const int dim = static_cast<int>(counts.size());
  std::vector<double> sizes(dim, 1.0);
  if (!o.cell_size.empty()) sizes = parse_double_list(o.cell_size);
  if (static_cast<int>(sizes.size()) != dim) throw Error(ErrorKind::InvalidArgument, "--cell-size must match --grid");
  const Grid grid = build_grid(dim, counts, sizes);
  Permeability perm = Permeability::constant(grid, 1.0);
  if (field) {
    if (field->dim != dim) throw Error(ErrorKind::InvalidArgument, "permeability file dimension differs from --grid");
    for (int a = 0; a < dim; ++a)
      if (field->counts[a] != counts[a]) throw Error(ErrorKind::InvalidArgument, "permeability file size differs from --grid");
    perm = field->perm;
  }
  Problem p;
  if (!o.partition.empty()) {
    std::ifstream in(o.partition);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open " + o.partition);
    p.dec = import_partition(in, grid, &p.warnings);
  } else if (!o.splits.empty()) {
    const auto s = parse_int_list(o.splits);
    if (static_cast<int>(s.size()) != dim) throw Error(ErrorKind::InvalidArgument, "--splits must match the dimension");
    p.dec = regular_partition(grid, s);
  } else {
    throw Error(ErrorKind::InvalidArgument, "either --partition or --splits is required");
  }
  Wells wells;
  wells.source_cell = o.src_cell;
  wells.sink_cell = o.sink_cell;
  wells.strength = o.well_strength;
  const SaddleSystem raw =
      assemble_system(grid, perm, wells, o.lumped ? MassMatrixKind::Lumped : MassMatrixKind::Exact);
  p.system = rescale(raw, p.dec);
  return p;
}

SolveConfig make_config(const ProblemOptions& o, double tau) {
  SolveConfig c;
  c.tau = tau;
  c.scaling = o.scaling == "stiffness" ? WeightKind::Stiffness : WeightKind::Multiplicity;
  c.tol = o.tol;
  c.max_iterations = o.maxit;
  c.exec = o.serial ? Execution::Serial : Execution::Parallel;
  if (o.constraints == "adaptive") c.constraints = ConstraintMode::Adaptive;
  if (o.constraints == "multiscale") c.constraints = ConstraintMode::Multiscale;
  return c;
}

std::vector<double> parse_taus(const std::string& text) {
  std::vector<double> taus;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) taus.push_back(parse_tau(item));
  if (taus.empty()) throw Error(ErrorKind::InvalidArgument, "tau must exceed 1");
  return taus;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file_atomic(path, text);
  }
}

int run_solve(const ProblemOptions& o, const std::string& report_path, const std::string& history_path,
              const std::string& spectrum_path, bool with_errors) {
  const auto taus = parse_taus(o.tau);
  Problem p = build_problem(o);
  for (const auto& w : p.warnings) std::cerr << "warning: " << w << '\n';
  std::optional<DirectSolution> exact;
  if (with_errors) exact = direct_solve(p.system);
  std::vector<ReportRow> rows;
  bool all_converged = true;
  std::string history;
  std::string spectrum;
  for (double tau : taus) {
    const SolveConfig config = make_config(o, tau);
    const BddcSetup setup(p.system, p.dec, config);
    SolveReport rep;
    try {
      rep = solve(setup, exact ? &exact->u : nullptr);
    } catch (const NonConvergence& e) {
      rep = e.report();
      all_converged = false;
      std::cerr << "error: " << e.what() << '\n';
    }
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
    rows.push_back(make_report_row(config, rep));
    std::ostringstream h;
    write_history_csv(h, rep.history);
    history = h.str();
    if (!spectrum_path.empty()) {
      const Eigen::VectorXd ev = preconditioned_spectrum(setup);
      std::ostringstream s;
      s << "tau,index,lambda\n";
      for (Eigen::Index k = ev.size() - 1; k >= 0; --k)
        s << rows.back().tau << ',' << ev.size() - 1 - k << ',' << format_double(ev[k]) << '\n';
      spectrum += spectrum.empty() ? s.str() : s.str().substr(s.str().find('\n') + 1);
    }
  }
  std::ostringstream r;
  write_report_csv(r, rows);
  emit(report_path, r.str());
  if (!history_path.empty()) emit(history_path, history);
  if (!spectrum_path.empty()) emit(spectrum_path, spectrum);
  return all_converged ? 0 : 2;
}

int run_eigs(const ProblemOptions& o, const std::string& out_path) {
  Problem p = build_problem(o);
  for (const auto& w : p.warnings) std::cerr << "warning: " << w << '\n';
  SolveConfig config = make_config(o, parse_taus(o.tau).front());
  config.validate();
  auto subs = build_subdomains(p.system, p.dec, config.exec);
  const WeightOperator weights = build_weights(p.dec, p.system, config.scaling);
  ConstraintSet constraints = initial_constraints(p.dec);
  const AdaptiveResult res =
      enrich_adaptive(p.dec, subs, weights, constraints, config.tau, config.eigen, config.exec);
  std::ostringstream out;
  write_eigen_csv(out, res.spectra);
  emit(out_path, out.str());
  std::cerr << "omega_tilde " << format_double(res.omega_tilde) << ", added " << res.added << " constraints\n";
  return 0;
}

int run_oracle_check(const ProblemOptions& o, bool with_spectrum) {
  Problem p = build_problem(o);
  const SolveConfig config = make_config(o, parse_taus(o.tau).front());
  const DirectSolution exact = direct_solve(p.system);
  const BddcSetup setup(p.system, p.dec, config);
  const SolveReport rep = solve(setup, &exact.u);
  std::cout << "metric,value\n";
  std::cout << "flux_rel_error," << format_double((rep.u - exact.u).norm() / exact.u.norm()) << '\n';
  const double pn = exact.p.norm();
  std::cout << "pressure_rel_error," << format_double(pn > 0 ? (rep.p - exact.p).norm() / pn : rep.p.norm()) << '\n';
  std::cout << "iterations," << rep.iterations << '\n';
  std::cout << "kappa," << format_double(rep.kappa) << '\n';
  std::cout << "conservation_defect," << format_double(rep.conservation_defect) << '\n';
  if (with_spectrum) {
    const Eigen::VectorXd ev = preconditioned_spectrum(setup);
    std::cout << "spectrum_min," << format_double(ev.minCoeff()) << '\n';
    std::cout << "spectrum_max," << format_double(ev.maxCoeff()) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Balancing domain decomposition solver for mixed Darcy flow"};
  app.require_subcommand(1);

  ProblemOptions solve_opt;
  std::string report_path;
  std::string history_path;
  std::string spectrum_path;
  bool with_errors = false;
  auto* solve_cmd = app.add_subcommand("solve", "solve a Darcy problem and write the report CSV");
  add_problem_options(solve_cmd, solve_opt);
  solve_cmd->add_option("--report", report_path, "report CSV (default: stdout)");
  solve_cmd->add_option("--history", history_path, "residual history CSV of the last run");
  solve_cmd->add_option("--spectrum", spectrum_path, "dense preconditioned spectrum CSV (small problems)");
  solve_cmd->add_flag("--errors", with_errors, "fill eps0/eps_star from a direct solve");

  ProblemOptions eig_opt;
  std::string eig_out;
  auto* eig_cmd = app.add_subcommand("eigs-report", "per-pair generalized eigenvalues as CSV");
  add_problem_options(eig_cmd, eig_opt);
  eig_cmd->add_option("--spectrum", eig_out, "output CSV (default: stdout)");

  std::string raw_path;
  std::string conv_out;
  int layer = 0;
  std::string box;
  auto* conv_cmd = app.add_subcommand("convert-spe10", "cut a layer or a box out of the SPE10 model 2 file");
  conv_cmd->add_option("--raw", raw_path, "raw permeability file")->required();
  auto* layer_opt = conv_cmd->add_option("--layer", layer, "layer 1..85 (2D)");
  auto* box_opt = conv_cmd->add_option("--box", box, "x0,y0,z0,nx,ny,nz (0-based offsets, 3D)");
  layer_opt->excludes(box_opt);
  conv_cmd->add_option("--out", conv_out, "PERM file")->required();

  std::string kind = "constant";
  std::string syn_grid;
  std::string syn_out;
  std::string block;
  FieldParams params;
  int parts = 0;
  std::string part_out;
  auto* syn_cmd = app.add_subcommand("synthetic", "generate a permeability field");
  syn_cmd->add_option("--kind", kind, "constant|checkerboard|log-uniform|smooth|channelized")
      ->check(CLI::IsMember({"constant", "checkerboard", "log-uniform", "smooth", "channelized"}));
  syn_cmd->add_option("--grid", syn_grid, "nx,ny[,nz]")->required();
  syn_cmd->add_option("--value", params.value, "constant value");
  syn_cmd->add_option("--contrast", params.contrast, "checkerboard contrast");
  syn_cmd->add_option("--block", block, "checkerboard block size bx,by[,bz]");
  syn_cmd->add_option("--orders", params.orders, "decades spanned by random fields");
  syn_cmd->add_option("--correlation", params.correlation, "correlation length of smooth fields (cells)");
  syn_cmd->add_option("--channels", params.channels, "number of channels");
  syn_cmd->add_option("--seed", params.seed, "random seed");
  syn_cmd->add_option("--out", syn_out, "PERM file")->required();
  syn_cmd->add_option("--parts", parts, "also write a random connected partition with this many parts");
  syn_cmd->add_option("--partition-out", part_out, "PART file for --parts");

  ProblemOptions oracle_opt;
  bool oracle_spectrum = false;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "compare the solver with a direct solve");
  add_problem_options(oracle_cmd, oracle_opt);
  oracle_cmd->add_flag("--spectrum", oracle_spectrum, "also report the dense preconditioned spectrum bounds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*solve_cmd) return run_solve(solve_opt, report_path, history_path, spectrum_path, with_errors);
    if (*eig_cmd) return run_eigs(eig_opt, eig_out);
    if (*oracle_cmd) return run_oracle_check(oracle_opt, oracle_spectrum);
    if (*conv_cmd) {
      std::ifstream in(raw_path);
      if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open " + raw_path);
      Spe10Slice slice;
      if (*layer_opt) {
        slice.layer = layer;
      } else if (*box_opt) {
        const auto b = parse_int_list(box);
        if (b.size() != 6) throw Error(ErrorKind::InvalidArgument, "--box needs six integers");
        slice.offset = {b[0], b[1], b[2]};
        slice.size = {b[3], b[4], b[5]};
      } else {
        throw Error(ErrorKind::InvalidArgument, "either --layer or --box is required");
      }
      save_perm(conv_out, convert_spe10(in, slice));
      return 0;
    }
    if (*syn_cmd) {
      const auto counts = parse_int_list(syn_grid);
      const int dim = static_cast<int>(counts.size());
      if (dim != 2 && dim != 3) throw Error(ErrorKind::InvalidArgument, "--grid needs two or three sizes");
      std::array<int, 3> n{1, 1, 1};
      for (int a = 0; a < dim; ++a) n[a] = counts[a];
      if (kind == "checkerboard") params.kind = FieldKind::Checkerboard;
      if (kind == "log-uniform") params.kind = FieldKind::LogUniform;
      if (kind == "smooth") params.kind = FieldKind::Smooth;
      if (kind == "channelized") params.kind = FieldKind::Channelized;
      if (!block.empty()) {
        const auto b = parse_int_list(block);
        if (static_cast<int>(b.size()) != dim) throw Error(ErrorKind::InvalidArgument, "--block must match --grid");
        for (int a = 0; a < dim; ++a) params.block[a] = b[a];
      }
      save_perm(syn_out, synthetic_field(dim, n, params));
      if (parts > 0) {
        if (part_out.empty()) throw Error(ErrorKind::InvalidArgument, "--parts needs --partition-out");
        const std::vector<double> h(dim, 1.0);
        const Grid grid = build_grid(dim, counts, h);
        const Decomposition dec(grid, random_partition(grid, parts, params.seed));
        std::ostringstream out;
        write_partition(out, dec);
        write_file_atomic(part_out, out.str());
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
