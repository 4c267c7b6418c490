// Command-line experiment harness: problem generation, fine and multiscale
// solves, corrector decay studies, and convergence studies with CSV output.

#include "netlod/experiments.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

namespace {

using namespace netlod;
namespace fs = std::filesystem;

struct CliOptions {
  ExperimentConfig config;
  std::string problem = "fixed-boundary";
  std::string setup = "basic";
  std::string pair_policy = "all-pairs";
  std::string config_file;
};

void add_common_flags(CLI::App* cmd, CliOptions& opts) {
  cmd->add_option("--problem", opts.problem,
                  "Problem kind: fixed-boundary or displaced-boundary");
  cmd->add_option("--setup", opts.setup,
                  "Setup: basic, random-coefficients or random-structure");
  cmd->add_option("--r", opts.config.r, "Fine network subdivisions per side");
  cmd->add_option("--R", opts.config.coarse_sizes,
                  "Coarse elements per side (repeatable)");
  cmd->add_option("--C", opts.config.patch_constant,
                  "Patch schedule constant in rho(R) = C*log2(R)");
  cmd->add_option("--rho", opts.config.rhos, "Explicit patch radii (repeatable)");
  cmd->add_option("--seed", opts.config.seed, "Random seed");
  cmd->add_option("--out", opts.config.out_dir, "Output directory");
  cmd->add_option("--pair-policy", opts.pair_policy, "Edge pair policy: all-pairs");
  cmd->add_option("--save-basis", opts.config.save_basis,
                  "Write the corrector basis to this coordinate file");
  cmd->add_option("--load-basis", opts.config.load_basis,
                  "Read the corrector basis from this coordinate file");
  cmd->add_option("--config", opts.config_file,
                  "JSON config file mirroring the flags (flags override)");
}

void apply_config_file(const CLI::App* cmd, CliOptions& opts) {
  if (opts.config_file.empty()) return;
  std::ifstream in(opts.config_file);
  if (!in) throw Error("cannot open config file " + opts.config_file);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("config file " + opts.config_file + ": " + e.what());
  }
  const auto unset = [&](const std::string& flag) {
    const CLI::Option* opt = cmd->get_option_no_throw("--" + flag);
    return opt != nullptr && opt->count() == 0;
  };
  if (j.contains("problem") && unset("problem")) opts.problem = j["problem"];
  if (j.contains("setup") && unset("setup")) opts.setup = j["setup"];
  if (j.contains("r") && unset("r")) opts.config.r = j["r"];
  if (j.contains("R") && unset("R")) {
    opts.config.coarse_sizes = j["R"].get<std::vector<int>>();
  }
  if (j.contains("C") && unset("C")) opts.config.patch_constant = j["C"];
  if (j.contains("rho") && unset("rho")) {
    opts.config.rhos = j["rho"].get<std::vector<double>>();
  }
  if (j.contains("seed") && unset("seed")) opts.config.seed = j["seed"];
  if (j.contains("out") && unset("out")) opts.config.out_dir = j["out"];
  if (j.contains("pair_policy") && unset("pair-policy")) {
    opts.pair_policy = j["pair_policy"];
  }
  if (j.contains("save_basis") && unset("save-basis")) {
    opts.config.save_basis = j["save_basis"];
  }
  if (j.contains("load_basis") && unset("load-basis")) {
    opts.config.load_basis = j["load_basis"];
  }
}

void finalize(const CLI::App* cmd, CliOptions& opts) {
  apply_config_file(cmd, opts);
  opts.config.problem = problem_from_string(opts.problem);
  opts.config.setup = setup_from_string(opts.setup);
  if (opts.pair_policy != "all-pairs") {
    throw Error("unknown pair policy '" + opts.pair_policy + "'");
  }
  opts.config.pair_policy = PairPolicy::AllPairs;
  opts.config.validate();
  fs::create_directories(opts.config.out_dir);
}

fs::path out_path(const CliOptions& opts, const std::string& name) {
  return fs::path(opts.config.out_dir) / name;
}

void write_solution(const Vector& u, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string());
  out << "dof,value\n";
  for (Index k = 0; k < u.size(); ++k) {
    out << k << "," << format_double(u[k]) << "\n";
  }
}

int cmd_generate(CliOptions& opts) {
  const Problem prob = make_problem(opts.config);
  NetworkBundle bundle{prob.net, prob.edge_attrs, prob.pair_attrs, prob.bc};
  const fs::path path = out_path(opts, "network.json");
  save_network(bundle, path.string());
  std::cout << "wrote " << path.string() << " (" << prob.net.num_nodes() << " nodes, "
            << prob.net.num_edges() << " edges, " << prob.net.num_pairs()
            << " pairs, " << prob.bc.fixed.size() << " fixed dofs)\n";
  return 0;
}

int cmd_solve_full(CliOptions& opts) {
  const Problem prob = make_problem(opts.config);
  const Solution sol = solve_full(prob.K, prob.F, prob.bc);
  const fs::path path = out_path(opts, "solution_full.csv");
  write_solution(sol.u, path);
  std::cout << "wrote " << path.string()
            << " energy_norm=" << format_double(energy_norm(prob.K, sol.u))
            << " l2_norm=" << format_double(l2_norm(sol.u)) << "\n";
  return 0;
}

int cmd_solve_lod(CliOptions& opts) {
  const Problem prob = make_problem(opts.config);
  const int R = opts.config.coarse_sizes.front();
  const double rho =
      opts.config.rhos.empty() ? opts.config.rho_for(R) : opts.config.rhos.front();

  const CoarseGrid grid = build_grid(R, prob.net, prob.bc);
  const CoarseOperators ops = interpolate_basis(grid, prob.net);
  const ElementSplit split =
      split_elements(prob.net, prob.edge_attrs, prob.pair_attrs, grid);
  const PatchIndex patches = build_patches(grid, prob.net, ops, prob.bc, rho);

  CorrectorSet correctors;
  if (!opts.config.load_basis.empty()) {
    correctors.columns = read_coordinates(opts.config.load_basis);
    if (correctors.columns.rows() != prob.net.num_dofs() ||
        correctors.columns.cols() != grid.num_dofs()) {
      throw Error("loaded basis has wrong shape for this configuration");
    }
    correctors.computed.assign(static_cast<size_t>(grid.num_dofs()), 1);
  } else {
    std::vector<Index> wanted(grid.free_coarse.begin(), grid.free_coarse.end());
    if (opts.config.problem == ProblemKind::DisplacedBoundary) {
      const Vector alpha = fit_boundary_coeffs(ops, prob.bc);
      for (Index i = 0; i < alpha.size(); ++i) {
        if (alpha[i] != 0.0 && grid.free_coarse.position(i) < 0) wanted.push_back(i);
      }
    }
    correctors = build_correctors(prob.K, split, grid, ops, patches, wanted);
  }
  if (!opts.config.save_basis.empty()) {
    write_coordinates(correctors.columns, opts.config.save_basis);
    std::cout << "wrote corrector basis to " << opts.config.save_basis << "\n";
  }

  const MultiscaleBasis basis = build_basis(ops, grid, std::move(correctors));
  const Solution sol = opts.config.problem == ProblemKind::FixedBoundary
                           ? solve_multiscale(prob.K, prob.F, basis)
                           : solve_displaced(prob.K, prob.bc, basis, ops);
  const fs::path path = out_path(opts, "solution_lod.csv");
  write_solution(sol.u, path);

  const Solution reference = solve_full(prob.K, prob.F, prob.bc);
  const Vector diff = reference.u - sol.u;
  const double en_ref = energy_norm(prob.K, reference.u);
  const double l2_ref = l2_norm(reference.u);
  std::cout << "wrote " << path.string() << " R=" << R << " rho=" << rho
            << " rel_energy_error="
            << format_double(en_ref > 0 ? energy_norm(prob.K, diff) / en_ref : 0.0)
            << " rel_l2_error="
            << format_double(l2_ref > 0 ? l2_norm(diff) / l2_ref : 0.0) << "\n";
  return 0;
}

int cmd_decay(CliOptions& opts) {
  const std::vector<DecayPoint> points = run_decay(opts.config);
  const fs::path path = out_path(opts, "decay.csv");
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string());
  write_decay_csv(points, out);
  std::cout << "wrote " << path.string() << " (" << points.size() << " radii)\n";
  return 0;
}

int cmd_convergence(CliOptions& opts) {
  const std::vector<ConvergenceRow> rows = run_convergence(opts.config);
  const fs::path path = out_path(opts, "convergence.csv");
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string());
  write_convergence_csv(rows, out);
  std::cout << "wrote " << path.string() << " (" << rows.size() << " coarse sizes)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale solver for discrete networks"};
  app.require_subcommand(1);

  CliOptions opts;
  CLI::App* generate = app.add_subcommand("generate", "Generate and save a problem network");
  CLI::App* solve_full_cmd = app.add_subcommand("solve-full", "Fine-scale reference solve");
  CLI::App* solve_lod_cmd = app.add_subcommand("solve-lod", "Localized multiscale solve");
  CLI::App* decay = app.add_subcommand("decay", "Corrector decay study");
  CLI::App* convergence = app.add_subcommand("convergence", "Convergence study");
  for (CLI::App* cmd : {generate, solve_full_cmd, solve_lod_cmd, decay, convergence}) {
    add_common_flags(cmd, opts);
  }

  CLI11_PARSE(app, argc, argv);
  try {
    CLI::App* active = app.get_subcommands().front();
    finalize(active, opts);
    if (active == generate) return cmd_generate(opts);
    if (active == solve_full_cmd) return cmd_solve_full(opts);
    if (active == solve_lod_cmd) return cmd_solve_lod(opts);
    if (active == decay) return cmd_decay(opts);
    return cmd_convergence(opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
