// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code is the number of
// failed criteria.

#include "netlod/experiments.hpp"
#include "support/oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

using namespace netlod;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Setup {
  Problem prob;
  CoarseGrid grid;
  CoarseOperators ops;
  ElementSplit split;
};

Setup build_setup(const ExperimentConfig& config, int R) {
  Setup s{make_problem(config), {}, {}, {}};
  s.grid = build_grid(R, s.prob.net, s.prob.bc);
  s.ops = interpolate_basis(s.grid, s.prob.net);
  s.split = split_elements(s.prob.net, s.prob.edge_attrs, s.prob.pair_attrs, s.grid);
  return s;
}

std::vector<Index> free_list(const CoarseGrid& grid) {
  return std::vector<Index>(grid.free_coarse.begin(), grid.free_coarse.end());
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// 1. Exactness on coarse loads: unlocalized multiscale solution equals the
//    fine solution for loads in the coarse space.
Outcome criterion_coarse_load_exactness() {
  ExperimentConfig config;
  config.r = 32;
  config.coarse_sizes = {4};
  Setup s = build_setup(config, 4);
  const PatchIndex patches = build_patches(s.grid, s.prob.net, s.ops, s.prob.bc, kInf);
  const MultiscaleBasis basis = build_basis(
      s.ops, s.grid,
      build_correctors(s.prob.K, s.split, s.grid, s.ops, patches, free_list(s.grid)));

  oracles::Rng rng(42);
  const Vector a = rng.vector(s.grid.free_coarse.size());
  const Vector F = s.ops.prolongation * a;
  const Solution full = solve_full(s.prob.K, F, s.prob.bc);
  const Solution ms = solve_multiscale(s.prob.K, F, basis);
  const double rel =
      energy_norm(s.prob.K, full.u - ms.u) / energy_norm(s.prob.K, full.u);
  return {rel <= 1e-8, "rel energy error = " + fmt(rel) + " (<= 1e-8)"};
}

// 2. Corrector decay for a central coarse dof.
Outcome criterion_corrector_decay() {
  ExperimentConfig config;
  config.r = 64;
  config.coarse_sizes = {8};
  config.rhos = {1, 2, 3, 4, 5, kInf};
  const std::vector<DecayPoint> points = run_decay(config);

  bool monotone = true;
  for (size_t k = 1; k < points.size(); ++k) {
    monotone = monotone &&
               points[k].rel_energy_error <= points[k - 1].rel_energy_error * 1.05;
  }
  std::vector<double> xs, ys;
  for (const DecayPoint& p : points) {
    if (std::isinf(p.rho)) continue;
    xs.push_back(p.rho);
    ys.push_back(std::log(std::max(p.rel_energy_error, 1e-300)));
  }
  const double slope = fit_slope(xs, ys);
  const double final_error = points.back().rel_energy_error;
  std::ostringstream detail;
  detail << "errors =";
  for (const DecayPoint& p : points) detail << " " << fmt(p.rel_energy_error);
  detail << "; slope = " << fmt(slope) << " (< 0); final = " << fmt(final_error)
         << " (<= 1e-4); monotone(5%) = " << (monotone ? "yes" : "no");
  return {monotone && slope < 0.0 && final_error <= 1e-4, detail.str()};
}

struct SlopeResult {
  double energy = 0.0;
  double l2 = 0.0;
  std::string rows;
  std::vector<ConvergenceRow> data;
};

SlopeResult convergence_slopes(const ExperimentConfig& config) {
  SlopeResult out;
  out.data = run_convergence(config);
  std::vector<double> logH, logE, logL;
  std::ostringstream rows;
  for (const ConvergenceRow& row : out.data) {
    if (row.failed) throw Error("convergence row R=" + std::to_string(row.R) +
                                " failed: " + row.error);
    logH.push_back(std::log2(row.H));
    logE.push_back(std::log2(std::max(row.lod_energy_rel, 1e-300)));
    logL.push_back(std::log2(std::max(row.lod_l2_rel, 1e-300)));
    rows << "\n    R=" << row.R << " energy_rel=" << fmt(row.lod_energy_rel)
         << " l2_rel=" << fmt(row.lod_l2_rel)
         << " fem_energy_rel=" << fmt(row.fem_energy_rel);
  }
  out.energy = fit_slope(logH, logE);
  out.l2 = fit_slope(logH, logL);
  out.rows = rows.str();
  return out;
}

// 3. Convergence rates for the basic fixed-boundary problem.
Outcome criterion_convergence_basic() {
  ExperimentConfig config;
  config.r = 128;
  config.coarse_sizes = {4, 8, 16, 32};
  config.patch_constant = 1.0;
  const SlopeResult s = convergence_slopes(config);
  return {s.energy >= 0.9 && s.l2 >= 1.8,
          "energy slope = " + fmt(s.energy) + " (>= 0.9), l2 slope = " + fmt(s.l2) +
              " (>= 1.8)" + s.rows};
}

// 4. LOD beats the FEM baseline on rough coefficients.
Outcome criterion_lod_beats_fem() {
  ExperimentConfig config;
  config.r = 128;
  config.coarse_sizes = {4, 8, 16, 32};
  config.patch_constant = 1.0;
  config.setup = SetupKind::RandomCoefficients;
  config.seed = 7;
  const SlopeResult s = convergence_slopes(config);
  bool pass = true;
  for (const ConvergenceRow& row : s.data) {
    if (row.R >= 8) pass = pass && row.lod_energy_rel < row.fem_energy_rel;
  }
  return {pass, std::string("LOD < FEM at every R >= 8: ") + (pass ? "yes" : "no") +
                    s.rows};
}

// 5. Convergence rates on the randomly perturbed structure.
Outcome criterion_random_structure() {
  ExperimentConfig config;
  config.r = 128;
  config.coarse_sizes = {4, 8, 16, 32};
  config.patch_constant = 1.0;
  config.setup = SetupKind::RandomStructure;
  config.seed = 11;
  const SlopeResult s = convergence_slopes(config);
  return {s.energy >= 0.9 && s.l2 >= 1.8,
          "energy slope = " + fmt(s.energy) + " (>= 0.9), l2 slope = " + fmt(s.l2) +
              " (>= 1.8)" + s.rows};
}

// 6. Non-zero Dirichlet correction reproduces the fine solution.
Outcome criterion_displaced_correction() {
  ExperimentConfig config;
  config.problem = ProblemKind::DisplacedBoundary;
  config.r = 32;
  config.coarse_sizes = {4};
  Setup s = build_setup(config, 4);
  const PatchIndex patches = build_patches(s.grid, s.prob.net, s.ops, s.prob.bc, kInf);
  const Vector alpha = fit_boundary_coeffs(s.ops, s.prob.bc);
  std::vector<Index> wanted = free_list(s.grid);
  for (Index i = 0; i < alpha.size(); ++i) {
    if (alpha[i] != 0.0 && !s.grid.free_coarse.contains(i)) wanted.push_back(i);
  }
  const MultiscaleBasis basis = build_basis(
      s.ops, s.grid,
      build_correctors(s.prob.K, s.split, s.grid, s.ops, patches, wanted));
  const Solution corrected = solve_displaced(s.prob.K, s.prob.bc, basis, s.ops);
  const Solution full = solve_full(s.prob.K, s.prob.F, s.prob.bc);
  const double rel =
      energy_norm(s.prob.K, full.u - corrected.u) / energy_norm(s.prob.K, full.u);
  return {rel <= 1e-8, "rel energy error = " + fmt(rel) + " (<= 1e-8)"};
}

// 7. Model invariants: symmetry, translation null space, split consistency,
//    and corrector membership in the detail space.
Outcome criterion_model_invariants() {
  std::ostringstream detail;
  bool pass = true;
  for (SetupKind setup : {SetupKind::Basic, SetupKind::RandomCoefficients}) {
    ExperimentConfig config;
    config.r = 32;
    config.coarse_sizes = {4};
    config.setup = setup;
    config.seed = 3;
    Setup s = build_setup(config, 4);

    const double sym = symmetry_error(s.prob.K);
    const double sym_bound = 1e-12 * max_abs(s.prob.K);
    Vector tx = Vector::Zero(s.prob.net.num_dofs());
    Vector ty = Vector::Zero(s.prob.net.num_dofs());
    for (int i = 0; i < s.prob.net.num_nodes(); ++i) {
      tx[dof_index(i, 0, 2)] = 1.0;
      ty[dof_index(i, 1, 2)] = 1.0;
    }
    const double trans = std::max((s.prob.K * tx).lpNorm<Eigen::Infinity>(),
                                  (s.prob.K * ty).lpNorm<Eigen::Infinity>());
    const double split_err = max_abs(assemble_from_split(s.split) - s.prob.K);
    const double split_bound = 1e-13 * max_abs(s.prob.K);

    const PatchIndex patches =
        build_patches(s.grid, s.prob.net, s.ops, s.prob.bc, 2.0);
    const CorrectorSet set = build_correctors(s.prob.K, s.split, s.grid, s.ops,
                                              patches, free_list(s.grid));
    double cons = 0.0;
    for (Index i : s.grid.free_coarse) {
      const Vector phi = Vector(set.columns.col(i));
      cons = std::max(cons, (s.ops.restriction * phi).lpNorm<Eigen::Infinity>());
    }

    const bool ok = sym <= sym_bound && trans <= 1e-11 && split_err <= split_bound &&
                    cons <= 1e-9;
    pass = pass && ok;
    detail << "\n    " << to_string(setup) << ": sym=" << fmt(sym) << "/"
           << fmt(sym_bound) << " trans=" << fmt(trans) << "/1e-11 split="
           << fmt(split_err) << "/" << fmt(split_bound) << " C*phi=" << fmt(cons)
           << "/1e-9";
  }
  return {pass, "invariants" + detail.str()};
}

// 8. Scalar Laplacian model: pipeline equals the dense brute force.
Outcome criterion_dense_oracle_equivalence() {
  double worst = 0.0;
  for (const int R : {2, 4}) {
    for (const bool random_weights : {false, true}) {
      Network net = generate_regular(8);
      net.dofs_per_node = 1;
      oracles::Rng rng(random_weights ? 13 : 17);
      const Vector weights = random_weights ? rng.vector(net.num_edges(), 0.1, 10.0)
                                            : Vector::Ones(net.num_edges());
      const SpMat K = assemble_laplacian(net, weights);
      std::vector<Index> fixed;
      for (int i = 0; i < net.num_nodes(); ++i) {
        const double x = net.nodes(0, i);
        const double y = net.nodes(1, i);
        if (x == 0.0 || x == 1.0 || y == 0.0 || y == 1.0) fixed.push_back(i);
      }
      BoundaryConditions bc;
      bc.fixed = IndexSet::from_unsorted(fixed);
      bc.values = Vector::Zero(bc.fixed.size());
      const CoarseGrid grid = build_grid(R, net, bc);
      const CoarseOperators ops = interpolate_basis(grid, net);
      const ElementSplit split = split_elements_laplacian(net, weights, grid);
      const PatchIndex patches = build_patches(grid, net, ops, bc, kInf);
      const CorrectorSet set =
          build_correctors(K, split, grid, ops, patches, free_list(grid));

      Vector F = Vector::Zero(net.num_dofs());
      for (Index id : free_dofs(bc, net.num_dofs())) F[id] = 1.0;
      const oracles::DenseMultiscale dense =
          oracles::dense_multiscale(K, grid, ops, bc, F);

      for (Index q = 0; q < grid.free_coarse.size(); ++q) {
        const Vector phi = Vector(set.columns.col(grid.free_coarse[q]));
        worst = std::max(worst,
                         (phi - dense.correctors.col(q)).lpNorm<Eigen::Infinity>());
      }
      const MultiscaleBasis basis = build_basis(ops, grid, set);
      const Solution ms = solve_multiscale(K, F, basis);
      worst = std::max(worst, (ms.u - dense.u_ms).lpNorm<Eigen::Infinity>());
    }
  }
  return {worst <= 1e-10, "max deviation from dense brute force = " + fmt(worst) +
                              " (<= 1e-10)"};
}

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "exactness on coarse loads", 30, criterion_coarse_load_exactness},
      {2, "corrector decay", 120, criterion_corrector_decay},
      {3, "convergence rates, basic fixed-boundary", 900, criterion_convergence_basic},
      {4, "LOD beats FEM on rough coefficients", 900, criterion_lod_beats_fem},
      {5, "random structure robustness", 900, criterion_random_structure},
      {6, "displaced-boundary correction", 120, criterion_displaced_correction},
      {7, "model invariants", 300, criterion_model_invariants},
      {8, "dense brute-force equivalence (d=1)", 60, criterion_dense_oracle_equivalence},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = elapsed < c.time_limit_s;
    const bool pass = outcome.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s criterion %d: %s — %s [%.1fs%s]\n", pass ? "PASS" : "FAIL", c.id,
                c.name.c_str(), outcome.detail.c_str(), elapsed,
                in_time ? "" : ", over time limit");
    std::fflush(stdout);
  }
  if (failures == 0) {
    std::printf("ALL %zu CRITERIA PASSED\n", criteria.size());
  } else {
    std::printf("%d CRITERIA FAILED\n", failures);
  }
  return failures;
}
