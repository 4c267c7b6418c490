#include "netlod/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

namespace netlod {

std::string to_string(ProblemKind kind) {
  return kind == ProblemKind::FixedBoundary ? "fixed-boundary" : "displaced-boundary";
}

std::string to_string(SetupKind kind) {
  switch (kind) {
    case SetupKind::Basic: return "basic";
    case SetupKind::RandomCoefficients: return "random-coefficients";
    case SetupKind::RandomStructure: return "random-structure";
  }
  return "basic";
}

ProblemKind problem_from_string(const std::string& s) {
  if (s == "fixed-boundary") return ProblemKind::FixedBoundary;
  if (s == "displaced-boundary") return ProblemKind::DisplacedBoundary;
  throw Error("unknown problem kind '" + s + "'");
}

SetupKind setup_from_string(const std::string& s) {
  if (s == "basic") return SetupKind::Basic;
  if (s == "random-coefficients") return SetupKind::RandomCoefficients;
  if (s == "random-structure") return SetupKind::RandomStructure;
  throw Error("unknown setup kind '" + s + "'");
}

double ExperimentConfig::effective_patch_constant() const {
  if (patch_constant > 0.0) return patch_constant;
  return problem == ProblemKind::FixedBoundary ? 1.0 : 1.5;
}

double ExperimentConfig::rho_for(int R) const {
  return effective_patch_constant() * std::log2(static_cast<double>(R));
}

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

void ExperimentConfig::validate() const {
  if (coarse_sizes.empty()) throw Error("config: at least one coarse size R required");
  int max_R = 0;
  for (int R : coarse_sizes) {
    if (!is_power_of_two(R)) {
      throw Error("config: coarse sizes must be powers of two, got " + std::to_string(R));
    }
    max_R = std::max(max_R, R);
  }
  if (!is_power_of_two(r)) {
    throw Error("config: r must be a power of two, got " + std::to_string(r));
  }
  if (r < max_R) {
    throw Error("config: r must be at least the largest coarse size");
  }
  if (patch_constant == 0.0) {
    throw Error("config: patch constant must be positive (negative selects the default)");
  }
  for (double rho : rhos) {
    if (!(rho > 0.0)) throw Error("config: patch radii must be positive");
  }
}

Problem make_problem(const ExperimentConfig& config) {
  config.validate();
  Problem prob;
  prob.h = 1.0 / config.r;

  Network net = generate_regular(config.r);
  if (config.setup == SetupKind::RandomStructure) {
    net = perturb_random(net, 0.4, config.seed + 1);
  }
  net = derive_pairs(net, config.pair_policy);

  LameField field;
  field.l = Vector::Ones(net.num_nodes());
  field.mu = Vector::Ones(net.num_nodes());
  if (config.setup == SetupKind::RandomCoefficients) {
    std::mt19937_64 eng(config.seed);
    for (int i = 0; i < net.num_nodes(); ++i) {
      field.l[i] = 0.1 + 9.9 * uniform01(eng());
      field.mu[i] = 0.1 + 9.9 * uniform01(eng());
    }
  }
  auto [edge_attrs, pair_attrs] = map_lame(net, field, 0.5);

  const int d = net.dofs_per_node;
  std::vector<Index> fixed_ids;
  std::vector<double> fixed_vals;
  for (int i = 0; i < net.num_nodes(); ++i) {
    const double x = net.nodes(0, i);
    const double y = net.nodes(1, i);
    if (config.problem == ProblemKind::FixedBoundary) {
      if (x == 0.0 || x == 1.0 || y == 0.0 || y == 1.0) {
        for (int comp = 0; comp < d; ++comp) {
          fixed_ids.push_back(dof_index(i, comp, d));
          fixed_vals.push_back(0.0);
        }
      }
    } else {
      if (x == 0.0) {
        for (int comp = 0; comp < d; ++comp) {
          fixed_ids.push_back(dof_index(i, comp, d));
          fixed_vals.push_back(0.0);
        }
      } else if (x == 1.0) {
        fixed_ids.push_back(dof_index(i, 0, d));
        fixed_vals.push_back(0.1);
      }
    }
  }
  prob.bc.fixed = IndexSet::from_unsorted(fixed_ids);
  prob.bc.values.resize(prob.bc.fixed.size());
  for (size_t k = 0; k < fixed_ids.size(); ++k) {
    prob.bc.values[prob.bc.fixed.position(fixed_ids[k])] = fixed_vals[k];
  }

  prob.K = assemble_elasticity(net, edge_attrs, pair_attrs);

  prob.F = Vector::Zero(net.num_dofs());
  if (config.problem == ProblemKind::FixedBoundary) {
    const double load = 1.0 / (prob.h * prob.h);
    const IndexSet free = free_dofs(prob.bc, net.num_dofs());
    for (Index id : free) prob.F[id] = load;
  }

  prob.net = std::move(net);
  prob.edge_attrs = std::move(edge_attrs);
  prob.pair_attrs = std::move(pair_attrs);
  return prob;
}

Index central_coarse_dof(const CoarseGrid& grid) {
  const int side = grid.R + 1;
  const int node = (grid.R / 2) * side + grid.R / 2;
  return dof_index(node, 0, grid.d);
}

std::vector<DecayPoint> run_decay(const ExperimentConfig& config) {
  config.validate();
  const Problem prob = make_problem(config);
  const int R = config.coarse_sizes.front();
  const CoarseGrid grid = build_grid(R, prob.net, prob.bc);
  const CoarseOperators ops = interpolate_basis(grid, prob.net);
  const ElementSplit split =
      split_elements(prob.net, prob.edge_attrs, prob.pair_attrs, grid);

  std::vector<double> rhos = config.rhos;
  if (rhos.empty()) {
    rhos = {1.0, 2.0, 3.0, 4.0, 5.0, std::numeric_limits<double>::infinity()};
  }
  const Index dof = central_coarse_dof(grid);
  const std::vector<double> errors =
      corrector_decay_errors(prob.K, split, prob.net, grid, ops, prob.bc, dof, rhos);

  std::vector<DecayPoint> points;
  points.reserve(rhos.size());
  for (size_t k = 0; k < rhos.size(); ++k) {
    points.push_back({rhos[k], errors[k]});
  }
  return points;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void write_timestamp_comment(std::ostream& out) {
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(now).count();
  out << "# generated at unix time " << secs << "\n";
}

}  // namespace

void write_decay_csv(const std::vector<DecayPoint>& points, std::ostream& out,
                     bool timestamp_comment) {
  if (timestamp_comment) write_timestamp_comment(out);
  out << "rho,rel_energy_error\n";
  for (const DecayPoint& p : points) {
    out << format_double(p.rho) << "," << format_double(p.rel_energy_error) << "\n";
  }
}

namespace {

struct LodErrors {
  double energy_abs, energy_rel, l2_abs, l2_rel;
};

LodErrors errors_against(const SpMat& K, const Vector& reference, const Vector& u) {
  const Vector diff = reference - u;
  LodErrors e{};
  e.energy_abs = energy_norm(K, diff);
  e.l2_abs = l2_norm(diff);
  const double en_ref = energy_norm(K, reference);
  const double l2_ref = l2_norm(reference);
  e.energy_rel = en_ref > 0.0 ? e.energy_abs / en_ref : e.energy_abs;
  e.l2_rel = l2_ref > 0.0 ? e.l2_abs / l2_ref : e.l2_abs;
  return e;
}

}  // namespace

std::vector<ConvergenceRow> run_convergence(const ExperimentConfig& config) {
  config.validate();
  const Problem prob = make_problem(config);
  const Solution reference = solve_full(prob.K, prob.F, prob.bc);

  std::vector<ConvergenceRow> rows;
  for (int R : config.coarse_sizes) {
    ConvergenceRow row;
    row.R = R;
    row.H = 1.0 / R;
    row.rho = config.rho_for(R);
    try {
      const CoarseGrid grid = build_grid(R, prob.net, prob.bc);
      const CoarseOperators ops = interpolate_basis(grid, prob.net);
      const ElementSplit split =
          split_elements(prob.net, prob.edge_attrs, prob.pair_attrs, grid);
      const PatchIndex patches =
          build_patches(grid, prob.net, ops, prob.bc, row.rho);

      std::vector<Index> wanted(grid.free_coarse.begin(), grid.free_coarse.end());
      Vector alpha;
      if (config.problem == ProblemKind::DisplacedBoundary) {
        alpha = fit_boundary_coeffs(ops, prob.bc);
        for (Index i = 0; i < alpha.size(); ++i) {
          if (alpha[i] != 0.0 && grid.free_coarse.position(i) < 0) {
            wanted.push_back(i);
          }
        }
      }
      CorrectorSet correctors =
          build_correctors(prob.K, split, grid, ops, patches, wanted);
      const MultiscaleBasis basis = build_basis(ops, grid, std::move(correctors));
      const MultiscaleBasis baseline = fem_basis(ops, grid);

      Vector u_lod, u_fem;
      if (config.problem == ProblemKind::FixedBoundary) {
        u_lod = solve_multiscale(prob.K, prob.F, basis).u;
        u_fem = solve_multiscale(prob.K, prob.F, baseline).u;
      } else {
        u_lod = solve_displaced(prob.K, prob.bc, basis, ops).u;
        u_fem = solve_displaced(prob.K, prob.bc, baseline, ops).u;
      }
      const LodErrors el = errors_against(prob.K, reference.u, u_lod);
      const LodErrors ef = errors_against(prob.K, reference.u, u_fem);
      row.lod_energy_abs = el.energy_abs;
      row.lod_energy_rel = el.energy_rel;
      row.lod_l2_abs = el.l2_abs;
      row.lod_l2_rel = el.l2_rel;
      row.fem_energy_abs = ef.energy_abs;
      row.fem_energy_rel = ef.energy_rel;
      row.fem_l2_abs = ef.l2_abs;
      row.fem_l2_rel = ef.l2_rel;
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_convergence_csv(const std::vector<ConvergenceRow>& rows, std::ostream& out,
                           bool timestamp_comment) {
  if (timestamp_comment) write_timestamp_comment(out);
  out << "R,H,rho,lod_energy_abs,lod_energy_rel,lod_l2_abs,lod_l2_rel,"
         "fem_energy_abs,fem_energy_rel,fem_l2_abs,fem_l2_rel\n";
  for (const ConvergenceRow& row : rows) {
    if (row.failed) {
      out << "# R=" << row.R << " failed: " << row.error << "\n";
      out << row.R << "," << format_double(row.H) << "," << format_double(row.rho)
          << ",error,error,error,error,error,error,error,error\n";
      continue;
    }
    out << row.R << "," << format_double(row.H) << "," << format_double(row.rho) << ","
        << format_double(row.lod_energy_abs) << "," << format_double(row.lod_energy_rel)
        << "," << format_double(row.lod_l2_abs) << "," << format_double(row.lod_l2_rel)
        << "," << format_double(row.fem_energy_abs) << ","
        << format_double(row.fem_energy_rel) << "," << format_double(row.fem_l2_abs)
        << "," << format_double(row.fem_l2_rel) << "\n";
  }
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error("fit_slope: need at least two samples");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw Error("fit_slope: degenerate abscissae");
  return (n * sxy - sx * sy) / denom;
}

}  // namespace netlod
