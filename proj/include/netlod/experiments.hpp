#pragma once

// Experiment harness: problem generation (fixed- and displaced-boundary
// problems in three setups), corrector decay studies, and convergence
// studies with a coarse-FEM baseline. All randomness flows from the single
// config seed, so re-runs reproduce results bit for bit.

#include "netlod/coarse.hpp"
#include "netlod/lod.hpp"
#include "netlod/models.hpp"
#include "netlod/network.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace netlod {

enum class ProblemKind { FixedBoundary, DisplacedBoundary };
enum class SetupKind { Basic, RandomCoefficients, RandomStructure };

std::string to_string(ProblemKind kind);
std::string to_string(SetupKind kind);
ProblemKind problem_from_string(const std::string& s);
SetupKind setup_from_string(const std::string& s);

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::FixedBoundary;
  SetupKind setup = SetupKind::Basic;
  int r = 128;
  std::vector<int> coarse_sizes = {4, 8, 16, 32};
  /// Patch schedule constant: rho(R) = C * log2(R). Negative means the
  /// problem-dependent default (1 for fixed, 1.5 for displaced).
  double patch_constant = -1.0;
  /// Explicit patch radii; used by the decay study and as an override for
  /// single solves. Empty means {1,2,3,4,5,inf} for decay.
  std::vector<double> rhos;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  PairPolicy pair_policy = PairPolicy::AllPairs;
  std::string save_basis;
  std::string load_basis;

  double effective_patch_constant() const;
  double rho_for(int R) const;
  void validate() const;
};

struct Problem {
  Network net;
  EdgeAttributes edge_attrs;
  PairAttributes pair_attrs;
  BoundaryConditions bc;
  SpMat K;
  Vector F;
  double h = 0.0;
};

/// Builds the network, attributes, boundary conditions, stiffness matrix and
/// load for the configured problem/setup. Deterministic per seed.
Problem make_problem(const ExperimentConfig& config);

/// x-component coarse dof of the coarse node nearest the domain center.
Index central_coarse_dof(const CoarseGrid& grid);

struct DecayPoint {
  double rho;
  double rel_energy_error;
};

/// Corrector decay study at the first configured coarse size.
std::vector<DecayPoint> run_decay(const ExperimentConfig& config);
void write_decay_csv(const std::vector<DecayPoint>& points, std::ostream& out,
                     bool timestamp_comment = true);

struct ConvergenceRow {
  int R = 0;
  double H = 0.0;
  double rho = 0.0;
  double lod_energy_abs = 0.0, lod_energy_rel = 0.0;
  double lod_l2_abs = 0.0, lod_l2_rel = 0.0;
  double fem_energy_abs = 0.0, fem_energy_rel = 0.0;
  double fem_l2_abs = 0.0, fem_l2_rel = 0.0;
  bool failed = false;
  std::string error;
};

/// Convergence study over the configured coarse sizes against the fine
/// reference solution; a failed size is recorded and the run continues.
std::vector<ConvergenceRow> run_convergence(const ExperimentConfig& config);
void write_convergence_csv(const std::vector<ConvergenceRow>& rows, std::ostream& out,
                           bool timestamp_comment = true);

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Full-precision, locale-independent decimal rendering for CSV bodies.
std::string format_double(double v);

}  // namespace netlod
