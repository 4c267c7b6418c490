#pragma once

// Discrete network representation: node positions, edges, edge pairs,
// degree-of-freedom mapping, boundary conditions, generators for the
// experiment networks, and JSON serialization. Networks are immutable
// after construction and safe to share between threads.

#include "netlod/sparse.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace netlod {

struct Network {
  /// Node positions, one column per node, unit-square coordinates.
  Eigen::Matrix2Xd nodes;
  /// Edges (i, j) with i < j.
  std::vector<std::array<int, 2>> edges;
  /// Edge pairs (i, j, l): edges (i,j) and (j,l) share the central node j;
  /// stored canonically with i < l.
  std::vector<std::array<int, 3>> pairs;
  /// Degrees of freedom per node, 1 or 2.
  int dofs_per_node = 2;
  /// Uniform out-of-plane thickness.
  double thickness = 1.0;

  int num_nodes() const { return static_cast<int>(nodes.cols()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  int num_pairs() const { return static_cast<int>(pairs.size()); }
  Index num_dofs() const {
    return static_cast<Index>(dofs_per_node) * num_nodes();
  }
  double edge_length(int e) const {
    return (nodes.col(edges[e][1]) - nodes.col(edges[e][0])).norm();
  }
};

struct EdgeAttributes {
  Vector width;    ///< w_ij > 0, aligned with Network::edges
  Vector modulus;  ///< k_ij > 0
};

struct PairAttributes {
  Vector kappa_v;  ///< angular stiffness, stored as the single product coefficient
  Vector eta;      ///< Poisson modulus
  Vector gamma;    ///< Poisson coupling
};

struct BoundaryConditions {
  IndexSet fixed;  ///< fixed global dofs
  Vector values;   ///< prescribed displacement per fixed dof
};

struct NetworkBundle {
  Network net;
  EdgeAttributes edge_attrs;
  PairAttributes pair_attrs;
  BoundaryConditions bc;
};

enum class PairPolicy {
  /// All unordered pairs of distinct edges sharing each central node.
  AllPairs,
};

/// Interleaved dof ordering: dof = d * node + component.
inline Index dof_index(int node, int component, int dofs_per_node) {
  return static_cast<Index>(dofs_per_node) * node + component;
}

/// Checks the structural invariants (canonical edges, no duplicates, pairs
/// referencing existing edges, positive lengths). Throws Error on violation.
void validate_network(const Network& net);

/// Regular unit-square grid with (r+1)^2 nodes and spacing 1/r, d = 2.
Network generate_regular(int r);

/// Displaces every node by a uniform sample from [-amplitude*h, amplitude*h]^2
/// where h is the grid spacing; components pinned to the x in {0,1} and
/// y in {0,1} boundaries are kept. Deterministic per seed.
Network perturb_random(const Network& net, double amplitude, std::uint64_t seed);

/// Populates the pair list from the edge list under the given policy.
Network derive_pairs(const Network& net, PairPolicy policy = PairPolicy::AllPairs);

/// Key lookup edge (a, b) -> edge list position.
using EdgeIndexMap = std::unordered_map<std::uint64_t, int>;
EdgeIndexMap edge_index_map(const Network& net);
inline std::uint64_t edge_key(int a, int b) {
  const std::uint64_t lo = static_cast<std::uint32_t>(std::min(a, b));
  const std::uint64_t hi = static_cast<std::uint32_t>(std::max(a, b));
  return (hi << 32) | lo;
}

IndexSet free_dofs(const BoundaryConditions& bc, Index n);

/// Lossless JSON round-trip of the network, attributes and boundary
/// conditions (full double precision).
void save_network(const NetworkBundle& bundle, const std::string& path);
NetworkBundle load_network(const std::string& path);

/// Deterministic uniform draw on [0, 1) from a raw 64-bit sample.
inline double uniform01(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace netlod
