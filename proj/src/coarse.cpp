#include "netlod/coarse.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace netlod {

Eigen::Vector2d CoarseGrid::element_center(int e) const {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (int corner : elements[e]) c += nodes.col(corner);
  return 0.25 * c;
}

namespace {

int clamp_cell(double coord, int R) {
  const double scaled = coord * R;
  int cell = static_cast<int>(std::floor(scaled));
  // Exact hits on interior cell boundaries go to the smaller cell index.
  if (static_cast<double>(cell) == scaled && cell > 0) cell -= 1;
  return std::clamp(cell, 0, R - 1);
}

}  // namespace

int locate_element(const CoarseGrid& grid, const Eigen::Vector2d& p) {
  const int ex = clamp_cell(p.x(), grid.R);
  const int ey = clamp_cell(p.y(), grid.R);
  return ey * grid.R + ex;
}

CoarseGrid build_grid(int R, const Network& net, const BoundaryConditions& bc) {
  if (R < 2) throw Error("build_grid: need R >= 2");
  CoarseGrid grid;
  grid.R = R;
  grid.H = 1.0 / R;
  grid.d = net.dofs_per_node;
  const int side = R + 1;
  grid.nodes.resize(2, side * side);
  for (int iy = 0; iy < side; ++iy) {
    for (int ix = 0; ix < side; ++ix) {
      grid.nodes.col(iy * side + ix) =
          Eigen::Vector2d(static_cast<double>(ix) / R, static_cast<double>(iy) / R);
    }
  }
  grid.elements.reserve(static_cast<size_t>(R) * R);
  for (int ey = 0; ey < R; ++ey) {
    for (int ex = 0; ex < R; ++ex) {
      const int c0 = ey * side + ex;
      grid.elements.push_back({c0, c0 + 1, c0 + side + 1, c0 + side});
    }
  }

  if (grid.num_nodes() > net.num_nodes()) {
    throw Error("build_grid: coarse grid has more nodes than the network (" +
                std::to_string(grid.num_nodes()) + " > " +
                std::to_string(net.num_nodes()) + ")");
  }
  std::vector<int> hits(grid.elements.size(), 0);
  for (int i = 0; i < net.num_nodes(); ++i) {
    hits[locate_element(grid, net.nodes.col(i))] += 1;
  }
  for (size_t e = 0; e < hits.size(); ++e) {
    if (hits[e] == 0) {
      throw Error("build_grid: coarse element " + std::to_string(e) +
                  " contains no network node");
    }
  }

  const int d = grid.d;
  std::vector<char> fixed(static_cast<size_t>(grid.num_dofs()), 0);
  for (Index k = 0; k < bc.fixed.size(); ++k) {
    const Index j = bc.fixed[k];
    const int comp = static_cast<int>(j % d);
    const int node = static_cast<int>(j / d);
    const Eigen::Vector2d p = net.nodes.col(node);
    const int cell = locate_element(grid, p);
    for (int corner : grid.elements[cell]) {
      const Index i = dof_index(corner, comp, d);
      if (eval_bilinear(grid, i, p) != 0.0) fixed[static_cast<size_t>(i)] = 1;
    }
  }
  std::vector<Index> fixed_ids;
  for (Index i = 0; i < grid.num_dofs(); ++i) {
    if (fixed[static_cast<size_t>(i)]) fixed_ids.push_back(i);
  }
  grid.fixed_coarse = IndexSet::from_sorted(std::move(fixed_ids));
  grid.free_coarse = IndexSet::complement_of(grid.fixed_coarse, grid.num_dofs());
  return grid;
}

double eval_bilinear(const CoarseGrid& grid, Index coarse_dof,
                     const Eigen::Vector2d& p) {
  const int node = static_cast<int>(coarse_dof / grid.d);
  const Eigen::Vector2d q = grid.nodes.col(node);
  const double tx = 1.0 - std::abs(p.x() - q.x()) / grid.H;
  if (tx <= 0.0) return 0.0;
  const double ty = 1.0 - std::abs(p.y() - q.y()) / grid.H;
  if (ty <= 0.0) return 0.0;
  return tx * ty;
}

CoarseOperators interpolate_basis(const CoarseGrid& grid, const Network& net) {
  const int d = grid.d;
  if (net.dofs_per_node != d) {
    throw Error("interpolate_basis: network and grid dof counts differ");
  }
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(net.num_nodes()) * 4 * d);
  for (int f = 0; f < net.num_nodes(); ++f) {
    const Eigen::Vector2d p = net.nodes.col(f);
    const int cell = locate_element(grid, p);
    for (int corner : grid.elements[cell]) {
      const double val = eval_bilinear(grid, dof_index(corner, 0, d), p);
      if (val == 0.0) continue;
      for (int comp = 0; comp < d; ++comp) {
        trips.emplace_back(dof_index(f, comp, d), dof_index(corner, comp, d), val);
      }
    }
  }
  CoarseOperators ops;
  ops.basis_all = assemble(trips, net.num_dofs(), grid.num_dofs());
  ops.prolongation =
      extract(ops.basis_all, IndexSet::all(net.num_dofs()), grid.free_coarse);
  ops.restriction = SpMat(ops.prolongation.transpose());

  if (grid.free_coarse.size() > 0) {
    SpMat gram = ops.restriction * ops.prolongation;
    Eigen::SimplicialLLT<SpMat> llt(gram);
    if (llt.info() != Eigen::Success) {
      throw Error("interpolate_basis: prolongation columns are not linearly independent");
    }
  }
  return ops;
}

Vector coarse_interpolant(const CoarseOperators& ops, const Vector& v) {
  return ops.prolongation * (ops.restriction * v);
}

PatchIndex build_patches(const CoarseGrid& grid, const Network& net,
                         const CoarseOperators& ops,
                         const BoundaryConditions& bc, double rho) {
  if (!(rho > 0.0)) throw Error("build_patches: rho must be positive");
  const int d = grid.d;
  const Index n = net.num_dofs();
  PatchIndex patches;
  patches.rho = rho;
  patches.free_fine = free_dofs(bc, n);
  patches.fine.resize(grid.elements.size());
  patches.coarse.resize(grid.elements.size());

  std::vector<char> free_mask(static_cast<size_t>(n), 0);
  for (Index id : patches.free_fine) free_mask[static_cast<size_t>(id)] = 1;

  const bool full = std::isinf(rho);
  const double radius2 = full ? 0.0 : (rho * grid.H) * (rho * grid.H);

  std::vector<char> in_patch(static_cast<size_t>(n), 0);
  for (int e = 0; e < grid.num_elements(); ++e) {
    if (full) {
      patches.fine[e] = patches.free_fine;
      patches.coarse[e] = grid.free_coarse;
      continue;
    }
    const Eigen::Vector2d c = grid.element_center(e);
    std::vector<Index> fine_ids;
    for (int i = 0; i < net.num_nodes(); ++i) {
      if ((net.nodes.col(i) - c).squaredNorm() <= radius2) {
        for (int comp = 0; comp < d; ++comp) {
          const Index id = dof_index(i, comp, d);
          if (free_mask[static_cast<size_t>(id)]) fine_ids.push_back(id);
        }
      }
    }
    if (fine_ids.empty()) {
      throw Error("build_patches: patch of element " + std::to_string(e) +
                  " contains no free dof (rho too small)");
    }
    patches.fine[e] = IndexSet::from_sorted(std::move(fine_ids));

    for (Index id : patches.fine[e]) in_patch[static_cast<size_t>(id)] = 1;
    std::vector<Index> coarse_ids;
    for (Index q = 0; q < grid.free_coarse.size(); ++q) {
      const Index i = grid.free_coarse[q];
      for (SpMat::InnerIterator it(ops.basis_all, i); it; ++it) {
        if (in_patch[static_cast<size_t>(it.row())]) {
          coarse_ids.push_back(i);
          break;
        }
      }
    }
    for (Index id : patches.fine[e]) in_patch[static_cast<size_t>(id)] = 0;
    patches.coarse[e] = IndexSet::from_sorted(std::move(coarse_ids));
  }
  return patches;
}

}  // namespace netlod
