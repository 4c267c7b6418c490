#include "netlod/lod.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iostream>
#include <optional>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace netlod {

namespace {

using RowMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SInt = SpMat::StorageIndex;

int locate_edge_owner(const CoarseGrid& grid, const Network& net, int e) {
  const Eigen::Vector2d mid =
      0.5 * (net.nodes.col(net.edges[e][0]) + net.nodes.col(net.edges[e][1]));
  return locate_element(grid, mid);
}

}  // namespace

ElementSplit split_elements(const Network& net, const EdgeAttributes& eattrs,
                            const PairAttributes& pattrs, const CoarseGrid& grid) {
  if (net.dofs_per_node != 2) throw Error("split_elements: needs d = 2");
  ElementSplit split;
  split.n = net.num_dofs();
  split.element_triplets.resize(grid.elements.size());
  split.edge_owner.resize(net.edges.size());
  split.pair_owner.resize(net.pairs.size());
  const EdgeIndexMap edge_map = edge_index_map(net);

  for (int e = 0; e < net.num_edges(); ++e) {
    const int owner = locate_edge_owner(grid, net, e);
    split.edge_owner[e] = owner;
    const EdgeMatrix em = force_extension(net, eattrs, e);
    add_scaled_element(split.element_triplets[owner], em.dofs, em.mat, -1.0);
  }
  for (int p = 0; p < net.num_pairs(); ++p) {
    const int owner = locate_element(grid, net.nodes.col(net.pairs[p][1]));
    split.pair_owner[p] = owner;
    const PairMatrix ang = force_angular(net, pattrs, p);
    add_scaled_element(split.element_triplets[owner], ang.dofs, ang.mat, -1.0);
    const PairMatrix poi = force_poisson(net, eattrs, pattrs, p, edge_map);
    add_scaled_element(split.element_triplets[owner], poi.dofs, poi.mat, -1.0);
  }
  return split;
}

ElementSplit split_elements_laplacian(const Network& net, const Vector& edge_weights,
                                      const CoarseGrid& grid) {
  if (net.dofs_per_node != 1) throw Error("split_elements_laplacian: needs d = 1");
  if (edge_weights.size() != net.num_edges()) {
    throw Error("split_elements_laplacian: weight per edge required");
  }
  ElementSplit split;
  split.n = net.num_dofs();
  split.element_triplets.resize(grid.elements.size());
  split.edge_owner.resize(net.edges.size());

  for (int e = 0; e < net.num_edges(); ++e) {
    const int owner = locate_edge_owner(grid, net, e);
    split.edge_owner[e] = owner;
    const auto [i, j] = net.edges[e];
    const double w = edge_weights[e];
    auto& trips = split.element_triplets[owner];
    trips.emplace_back(i, i, w);
    trips.emplace_back(j, j, w);
    trips.emplace_back(i, j, -w);
    trips.emplace_back(j, i, -w);
  }
  return split;
}

SpMat assemble_from_split(const ElementSplit& split) {
  std::vector<Triplet> all;
  size_t total = 0;
  for (const auto& t : split.element_triplets) total += t.size();
  all.reserve(total);
  for (const auto& t : split.element_triplets) {
    all.insert(all.end(), t.begin(), t.end());
  }
  return assemble(all, split.n, split.n);
}

namespace {

// Constraint block C of a patch: rows are the patch coarse dofs, columns the
// patch fine dofs, entries the interpolated basis values.
SpMat patch_constraints(const CoarseOperators& ops, const IndexSet& coarse,
                        const std::vector<Index>& rowpos, Index nk) {
  std::vector<Triplet> trips;
  for (Index q = 0; q < coarse.size(); ++q) {
    for (SpMat::InnerIterator it(ops.basis_all, coarse[q]); it; ++it) {
      const Index rp = rowpos[static_cast<size_t>(it.row())];
      if (rp >= 0) trips.emplace_back(q, rp, it.value());
    }
  }
  SpMat C(coarse.size(), nk);
  C.setFromTriplets(trips.begin(), trips.end());
  return C;
}

// r_i^E = K_E(N_E, :) lambda_i, as a dense vector over the patch dofs.
Vector corrector_rhs(const ElementSplit& split, const SpMat& basis_all, int element,
                     Index coarse_dof, const std::vector<Index>& rowpos, Index nk) {
  Vector r = Vector::Zero(nk);
  const SInt* outer = basis_all.outerIndexPtr();
  const SInt* inner = basis_all.innerIndexPtr();
  const double* vals = basis_all.valuePtr();
  const SInt lo = outer[coarse_dof];
  const SInt hi = outer[coarse_dof + 1];
  const auto lambda_at = [&](Index row) -> double {
    const SInt* it = std::lower_bound(inner + lo, inner + hi, static_cast<SInt>(row));
    if (it == inner + hi || *it != static_cast<SInt>(row)) return 0.0;
    return vals[it - inner];
  };
  for (const Triplet& t : split.element_triplets[element]) {
    const Index rp = rowpos[static_cast<size_t>(t.row())];
    if (rp < 0) continue;
    const double lv = lambda_at(t.col());
    if (lv != 0.0) r[rp] += t.value() * lv;
  }
  return r;
}

std::vector<Index> patch_row_positions(const IndexSet& fine, Index n) {
  std::vector<Index> rowpos(static_cast<size_t>(n), -1);
  for (Index k = 0; k < fine.size(); ++k) rowpos[static_cast<size_t>(fine[k])] = k;
  return rowpos;
}

struct ElementWork {
  int element = -1;
  std::vector<std::pair<Index, Vector>> pieces;
};

struct CorrectorContext {
  const SpMat& K;
  const ElementSplit& split;
  const CoarseOperators& ops;
  const RowMat& lambda_rows;
  const PatchIndex& patches;
  const std::vector<char>& wanted;
};

ElementWork process_element(const CorrectorContext& ctx, int element,
                            SaddleFactorization* shared_fact) {
  ElementWork work;
  work.element = element;
  const auto& trips = ctx.split.element_triplets[element];
  if (trips.empty()) return work;

  const IndexSet& fine = ctx.patches.fine[element];
  const Index nk = fine.size();
  const std::vector<Index> rowpos = patch_row_positions(fine, ctx.split.n);

  // Coarse dofs whose basis can reach this element's stiffness through a
  // column with at least one row inside the patch.
  std::vector<char> col_seen(static_cast<size_t>(ctx.split.n), 0);
  std::vector<Index> touched;
  for (const Triplet& t : trips) {
    if (rowpos[static_cast<size_t>(t.row())] >= 0 &&
        !col_seen[static_cast<size_t>(t.col())]) {
      col_seen[static_cast<size_t>(t.col())] = 1;
      touched.push_back(t.col());
    }
  }
  std::vector<char> cand_seen(static_cast<size_t>(ctx.ops.basis_all.cols()), 0);
  std::vector<Index> candidates;
  for (Index c : touched) {
    for (RowMat::InnerIterator it(ctx.lambda_rows, c); it; ++it) {
      const Index i = it.col();
      if (ctx.wanted[static_cast<size_t>(i)] && !cand_seen[static_cast<size_t>(i)]) {
        cand_seen[static_cast<size_t>(i)] = 1;
        candidates.push_back(i);
      }
    }
  }
  if (candidates.empty()) return work;
  std::sort(candidates.begin(), candidates.end());

  std::optional<SaddleFactorization> local;
  SaddleFactorization* fact = shared_fact;
  if (!fact) {
    SpMat K_E = extract(ctx.K, fine, fine);
    SpMat C_E = patch_constraints(ctx.ops, ctx.patches.coarse[element], rowpos, nk);
    local.emplace(K_E, C_E);
    fact = &*local;
  }

  for (Index i : candidates) {
    Vector rhs = corrector_rhs(ctx.split, ctx.ops.basis_all, element, i, rowpos, nk);
    if (rhs.lpNorm<Eigen::Infinity>() == 0.0) continue;
    try {
      SaddleSolution sol = fact->solve(rhs);
      work.pieces.emplace_back(i, std::move(sol.phi));
    } catch (const Error& e) {
      throw Error("corrector solve failed at element " + std::to_string(element) +
                  ", coarse dof " + std::to_string(i) + ": " + e.what());
    }
  }
  return work;
}

}  // namespace

Vector solve_corrector(const SpMat& K, const ElementSplit& split,
                       const CoarseGrid& grid, const CoarseOperators& ops,
                       const PatchIndex& patches, int element, Index coarse_dof) {
  if (element < 0 || element >= grid.num_elements()) {
    throw Error("solve_corrector: element out of range");
  }
  if (coarse_dof < 0 || coarse_dof >= grid.num_dofs()) {
    throw Error("solve_corrector: coarse dof out of range");
  }
  Vector out = Vector::Zero(split.n);
  const auto& trips = split.element_triplets[element];
  if (trips.empty()) return out;

  const IndexSet& fine = patches.fine[element];
  const std::vector<Index> rowpos = patch_row_positions(fine, split.n);
  Vector rhs = corrector_rhs(split, ops.basis_all, element, coarse_dof, rowpos,
                             fine.size());
  if (rhs.lpNorm<Eigen::Infinity>() == 0.0) return out;

  SpMat K_E = extract(K, fine, fine);
  SpMat C_E = patch_constraints(ops, patches.coarse[element], rowpos, fine.size());
  try {
    SaddleSolution sol = solve_saddle(K_E, C_E, rhs);
    scatter_into(out, fine, sol.phi);
  } catch (const Error& e) {
    throw Error("corrector solve failed at element " + std::to_string(element) +
                ", coarse dof " + std::to_string(coarse_dof) + ": " + e.what());
  }
  return out;
}

CorrectorSet build_correctors(const SpMat& K, const ElementSplit& split,
                              const CoarseGrid& grid, const CoarseOperators& ops,
                              const PatchIndex& patches,
                              const std::vector<Index>& coarse_dofs) {
  const Index n = split.n;
  const Index m = grid.num_dofs();
  std::vector<char> wanted(static_cast<size_t>(m), 0);
  for (Index i : coarse_dofs) {
    if (i < 0 || i >= m) throw Error("build_correctors: coarse dof out of range");
    wanted[static_cast<size_t>(i)] = 1;
  }
  const RowMat lambda_rows(ops.basis_all);
  const CorrectorContext ctx{K, split, ops, lambda_rows, patches, wanted};

  // With full patches every element shares one global saddle factorization.
  const bool full = std::isinf(patches.rho);
  std::optional<SaddleFactorization> shared;
  if (full) {
    const std::vector<Index> rowpos = patch_row_positions(patches.free_fine, n);
    SpMat K_NN = extract(K, patches.free_fine, patches.free_fine);
    SpMat C = patch_constraints(ops, grid.free_coarse, rowpos, patches.free_fine.size());
    shared.emplace(K_NN, C);
  }

  std::vector<std::vector<std::pair<Index, double>>> acc(static_cast<size_t>(m));
  const auto merge_piece = [&](Index i, const IndexSet& fine, const Vector& phi) {
    auto& a = acc[static_cast<size_t>(i)];
    std::vector<std::pair<Index, double>> merged;
    merged.reserve(a.size() + static_cast<size_t>(fine.size()));
    size_t pa = 0;
    Index pb = 0;
    while (pa < a.size() || pb < fine.size()) {
      if (pb == fine.size() || (pa < a.size() && a[pa].first < fine[pb])) {
        merged.push_back(a[pa++]);
      } else if (pa == a.size() || fine[pb] < a[pa].first) {
        merged.emplace_back(fine[pb], phi[pb]);
        ++pb;
      } else {
        merged.emplace_back(a[pa].first, a[pa].second + phi[pb]);
        ++pa;
        ++pb;
      }
    }
    a = std::move(merged);
  };

  const int nelem = grid.num_elements();
  const int chunk = 16;
  for (int base = 0; base < nelem; base += chunk) {
    const int hi = std::min(nelem, base + chunk);
    std::vector<ElementWork> works(static_cast<size_t>(hi - base));
    if (shared) {
      for (int el = base; el < hi; ++el) {
        works[static_cast<size_t>(el - base)] = process_element(ctx, el, &*shared);
      }
    } else {
      std::exception_ptr eptr = nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
      for (int el = base; el < hi; ++el) {
        try {
          works[static_cast<size_t>(el - base)] = process_element(ctx, el, nullptr);
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
          {
            if (!eptr) eptr = std::current_exception();
          }
        }
      }
      if (eptr) std::rethrow_exception(eptr);
    }
    for (const ElementWork& w : works) {
      for (const auto& [i, phi] : w.pieces) {
        merge_piece(i, patches.fine[w.element], phi);
      }
    }
  }

  size_t total = 0;
  for (const auto& a : acc) total += a.size();
  std::vector<Triplet> trips;
  trips.reserve(total);
  for (Index i = 0; i < m; ++i) {
    for (const auto& [id, val] : acc[static_cast<size_t>(i)]) {
      if (val != 0.0) trips.emplace_back(id, i, val);
    }
  }
  CorrectorSet out;
  out.columns = assemble(trips, n, m);
  out.computed.assign(static_cast<size_t>(m), 0);
  for (Index i : coarse_dofs) out.computed[static_cast<size_t>(i)] = 1;
  return out;
}

Vector solve_corrector_global(const SpMat& K, const CoarseOperators& ops,
                              const IndexSet& free_fine, Index coarse_dof) {
  const Index n = K.rows();
  SpMat K_NN = extract(K, free_fine, free_fine);
  SpMat C = extract(ops.restriction, IndexSet::all(ops.restriction.rows()), free_fine);
  const Vector lambda = Vector(ops.basis_all.col(coarse_dof));
  const Vector rhs = gather(K * lambda, free_fine);
  SaddleSolution sol = solve_saddle(K_NN, C, rhs);
  Vector out = Vector::Zero(n);
  scatter_into(out, free_fine, sol.phi);
  return out;
}

MultiscaleBasis build_basis(const CoarseOperators& ops, const CoarseGrid& grid,
                            CorrectorSet correctors) {
  const Index n = ops.prolongation.rows();
  const Index m = grid.num_dofs();
  if (correctors.columns.rows() != n || correctors.columns.cols() != m) {
    throw Error("build_basis: corrector matrix has wrong shape");
  }
  for (Index i : grid.free_coarse) {
    if (!correctors.computed[static_cast<size_t>(i)]) {
      throw Error("build_basis: corrector for free coarse dof " + std::to_string(i) +
                  " was not computed");
    }
  }
  MultiscaleBasis basis;
  basis.B_ms = ops.prolongation -
               extract(correctors.columns, IndexSet::all(n), grid.free_coarse);
  basis.correctors = std::move(correctors.columns);
  basis.computed = std::move(correctors.computed);
  return basis;
}

MultiscaleBasis fem_basis(const CoarseOperators& ops, const CoarseGrid& grid) {
  CorrectorSet zero;
  zero.columns = SpMat(ops.prolongation.rows(), grid.num_dofs());
  zero.computed.assign(static_cast<size_t>(grid.num_dofs()), 1);
  return build_basis(ops, grid, std::move(zero));
}

Solution solve_multiscale(const SpMat& K, const Vector& F, const MultiscaleBasis& basis) {
  if (F.size() != K.rows()) throw Error("solve_multiscale: load size mismatch");
  const SpMat KB = K * basis.B_ms;
  const SpMat Kms = SpMat(basis.B_ms.transpose()) * KB;
  const Vector Fms = basis.B_ms.transpose() * F;
  Solution sol;
  sol.coarse = solve_spd(Kms, Fms);
  sol.u = basis.B_ms * sol.coarse;
  return sol;
}

Solution solve_full(const SpMat& K, const Vector& F, const BoundaryConditions& bc) {
  const Index n = K.rows();
  if (F.size() != n) throw Error("solve_full: load size mismatch");
  const IndexSet free = free_dofs(bc, n);
  SpMat K_NN = extract(K, free, free);
  Vector rhs = gather(F, free);
  if (bc.fixed.size() > 0) {
    rhs -= extract(K, free, bc.fixed) * bc.values;
  }
  const Vector x = solve_spd(K_NN, rhs);
  Solution sol;
  sol.u = Vector::Zero(n);
  scatter_into(sol.u, free, x);
  scatter_into(sol.u, bc.fixed, bc.values);
  return sol;
}

Vector fit_boundary_coeffs(const CoarseOperators& ops, const BoundaryConditions& bc) {
  const Index m = ops.basis_all.cols();
  Vector alpha = Vector::Zero(m);
  if (bc.fixed.empty()) return alpha;
  const SpMat A = extract(ops.basis_all, bc.fixed, IndexSet::all(m));
  std::vector<Index> cand;
  for (Index c = 0; c < m; ++c) {
    if (A.outerIndexPtr()[c + 1] > A.outerIndexPtr()[c]) cand.push_back(c);
  }
  if (cand.empty()) return alpha;
  const IndexSet cset = IndexSet::from_sorted(std::move(cand));
  const SpMat B = extract(A, IndexSet::all(A.rows()), cset);
  const SpMat G = SpMat(B.transpose()) * B;
  const Vector rhs = B.transpose() * bc.values;
  const Vector ac = solve_spd(G, rhs);
  for (Index k = 0; k < cset.size(); ++k) alpha[cset[k]] = ac[k];
  return alpha;
}

Solution solve_displaced(const SpMat& K, const BoundaryConditions& bc,
                         const MultiscaleBasis& basis, const CoarseOperators& ops) {
  const Vector alpha = fit_boundary_coeffs(ops, bc);
  for (Index i = 0; i < alpha.size(); ++i) {
    if (alpha[i] != 0.0 && !basis.computed[static_cast<size_t>(i)]) {
      throw Error("solve_displaced: corrector for coarse dof " + std::to_string(i) +
                  " required by the boundary data was not computed");
    }
  }
  const Vector g_H = ops.basis_all * alpha;

  double mismatch = 0.0;
  for (Index k = 0; k < bc.fixed.size(); ++k) {
    mismatch = std::max(mismatch, std::abs(g_H[bc.fixed[k]] - bc.values[k]));
  }
  const double scale = std::max(1.0, bc.values.size() > 0
                                         ? bc.values.lpNorm<Eigen::Infinity>()
                                         : 0.0);
  if (mismatch > 1e-10 * scale) {
    std::cerr << "solve_displaced: prescribed values are not representable by "
                 "coarse nodal data (mismatch "
              << mismatch << "); the multiscale error bound no longer applies\n";
  }

  const Vector F_eff = -(K * g_H);
  Solution hom = solve_multiscale(K, F_eff, basis);
  const Vector u_f = -(basis.correctors * alpha);
  Solution sol;
  sol.coarse = std::move(hom.coarse);
  sol.u = g_H + hom.u + u_f;
  scatter_into(sol.u, bc.fixed, bc.values);
  return sol;
}

double energy_norm(const SpMat& K, const Vector& v) {
  if (v.size() != K.rows()) throw Error("energy_norm: size mismatch");
  const double q = v.dot(K * v);
  if (q < -1e-12) {
    throw Error("energy_norm: quadratic form is negative (" + std::to_string(q) +
                "); operator is not positive semi-definite on this vector");
  }
  return std::sqrt(std::max(q, 0.0));
}

double l2_norm(const Vector& v) { return v.norm(); }

std::vector<double> corrector_decay_errors(const SpMat& K, const ElementSplit& split,
                                           const Network& net, const CoarseGrid& grid,
                                           const CoarseOperators& ops,
                                           const BoundaryConditions& bc,
                                           Index coarse_dof,
                                           const std::vector<double>& rhos) {
  const IndexSet free = free_dofs(bc, K.rows());
  const Vector phi = solve_corrector_global(K, ops, free, coarse_dof);
  const double denom = energy_norm(K, phi);
  if (denom == 0.0) {
    throw Error("corrector_decay_errors: global corrector vanishes for dof " +
                std::to_string(coarse_dof));
  }
  std::vector<double> errors;
  errors.reserve(rhos.size());
  for (double rho : rhos) {
    const PatchIndex patches = build_patches(grid, net, ops, bc, rho);
    const CorrectorSet set =
        build_correctors(K, split, grid, ops, patches, {coarse_dof});
    const Vector localized = Vector(set.columns.col(coarse_dof));
    errors.push_back(energy_norm(K, phi - localized) / denom);
  }
  return errors;
}

}  // namespace netlod
