#include "netlod/models.hpp"

#include <cmath>

namespace netlod {

EdgeGeometry edge_geometry(const Network& net, int edge) {
  const auto [i, j] = net.edges[edge];
  const Eigen::Vector2d diff = net.nodes.col(j) - net.nodes.col(i);
  const double length = diff.norm();
  if (length <= 0.0) {
    throw Error("edge_geometry: zero-length edge " + std::to_string(edge));
  }
  EdgeGeometry geom;
  geom.length = length;
  geom.dir_i = diff / length;
  geom.dir_j = -geom.dir_i;
  return geom;
}

namespace {

// s * (a a^T) with bitwise-identical off-diagonal entries.
Eigen::Matrix2d scaled_outer(double s, const Eigen::Vector2d& a) {
  const double xy = s * (a.x() * a.y());
  Eigen::Matrix2d m;
  m << s * (a.x() * a.x()), xy, xy, s * (a.y() * a.y());
  return m;
}

}  // namespace

EdgeMatrix force_extension(const Network& net, const EdgeAttributes& attrs, int edge) {
  const auto [i, j] = net.edges[edge];
  const EdgeGeometry geom = edge_geometry(net, edge);
  const double coef = attrs.modulus[edge] * attrs.width[edge] * net.thickness /
                      geom.length;
  const Eigen::Matrix2d P = scaled_outer(coef, geom.dir_i);

  EdgeMatrix em;
  em.dofs = {dof_index(i, 0, 2), dof_index(i, 1, 2), dof_index(j, 0, 2),
             dof_index(j, 1, 2)};
  // F_i = P (delta_j - delta_i), F_j = -F_i.
  em.mat.block<2, 2>(0, 0) = -P;
  em.mat.block<2, 2>(0, 2) = P;
  em.mat.block<2, 2>(2, 0) = P;
  em.mat.block<2, 2>(2, 2) = -P;
  return em;
}

namespace {

struct PairGeometry {
  Eigen::Vector2d e_i;  // unit direction from central node j toward i
  Eigen::Vector2d e_l;  // unit direction from central node j toward l
  double L_i = 0.0;
  double L_l = 0.0;
};

PairGeometry pair_geometry(const Network& net, int pair) {
  const auto [i, j, l] = net.pairs[pair];
  PairGeometry g;
  Eigen::Vector2d di = net.nodes.col(i) - net.nodes.col(j);
  Eigen::Vector2d dl = net.nodes.col(l) - net.nodes.col(j);
  g.L_i = di.norm();
  g.L_l = dl.norm();
  if (g.L_i <= 0.0 || g.L_l <= 0.0) {
    throw Error("pair_geometry: degenerate edge in pair " + std::to_string(pair));
  }
  g.e_i = di / g.L_i;
  g.e_l = dl / g.L_l;
  return g;
}

std::array<Index, 6> pair_dofs(const Network& net, int pair) {
  const auto [i, j, l] = net.pairs[pair];
  return {dof_index(i, 0, 2), dof_index(i, 1, 2), dof_index(j, 0, 2),
          dof_index(j, 1, 2), dof_index(l, 0, 2), dof_index(l, 1, 2)};
}

}  // namespace

PairMatrix force_angular(const Network& net, const PairAttributes& attrs, int pair) {
  const PairGeometry g = pair_geometry(net, pair);
  // Edge normals at the central node: n_ji = d_ji x z, n_jl = -d_jl x z.
  const Eigen::Vector2d n_i = cross_z(g.e_i);
  const Eigen::Vector2d n_l = -cross_z(g.e_l);

  // The angle change is a single linear functional of the local
  // displacements (i, j, l); the three forces are -kappaV * g g^T u.
  Eigen::Matrix<double, 6, 1> grad;
  grad.segment<2>(0) = n_i / g.L_i;
  grad.segment<2>(4) = n_l / g.L_l;
  grad.segment<2>(2) = -grad.segment<2>(0) - grad.segment<2>(4);

  PairMatrix pm;
  pm.dofs = pair_dofs(net, pair);
  const double kv = attrs.kappa_v[pair];
  for (Index r = 0; r < 6; ++r) {
    for (Index c = r; c < 6; ++c) {
      const double v = -kv * (grad[r] * grad[c]);
      pm.mat(r, c) = v;
      pm.mat(c, r) = v;
    }
  }
  return pm;
}

PairMatrix force_poisson(const Network& net, const EdgeAttributes& eattrs,
                         const PairAttributes& pattrs, int pair,
                         const EdgeIndexMap& edge_map) {
  const auto [i, j, l] = net.pairs[pair];
  const PairGeometry g = pair_geometry(net, pair);
  const auto e_ij = edge_map.find(edge_key(i, j));
  const auto e_jl = edge_map.find(edge_key(j, l));
  if (e_ij == edge_map.end() || e_jl == edge_map.end()) {
    throw Error("force_poisson: pair " + std::to_string(pair) +
                " references missing edge");
  }
  const double w_i = eattrs.width[e_ij->second];
  const double w_l = eattrs.width[e_jl->second];
  const double z = net.thickness;
  const double eta = pattrs.eta[pair];
  const double gamma = pattrs.gamma[pair];

  const double c_i = eta * w_i * z / g.L_i;
  const double c_l = eta * w_l * z / g.L_l;
  // |n_aj . d_bj| is the sine of the angle between the two edges, the same
  // for both orderings.
  const double chi = std::abs(g.e_i.x() * g.e_l.y() - g.e_i.y() * g.e_l.x());
  const double beta = eta * gamma * chi * z * w_i * w_l / (2.0 * g.L_i * g.L_l);

  // F_i = -c_i [(d_i - d_j).e_i] e_i - beta [(d_l - d_j).e_l] e_i, and the
  // same with i and l swapped; F_j closes the force balance. Blocks are
  // composed so the matrix is symmetric to the last bit.
  const Eigen::Matrix2d P_i = scaled_outer(c_i, g.e_i);
  const Eigen::Matrix2d P_l = scaled_outer(c_l, g.e_l);
  const Eigen::Matrix2d X = beta * (g.e_i * g.e_l.transpose());

  PairMatrix pm;
  pm.dofs = pair_dofs(net, pair);
  auto& m = pm.mat;
  m.block<2, 2>(0, 0) = -P_i;
  m.block<2, 2>(4, 4) = -P_l;
  m.block<2, 2>(0, 4) = -X;
  m.block<2, 2>(4, 0) = -X.transpose();
  m.block<2, 2>(0, 2) = P_i + X;
  m.block<2, 2>(2, 0) = m.block<2, 2>(0, 2).transpose();
  m.block<2, 2>(4, 2) = P_l + X.transpose();
  m.block<2, 2>(2, 4) = m.block<2, 2>(4, 2).transpose();
  m.block<2, 2>(2, 2) = -(P_i + P_l + (X + Eigen::Matrix2d(X.transpose())));
  return pm;
}

std::pair<EdgeAttributes, PairAttributes> map_lame(const Network& net,
                                                   const LameField& field, double c) {
  if (field.l.size() != net.num_nodes() || field.mu.size() != net.num_nodes()) {
    throw Error("map_lame: field must hold one value per node");
  }
  if (c <= 0.0) throw Error("map_lame: scale must be positive");

  const auto kappa_edge = [&](int a, int b) {
    return 0.5 * (field.mu[a] + field.mu[b]) / (4.0 * c * c);
  };

  EdgeAttributes ea;
  ea.width.resize(net.num_edges());
  ea.modulus.resize(net.num_edges());
  for (int e = 0; e < net.num_edges(); ++e) {
    const auto [i, j] = net.edges[e];
    const double mu_mean = 0.5 * (field.mu[i] + field.mu[j]);
    const double l_mean = 0.5 * (field.l[i] + field.l[j]);
    ea.modulus[e] = (2.0 * mu_mean + l_mean) / (5.0 * c);
    ea.width[e] = c * net.edge_length(e);
  }

  // The torque coefficient enters as the product kappa * V. The volume
  // factor is taken as half the fiber volume w*L*z of each edge, averaged
  // over the pair; on a regular grid this reproduces the shear coupling of
  // the continuum elasticity limit exactly.
  const EdgeIndexMap edge_map = edge_index_map(net);
  const auto half_volume = [&](int a, int b) {
    const int e = edge_map.at(edge_key(a, b));
    return 0.5 * ea.width[e] * net.edge_length(e) * net.thickness;
  };

  PairAttributes pa;
  pa.kappa_v.resize(net.num_pairs());
  pa.eta.resize(net.num_pairs());
  pa.gamma.resize(net.num_pairs());
  for (int p = 0; p < net.num_pairs(); ++p) {
    const auto [i, j, l] = net.pairs[p];
    const double kappa = 0.5 * (kappa_edge(i, j) + kappa_edge(j, l));
    const double volume = 0.5 * (half_volume(i, j) + half_volume(j, l));
    pa.kappa_v[p] = kappa * volume;
    pa.eta[p] = (2.0 * field.mu[j] + field.l[j]) / (5.0 * c);
    pa.gamma[p] = 2.0 * field.l[j] / (4.0 * pa.eta[p] * c * c);
  }
  return {std::move(ea), std::move(pa)};
}

namespace {

void check_attr_sizes(const Network& net, const EdgeAttributes& eattrs,
                      const PairAttributes& pattrs) {
  if (eattrs.width.size() != net.num_edges() ||
      eattrs.modulus.size() != net.num_edges()) {
    throw Error("assemble_elasticity: edge attribute size mismatch");
  }
  if (pattrs.kappa_v.size() != net.num_pairs() ||
      pattrs.eta.size() != net.num_pairs() ||
      pattrs.gamma.size() != net.num_pairs()) {
    throw Error("assemble_elasticity: pair attribute size mismatch");
  }
  if ((eattrs.width.array() <= 0.0).any() || (eattrs.modulus.array() <= 0.0).any()) {
    throw Error("assemble_elasticity: edge attributes must be positive");
  }
  if ((pattrs.kappa_v.array() < 0.0).any() || (pattrs.eta.array() < 0.0).any() ||
      (pattrs.gamma.array() < 0.0).any()) {
    throw Error("assemble_elasticity: pair attributes must be nonnegative");
  }
}

}  // namespace

SpMat assemble_elasticity(const Network& net, const EdgeAttributes& eattrs,
                          const PairAttributes& pattrs) {
  if (net.dofs_per_node != 2) throw Error("assemble_elasticity: needs d = 2");
  check_attr_sizes(net, eattrs, pattrs);
  const EdgeIndexMap edge_map = edge_index_map(net);

  std::vector<Triplet> trips;
  trips.reserve(16 * net.edges.size() + 72 * net.pairs.size());
  for (int e = 0; e < net.num_edges(); ++e) {
    const EdgeMatrix em = force_extension(net, eattrs, e);
    add_scaled_element(trips, em.dofs, em.mat, -1.0);
  }
  for (int p = 0; p < net.num_pairs(); ++p) {
    const PairMatrix ang = force_angular(net, pattrs, p);
    add_scaled_element(trips, ang.dofs, ang.mat, -1.0);
    const PairMatrix poi = force_poisson(net, eattrs, pattrs, p, edge_map);
    add_scaled_element(trips, poi.dofs, poi.mat, -1.0);
  }
  return assemble(trips, net.num_dofs(), net.num_dofs());
}

SpMat assemble_laplacian(const Network& net, const Vector& edge_weights) {
  if (net.dofs_per_node != 1) throw Error("assemble_laplacian: needs d = 1");
  if (edge_weights.size() != net.num_edges()) {
    throw Error("assemble_laplacian: weight per edge required");
  }
  std::vector<Triplet> trips;
  trips.reserve(4 * net.edges.size());
  for (int e = 0; e < net.num_edges(); ++e) {
    const auto [i, j] = net.edges[e];
    const double w = edge_weights[e];
    trips.emplace_back(i, i, w);
    trips.emplace_back(j, j, w);
    trips.emplace_back(i, j, -w);
    trips.emplace_back(j, i, -w);
  }
  return assemble(trips, net.num_nodes(), net.num_nodes());
}

}  // namespace netlod
