#include "netlod/network.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <unordered_set>

namespace netlod {

using nlohmann::json;

void validate_network(const Network& net) {
  const int n = net.num_nodes();
  if (net.dofs_per_node != 1 && net.dofs_per_node != 2) {
    throw Error("network: dofs_per_node must be 1 or 2");
  }
  if (net.thickness <= 0.0) throw Error("network: thickness must be positive");
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(net.edges.size());
  for (size_t e = 0; e < net.edges.size(); ++e) {
    const auto [i, j] = net.edges[e];
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw Error("network: edge " + std::to_string(e) + " references missing node");
    }
    if (i == j) throw Error("network: self-loop at edge " + std::to_string(e));
    if (i > j) throw Error("network: edge " + std::to_string(e) + " not canonical (i < j)");
    if (!seen.insert(edge_key(i, j)).second) {
      throw Error("network: duplicate edge (" + std::to_string(i) + ", " +
                  std::to_string(j) + ")");
    }
    if (net.edge_length(static_cast<int>(e)) <= 0.0) {
      throw Error("network: zero-length edge " + std::to_string(e));
    }
  }
  for (size_t p = 0; p < net.pairs.size(); ++p) {
    const auto [i, j, l] = net.pairs[p];
    if (i < 0 || j < 0 || l < 0 || i >= n || j >= n || l >= n) {
      throw Error("network: pair " + std::to_string(p) + " references missing node");
    }
    if (i == l) throw Error("network: degenerate pair " + std::to_string(p));
    if (i > l) throw Error("network: pair " + std::to_string(p) + " not canonical (i < l)");
    if (!seen.count(edge_key(i, j)) || !seen.count(edge_key(j, l))) {
      throw Error("network: pair " + std::to_string(p) + " references missing edge");
    }
  }
}

Network generate_regular(int r) {
  if (r < 2) throw Error("generate_regular: need r >= 2");
  Network net;
  net.dofs_per_node = 2;
  const int side = r + 1;
  net.nodes.resize(2, side * side);
  for (int iy = 0; iy < side; ++iy) {
    for (int ix = 0; ix < side; ++ix) {
      const int id = iy * side + ix;
      net.nodes.col(id) = Eigen::Vector2d(static_cast<double>(ix) / r,
                                          static_cast<double>(iy) / r);
    }
  }
  net.edges.reserve(static_cast<size_t>(2 * r * side));
  for (int iy = 0; iy < side; ++iy) {
    for (int ix = 0; ix < side; ++ix) {
      const int id = iy * side + ix;
      if (ix < r) net.edges.push_back({id, id + 1});
      if (iy < r) net.edges.push_back({id, id + side});
    }
  }
  return net;
}

Network perturb_random(const Network& net, double amplitude, std::uint64_t seed) {
  if (amplitude < 0.0 || amplitude >= 0.5) {
    throw Error("perturb_random: amplitude must be in [0, 0.5)");
  }
  if (net.edges.empty()) throw Error("perturb_random: network has no edges");
  double h = net.edge_length(0);
  for (int e = 1; e < net.num_edges(); ++e) h = std::min(h, net.edge_length(e));

  Network out = net;
  std::mt19937_64 eng(seed);
  for (int i = 0; i < net.num_nodes(); ++i) {
    const double ux = uniform01(eng());
    const double uy = uniform01(eng());
    double dx = (2.0 * ux - 1.0) * amplitude * h;
    double dy = (2.0 * uy - 1.0) * amplitude * h;
    const Eigen::Vector2d p = net.nodes.col(i);
    if (p.x() == 0.0 || p.x() == 1.0) dx = 0.0;
    if (p.y() == 0.0 || p.y() == 1.0) dy = 0.0;
    out.nodes.col(i) = p + Eigen::Vector2d(dx, dy);
  }
  for (int e = 0; e < out.num_edges(); ++e) {
    if (out.edge_length(e) <= 0.0) {
      throw Error("perturb_random: produced zero-length edge " + std::to_string(e));
    }
  }
  return out;
}

Network derive_pairs(const Network& net, PairPolicy policy) {
  if (policy != PairPolicy::AllPairs) throw Error("derive_pairs: unknown policy");
  Network out = net;
  std::vector<std::vector<int>> neighbors(net.num_nodes());
  for (const auto& [i, j] : net.edges) {
    neighbors[i].push_back(j);
    neighbors[j].push_back(i);
  }
  out.pairs.clear();
  for (int j = 0; j < net.num_nodes(); ++j) {
    auto& nb = neighbors[j];
    std::sort(nb.begin(), nb.end());
    for (size_t a = 0; a < nb.size(); ++a) {
      for (size_t b = a + 1; b < nb.size(); ++b) {
        out.pairs.push_back({nb[a], j, nb[b]});
      }
    }
  }
  return out;
}

EdgeIndexMap edge_index_map(const Network& net) {
  EdgeIndexMap map;
  map.reserve(net.edges.size());
  for (int e = 0; e < net.num_edges(); ++e) {
    map.emplace(edge_key(net.edges[e][0], net.edges[e][1]), e);
  }
  return map;
}

IndexSet free_dofs(const BoundaryConditions& bc, Index n) {
  return IndexSet::complement_of(bc.fixed, n);
}

namespace {

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

Vector vector_from_json(const json& a) {
  Vector v(a.size());
  for (size_t k = 0; k < a.size(); ++k) v[static_cast<Index>(k)] = a[k].get<double>();
  return v;
}

}  // namespace

void save_network(const NetworkBundle& bundle, const std::string& path) {
  const Network& net = bundle.net;
  json j;
  j["d"] = net.dofs_per_node;
  j["z"] = net.thickness;
  json nodes = json::array();
  for (int i = 0; i < net.num_nodes(); ++i) {
    nodes.push_back({net.nodes(0, i), net.nodes(1, i)});
  }
  j["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const auto& e : net.edges) edges.push_back({e[0], e[1]});
  j["edges"] = std::move(edges);
  json pairs = json::array();
  for (const auto& p : net.pairs) pairs.push_back({p[0], p[1], p[2]});
  j["pairs"] = std::move(pairs);
  j["edge_attrs"] = {{"width", vector_to_json(bundle.edge_attrs.width)},
                     {"modulus", vector_to_json(bundle.edge_attrs.modulus)}};
  j["pair_attrs"] = {{"kappa_v", vector_to_json(bundle.pair_attrs.kappa_v)},
                     {"eta", vector_to_json(bundle.pair_attrs.eta)},
                     {"gamma", vector_to_json(bundle.pair_attrs.gamma)}};
  j["fixed_dofs"] = bundle.bc.fixed.ids();
  j["fixed_values"] = vector_to_json(bundle.bc.values);

  std::ofstream out(path);
  if (!out) throw Error("save_network: cannot open " + path);
  out << j.dump(1) << "\n";
  if (!out) throw Error("save_network: write failed for " + path);
}

NetworkBundle load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("load_network: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("load_network: " + path + ": " + e.what());
  }
  try {
    NetworkBundle b;
    b.net.dofs_per_node = j.at("d").get<int>();
    b.net.thickness = j.at("z").get<double>();
    const auto& nodes = j.at("nodes");
    b.net.nodes.resize(2, static_cast<Index>(nodes.size()));
    for (size_t i = 0; i < nodes.size(); ++i) {
      b.net.nodes(0, static_cast<Index>(i)) = nodes[i].at(0).get<double>();
      b.net.nodes(1, static_cast<Index>(i)) = nodes[i].at(1).get<double>();
    }
    for (const auto& e : j.at("edges")) {
      b.net.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
    }
    for (const auto& p : j.at("pairs")) {
      b.net.pairs.push_back({p.at(0).get<int>(), p.at(1).get<int>(), p.at(2).get<int>()});
    }
    const auto& ea = j.at("edge_attrs");
    b.edge_attrs.width = vector_from_json(ea.at("width"));
    b.edge_attrs.modulus = vector_from_json(ea.at("modulus"));
    const auto& pa = j.at("pair_attrs");
    b.pair_attrs.kappa_v = vector_from_json(pa.at("kappa_v"));
    b.pair_attrs.eta = vector_from_json(pa.at("eta"));
    b.pair_attrs.gamma = vector_from_json(pa.at("gamma"));
    std::vector<Index> fixed;
    for (const auto& f : j.at("fixed_dofs")) fixed.push_back(f.get<Index>());
    b.bc.fixed = IndexSet::from_sorted(std::move(fixed));
    b.bc.values = vector_from_json(j.at("fixed_values"));
    if (b.bc.values.size() != b.bc.fixed.size()) {
      throw Error("fixed_values length does not match fixed_dofs");
    }
    if (b.edge_attrs.width.size() != static_cast<Index>(b.net.edges.size()) ||
        b.edge_attrs.modulus.size() != static_cast<Index>(b.net.edges.size())) {
      throw Error("edge attribute length does not match edge count");
    }
    if (b.pair_attrs.kappa_v.size() != static_cast<Index>(b.net.pairs.size()) ||
        b.pair_attrs.eta.size() != static_cast<Index>(b.net.pairs.size()) ||
        b.pair_attrs.gamma.size() != static_cast<Index>(b.net.pairs.size())) {
      throw Error("pair attribute length does not match pair count");
    }
    validate_network(b.net);
    return b;
  } catch (const json::exception& e) {
    throw Error("load_network: " + path + ": " + e.what());
  } catch (const Error& e) {
    throw Error("load_network: " + path + ": " + e.what());
  }
}

}  // namespace netlod
