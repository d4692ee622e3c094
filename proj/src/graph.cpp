#include "tgnn/graph.hpp"

#include <algorithm>
#include <string>

namespace tgnn {

TemporalGraphSpec build_parameter_graph(std::vector<std::string> node_names,
                                        std::vector<Edge> spatial_edges,
                                        std::size_t feature_dim) {
  if (node_names.empty()) {
    fail(ErrorKind::BadConfig, "build_parameter_graph: need at least one node");
  }
  if (feature_dim == 0) {
    fail(ErrorKind::BadConfig, "build_parameter_graph: feature_dim must be >= 1");
  }
  const int n = static_cast<int>(node_names.size());
  for (std::size_t i = 0; i < spatial_edges.size(); ++i) {
    const Edge& e = spatial_edges[i];
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) {
      fail(ErrorKind::InvalidEdge,
           "edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
               " references a node out of range");
    }
    if (e.src == e.dst) {
      fail(ErrorKind::InvalidEdge,
           "self-loop on node " + std::to_string(e.src) +
               " (self influence is carried by the U term)");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (spatial_edges[j] == e) {
        fail(ErrorKind::InvalidEdge, "duplicate edge " + std::to_string(e.src) +
                                         "->" + std::to_string(e.dst));
      }
    }
  }

  TemporalGraphSpec spec;
  spec.node_names = std::move(node_names);
  spec.spatial_edges = std::move(spatial_edges);
  spec.feature_dim = feature_dim;
  spec.neighbor_counts.assign(n, 0);
  spec.in_neighbors.assign(n, {});
  for (const Edge& e : spec.spatial_edges) {
    spec.neighbor_counts[e.dst] += 1;
    spec.in_neighbors[e.dst].push_back(e.src);
  }
  return spec;
}

TemporalGraphSpec default_parameter_graph() {
  return build_parameter_graph({"G_sw", "G_lw", "T_air", "T_pv"},
                               {{0, 3}, {1, 3}, {2, 3}});
}

double aggregation_weight(const TemporalGraphSpec& spec, int target, int source) {
  const int n = static_cast<int>(spec.node_count());
  if (target < 0 || target >= n || source < 0 || source >= n) {
    fail(ErrorKind::NotNeighbor, "aggregation_weight: node index out of range");
  }
  const auto& sources = spec.in_neighbors[target];
  if (std::find(sources.begin(), sources.end(), source) == sources.end()) {
    fail(ErrorKind::NotNeighbor,
         "no edge " + std::to_string(source) + "->" + std::to_string(target));
  }
  return 1.0 / static_cast<double>(spec.neighbor_counts[target]);
}

}  // namespace tgnn
