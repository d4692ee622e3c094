#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tgnn/error.hpp"

namespace tgnn {

/// Directed edge between parameter nodes, source -> destination.
struct Edge {
  int src = 0;
  int dst = 0;
  bool operator==(const Edge&) const = default;
};

/// Static parameter graph: which monitored quantity influences which. The
/// same spatial adjacency is applied at every time step; temporal coupling
/// is carried by the recurrent cell, not by explicit edges.
///
/// Self influence is the separate U*h_i term of the update, so self-edges
/// are rejected here.
struct TemporalGraphSpec {
  std::vector<std::string> node_names;
  std::vector<Edge> spatial_edges;
  std::size_t feature_dim = 1;

  // Derived on construction.
  std::vector<int> neighbor_counts;            // in-edges per node
  std::vector<std::vector<int>> in_neighbors;  // sources per destination

  std::size_t node_count() const { return node_names.size(); }
};

/// Validates the edge list and computes in-neighbor structure.
TemporalGraphSpec build_parameter_graph(std::vector<std::string> node_names,
                                        std::vector<Edge> spatial_edges,
                                        std::size_t feature_dim = 1);

/// The default 4-node graph: G_sw, G_lw and T_air all drive T_pv.
TemporalGraphSpec default_parameter_graph();

/// Mean-aggregation weight 1/|N(target)| for an existing edge source -> target.
double aggregation_weight(const TemporalGraphSpec& spec, int target, int source);

}  // namespace tgnn
