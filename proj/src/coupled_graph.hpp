// Copyright 2026 The omtrir Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Internal: bipartite coupling graph shared by the coupled solver and the
// oracle. Every edge joins a "row-side" node and a "column-side" node, so
// each node constrains only row sums or only column sums of its plans.

#include <vector>

#include "omtrir/error.hpp"
#include "omtrir/solvers.hpp"

namespace omtrir::detail {

struct CouplingEdge {
  int row_node;
  int col_node;
  // Output orientation puts the other endpoint on the rows.
  bool transposed;
};

struct CouplingGraph {
  int num_nodes = 0;
  std::vector<int> data;  // node -> target index, -1 for the free barycenter
  std::vector<bool> row_side;
  std::vector<CouplingEdge> edges;
  std::vector<std::vector<int>> incident;

  int num_plans() const { return 2 * static_cast<int>(edges.size()); }
};

inline CouplingGraph make_graph(Topology topology, int num_signals) {
  CouplingGraph g;
  if (num_signals < 1) throw Error("coupled problem needs at least one signal");
  if (topology == Topology::Star) {
    g.num_nodes = num_signals + 1;
    g.data.resize(g.num_nodes);
    g.row_side.assign(g.num_nodes, false);
    for (int k = 0; k < num_signals; ++k) {
      g.data[k] = k;
      g.edges.push_back({num_signals, k, false});
    }
    g.data[num_signals] = -1;
    g.row_side[num_signals] = true;
  } else {
    if (num_signals < 2) throw Error("path coupling needs at least two signals");
    g.num_nodes = num_signals;
    g.data.resize(num_signals);
    g.row_side.resize(num_signals);
    for (int v = 0; v < num_signals; ++v) {
      g.data[v] = v;
      g.row_side[v] = (v % 2 == 0);
    }
    for (int l = 1; l < num_signals; ++l) {
      const int row = (l % 2 == 0) ? l : l - 1;
      const int col = (l % 2 == 0) ? l - 1 : l;
      g.edges.push_back({row, col, row != l});
    }
  }
  g.incident.assign(g.num_nodes, {});
  for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
    g.incident[g.edges[e].row_node].push_back(e);
    g.incident[g.edges[e].col_node].push_back(e);
  }
  return g;
}

}  // namespace omtrir::detail
