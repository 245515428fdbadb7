#pragma once

#include <string>
#include <utility>
#include <vector>

#include "graphst/dataset.hpp"
#include "graphst/matrix.hpp"

namespace graphst {

enum class View { kPoi, kMobility, kSpatial };

struct ViewNode {
  int region = 0;
  View view = View::kPoi;
  int slot = -1;  // >= 0 iff view == kMobility
};

// Edge lists use view-local node indices: region id for POI/SPATIAL,
// region * T + slot for MOBILITY.
using EdgeList = std::vector<std::pair<int, int>>;

// Fused multi-view region graph. Node order is the POI block, then the
// time-expanded MOBILITY block (region-major), then the SPATIAL block, so
// |V| = J + J*T + J. Adjacency is dense 0/1 with zero diagonal; self-loops
// appear only inside the normalization.
struct MultiViewGraph {
  std::vector<ViewNode> nodes;
  Matrix adjacency;
  int region_count = 0;  // J
  int slot_count = 0;    // T

  int node_count() const { return static_cast<int>(nodes.size()); }
  int poi_node(int region) const { return region; }
  int mobility_node(int region, int slot) const {
    return region_count + region * slot_count + slot;
  }
  int spatial_node(int region) const {
    return region_count + region_count * slot_count + region;
  }
  int edge_count() const;  // undirected edges
};

struct NormalizedAdjacency {
  Matrix values;  // D^{-1/2} (A + I) D^{-1/2}
};

// Undirected edge (j, j') iff cos(ebar_j, ebar_j') strictly exceeds the
// threshold. Zero-norm embedding rows are rejected.
EdgeList build_poi_graph(const Matrix& ebar, double threshold);

// One undirected edge per distinct ((r_s, t_s), (r_d, t_d)) pair.
EdgeList build_mobility_graph(const TrajectorySet& traj);

// Undirected edge (j, j') iff 0 < dist[j][j'] <= radius.
EdgeList build_spatial_graph(const DistanceMatrix& dist, double radius);

// Stacks the three views and adds per-region alignment edges pairwise across
// views: POI(j)-SPATIAL(j) plus POI(j)-MOBILITY(j,t) and
// SPATIAL(j)-MOBILITY(j,t) for every slot t.
MultiViewGraph fuse_views(const EdgeList& poi_edges, const EdgeList& mobility_edges,
                          const EdgeList& spatial_edges, int region_count, int slot_count);

NormalizedAdjacency normalized_adjacency(const MultiViewGraph& g);

// D^{-1/2} (A + I) D^{-1/2} for a raw symmetric 0/1 adjacency.
Matrix symmetric_normalize(const Matrix& adjacency);

// graph.csv + edges.csv dump; bit-exactly re-loadable.
void write_graph(const MultiViewGraph& g, const std::string& dir);
MultiViewGraph load_graph(const std::string& dir);

}  // namespace graphst
