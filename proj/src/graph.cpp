#include "graphst/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "graphst/csv.hpp"
#include "graphst/errors.hpp"

namespace graphst {

int MultiViewGraph::edge_count() const {
  int count = 0;
  for (int i = 0; i < adjacency.rows(); ++i)
    for (int j = i + 1; j < adjacency.cols(); ++j)
      if (adjacency.at(i, j) != 0.0) ++count;
  return count;
}

EdgeList build_poi_graph(const Matrix& ebar, double threshold) {
  if (threshold <= -1.0 || threshold >= 1.0)
    throw ConfigError("build_poi_graph: threshold must lie in (-1, 1)");
  const int n = ebar.rows();
  std::vector<double> norms(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int d = 0; d < ebar.cols(); ++d) s += ebar.at(i, d) * ebar.at(i, d);
    if (s == 0.0)
      throw DegenerateInputError("build_poi_graph: zero-norm embedding row " + std::to_string(i));
    norms[i] = std::sqrt(s);
  }
  EdgeList edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double dot = 0.0;
      for (int d = 0; d < ebar.cols(); ++d) dot += ebar.at(i, d) * ebar.at(j, d);
      if (dot / (norms[i] * norms[j]) > threshold) edges.push_back({i, j});
    }
  return edges;
}

EdgeList build_mobility_graph(const TrajectorySet& traj) {
  const int t_count = traj.slot_count;
  std::set<std::pair<int, int>> unique;
  for (const auto& r : traj.records) {
    int a = r.src_region * t_count + r.src_slot;
    int b = r.dst_region * t_count + r.dst_slot;
    if (a == b) continue;  // self-trip within one slot: no self-loop
    if (a > b) std::swap(a, b);
    unique.insert({a, b});
  }
  return EdgeList(unique.begin(), unique.end());
}

EdgeList build_spatial_graph(const DistanceMatrix& dist, double radius) {
  if (radius <= 0.0) throw ConfigError("build_spatial_graph: radius must be positive");
  EdgeList edges;
  const int n = dist.dist.rows();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d = dist.dist.at(i, j);
      if (d > 0.0 && d <= radius) edges.push_back({i, j});
    }
  return edges;
}

MultiViewGraph fuse_views(const EdgeList& poi_edges, const EdgeList& mobility_edges,
                          const EdgeList& spatial_edges, int region_count, int slot_count) {
  if (region_count < 1 || slot_count < 1)
    throw ConfigError("fuse_views: region and slot counts must be positive");

  MultiViewGraph g;
  g.region_count = region_count;
  g.slot_count = slot_count;
  const int total = region_count * (2 + slot_count);
  g.nodes.reserve(total);
  for (int j = 0; j < region_count; ++j) g.nodes.push_back({j, View::kPoi, -1});
  for (int j = 0; j < region_count; ++j)
    for (int t = 0; t < slot_count; ++t) g.nodes.push_back({j, View::kMobility, t});
  for (int j = 0; j < region_count; ++j) g.nodes.push_back({j, View::kSpatial, -1});

  g.adjacency = Matrix(total, total);
  auto put = [&](int a, int b) {
    if (a == b) return;
    g.adjacency.at(a, b) = 1.0;
    g.adjacency.at(b, a) = 1.0;
  };
  auto check_local = [&](int idx, int bound, const char* view) {
    if (idx < 0 || idx >= bound)
      throw ConfigError(std::string("fuse_views: ") + view + " edge index out of range");
  };

  for (const auto& [a, b] : poi_edges) {
    check_local(a, region_count, "poi");
    check_local(b, region_count, "poi");
    put(g.poi_node(a), g.poi_node(b));
  }
  const int mobility_total = region_count * slot_count;
  for (const auto& [a, b] : mobility_edges) {
    check_local(a, mobility_total, "mobility");
    check_local(b, mobility_total, "mobility");
    put(g.mobility_node(a / slot_count, a % slot_count),
        g.mobility_node(b / slot_count, b % slot_count));
  }
  for (const auto& [a, b] : spatial_edges) {
    check_local(a, region_count, "spatial");
    check_local(b, region_count, "spatial");
    put(g.spatial_node(a), g.spatial_node(b));
  }

  // Cross-view alignment edges for every region.
  for (int j = 0; j < region_count; ++j) {
    put(g.poi_node(j), g.spatial_node(j));
    for (int t = 0; t < slot_count; ++t) {
      put(g.poi_node(j), g.mobility_node(j, t));
      put(g.spatial_node(j), g.mobility_node(j, t));
    }
  }
  return g;
}

Matrix symmetric_normalize(const Matrix& adjacency) {
  const int n = adjacency.rows();
  if (adjacency.cols() != n) throw ShapeError("symmetric_normalize: matrix must be square");
  Matrix with_loops = adjacency;
  for (int i = 0; i < n; ++i) with_loops.at(i, i) += 1.0;
  std::vector<double> inv_sqrt_degree(n);
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < n; ++j) deg += with_loops.at(i, j);
    inv_sqrt_degree[i] = 1.0 / std::sqrt(deg);  // deg >= 1 after self-loops
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      with_loops.at(i, j) *= inv_sqrt_degree[i] * inv_sqrt_degree[j];
  return with_loops;
}

NormalizedAdjacency normalized_adjacency(const MultiViewGraph& g) {
  return NormalizedAdjacency{symmetric_normalize(g.adjacency)};
}

void write_graph(const MultiViewGraph& g, const std::string& dir) {
  CsvTable nodes;
  nodes.header = {"node_index", "region", "view", "slot"};
  for (int i = 0; i < g.node_count(); ++i) {
    const ViewNode& n = g.nodes[i];
    const char* view = n.view == View::kPoi        ? "POI"
                       : n.view == View::kMobility ? "MOBILITY"
                                                   : "SPATIAL";
    nodes.rows.push_back({std::to_string(i), std::to_string(n.region), view,
                          n.view == View::kMobility ? std::to_string(n.slot) : ""});
  }
  write_csv(dir + "/graph.csv", nodes);

  CsvTable edges;
  edges.header = {"a", "b"};
  for (int i = 0; i < g.adjacency.rows(); ++i)
    for (int j = i + 1; j < g.adjacency.cols(); ++j)
      if (g.adjacency.at(i, j) != 0.0)
        edges.rows.push_back({std::to_string(i), std::to_string(j)});
  write_csv(dir + "/edges.csv", edges);
}

MultiViewGraph load_graph(const std::string& dir) {
  const std::string node_path = dir + "/graph.csv";
  CsvTable nodes = read_csv(node_path);
  if (nodes.header != std::vector<std::string>{"node_index", "region", "view", "slot"})
    throw ParseError(node_path + " line 1: header must be node_index,region,view,slot");

  MultiViewGraph g;
  g.nodes.resize(nodes.rows.size());
  int max_region = -1, max_slot = -1;
  for (std::size_t r = 0; r < nodes.rows.size(); ++r) {
    const int line = static_cast<int>(r) + 2;
    const long idx = parse_int_field(nodes.rows[r][0], node_path, line, 1);
    if (idx < 0 || idx >= static_cast<long>(nodes.rows.size()))
      throw ValidationError(node_path + " line " + std::to_string(line) + ": bad node index");
    ViewNode n;
    n.region = static_cast<int>(parse_int_field(nodes.rows[r][1], node_path, line, 2));
    const std::string& view = nodes.rows[r][2];
    if (view == "POI")
      n.view = View::kPoi;
    else if (view == "MOBILITY")
      n.view = View::kMobility;
    else if (view == "SPATIAL")
      n.view = View::kSpatial;
    else
      throw ParseError(node_path + " line " + std::to_string(line) + ": unknown view " + view);
    n.slot = n.view == View::kMobility
                 ? static_cast<int>(parse_int_field(nodes.rows[r][3], node_path, line, 4))
                 : -1;
    g.nodes[idx] = n;
    max_region = std::max(max_region, n.region);
    max_slot = std::max(max_slot, n.slot);
  }
  g.region_count = max_region + 1;
  g.slot_count = max_slot + 1;

  const std::string edge_path = dir + "/edges.csv";
  CsvTable edges = read_csv(edge_path);
  if (edges.header != std::vector<std::string>{"a", "b"})
    throw ParseError(edge_path + " line 1: header must be a,b");
  g.adjacency = Matrix(g.node_count(), g.node_count());
  for (std::size_t r = 0; r < edges.rows.size(); ++r) {
    const int line = static_cast<int>(r) + 2;
    const long a = parse_int_field(edges.rows[r][0], edge_path, line, 1);
    const long b = parse_int_field(edges.rows[r][1], edge_path, line, 2);
    if (a < 0 || b < 0 || a >= g.node_count() || b >= g.node_count() || a == b)
      throw ValidationError(edge_path + " line " + std::to_string(line) + ": bad edge");
    g.adjacency.at(static_cast<int>(a), static_cast<int>(b)) = 1.0;
    g.adjacency.at(static_cast<int>(b), static_cast<int>(a)) = 1.0;
  }
  return g;
}

}  // namespace graphst
