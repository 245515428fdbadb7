#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "graphst/errors.hpp"
#include "graphst/graph.hpp"
#include "testutil.hpp"

using namespace graphst;

namespace {

std::set<std::pair<int, int>> edge_set(const EdgeList& edges) {
  std::set<std::pair<int, int>> out;
  for (auto [a, b] : edges) out.insert({std::min(a, b), std::max(a, b)});
  return out;
}

double cosine(const Matrix& m, int a, int b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int d = 0; d < m.cols(); ++d) {
    dot += m.at(a, d) * m.at(b, d);
    na += m.at(a, d) * m.at(a, d);
    nb += m.at(b, d) * m.at(b, d);
  }
  return dot / std::sqrt(na * nb);
}

}  // namespace

TEST_CASE("poi graph threshold behavior") {
  Matrix same = Matrix::from_rows({{1, 2}, {1, 2}});
  CHECK(build_poi_graph(same, 0.5).size() == 1);

  Matrix ortho = Matrix::from_rows({{1, 0}, {0, 1}});
  CHECK(build_poi_graph(ortho, 0.5).empty());

  Matrix zero = Matrix::from_rows({{1, 0}, {0, 0}});
  CHECK_THROWS_AS(build_poi_graph(zero, 0.5), DegenerateInputError);
  CHECK_THROWS_AS(build_poi_graph(same, 1.0), ConfigError);
}

TEST_CASE("poi graph equals exhaustive pairwise cosine scan") {
  Rng rng(17);
  Matrix embs = testutil::random_matrix(rng, 5, 4, 0.1, 1.0);
  auto edges = edge_set(build_poi_graph(embs, 0.3));
  std::set<std::pair<int, int>> expected;
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j)
      if (cosine(embs, i, j) > 0.3) expected.insert({i, j});
  CHECK(edges == expected);
}

TEST_CASE("mobility graph from records") {
  TrajectorySet traj;
  traj.slot_count = 2;
  traj.records = {{0, 1, 0, 1}};
  auto edges = build_mobility_graph(traj);
  REQUIRE(edges.size() == 1);
  CHECK(edges[0] == std::pair<int, int>{0 * 2 + 0, 1 * 2 + 1});

  traj.records.push_back({0, 1, 0, 1});  // duplicate collapses
  CHECK(build_mobility_graph(traj).size() == 1);
}

TEST_CASE("mobility graph equals brute-force set construction") {
  Rng rng(23);
  TrajectorySet traj;
  traj.slot_count = 3;
  for (int i = 0; i < 50; ++i) {
    TrajectoryRecord r;
    r.src_region = rng.uniform_int(4);
    r.dst_region = rng.uniform_int(4);
    r.src_slot = rng.uniform_int(3);
    r.dst_slot = r.src_slot + rng.uniform_int(3 - r.src_slot);
    traj.records.push_back(r);
  }
  std::set<std::pair<int, int>> expected;
  for (const auto& r : traj.records) {
    int a = r.src_region * 3 + r.src_slot;
    int b = r.dst_region * 3 + r.dst_slot;
    if (a == b) continue;
    expected.insert({std::min(a, b), std::max(a, b)});
  }
  CHECK(edge_set(build_mobility_graph(traj)) == expected);
}

TEST_CASE("spatial graph radius threshold") {
  DistanceMatrix close{Matrix::from_rows({{0, 0.5}, {0.5, 0}})};
  CHECK(build_spatial_graph(close, 1.0).size() == 1);
  DistanceMatrix far{Matrix::from_rows({{0, 2.0}, {2.0, 0}})};
  CHECK(build_spatial_graph(far, 1.0).empty());
}

TEST_CASE("spatial graph equals brute-force threshold scan") {
  Rng rng(5);
  const int n = 10;
  Matrix d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      d.at(i, j) = rng.uniform(0.0, 3.0);
      d.at(j, i) = d.at(i, j);
    }
  auto edges = edge_set(build_spatial_graph(DistanceMatrix{d}, 1.5));
  std::set<std::pair<int, int>> expected;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (d.at(i, j) > 0.0 && d.at(i, j) <= 1.5) expected.insert({i, j});
  CHECK(edges == expected);
}

TEST_CASE("fuse_views alignment edge counts") {
  MultiViewGraph tiny = fuse_views({}, {}, {}, 1, 1);
  CHECK(tiny.node_count() == 3);
  CHECK(tiny.edge_count() == 3);  // complete triangle on one region

  MultiViewGraph g = fuse_views({}, {}, {}, 2, 2);
  CHECK(g.node_count() == 2 + 4 + 2);
  CHECK(g.edge_count() == 10);  // J * (1 + 2T)
}

TEST_CASE("fused adjacency is symmetric 0/1 with zero diagonal (fuzz)") {
  Rng rng(19);
  for (int c = 0; c < 1000; ++c) {
    const int j_count = 1 + rng.uniform_int(4);
    const int t_count = 1 + rng.uniform_int(3);
    EdgeList poi, spatial, mobility;
    for (int i = 0; i < j_count; ++i)
      for (int j = i + 1; j < j_count; ++j) {
        if (rng.bernoulli(0.4)) poi.push_back({i, j});
        if (rng.bernoulli(0.4)) spatial.push_back({i, j});
      }
    const int mob_nodes = j_count * t_count;
    for (int i = 0; i < mob_nodes; ++i)
      for (int j = i + 1; j < mob_nodes; ++j)
        if (rng.bernoulli(0.2)) mobility.push_back({i, j});

    MultiViewGraph g = fuse_views(poi, mobility, spatial, j_count, t_count);
    for (int i = 0; i < g.node_count(); ++i) {
      CHECK(g.adjacency.at(i, i) == 0.0);
      for (int j = 0; j < g.node_count(); ++j) {
        CHECK(g.adjacency.at(i, j) == g.adjacency.at(j, i));
        CHECK((g.adjacency.at(i, j) == 0.0 || g.adjacency.at(i, j) == 1.0));
      }
    }
  }
}

TEST_CASE("region relabeling permutes the fused adjacency") {
  Rng rng(29);
  const int j_count = 4, t_count = 2;
  EdgeList poi = {{0, 1}, {2, 3}};
  EdgeList spatial = {{1, 2}};
  EdgeList mobility = {{0 * t_count + 0, 3 * t_count + 1}};
  MultiViewGraph g = fuse_views(poi, mobility, spatial, j_count, t_count);

  const std::vector<int> perm = {2, 0, 3, 1};  // new id of old region j
  auto remap_region = [&](const EdgeList& edges) {
    EdgeList out;
    for (auto [a, b] : edges) out.push_back({perm[a], perm[b]});
    return out;
  };
  EdgeList mob_remap;
  for (auto [a, b] : mobility)
    mob_remap.push_back({perm[a / t_count] * t_count + a % t_count,
                         perm[b / t_count] * t_count + b % t_count});
  MultiViewGraph gp =
      fuse_views(remap_region(poi), mob_remap, remap_region(spatial), j_count, t_count);

  auto node_map = [&](int idx) {
    const ViewNode& n = g.nodes[idx];
    switch (n.view) {
      case View::kPoi: return gp.poi_node(perm[n.region]);
      case View::kMobility: return gp.mobility_node(perm[n.region], n.slot);
      default: return gp.spatial_node(perm[n.region]);
    }
  };
  for (int i = 0; i < g.node_count(); ++i)
    for (int j = 0; j < g.node_count(); ++j)
      CHECK(g.adjacency.at(i, j) == gp.adjacency.at(node_map(i), node_map(j)));
}

TEST_CASE("normalization forced values") {
  CHECK(symmetric_normalize(Matrix(1, 1)) == Matrix(1, 1, 1.0));  // isolated node

  Matrix two = symmetric_normalize(Matrix::from_rows({{0, 1}, {1, 0}}));
  for (std::size_t i = 0; i < two.size(); ++i) CHECK(two[i] == doctest::Approx(0.5));
}

TEST_CASE("normalization matches brute-force D^-1/2 (A+I) D^-1/2") {
  Rng rng(37);
  const int n = 8;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double bit = rng.bernoulli(0.4) ? 1.0 : 0.0;
      a.at(i, j) = bit;
      a.at(j, i) = bit;
    }
  Matrix anorm = symmetric_normalize(a);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double di = 1.0, dj = 1.0;
      for (int k = 0; k < n; ++k) {
        di += a.at(i, k);
        dj += a.at(j, k);
      }
      const double aij = a.at(i, j) + (i == j ? 1.0 : 0.0);
      CHECK(anorm.at(i, j) == doctest::Approx(aij / std::sqrt(di * dj)).epsilon(1e-12));
    }
}

TEST_CASE("normalized adjacency has spectral radius at most one") {
  Rng rng(41);
  for (int c = 0; c < 20; ++c) {
    const int j_count = 2 + rng.uniform_int(3);
    EdgeList poi;
    for (int i = 0; i < j_count; ++i)
      for (int j = i + 1; j < j_count; ++j)
        if (rng.bernoulli(0.5)) poi.push_back({i, j});
    MultiViewGraph g = fuse_views(poi, {}, {}, j_count, 2);
    NormalizedAdjacency anorm = normalized_adjacency(g);

    // Power iteration.
    const int n = g.node_count();
    Matrix v(n, 1, 1.0);
    double lambda = 0.0;
    for (int it = 0; it < 200; ++it) {
      Matrix w = matmul_value(anorm.values, v);
      double norm = 0.0;
      for (int i = 0; i < n; ++i) norm += w.at(i, 0) * w.at(i, 0);
      norm = std::sqrt(norm);
      lambda = norm;
      for (int i = 0; i < n; ++i) v.at(i, 0) = w.at(i, 0) / norm;
    }
    CHECK(lambda <= 1.0 + 1e-9);
  }
}

TEST_CASE("graph dump and reload are bit-exact") {
  Rng rng(43);
  EdgeList poi = {{0, 1}};
  TrajectorySet traj;
  traj.slot_count = 2;
  traj.records = {{0, 2, 0, 1}, {1, 1, 0, 1}};
  EdgeList mobility = build_mobility_graph(traj);
  EdgeList spatial = {{1, 2}};
  MultiViewGraph g = fuse_views(poi, mobility, spatial, 3, 2);

  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "graphst_test_graphdump";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_graph(g, dir.string());
  MultiViewGraph loaded = load_graph(dir.string());
  CHECK(loaded.region_count == g.region_count);
  CHECK(loaded.slot_count == g.slot_count);
  CHECK(loaded.adjacency == g.adjacency);
  for (int i = 0; i < g.node_count(); ++i) {
    CHECK(loaded.nodes[i].region == g.nodes[i].region);
    CHECK(loaded.nodes[i].view == g.nodes[i].view);
    CHECK(loaded.nodes[i].slot == g.nodes[i].slot);
  }
}
