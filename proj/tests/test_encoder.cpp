#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "graphst/encoder.hpp"
#include "graphst/errors.hpp"
#include "testutil.hpp"

using namespace graphst;
using testutil::fd_gradient;
using testutil::grad_rel_error;
using testutil::random_matrix;

namespace {

MultiViewGraph small_graph(int j_count, int t_count, Rng& rng, double density = 0.4) {
  EdgeList poi, spatial;
  for (int i = 0; i < j_count; ++i)
    for (int j = i + 1; j < j_count; ++j) {
      if (rng.bernoulli(density)) poi.push_back({i, j});
      if (rng.bernoulli(density)) spatial.push_back({i, j});
    }
  EdgeList mobility;
  const int mob = j_count * t_count;
  for (int i = 0; i < mob; ++i)
    for (int j = i + 1; j < mob; ++j)
      if (rng.bernoulli(density / 2)) mobility.push_back({i, j});
  return fuse_views(poi, mobility, spatial, j_count, t_count);
}

}  // namespace

TEST_CASE("init_features broadcasts each region row to all of its nodes") {
  Rng rng(3);
  MultiViewGraph g = fuse_views({}, {}, {}, 1, 1);
  Matrix e = Matrix::from_rows({{1.0, 2.0}});
  Matrix h0 = init_features(e, g);
  REQUIRE(h0.rows() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(h0.at(i, 0) == 1.0);
    CHECK(h0.at(i, 1) == 2.0);
  }
  CHECK_THROWS_AS(init_features(Matrix(2, 2), g), ShapeError);
}

TEST_CASE("init_features index map matches brute force") {
  MultiViewGraph g = fuse_views({}, {}, {}, 2, 2);
  Matrix e = Matrix::from_rows({{1, 10}, {2, 20}});
  Matrix h0 = init_features(e, g);
  for (int i = 0; i < g.node_count(); ++i) {
    const int region = g.nodes[i].region;
    CHECK(h0.at(i, 0) == e.at(region, 0));
    CHECK(h0.at(i, 1) == e.at(region, 1));
  }
  // permuting regions permutes blocks consistently
  Matrix swapped = Matrix::from_rows({{2, 20}, {1, 10}});
  Matrix h0s = init_features(swapped, g);
  for (int i = 0; i < g.node_count(); ++i)
    CHECK(h0s.at(i, 0) == (g.nodes[i].region == 0 ? 2 : 1));
}

TEST_CASE("propagate depth zero and zero weights return the input") {
  Matrix anorm = Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}});
  Matrix h0 = Matrix::from_rows({{1.0}, {0.0}});
  CHECK(propagate_value(anorm, h0, {}) == h0);
  CHECK(propagate_value(anorm, h0, {Matrix(1, 1)}) == h0);
}

TEST_CASE("propagate hand-evaluated two-node example") {
  Matrix anorm = Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}});
  Matrix h0 = Matrix::from_rows({{1.0}, {0.0}});
  Matrix w = Matrix::from_rows({{1.0}});
  Matrix h = propagate_value(anorm, h0, {w});
  CHECK(h.at(0, 0) == doctest::Approx(1.5));
  CHECK(h.at(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("propagate output dominates non-negative input entrywise") {
  Rng rng(7);
  Matrix anorm = random_matrix(rng, 6, 6, 0.0, 0.3);
  Matrix h0 = random_matrix(rng, 6, 4, 0.0, 1.0);
  std::vector<Matrix> weights = {random_matrix(rng, 4, 4, 0.0, 0.5),
                                 random_matrix(rng, 4, 4, 0.0, 0.5)};
  Matrix h = propagate_value(anorm, h0, weights);
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(h[i] >= h0[i]);
}

TEST_CASE("propagate gradients match finite differences including adjacency") {
  Rng rng(11);
  MultiViewGraph g = small_graph(3, 1, rng);  // |V| = 9
  Matrix anorm0 = normalized_adjacency(g).values;
  Matrix h0 = random_matrix(rng, g.node_count(), 3);
  Matrix w0 = random_matrix(rng, 3, 3);
  Matrix w1 = random_matrix(rng, 3, 3);

  auto f = [&](const std::vector<Matrix>& in) {
    return propagate_value(in[0], in[1], {in[2], in[3]}).sum();
  };
  Tape t;
  Var anorm = t.leaf(anorm0), h = t.leaf(h0), a = t.leaf(w0), b = t.leaf(w1);
  t.backward(t.sum_all(propagate(t, anorm, h, {a, b})));
  const std::vector<Matrix> in = {anorm0, h0, w0, w1};
  CHECK(grad_rel_error(t.grad(anorm), fd_gradient(f, in, 0)) < 1e-6);
  CHECK(grad_rel_error(t.grad(h), fd_gradient(f, in, 1)) < 1e-6);
  CHECK(grad_rel_error(t.grad(a), fd_gradient(f, in, 2)) < 1e-6);
  CHECK(grad_rel_error(t.grad(b), fd_gradient(f, in, 3)) < 1e-6);
}

TEST_CASE("propagate is permutation-equivariant") {
  Rng rng(13);
  const int n = 5, d = 3;
  Matrix a = random_matrix(rng, n, n, 0.0, 1.0);
  // symmetrize so it looks like a normalized adjacency
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) a.at(i, j) = a.at(j, i);
  Matrix h0 = random_matrix(rng, n, d);
  Matrix w = random_matrix(rng, d, d);
  Matrix h = propagate_value(a, h0, {w});

  const std::vector<int> perm = {2, 4, 0, 3, 1};
  Matrix pa(n, n), ph0(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) pa.at(i, j) = a.at(perm[i], perm[j]);
    for (int j = 0; j < d; ++j) ph0.at(i, j) = h0.at(perm[i], j);
  }
  Matrix hp = propagate_value(pa, ph0, {w});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      CHECK(hp.at(i, j) == doctest::Approx(h.at(perm[i], j)).epsilon(1e-12));
}
