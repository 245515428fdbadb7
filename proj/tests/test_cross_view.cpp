#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "graphst/cross_view.hpp"
#include "graphst/errors.hpp"
#include "testutil.hpp"

using namespace graphst;
using testutil::fd_gradient;
using testutil::grad_rel_error;
using testutil::random_matrix;

namespace {

GateVars enter(Tape& t, const GateWeights& w) {
  return GateVars{t.leaf(w.w_pm), t.leaf(w.b_pm), t.leaf(w.w_ms),
                  t.leaf(w.b_ms), t.leaf(w.w_ps), t.leaf(w.b_ps)};
}

}  // namespace

TEST_CASE("split_views pooling") {
  {
    // T = 1: the mobility block passes through unchanged.
    MultiViewGraph g = fuse_views({}, {}, {}, 2, 1);
    Tape t;
    Rng rng(3);
    Matrix h = random_matrix(rng, g.node_count(), 3);
    ViewEmbeddings v = split_views(t, t.constant(h), g);
    for (int j = 0; j < 2; ++j)
      for (int d = 0; d < 3; ++d)
        CHECK(v.mobility.value().at(j, d) == h.at(g.mobility_node(j, 0), d));
  }
  {
    // T = 2 with rows [1,0] and [0,1] pools to [0.5, 0.5].
    MultiViewGraph g = fuse_views({}, {}, {}, 1, 2);
    Tape t;
    Matrix h(g.node_count(), 2);
    h.at(g.mobility_node(0, 0), 0) = 1.0;
    h.at(g.mobility_node(0, 1), 1) = 1.0;
    ViewEmbeddings v = split_views(t, t.constant(h), g);
    CHECK(v.mobility.value().at(0, 0) == doctest::Approx(0.5));
    CHECK(v.mobility.value().at(0, 1) == doctest::Approx(0.5));
  }
  {
    // Identical slot rows pool to the same row.
    MultiViewGraph g = fuse_views({}, {}, {}, 1, 3);
    Tape t;
    Matrix h(g.node_count(), 2);
    for (int slot = 0; slot < 3; ++slot) {
      h.at(g.mobility_node(0, slot), 0) = 0.25;
      h.at(g.mobility_node(0, slot), 1) = -1.5;
    }
    ViewEmbeddings v = split_views(t, t.constant(h), g);
    CHECK(v.mobility.value().at(0, 0) == doctest::Approx(0.25));
    CHECK(v.mobility.value().at(0, 1) == doctest::Approx(-1.5));
  }
}

TEST_CASE("split_views validates the row count") {
  MultiViewGraph g = fuse_views({}, {}, {}, 2, 2);
  Tape t;
  CHECK_THROWS_AS(split_views(t, t.constant(Matrix(3, 2, 1.0)), g), ShapeError);
}

TEST_CASE("pairwise_cl values") {
  {
    Tape t;
    Var one = t.constant(Matrix::from_rows({{0.4, 0.6}}));
    CHECK(pairwise_cl(one, one, 1.0).scalar() == doctest::Approx(0.0).epsilon(1e-12));
  }
  {
    Tape t;
    Var eye = t.constant(Matrix::identity(2));
    const double expected = std::log(1.0 + std::exp(-1.0));
    CHECK(pairwise_cl(eye, eye, 1.0).scalar() == doctest::Approx(expected).epsilon(1e-12));
  }
  Rng rng(7);
  for (int c = 0; c < 50; ++c) {
    Tape t;
    const int n = 1 + rng.uniform_int(4);
    Var a = t.constant(random_matrix(rng, n, 3, 0.1, 1.0));
    Var b = t.constant(random_matrix(rng, n, 3, 0.1, 1.0));
    CHECK(pairwise_cl(a, b, 0.4).scalar() >= 0.0);
  }
}

TEST_CASE("gate bias passthrough and relu kill") {
  Tape t;
  Rng rng(5);
  Var a = t.constant(random_matrix(rng, 3, 4));
  Var b = t.constant(random_matrix(rng, 3, 4));
  Var w = t.constant(Matrix(1, 4));
  CHECK(gate(t, a, b, w, t.constant(Matrix(1, 1, 1.0))).scalar() == doctest::Approx(1.0));
  CHECK(gate(t, a, b, w, t.constant(Matrix(1, 1, -1.0))).scalar() == 0.0);
}

TEST_CASE("gate matches direct formula evaluation") {
  Tape t;
  Matrix a = Matrix::from_rows({{1.0, 2.0}, {0.5, -1.0}});
  Matrix b = Matrix::from_rows({{0.5, 1.0}, {2.0, 0.25}});
  Matrix w = Matrix::from_rows({{0.3, -0.2}});
  const double bias = 0.1;
  const double g =
      gate(t, t.constant(a), t.constant(b), t.constant(w), t.constant(Matrix(1, 1, bias)))
          .scalar();
  double acc = 0.0;
  for (int j = 0; j < 2; ++j)
    acc += 0.3 * a.at(j, 0) * b.at(j, 0) - 0.2 * a.at(j, 1) * b.at(j, 1) + bias;
  CHECK(g == doctest::Approx(std::max(0.0, acc / 2.0)).epsilon(1e-12));
}

TEST_CASE("cross_loss composition") {
  MultiViewGraph g = fuse_views({}, {}, {}, 3, 2);
  Rng rng(11);
  Matrix h = random_matrix(rng, g.node_count(), 4, 0.1, 1.0);
  GateWeights weights = init_gates(4, rng);

  // All gates killed -> zero loss.
  {
    GateWeights dead = weights;
    dead.w_pm = dead.w_ms = dead.w_ps = Matrix(1, 4);
    dead.b_pm = dead.b_ms = dead.b_ps = Matrix(1, 1, -1.0);
    Tape t;
    CHECK(cross_loss(t, split_views(t, t.constant(h), g), enter(t, dead), 0.4).scalar() == 0.0);
  }
  // Unit gates -> plain sum of the three pair losses.
  {
    GateWeights unit = weights;
    unit.w_pm = unit.w_ms = unit.w_ps = Matrix(1, 4);
    unit.b_pm = unit.b_ms = unit.b_ps = Matrix(1, 1, 1.0);
    Tape t;
    ViewEmbeddings v = split_views(t, t.constant(h), g);
    const double total = cross_loss(t, v, enter(t, unit), 0.4).scalar();
    const double expected = pairwise_cl(v.poi, v.mobility, 0.4).scalar() +
                            pairwise_cl(v.mobility, v.spatial, 0.4).scalar() +
                            pairwise_cl(v.poi, v.spatial, 0.4).scalar();
    CHECK(total == doctest::Approx(expected).epsilon(1e-12));
  }
  // Random fixture decomposes into gate * pair products.
  {
    Tape t;
    ViewEmbeddings v = split_views(t, t.constant(h), g);
    GateVars gv = enter(t, weights);
    const double total = cross_loss(t, v, gv, 0.4).scalar();
    const double expected =
        gate(t, v.poi, v.mobility, gv.w_pm, gv.b_pm).scalar() *
            pairwise_cl(v.poi, v.mobility, 0.4).scalar() +
        gate(t, v.mobility, v.spatial, gv.w_ms, gv.b_ms).scalar() *
            pairwise_cl(v.mobility, v.spatial, 0.4).scalar() +
        gate(t, v.poi, v.spatial, gv.w_ps, gv.b_ps).scalar() *
            pairwise_cl(v.poi, v.spatial, 0.4).scalar();
    CHECK(total == doctest::Approx(expected).epsilon(1e-12));
    CHECK(total >= 0.0);
  }
}

TEST_CASE("cross_loss gradients match finite differences") {
  MultiViewGraph g = fuse_views({}, {}, {}, 3, 2);  // 12 nodes
  Rng rng(13);
  Matrix h0 = random_matrix(rng, g.node_count(), 3, 0.1, 1.0);
  GateWeights w = init_gates(3, rng);

  auto f = [&](const std::vector<Matrix>& in) {
    Tape t;
    GateWeights wx = w;
    wx.w_pm = in[1];
    wx.b_ms = in[2];
    return cross_loss(t, split_views(t, t.leaf(in[0]), g), enter(t, wx), 0.4).scalar();
  };
  Tape t;
  Var h = t.leaf(h0);
  GateWeights wx = w;
  Var w_pm = t.leaf(w.w_pm), b_ms = t.leaf(w.b_ms);
  GateVars gv{w_pm,          t.leaf(w.b_pm), t.leaf(w.w_ms),
              b_ms,          t.leaf(w.w_ps), t.leaf(w.b_ps)};
  t.backward(cross_loss(t, split_views(t, h, g), gv, 0.4));
  const std::vector<Matrix> in = {h0, w.w_pm, w.b_ms};
  CHECK(grad_rel_error(t.grad(h), fd_gradient(f, in, 0)) < 1e-6);
  CHECK(grad_rel_error(t.grad(w_pm), fd_gradient(f, in, 1)) < 1e-6);
  CHECK(grad_rel_error(t.grad(b_ms), fd_gradient(f, in, 2)) < 1e-6);
}

TEST_CASE("cross_loss is invariant to a region permutation applied to all blocks") {
  MultiViewGraph g = fuse_views({}, {}, {}, 4, 2);
  Rng rng(17);
  Matrix h = random_matrix(rng, g.node_count(), 3, 0.1, 1.0);
  GateWeights w = init_gates(3, rng);

  const std::vector<int> perm = {2, 0, 3, 1};
  Matrix hp(g.node_count(), 3);
  for (int j = 0; j < 4; ++j)
    for (int d = 0; d < 3; ++d) {
      hp.at(g.poi_node(j), d) = h.at(g.poi_node(perm[j]), d);
      hp.at(g.spatial_node(j), d) = h.at(g.spatial_node(perm[j]), d);
      for (int slot = 0; slot < 2; ++slot)
        hp.at(g.mobility_node(j, slot), d) = h.at(g.mobility_node(perm[j], slot), d);
    }
  Tape t1, t2;
  const double base = cross_loss(t1, split_views(t1, t1.constant(h), g), enter(t1, w), 0.4).scalar();
  const double permuted =
      cross_loss(t2, split_views(t2, t2.constant(hp), g), enter(t2, w), 0.4).scalar();
  CHECK(permuted == doctest::Approx(base).epsilon(1e-10));
}
