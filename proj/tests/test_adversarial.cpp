#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "graphst/adversarial.hpp"
#include "graphst/encoder.hpp"
#include "graphst/errors.hpp"
#include "testutil.hpp"

using namespace graphst;
using testutil::fd_gradient;
using testutil::grad_rel_error;
using testutil::random_matrix;

namespace {

// Independent projection oracle: sum(clip01(y - theta)) is piecewise linear
// with breakpoints at y_i - 1 and y_i; solve the active segment exactly.
Matrix budget_projection_oracle(const Matrix& y, double budget) {
  Matrix clipped = y;
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    clipped[i] = std::clamp(y[i], 0.0, 1.0);
    sum += clipped[i];
  }
  if (sum <= budget + 1e-9) return clipped;

  std::vector<double> breakpoints{0.0};
  for (std::size_t i = 0; i < y.size(); ++i) {
    breakpoints.push_back(y[i]);
    breakpoints.push_back(y[i] - 1.0);
  }
  std::sort(breakpoints.begin(), breakpoints.end());
  auto shifted_sum = [&](double theta) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += std::clamp(y[i] - theta, 0.0, 1.0);
    return s;
  };
  double theta = breakpoints.back();
  for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
    const double lo = breakpoints[k], hi = breakpoints[k + 1];
    if (lo < 0.0 || hi <= lo) continue;
    const double s_lo = shifted_sum(lo), s_hi = shifted_sum(hi);
    if (s_lo >= budget && budget >= s_hi) {
      theta = s_lo == s_hi ? lo : lo + (s_lo - budget) / (s_lo - s_hi) * (hi - lo);
      break;
    }
  }
  Matrix out = y;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(y[i] - theta, 0.0, 1.0);
  return out;
}

double sq_distance(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

MultiViewGraph synth_graph(int j_count, int t_count, Rng& rng) {
  EdgeList poi, spatial, mobility;
  for (int i = 0; i < j_count; ++i)
    for (int j = i + 1; j < j_count; ++j) {
      if (rng.bernoulli(0.4)) poi.push_back({i, j});
      if (rng.bernoulli(0.4)) spatial.push_back({i, j});
    }
  const int mob = j_count * t_count;
  for (int i = 0; i < mob; ++i)
    for (int j = i + 1; j < mob; ++j)
      if (rng.bernoulli(0.25)) mobility.push_back({i, j});
  return fuse_views(poi, mobility, spatial, j_count, t_count);
}

long hamming_upper(const Matrix& a, const Matrix& b) {
  long count = 0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = i + 1; j < a.cols(); ++j)
      if (a.at(i, j) != b.at(i, j)) ++count;
  return count;
}

}  // namespace

TEST_CASE("flip_apply toggles edges") {
  Matrix a = Matrix::from_rows({{0, 1, 0}, {1, 0, 0}, {0, 0, 0}});
  CHECK(flip_apply(a, Matrix(3, 3)) == a);

  Matrix l(3, 3);
  l.at(0, 1) = l.at(1, 0) = 1.0;
  Matrix flipped = flip_apply(a, l);
  CHECK(flipped.at(0, 1) == 0.0);
  CHECK(flip_apply(flipped, l) == a);  // involution

  Matrix asym(3, 3);
  asym.at(0, 1) = 1.0;
  CHECK_THROWS_AS(flip_apply(a, asym), ValidationError);
}

TEST_CASE("project_budget_box hand-solved cases") {
  {
    Matrix y = Matrix::from_rows({{0.2, 0.3}});
    CHECK(project_budget_box(y, 10.0) == y);  // slack budget, clip only
  }
  {
    Matrix out = project_budget_box(Matrix::from_rows({{0.8, 0.8}}), 1.0);
    CHECK(out.at(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(out.at(0, 1) == doctest::Approx(0.5).epsilon(1e-9));
  }
  {
    Matrix out = project_budget_box(Matrix::from_rows({{2.0, 2.0}}), 1.0);
    CHECK(out.at(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(out.at(0, 1) == doctest::Approx(0.5).epsilon(1e-9));
  }
  {
    Matrix clipped = project_budget_box(Matrix::from_rows({{-0.5, 1.8}}), 5.0);
    CHECK(clipped.at(0, 0) == 0.0);
    CHECK(clipped.at(0, 1) == 1.0);
  }
  CHECK_THROWS_AS(project_budget_box(Matrix(1, 1), -1.0), ConfigError);
}

TEST_CASE("project_budget_box satisfies constraints, matches the oracle, idempotent") {
  Rng rng(7);
  for (int c = 0; c < 1000; ++c) {
    const int n = 1 + rng.uniform_int(6);
    const int m = 1 + rng.uniform_int(6);
    Matrix y = random_matrix(rng, n, m, -1.0, 2.0);
    const double budget = rng.uniform(0.0, 0.6 * n * m);
    Matrix p = project_budget_box(y, budget);

    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(p[i] >= 0.0);
      CHECK(p[i] <= 1.0);
      sum += p[i];
    }
    CHECK(sum <= budget + 1e-9);

    Matrix oracle = budget_projection_oracle(y, budget);
    CHECK(std::fabs(sq_distance(p, y) - sq_distance(oracle, y)) < 1e-6);

    Matrix again = project_budget_box(p, budget);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(again[i] == doctest::Approx(p[i]).epsilon(1e-9));
  }
}

TEST_CASE("projection squared distance beats random feasible points") {
  Rng rng(11);
  for (int c = 0; c < 20; ++c) {
    const int n = 4;
    Matrix y = random_matrix(rng, n, n, -0.5, 1.5);
    const double budget = rng.uniform(0.5, 4.0);
    Matrix p = project_budget_box(y, budget);
    const double d_proj = sq_distance(p, y);
    for (int trial = 0; trial < 5000; ++trial) {
      Matrix q = random_matrix(rng, n, n, 0.0, 1.0);
      double sum = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) sum += q[i];
      if (sum > budget) {
        const double scale = budget / sum;
        for (std::size_t i = 0; i < q.size(); ++i) q[i] *= scale;
      }
      CHECK(d_proj <= sq_distance(q, y) + 1e-12);
    }
  }
}

TEST_CASE("project_linf clamps entrywise") {
  Matrix m = Matrix::from_rows({{3.0, -0.2}});
  Matrix p = project_linf(m, 0.5);
  CHECK(p.at(0, 0) == 0.5);
  CHECK(p.at(0, 1) == -0.2);

  Matrix inside = Matrix::from_rows({{0.1, -0.3}});
  CHECK(project_linf(inside, 0.5) == inside);
  CHECK(project_linf(m, 0.0) == Matrix(1, 2));
}

TEST_CASE("bernoulli_round certainty cases and budget") {
  Rng rng(3);
  Matrix ones(4, 4, 1.0);
  for (int i = 0; i < 4; ++i) ones.at(i, i) = 0.0;
  Matrix all = bernoulli_round(ones, 6.0, rng);
  CHECK(hamming_upper(all, Matrix(4, 4)) == 6);

  CHECK(bernoulli_round(Matrix(4, 4), 6.0, rng) == Matrix(4, 4));

  // Budget-constrained rounding truncates to the most probable flips.
  Matrix probs(4, 4);
  probs.at(0, 1) = probs.at(1, 0) = 0.9;
  probs.at(2, 3) = probs.at(3, 2) = 1.0;
  probs.at(0, 2) = probs.at(2, 0) = 1.0;
  Matrix rounded = bernoulli_round(probs, 2.0, rng);
  CHECK(hamming_upper(rounded, Matrix(4, 4)) <= 2);
}

TEST_CASE("bernoulli_round statistical fraction at p = 0.5") {
  Rng rng(13);
  const int n = 142;  // ~1e4 upper-triangle entries
  Matrix probs(n, n, 0.5);
  for (int i = 0; i < n; ++i) probs.at(i, i) = 0.0;
  Matrix rounded = bernoulli_round(probs, 1e9, rng);
  const double total = n * (n - 1) / 2.0;
  const double fraction = hamming_upper(rounded, Matrix(n, n)) / total;
  CHECK(fraction > 0.47);
  CHECK(fraction < 0.53);
}

TEST_CASE("adv_loss values") {
  Tape t;
  Var eye = t.constant(Matrix::identity(2));
  CHECK(adv_loss(eye, eye, 1.0).scalar() ==
        doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-12));
  Var one = t.constant(Matrix::from_rows({{0.3, 0.1}}));
  CHECK(adv_loss(one, one, 0.4).scalar() == doctest::Approx(0.0).epsilon(1e-12));
  Rng rng(5);
  for (int c = 0; c < 100; ++c) {
    Tape t2;
    const int n = 1 + rng.uniform_int(5);
    Var a = t2.constant(random_matrix(rng, n, 3, 0.1, 1.0));
    Var b = t2.constant(random_matrix(rng, n, 3, 0.1, 1.0));
    CHECK(adv_loss(a, b, 0.4).scalar() >= 0.0);
  }
}

TEST_CASE("adv_loss gradient w.r.t. the relaxed flips matches finite differences") {
  Rng rng(17);
  MultiViewGraph g = synth_graph(2, 1, rng);  // 6 nodes
  const int n = g.node_count();
  Matrix h0 = random_matrix(rng, n, 3, 0.1, 1.0);
  Matrix w0 = random_matrix(rng, 3, 3, -0.5, 0.5);
  Matrix href = random_matrix(rng, n, 3, 0.1, 1.0);
  Matrix ledge0(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = rng.uniform(0.05, 0.6);
      ledge0.at(i, j) = v;
      ledge0.at(j, i) = v;
    }

  auto build = [&](Tape& t, Var ledge) {
    Var anorm = relaxed_normalized_adjacency(t, ledge, g.adjacency);
    Var hhat = propagate(t, anorm, t.constant(h0), {t.constant(w0)});
    return adv_loss(t.constant(href), hhat, 0.4);
  };
  auto f = [&](const std::vector<Matrix>& in) {
    Tape t;
    return build(t, t.leaf(in[0])).scalar();
  };
  Tape t;
  Var ledge = t.leaf(ledge0);
  t.backward(build(t, ledge));
  CHECK(grad_rel_error(t.grad(ledge), fd_gradient(f, {ledge0}, 0)) < 1e-5);
}

TEST_CASE("pgd_attack degenerate configurations return the unperturbed view") {
  Rng rng(19);
  MultiViewGraph g = synth_graph(4, 2, rng);
  Matrix h0 = random_matrix(rng, g.node_count(), 4, 0.1, 1.0);
  std::vector<Matrix> weights = {random_matrix(rng, 4, 4, -0.5, 0.5)};
  Matrix href = random_matrix(rng, g.node_count(), 4, 0.1, 1.0);
  const Matrix h_clean = propagate_value(symmetric_normalize(g.adjacency), h0, weights);

  AttackConfig cfg;
  cfg.budgets = {8.0, 0.1};
  cfg.edge_step = 0.5;
  cfg.feat_step = 0.01;
  cfg.steps = 0;
  cfg.tau = 0.4;
  Rng attack_rng(23);
  AdversarialView view = pgd_attack(g, h0, weights, href, cfg, attack_rng);
  CHECK(view.ahat == g.adjacency);
  CHECK(view.hhat == h_clean);

  cfg.steps = 10;
  cfg.budgets = {0.0, 0.0};
  AdversarialView zero = pgd_attack(g, h0, weights, href, cfg, attack_rng);
  CHECK(zero.ahat == g.adjacency);
  CHECK(zero.hhat == h_clean);
}

TEST_CASE("pgd_attack increases the adversarial loss and honors budgets") {
  int improved = 0;
  const int trials = 25;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(1000 + trial);
    MultiViewGraph g = synth_graph(10, 1, rng);  // 30 nodes
    const int n = g.node_count();
    Matrix h0 = random_matrix(rng, n, 6, 0.1, 1.0);
    std::vector<Matrix> weights = {random_matrix(rng, 6, 6, -0.4, 0.4),
                                   random_matrix(rng, 6, 6, -0.4, 0.4)};
    Matrix h_clean = propagate_value(symmetric_normalize(g.adjacency), h0, weights);
    Matrix href = h_clean;
    for (std::size_t i = 0; i < href.size(); ++i) href[i] += 0.05 * rng.gaussian();

    AttackConfig cfg;
    cfg.budgets = {8.0, 0.1};
    cfg.steps = 10;
    cfg.edge_step = 0.5 * cfg.budgets.edge_flips / std::sqrt(cfg.steps);
    cfg.feat_step = cfg.budgets.feat_linf / cfg.steps;
    cfg.tau = 0.4;
    Rng attack_rng(7 + trial);
    std::vector<AttackTraceRow> trace;
    AdversarialView view = pgd_attack(g, h0, weights, href, cfg, attack_rng, &trace);
    CHECK(trace.size() == 10);

    Tape t;
    const double before = adv_loss(t.constant(href), t.constant(h_clean), cfg.tau).scalar();
    const double after = adv_loss(t.constant(href), t.constant(view.hhat), cfg.tau).scalar();
    if (after > before) ++improved;

    // Budgets hold unconditionally.
    CHECK(hamming_upper(view.ahat, g.adjacency) <= 8);
    Matrix base = propagate_value(symmetric_normalize(view.ahat), h0, weights);
    double max_delta = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i)
      max_delta = std::max(max_delta, std::fabs(view.hhat[i] - base[i]));
    CHECK(max_delta <= 0.1 + 1e-12);

    for (int i = 0; i < n; ++i) {
      CHECK(view.ahat.at(i, i) == 0.0);
      for (int j = 0; j < n; ++j) CHECK(view.ahat.at(i, j) == view.ahat.at(j, i));
    }
  }
  CHECK(improved >= 24);  // efficacy on nearly every seed
}
