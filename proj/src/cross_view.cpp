#include "graphst/cross_view.hpp"

#include <cmath>

#include "graphst/errors.hpp"

namespace graphst {

ViewEmbeddings split_views(Tape& t, Var htilde, const MultiViewGraph& g) {
  if (htilde.rows() != g.node_count())
    throw ShapeError("split_views: embedding rows must equal node count");
  const int j_count = g.region_count;
  const int t_count = g.slot_count;

  ViewEmbeddings v;
  v.poi = t.slice_rows(htilde, 0, j_count);
  Var mobility_block = t.slice_rows(htilde, j_count, j_count + j_count * t_count);
  // Mean over the T slots of each region (region-major block layout).
  Matrix pool(j_count, j_count * t_count);
  for (int j = 0; j < j_count; ++j)
    for (int slot = 0; slot < t_count; ++slot) pool.at(j, j * t_count + slot) = 1.0 / t_count;
  v.mobility = t.matmul(t.constant(std::move(pool)), mobility_block);
  v.spatial = t.slice_rows(htilde, j_count + j_count * t_count, g.node_count());
  return v;
}

Var pairwise_cl(Var a, Var b, double tau) { return info_nce(a, b, tau); }

GateWeights init_gates(int dim, Rng& rng) {
  const double scale = std::sqrt(1.0 / dim);
  GateWeights g;
  g.w_pm = gaussian_matrix(rng, 1, dim, 0.0, scale);
  g.w_ms = gaussian_matrix(rng, 1, dim, 0.0, scale);
  g.w_ps = gaussian_matrix(rng, 1, dim, 0.0, scale);
  // Bias 1.0: every pair loss carries gradient from the first step.
  g.b_pm = Matrix(1, 1, 1.0);
  g.b_ms = Matrix(1, 1, 1.0);
  g.b_ps = Matrix(1, 1, 1.0);
  return g;
}

Var gate(Tape& t, Var a, Var b, Var weight, Var bias) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("gate: shape mismatch");
  Var scores = t.add_rowvec(t.matmul(t.hadamard(a, b), t.transpose(weight)), bias);
  return t.relu(t.mean_all(scores));
}

Var cross_loss(Tape& t, const ViewEmbeddings& views, const GateVars& gates, double tau) {
  Var l_pm = pairwise_cl(views.poi, views.mobility, tau);
  Var l_ms = pairwise_cl(views.mobility, views.spatial, tau);
  Var l_ps = pairwise_cl(views.poi, views.spatial, tau);
  Var g_pm = gate(t, views.poi, views.mobility, gates.w_pm, gates.b_pm);
  Var g_ms = gate(t, views.mobility, views.spatial, gates.w_ms, gates.b_ms);
  Var g_ps = gate(t, views.poi, views.spatial, gates.w_ps, gates.b_ps);
  return t.add(t.add(t.hadamard(g_pm, l_pm), t.hadamard(g_ms, l_ms)), t.hadamard(g_ps, l_ps));
}

}  // namespace graphst
