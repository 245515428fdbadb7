#include "graphst/vgae.hpp"

#include <cmath>

#include "graphst/errors.hpp"

namespace graphst {

namespace {

Var mlp2(Tape& t, Var x, Var w1, Var b1, Var w2, Var b2) {
  Var hidden = t.relu(t.add_rowvec(t.matmul(x, t.transpose(w1)), b1));
  return t.add_rowvec(t.matmul(hidden, t.transpose(w2)), b2);
}

}  // namespace

VgaeWeights init_vgae(int dim, Rng& rng) {
  const double scale = std::sqrt(1.0 / dim);
  VgaeWeights w;
  w.mean_w1 = gaussian_matrix(rng, dim, dim, 0.0, scale);
  w.mean_b1 = Matrix(1, dim);
  w.mean_w2 = gaussian_matrix(rng, dim, dim, 0.0, scale);
  w.mean_b2 = Matrix(1, dim);
  w.std_w1 = gaussian_matrix(rng, dim, dim, 0.0, scale);
  w.std_b1 = Matrix(1, dim);
  w.std_w2 = gaussian_matrix(rng, dim, dim, 0.0, scale);
  // Bias the std head low so early draws stay close to the mean head.
  w.std_b2 = Matrix(1, dim, -2.0);
  return w;
}

Var reparameterize(Tape& t, Var h, const VgaeVars& params, Rng& rng) {
  Var mean = vgae_mean_head(t, h, params);
  Var std_dev =
      t.softplus(mlp2(t, h, params.std_w1, params.std_b1, params.std_w2, params.std_b2));
  Var gamma = t.constant(gaussian_matrix(rng, h.rows(), h.cols(), 0.0, 1.0));
  return t.add(t.hadamard(gamma, std_dev), mean);
}

Var vgae_mean_head(Tape& t, Var h, const VgaeVars& params) {
  return mlp2(t, h, params.mean_w1, params.mean_b1, params.mean_w2, params.mean_b2);
}

Var decode_structure(Tape& t, Var htilde) {
  Var logits = t.symmetrize(t.matmul(htilde, t.transpose(htilde)));
  return t.zero_diagonal(t.sigmoid(logits));
}

Var vgae_loss(Var htilde, Var htilde_prime, double tau) {
  return info_nce(htilde, htilde_prime, tau);
}

Var recon_loss(Tape& t, Var atilde, const Matrix& fused_adjacency) {
  const Matrix& av = atilde.value();
  if (!av.same_shape(fused_adjacency)) throw ShapeError("recon_loss: shape mismatch");
  const int n = fused_adjacency.rows();

  long edges = 0, non_edges = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (fused_adjacency.at(i, j) != 0.0)
        ++edges;
      else
        ++non_edges;
    }
  const double pos_weight =
      (edges == 0 || non_edges == 0) ? 1.0 : static_cast<double>(non_edges) / edges;

  // Per-entry weights; the loss is the weighted mean of the BCE terms.
  Matrix w_pos(n, n), w_neg(n, n);
  double weight_total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (fused_adjacency.at(i, j) != 0.0) {
        w_pos.at(i, j) = pos_weight;
        weight_total += pos_weight;
      } else {
        w_neg.at(i, j) = 1.0;
        weight_total += 1.0;
      }
    }
  if (weight_total == 0.0) throw ShapeError("recon_loss: no off-diagonal entries");

  Var p = t.clamp(atilde, 1e-7, 1.0 - 1e-7);
  Var pos_term = t.hadamard(t.log(p), t.constant(std::move(w_pos)));
  Var neg_term = t.hadamard(t.log(t.affine(p, -1.0, 1.0)), t.constant(std::move(w_neg)));
  return t.affine(t.sum_all(t.add(pos_term, neg_term)), -1.0 / weight_total);
}

}  // namespace graphst
