#pragma once

#include "graphst/matrix.hpp"
#include "graphst/rng.hpp"
#include "graphst/tape.hpp"

namespace graphst {

// Two two-layer MLP heads (d -> d -> d); the std head output passes through
// softplus so standard deviations stay non-negative.
struct VgaeWeights {
  Matrix mean_w1, mean_b1, mean_w2, mean_b2;
  Matrix std_w1, std_b1, std_w2, std_b2;
};

VgaeWeights init_vgae(int dim, Rng& rng);

// Same fields as VgaeWeights, entered on a tape.
struct VgaeVars {
  Var mean_w1, mean_b1, mean_w2, mean_b2;
  Var std_w1, std_b1, std_w2, std_b2;
};

// Reparameterized Gaussian perturbation of node embeddings:
//   htilde = gamma (*) softplus(mlp_std(h)) + mlp_mean(h)
// with gamma ~ N(0,1) entrywise from `rng`, treated as a constant so the
// gradient flows through the MLPs only.
Var reparameterize(Tape& t, Var h, const VgaeVars& params, Rng& rng);

// Mean head alone: the augmented embedding with the noise at its expectation.
Var vgae_mean_head(Tape& t, Var h, const VgaeVars& params);

// Inner-product structure decoder: sigmoid(htilde htilde^T), symmetrized at
// the logit level, diagonal forced to zero.
Var decode_structure(Tape& t, Var htilde);

// Contrastive loss between two independent reparameterization draws.
Var vgae_loss(Var htilde, Var htilde_prime, double tau);

// Class-weighted binary cross-entropy between decoded edge probabilities and
// the fused 0/1 adjacency, averaged over off-diagonal entries with positive
// weight (#non-edges / #edges); probabilities clipped to [1e-7, 1 - 1e-7].
Var recon_loss(Tape& t, Var atilde, const Matrix& fused_adjacency);

}  // namespace graphst
