#pragma once

#include <vector>

#include "graphst/graph.hpp"
#include "graphst/matrix.hpp"
#include "graphst/tape.hpp"

namespace graphst {

struct EncoderParams {
  std::vector<Matrix> weights;  // L square d x d layer weights
};

EncoderParams init_encoder(int dim, int depth, Rng& rng);

// Broadcast the J region rows to every view node of the fused graph.
Matrix init_features(const Matrix& region_embeddings, const MultiViewGraph& g);

// Layer-sum graph convolution: H^(0) = h0, H^(l) = relu(anorm H^(l-1) W^(l-1)^T),
// returns sum_{l=0}^{L} H^(l). Differentiable w.r.t. h0, every weight, and the
// normalized adjacency itself (the attack needs adjacency gradients).
Var propagate(Tape& t, Var anorm, Var h0, const std::vector<Var>& weights);

// Value-level convenience for gradient-free paths.
Matrix propagate_value(const Matrix& anorm, const Matrix& h0, const std::vector<Matrix>& weights);

}  // namespace graphst
