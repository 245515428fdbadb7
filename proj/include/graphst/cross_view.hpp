#pragma once

#include "graphst/graph.hpp"
#include "graphst/matrix.hpp"
#include "graphst/tape.hpp"

namespace graphst {

// Region-aligned view blocks: J x d each; the mobility block is mean-pooled
// over time slots.
struct ViewEmbeddings {
  Var poi, mobility, spatial;
};

ViewEmbeddings split_views(Tape& t, Var htilde, const MultiViewGraph& g);

// InfoNCE over region-aligned rows of two view blocks.
Var pairwise_cl(Var a, Var b, double tau);

// One linear gate (d -> 1) per view pair.
struct GateWeights {
  Matrix w_pm, b_pm;  // 1 x d, 1 x 1
  Matrix w_ms, b_ms;
  Matrix w_ps, b_ps;
};

GateWeights init_gates(int dim, Rng& rng);

struct GateVars {
  Var w_pm, b_pm;
  Var w_ms, b_ms;
  Var w_ps, b_ps;
};

// gamma = relu(mean_j mlp(a_j (*) b_j)): a non-negative learnable pair weight.
Var gate(Tape& t, Var a, Var b, Var weight, Var bias);

// gamma_pm * L_pm + gamma_ms * L_ms + gamma_ps * L_ps
Var cross_loss(Tape& t, const ViewEmbeddings& views, const GateVars& gates, double tau);

}  // namespace graphst
