#pragma once

#include <vector>

#include "graphst/graph.hpp"
#include "graphst/matrix.hpp"
#include "graphst/rng.hpp"
#include "graphst/tape.hpp"

namespace graphst {

struct AttackBudgets {
  double edge_flips = 0.0;  // upper-triangle flip count bound
  double feat_linf = 0.0;   // L-inf bound on the additive embedding delta
};

struct AttackConfig {
  AttackBudgets budgets;
  double edge_step = 0.0;  // ascent step on the relaxed flip matrix
  double feat_step = 0.0;  // sign-ascent step on the feature delta
  int steps = 10;
  double tau = 0.4;
};

// Continuous attack state during the PGD loop.
struct PerturbationState {
  Matrix edge_flip_probs;  // |V| x |V| symmetric, zero diagonal, entries in [0,1]
  Matrix feat_delta;       // |V| x d, |entries| <= feat_linf
  AttackBudgets budgets;
};

struct AdversarialView {
  Matrix ahat;  // perturbed 0/1 adjacency, symmetric, zero diagonal
  Matrix hhat;  // perturbed node embeddings
};

struct AttackTraceRow {
  int step = 0;
  double adv_loss = 0.0;
  double flip_mass = 0.0;  // upper-triangle sum of the relaxed flips
  double feat_norm = 0.0;  // L-inf norm of the feature delta
};

// XOR the 0/1 flip matrix into the adjacency: flipped entries toggle.
Matrix flip_apply(const Matrix& a, const Matrix& flips);

// Euclidean projection onto { x in [0,1]^n : sum x <= budget }. When the
// clipped input already fits the budget it is returned directly; otherwise
// the dual shift is found by bisection on [0, max(y)] to 1e-10.
Matrix project_budget_box(const Matrix& y, double budget);

// Entrywise clamp to [-bound, bound].
Matrix project_linf(const Matrix& m, double bound);

// Sample each upper-triangle entry Bernoulli(p), mirror for symmetry; redraw
// up to 16 times if the flip count exceeds the budget, then greedily drop the
// lowest-probability flips.
Matrix bernoulli_round(const Matrix& probs, double max_flips, Rng& rng);

// InfoNCE between the generative view and the adversarial view.
Var adv_loss(Var htilde, Var hhat, double tau);

// Relaxed perturbed adjacency with self-loops, normalized on the tape so
// gradients reach the flip variables:
//   M = (A + I) + (1 - I - 2A) (*) ledge,  D^{-1/2} M D^{-1/2}
Var relaxed_normalized_adjacency(Tape& t, Var ledge, const Matrix& adjacency);

// Projected-gradient attack: continuously relaxed edge flips through the
// symmetric normalization and the encoder, plus a sign-ascent L-inf feature
// delta added to the encoder output. Discretized once at the end; among the
// rounded candidates (and the unflipped one) the view with the largest
// adversarial loss wins.
AdversarialView pgd_attack(const MultiViewGraph& g, const Matrix& h0,
                           const std::vector<Matrix>& encoder_weights,
                           const Matrix& htilde_ref, const AttackConfig& cfg, Rng& rng,
                           std::vector<AttackTraceRow>* trace = nullptr);

void write_attack_trace(const std::vector<AttackTraceRow>& trace, const std::string& path);

}  // namespace graphst
