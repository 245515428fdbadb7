#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace graphst {

struct GradCheckResult {
  std::string op;
  double max_rel_error = 0.0;
  int cases = 0;
};

// Central finite-difference verification (h = 1e-5) of every differentiable
// operation against the tape, on random inputs with at most 10 graph nodes:
// matmul chains, info_nce, propagate (including adjacency gradients),
// reparameterize, gate, cross_loss and the information regularization.
// Relative error is the max entry gap over the largest gradient magnitude.
std::vector<GradCheckResult> run_gradcheck(std::uint64_t seed, int cases_per_op);

}  // namespace graphst
