#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "graphst/matrix.hpp"

namespace graphst {

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }
  bool requires_grad() const;
  double scalar() const;  // value of a 1x1 node
  int id() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode gradient tape over dense fp64 matrices. Every op validates
// shapes, records its backward closure, and rejects non-finite results.
// Single-threaded per instance; independent tapes may run concurrently.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Matrix value, bool requires_grad = true);
  Var constant(Matrix value) { return leaf(std::move(value), false); }

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var affine(Var a, double scale, double shift = 0.0);  // scale*a + shift
  Var add_rowvec(Var a, Var row);                       // row: 1 x cols(a)
  Var relu(Var a);
  Var sigmoid(Var a);
  Var softplus(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var pow(Var a, double p);
  Var clamp(Var a, double lo, double hi);
  Var row_sum(Var a);        // n x m -> n x 1
  Var row_normalize(Var a);  // rows rescaled to unit L2 norm (1e-12 floor)
  Var row_dot(Var a, Var b);  // n x 1 of per-row dot products
  Var row_softmax(Var a);
  Var logsumexp_rows(Var a);  // n x m -> n x 1
  Var diagonal(Var a);        // n x n -> n x 1
  Var zero_diagonal(Var a);
  Var symmetrize(Var a);  // (a + a^T) / 2
  Var slice_rows(Var a, int begin, int end);
  Var sum_all(Var a);   // -> 1 x 1
  Var mean_all(Var a);  // -> 1 x 1

  // Reverse sweep from a scalar loss. Populates gradients for every
  // requires_grad node reachable from `loss`; query them with grad().
  void backward(Var loss);

  // Gradient accumulated by the last backward(); a zero matrix of the node's
  // shape when the node was not reached.
  Matrix grad(Var v) const;

  std::size_t node_count() const { return nodes_.size(); }

 private:
  friend class Var;
  using BackwardFn = std::function<void(const Matrix& gout)>;

  struct Node {
    Matrix value;
    BackwardFn backward;  // empty for leaves/constants
    bool requires_grad = false;
  };

  int push(Matrix value, bool requires_grad, BackwardFn backward, const char* op);
  void accumulate(int node, const Matrix& g);
  bool any_grad(Var a) const { return node(a).requires_grad; }
  bool any_grad(Var a, Var b) const { return any_grad(a) || any_grad(b); }
  const Node& node(Var v) const;
  const Matrix& value_of(int id) const { return nodes_[id].value; }

  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
};

// Mean InfoNCE with cosine similarity and in-batch negatives: row j of
// `anchors` is positive with row j of `candidates`, negative with the rest.
Var info_nce(Var anchors, Var candidates, double tau);

// Named gradients, as produced by collecting leaf grads after backward().
using GradMap = std::map<std::string, Matrix>;

}  // namespace graphst
