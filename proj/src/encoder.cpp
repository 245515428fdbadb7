#include "graphst/encoder.hpp"

#include <cmath>

#include "graphst/errors.hpp"

namespace graphst {

EncoderParams init_encoder(int dim, int depth, Rng& rng) {
  if (dim < 1 || depth < 0) throw ConfigError("init_encoder: bad dimensions");
  EncoderParams p;
  const double scale = std::sqrt(1.0 / dim);
  for (int l = 0; l < depth; ++l)
    p.weights.push_back(gaussian_matrix(rng, dim, dim, 0.0, scale));
  return p;
}

Matrix init_features(const Matrix& region_embeddings, const MultiViewGraph& g) {
  if (region_embeddings.rows() != g.region_count)
    throw ShapeError("init_features: embedding rows must equal region count");
  const int dim = region_embeddings.cols();
  Matrix h0(g.node_count(), dim);
  for (int i = 0; i < g.node_count(); ++i) {
    const int region = g.nodes[i].region;
    for (int d = 0; d < dim; ++d) h0.at(i, d) = region_embeddings.at(region, d);
  }
  return h0;
}

Var propagate(Tape& t, Var anorm, Var h0, const std::vector<Var>& weights) {
  if (anorm.rows() != anorm.cols() || anorm.cols() != h0.rows())
    throw ShapeError("propagate: adjacency and feature shapes disagree");
  Var total = h0;
  Var current = h0;
  for (const Var& w : weights) {
    if (w.rows() != w.cols() || w.rows() != h0.cols())
      throw ShapeError("propagate: layer weights must be d x d");
    current = t.relu(t.matmul(t.matmul(anorm, current), t.transpose(w)));
    total = t.add(total, current);
  }
  return total;
}

Matrix propagate_value(const Matrix& anorm, const Matrix& h0,
                       const std::vector<Matrix>& weights) {
  Tape t;
  std::vector<Var> w;
  w.reserve(weights.size());
  for (const Matrix& m : weights) w.push_back(t.constant(m));
  return propagate(t, t.constant(anorm), t.constant(h0), w).value();
}

}  // namespace graphst
