#pragma once

#include "graphst/dataset.hpp"
#include "graphst/matrix.hpp"
#include "graphst/rng.hpp"

namespace graphst {

struct SkipgramConfig {
  int dim = 96;
  int epochs = 50;
  int negatives = 5;
  double lr = 0.025;
};

// Skip-gram with negative sampling over region-as-window category
// co-occurrence. Each region's non-zero categories form one window; every
// ordered pair inside a window is a positive example weighted by the smaller
// of the two counts. Negatives follow the unigram^0.75 distribution. Windows
// are processed in a canonical (content-sorted) order, so the result does not
// depend on region numbering. Returns C x dim category embeddings, averaged
// over the input/output tables.
Matrix skipgram_train(const PoiMatrix& poi, const SkipgramConfig& cfg, Rng& rng);

// One-hidden-layer perceptron; biases are 1 x out row vectors.
struct MlpParams {
  Matrix w1, b1;  // hidden x in, 1 x hidden
  Matrix w2, b2;  // out x hidden, 1 x out
};

MlpParams init_mlp(int in_dim, int hidden_dim, int out_dim, Rng& rng);

// Region embedding from TF-IDF-weighted category vectors through the MLP:
// row j = mlp(sum_c tfidf(j, c) * cat_embs[c]). Regions with no POIs map the
// zero vector (legal input, not an error).
Matrix region_poi_embed(const PoiMatrix& poi, const Matrix& cat_embs, const MlpParams& mlp);

struct AttentionParams {
  Matrix wq, wk, wv;  // each d x d
};

AttentionParams init_attention(int dim, Rng& rng);

// Single-head scaled dot-product self-attention across region rows with a
// residual connection: E = Ebar + softmax(Q K^T / sqrt(d)) V.
Matrix self_attention_init(const Matrix& ebar, const AttentionParams& params);

}  // namespace graphst
