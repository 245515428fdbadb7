#include "graphst/features.hpp"

#include <algorithm>
#include <cmath>

#include "graphst/errors.hpp"

namespace graphst {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct Window {
  std::vector<std::pair<int, double>> items;  // (category, count), count > 0
  bool operator<(const Window& other) const { return items < other.items; }
};

}  // namespace

Matrix skipgram_train(const PoiMatrix& poi, const SkipgramConfig& cfg, Rng& rng) {
  const int category_count = poi.counts.cols();
  const int region_count = poi.counts.rows();
  if (cfg.dim < 1 || cfg.epochs < 0 || cfg.negatives < 0)
    throw ConfigError("skipgram_train: bad config");

  std::vector<double> totals(category_count, 0.0);
  for (int j = 0; j < region_count; ++j)
    for (int c = 0; c < category_count; ++c) totals[c] += poi.counts.at(j, c);
  if (std::all_of(totals.begin(), totals.end(), [](double v) { return v == 0.0; }))
    throw DegenerateInputError("skipgram_train: all-zero POI matrix");

  // word2vec-style init: small uniform inputs, zero outputs. The returned
  // embedding averages the input and output tables so that directly trained
  // co-occurrence (input-of-a vs output-of-b) shows up in row cosines.
  Matrix input(category_count, cfg.dim);
  Matrix output(category_count, cfg.dim);
  for (std::size_t i = 0; i < input.size(); ++i)
    input[i] = rng.uniform(-0.5 / cfg.dim, 0.5 / cfg.dim);
  auto averaged = [&]() {
    Matrix avg = input;
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] = 0.5 * (avg[i] + output[i]);
    return avg;
  };
  if (category_count < 2) return averaged();

  std::vector<Window> windows;
  for (int j = 0; j < region_count; ++j) {
    Window w;
    for (int c = 0; c < category_count; ++c)
      if (poi.counts.at(j, c) > 0.0) w.items.push_back({c, poi.counts.at(j, c)});
    if (w.items.size() >= 2) windows.push_back(std::move(w));
  }
  if (windows.empty()) return averaged();
  // Canonical order makes training invariant to region numbering.
  std::sort(windows.begin(), windows.end());

  // unigram^0.75 negative-sampling table.
  std::vector<double> cum(category_count);
  double z = 0.0;
  for (int c = 0; c < category_count; ++c) {
    z += std::pow(totals[c], 0.75);
    cum[c] = z;
  }
  auto sample_negative = [&]() {
    const double u = rng.uniform() * z;
    return static_cast<int>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
  };

  // Normalize pair weights so the average multiplier is 1.
  double weight_sum = 0.0;
  long pair_count = 0;
  for (const auto& w : windows)
    for (std::size_t a = 0; a < w.items.size(); ++a)
      for (std::size_t b = 0; b < w.items.size(); ++b)
        if (a != b) {
          weight_sum += std::min(w.items[a].second, w.items[b].second);
          ++pair_count;
        }
  const double mean_weight = weight_sum / std::max<long>(pair_count, 1);

  std::vector<double> center_old(cfg.dim);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& w : windows) {
      for (std::size_t a = 0; a < w.items.size(); ++a) {
        for (std::size_t b = 0; b < w.items.size(); ++b) {
          if (a == b) continue;
          const int center = w.items[a].first;
          const int context = w.items[b].first;
          const double mult =
              cfg.lr * std::min(w.items[a].second, w.items[b].second) / mean_weight;
          double* vc = &input.at(center, 0);
          std::copy(vc, vc + cfg.dim, center_old.begin());

          double* uo = &output.at(context, 0);
          double score = 0.0;
          for (int dd = 0; dd < cfg.dim; ++dd) score += center_old[dd] * uo[dd];
          double g = (stable_sigmoid(score) - 1.0) * mult;
          for (int dd = 0; dd < cfg.dim; ++dd) {
            vc[dd] -= g * uo[dd];
            uo[dd] -= g * center_old[dd];
          }
          for (int neg = 0; neg < cfg.negatives; ++neg) {
            const int n = sample_negative();
            if (n == context) continue;
            double* un = &output.at(n, 0);
            score = 0.0;
            for (int dd = 0; dd < cfg.dim; ++dd) score += center_old[dd] * un[dd];
            g = stable_sigmoid(score) * mult;
            for (int dd = 0; dd < cfg.dim; ++dd) {
              vc[dd] -= g * un[dd];
              un[dd] -= g * center_old[dd];
            }
          }
        }
      }
    }
  }
  return averaged();
}

MlpParams init_mlp(int in_dim, int hidden_dim, int out_dim, Rng& rng) {
  MlpParams p;
  p.w1 = gaussian_matrix(rng, hidden_dim, in_dim, 0.0, std::sqrt(2.0 / in_dim));
  p.b1 = Matrix(1, hidden_dim);
  p.w2 = gaussian_matrix(rng, out_dim, hidden_dim, 0.0, std::sqrt(2.0 / hidden_dim));
  p.b2 = Matrix(1, out_dim);
  return p;
}

Matrix region_poi_embed(const PoiMatrix& poi, const Matrix& cat_embs, const MlpParams& mlp) {
  const int region_count = poi.counts.rows();
  const int category_count = poi.counts.cols();
  if (cat_embs.rows() != category_count)
    throw ShapeError("region_poi_embed: category embedding rows must match categories");
  if (mlp.w1.cols() != cat_embs.cols())
    throw ShapeError("region_poi_embed: mlp input dim must match embedding dim");

  // Smooth idf (always positive); tf normalizes within the region.
  std::vector<double> idf(category_count);
  for (int c = 0; c < category_count; ++c) {
    int df = 0;
    for (int j = 0; j < region_count; ++j)
      if (poi.counts.at(j, c) > 0.0) ++df;
    idf[c] = std::log((1.0 + region_count) / (1.0 + df)) + 1.0;
  }

  Matrix weighted(region_count, cat_embs.cols());
  for (int j = 0; j < region_count; ++j) {
    double row_total = 0.0;
    for (int c = 0; c < category_count; ++c) row_total += poi.counts.at(j, c);
    if (row_total == 0.0) continue;  // zero-POI region: zero context vector
    for (int c = 0; c < category_count; ++c) {
      const double w = (poi.counts.at(j, c) / row_total) * idf[c];
      if (w == 0.0) continue;
      for (int d = 0; d < cat_embs.cols(); ++d)
        weighted.at(j, d) += w * cat_embs.at(c, d);
    }
  }

  Matrix hidden = matmul_nt(weighted, mlp.w1);
  for (int j = 0; j < hidden.rows(); ++j)
    for (int d = 0; d < hidden.cols(); ++d)
      hidden.at(j, d) = std::max(0.0, hidden.at(j, d) + mlp.b1.at(0, d));
  Matrix out = matmul_nt(hidden, mlp.w2);
  for (int j = 0; j < out.rows(); ++j)
    for (int d = 0; d < out.cols(); ++d) out.at(j, d) += mlp.b2.at(0, d);
  if (!out.all_finite()) throw NumericalError("region_poi_embed: non-finite embedding");
  return out;
}

AttentionParams init_attention(int dim, Rng& rng) {
  const double scale = std::sqrt(1.0 / dim);
  AttentionParams p;
  p.wq = gaussian_matrix(rng, dim, dim, 0.0, scale);
  p.wk = gaussian_matrix(rng, dim, dim, 0.0, scale);
  p.wv = gaussian_matrix(rng, dim, dim, 0.0, scale);
  return p;
}

Matrix self_attention_init(const Matrix& ebar, const AttentionParams& params) {
  const int dim = ebar.cols();
  if (params.wq.rows() != dim || params.wk.rows() != dim || params.wv.rows() != dim)
    throw ShapeError("self_attention_init: projection shapes must be d x d");
  Matrix q = matmul_nt(ebar, params.wq);
  Matrix k = matmul_nt(ebar, params.wk);
  Matrix v = matmul_nt(ebar, params.wv);
  Matrix scores = matmul_nt(q, k);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] *= inv_sqrt_d;
  // Row softmax.
  for (int i = 0; i < scores.rows(); ++i) {
    double mx = scores.at(i, 0);
    for (int j = 1; j < scores.cols(); ++j) mx = std::max(mx, scores.at(i, j));
    double zsum = 0.0;
    for (int j = 0; j < scores.cols(); ++j) {
      scores.at(i, j) = std::exp(scores.at(i, j) - mx);
      zsum += scores.at(i, j);
    }
    for (int j = 0; j < scores.cols(); ++j) scores.at(i, j) /= zsum;
  }
  Matrix attended = matmul_value(scores, v);
  for (std::size_t i = 0; i < attended.size(); ++i) attended[i] += ebar[i];
  if (!attended.all_finite()) throw NumericalError("self_attention_init: non-finite output");
  return attended;
}

}  // namespace graphst
