#pragma once

#include <optional>
#include <string>
#include <vector>

#include "graphst/dataset.hpp"
#include "graphst/matrix.hpp"
#include "graphst/rng.hpp"
#include "graphst/trainer.hpp"

namespace graphst {

struct Metrics {
  double mae = 0.0;
  double mape = 0.0;  // NaN sentinel when every target is zero
  double rmse = 0.0;
};

// Coordinate-descent lasso: (1/2n) ||y - a - Xb||^2 + alpha ||b||_1 with an
// unpenalized intercept. Features are standardized internally (constant
// columns get zero coefficients) and predictions are de-standardized.
// Converged when the largest coefficient change in a sweep drops below 1e-8,
// capped at 1e4 sweeps. `objective_trace`, when given, records the objective
// after every sweep.
std::vector<double> lasso_fit_predict(const Matrix& x_train, const std::vector<double>& y_train,
                                      const Matrix& x_test, double alpha,
                                      std::vector<double>* objective_trace = nullptr);

Metrics compute_metrics(const std::vector<double>& pred, const std::vector<double>& truth);

// Region-level k-fold cross validation of lasso on the embeddings.
Metrics kfold_lasso_eval(const Matrix& embeddings, const std::vector<double>& labels,
                         int k_folds, double alpha, Rng& rng);

struct StratumResult {
  std::string stratum;  // "(0.0, 2.5]" or "(2.5, 5.0]"
  int region_count = 0;
  Metrics metrics;
};

// Buckets regions by the nonzero ratio of their activity series (scaled by
// 5) into the two density bands; absent buckets are omitted, regions with an
// all-zero series are excluded.
std::vector<StratumResult> density_strata_eval(const Matrix& embeddings,
                                               const std::vector<double>& labels,
                                               const std::vector<std::vector<double>>& series,
                                               int k_folds, double alpha, Rng& rng);

// Lloyd k-means with k-means++ seeding; best inertia over `restarts`.
std::vector<int> kmeans(const Matrix& points, int k, int restarts, Rng& rng);

// NMI with sqrt normalization; 0 when either clustering carries no information.
double normalized_mutual_information(const std::vector<int>& a, const std::vector<int>& b);

struct AblationVariant {
  std::string name;
  AblationFlags flags;
};

// "full" plus the four single-component knockouts.
std::vector<AblationVariant> standard_variants();

struct AblationRow {
  std::string variant;
  std::uint64_t seed = 0;
  Metrics metrics;  // k-fold lasso on the embeddings
  double nmi = -1.0;  // vs planted communities; -1 when unavailable
};

// Trains each (variant, seed) cell and evaluates the embeddings downstream.
// Cells run on up to `threads` workers; each cell owns its state.
std::vector<AblationRow> run_ablation(const Dataset& dataset, const Hyperparameters& hp,
                                      const std::vector<AblationVariant>& variants,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::optional<std::vector<int>>& communities,
                                      int k_folds, double alpha, int threads);

void write_eval_report(const std::vector<AblationRow>& rows,
                       const std::vector<StratumResult>& strata, const std::string& path);

}  // namespace graphst
