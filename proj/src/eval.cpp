#include "graphst/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "graphst/csv.hpp"
#include "graphst/errors.hpp"

namespace graphst {

namespace {

double soft_threshold(double x, double threshold) {
  if (x > threshold) return x - threshold;
  if (x < -threshold) return x + threshold;
  return 0.0;
}

}  // namespace

std::vector<double> lasso_fit_predict(const Matrix& x_train, const std::vector<double>& y_train,
                                      const Matrix& x_test, double alpha,
                                      std::vector<double>* objective_trace) {
  if (alpha < 0.0) throw ConfigError("lasso: alpha must be non-negative");
  const int n = x_train.rows();
  const int p = x_train.cols();
  if (n == 0) throw DegenerateInputError("lasso: empty training set");
  if (static_cast<int>(y_train.size()) != n)
    throw ShapeError("lasso: rows(x) must equal len(y)");
  if (x_test.cols() != p) throw ShapeError("lasso: test feature width mismatch");

  // Standardize features; constant columns are skipped (zero coefficient).
  std::vector<double> mean(p, 0.0), stddev(p, 0.0);
  for (int k = 0; k < p; ++k) {
    for (int i = 0; i < n; ++i) mean[k] += x_train.at(i, k);
    mean[k] /= n;
    for (int i = 0; i < n; ++i) {
      const double d = x_train.at(i, k) - mean[k];
      stddev[k] += d * d;
    }
    stddev[k] = std::sqrt(stddev[k] / n);
  }
  Matrix xs(n, p);
  for (int k = 0; k < p; ++k)
    for (int i = 0; i < n; ++i)
      xs.at(i, k) = stddev[k] > 0.0 ? (x_train.at(i, k) - mean[k]) / stddev[k] : 0.0;

  double y_mean = 0.0;
  for (double y : y_train) y_mean += y;
  y_mean /= n;

  std::vector<double> beta(p, 0.0);
  std::vector<double> residual(n);
  for (int i = 0; i < n; ++i) residual[i] = y_train[i] - y_mean;

  auto objective = [&]() {
    double sq = 0.0, l1 = 0.0;
    for (double r : residual) sq += r * r;
    for (double b : beta) l1 += std::fabs(b);
    return 0.5 * sq / n + alpha * l1;
  };

  double prev_objective = objective();
  if (objective_trace) objective_trace->push_back(prev_objective);
  for (int sweep = 0; sweep < 10000; ++sweep) {
    double max_change = 0.0;
    for (int k = 0; k < p; ++k) {
      if (stddev[k] == 0.0) continue;
      // rho = (1/n) x_k . (residual + x_k * beta_k); columns have unit variance.
      double rho = 0.0;
      for (int i = 0; i < n; ++i) rho += xs.at(i, k) * residual[i];
      rho = rho / n + beta[k];
      const double updated = soft_threshold(rho, alpha);
      const double delta = updated - beta[k];
      if (delta != 0.0) {
        for (int i = 0; i < n; ++i) residual[i] -= delta * xs.at(i, k);
        beta[k] = updated;
        max_change = std::max(max_change, std::fabs(delta));
      }
    }
    const double obj = objective();
    if (obj > prev_objective + 1e-10 * std::max(1.0, prev_objective))
      throw NumericalError("lasso: objective increased during coordinate descent");
    prev_objective = obj;
    if (objective_trace) objective_trace->push_back(obj);
    if (max_change < 1e-8) break;
  }

  std::vector<double> predictions(x_test.rows(), y_mean);
  for (int i = 0; i < x_test.rows(); ++i)
    for (int k = 0; k < p; ++k)
      if (stddev[k] > 0.0 && beta[k] != 0.0)
        predictions[i] += beta[k] * (x_test.at(i, k) - mean[k]) / stddev[k];
  return predictions;
}

Metrics compute_metrics(const std::vector<double>& pred, const std::vector<double>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw ShapeError("compute_metrics: need equal non-empty vectors");
  Metrics m;
  double sq = 0.0, mape_sum = 0.0;
  int mape_count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double err = pred[i] - truth[i];
    m.mae += std::fabs(err);
    sq += err * err;
    if (truth[i] != 0.0) {
      mape_sum += std::fabs(err) / std::fabs(truth[i]);
      ++mape_count;
    }
  }
  m.mae /= pred.size();
  m.rmse = std::sqrt(sq / pred.size());
  m.mape = mape_count > 0 ? mape_sum / mape_count
                          : std::numeric_limits<double>::quiet_NaN();
  return m;
}

Metrics kfold_lasso_eval(const Matrix& embeddings, const std::vector<double>& labels,
                         int k_folds, double alpha, Rng& rng) {
  const int n = embeddings.rows();
  if (static_cast<int>(labels.size()) != n)
    throw ShapeError("kfold_lasso_eval: labels must match embedding rows");
  if (n < 2) throw DegenerateInputError("kfold_lasso_eval: need at least two regions");
  const int folds = std::clamp(k_folds, 2, n);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);

  std::vector<double> pred(n, 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<int> test_idx, train_idx;
    for (int i = 0; i < n; ++i)
      (i % folds == f ? test_idx : train_idx).push_back(order[i]);
    if (test_idx.empty() || train_idx.empty()) continue;

    Matrix x_train(static_cast<int>(train_idx.size()), embeddings.cols());
    Matrix x_test(static_cast<int>(test_idx.size()), embeddings.cols());
    std::vector<double> y_train(train_idx.size());
    for (std::size_t i = 0; i < train_idx.size(); ++i) {
      y_train[i] = labels[train_idx[i]];
      for (int d = 0; d < embeddings.cols(); ++d)
        x_train.at(static_cast<int>(i), d) = embeddings.at(train_idx[i], d);
    }
    for (std::size_t i = 0; i < test_idx.size(); ++i)
      for (int d = 0; d < embeddings.cols(); ++d)
        x_test.at(static_cast<int>(i), d) = embeddings.at(test_idx[i], d);

    const std::vector<double> fold_pred = lasso_fit_predict(x_train, y_train, x_test, alpha);
    for (std::size_t i = 0; i < test_idx.size(); ++i) pred[test_idx[i]] = fold_pred[i];
  }
  return compute_metrics(pred, labels);
}

std::vector<StratumResult> density_strata_eval(const Matrix& embeddings,
                                               const std::vector<double>& labels,
                                               const std::vector<std::vector<double>>& series,
                                               int k_folds, double alpha, Rng& rng) {
  const int n = embeddings.rows();
  if (static_cast<int>(series.size()) != n)
    throw ShapeError("density_strata_eval: series must cover every region");

  std::vector<int> low_band, high_band;
  for (int j = 0; j < n; ++j) {
    if (series[j].empty()) continue;
    int nonzero = 0;
    for (double v : series[j])
      if (v != 0.0) ++nonzero;
    const double scaled = 5.0 * nonzero / static_cast<double>(series[j].size());
    if (scaled <= 0.0) continue;  // regions with an all-zero series are excluded
    (scaled <= 2.5 ? low_band : high_band).push_back(j);
  }

  std::vector<StratumResult> out;
  auto evaluate = [&](const std::vector<int>& members, const std::string& name) {
    if (members.size() < 2) return;  // absent or too small to cross-validate
    Matrix sub(static_cast<int>(members.size()), embeddings.cols());
    std::vector<double> sub_labels(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      sub_labels[i] = labels[members[i]];
      for (int d = 0; d < embeddings.cols(); ++d)
        sub.at(static_cast<int>(i), d) = embeddings.at(members[i], d);
    }
    StratumResult result;
    result.stratum = name;
    result.region_count = static_cast<int>(members.size());
    result.metrics = kfold_lasso_eval(sub, sub_labels, k_folds, alpha, rng);
    out.push_back(std::move(result));
  };
  evaluate(low_band, "(0.0, 2.5]");
  evaluate(high_band, "(2.5, 5.0]");
  return out;
}

std::vector<int> kmeans(const Matrix& points, int k, int restarts, Rng& rng) {
  const int n = points.rows();
  const int d = points.cols();
  if (k < 1 || k > n) throw ConfigError("kmeans: need 1 <= k <= points");

  auto sq_dist = [&](int i, const std::vector<double>& center) {
    double s = 0.0;
    for (int c = 0; c < d; ++c) {
      const double diff = points.at(i, c) - center[c];
      s += diff * diff;
    }
    return s;
  };

  std::vector<int> best_assign(n, 0);
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < restarts; ++restart) {
    // k-means++ seeding.
    std::vector<std::vector<double>> centers;
    std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
    int first = rng.uniform_int(n);
    centers.push_back(std::vector<double>(d));
    for (int c = 0; c < d; ++c) centers[0][c] = points.at(first, c);
    while (static_cast<int>(centers.size()) < k) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        min_d[i] = std::min(min_d[i], sq_dist(i, centers.back()));
        total += min_d[i];
      }
      int chosen = 0;
      if (total > 0.0) {
        double u = rng.uniform() * total;
        for (int i = 0; i < n; ++i) {
          u -= min_d[i];
          if (u <= 0.0) {
            chosen = i;
            break;
          }
        }
      } else {
        chosen = rng.uniform_int(n);
      }
      centers.push_back(std::vector<double>(d));
      for (int c = 0; c < d; ++c) centers.back()[c] = points.at(chosen, c);
    }

    std::vector<int> assign(n, -1);
    for (int iter = 0; iter < 100; ++iter) {
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        int arg = 0;
        double best = sq_dist(i, centers[0]);
        for (int c = 1; c < k; ++c) {
          const double dist = sq_dist(i, centers[c]);
          if (dist < best) {
            best = dist;
            arg = c;
          }
        }
        if (assign[i] != arg) {
          assign[i] = arg;
          changed = true;
        }
      }
      if (!changed) break;
      for (int c = 0; c < k; ++c) {
        std::vector<double> sum(d, 0.0);
        int count = 0;
        for (int i = 0; i < n; ++i)
          if (assign[i] == c) {
            ++count;
            for (int cc = 0; cc < d; ++cc) sum[cc] += points.at(i, cc);
          }
        if (count == 0) {
          // Reseed an empty cluster at the point farthest from its center.
          int far = 0;
          double far_d = -1.0;
          for (int i = 0; i < n; ++i) {
            const double dist = sq_dist(i, centers[assign[i]]);
            if (dist > far_d) {
              far_d = dist;
              far = i;
            }
          }
          for (int cc = 0; cc < d; ++cc) centers[c][cc] = points.at(far, cc);
        } else {
          for (int cc = 0; cc < d; ++cc) centers[c][cc] = sum[cc] / count;
        }
      }
    }
    double inertia = 0.0;
    for (int i = 0; i < n; ++i) inertia += sq_dist(i, centers[assign[i]]);
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_assign = assign;
    }
  }
  return best_assign;
}

double normalized_mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty())
    throw ShapeError("nmi: need equal non-empty labelings");
  const int n = static_cast<int>(a.size());
  const int ka = *std::max_element(a.begin(), a.end()) + 1;
  const int kb = *std::max_element(b.begin(), b.end()) + 1;
  std::vector<std::vector<int>> joint(ka, std::vector<int>(kb, 0));
  std::vector<int> ca(ka, 0), cb(kb, 0);
  for (int i = 0; i < n; ++i) {
    joint[a[i]][b[i]] += 1;
    ca[a[i]] += 1;
    cb[b[i]] += 1;
  }
  double mi = 0.0, ha = 0.0, hb = 0.0;
  for (int i = 0; i < ka; ++i)
    if (ca[i] > 0) {
      const double p = static_cast<double>(ca[i]) / n;
      ha -= p * std::log(p);
    }
  for (int j = 0; j < kb; ++j)
    if (cb[j] > 0) {
      const double q = static_cast<double>(cb[j]) / n;
      hb -= q * std::log(q);
    }
  for (int i = 0; i < ka; ++i)
    for (int j = 0; j < kb; ++j)
      if (joint[i][j] > 0) {
        const double pij = static_cast<double>(joint[i][j]) / n;
        mi += pij * std::log(pij * n * n / (static_cast<double>(ca[i]) * cb[j]));
      }
  if (ha == 0.0 || hb == 0.0) return 0.0;
  return mi / std::sqrt(ha * hb);
}

std::vector<AblationVariant> standard_variants() {
  std::vector<AblationVariant> v;
  v.push_back({"full", {}});
  v.push_back({"wo_ads", {.disable_adv = true}});
  v.push_back({"wo_vgae", {.disable_vgae = true}});
  v.push_back({"wo_ir", {.disable_ir = true}});
  v.push_back({"wo_im", {.disable_infomin = true}});
  return v;
}

std::vector<AblationRow> run_ablation(const Dataset& dataset, const Hyperparameters& hp,
                                      const std::vector<AblationVariant>& variants,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::optional<std::vector<int>>& communities,
                                      int k_folds, double alpha, int threads) {
  if (!dataset.labels) throw ValidationError("run_ablation: dataset has no labels");

  struct Cell {
    const AblationVariant* variant;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& variant : variants)
    for (std::uint64_t seed : seeds) cells.push_back({&variant, seed});

  std::vector<AblationRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& cell = cells[i];
      Hyperparameters cell_hp = hp;
      cell_hp.seed = cell.seed;
      TrainResult result = train(dataset, cell_hp, cell.variant->flags);

      AblationRow row;
      row.variant = cell.variant->name;
      row.seed = cell.seed;
      Rng eval_rng(cell.seed ^ 0x5eedULL);
      row.metrics =
          kfold_lasso_eval(result.embeddings, dataset.labels->targets, k_folds, alpha, eval_rng);
      if (communities) {
        const int k = *std::max_element(communities->begin(), communities->end()) + 1;
        Rng km_rng(99);  // fixed seed for the clustering itself
        const std::vector<int> assign = kmeans(result.embeddings, k, 50, km_rng);
        row.nmi = normalized_mutual_information(assign, *communities);
      }
      rows[i] = std::move(row);
    }
  };

  const int worker_count =
      std::max(1, std::min<int>(threads, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int w = 0; w < worker_count; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return rows;
}

void write_eval_report(const std::vector<AblationRow>& rows,
                       const std::vector<StratumResult>& strata, const std::string& path) {
  CsvTable table;
  table.header = {"variant", "seed", "task", "stratum", "mae", "mape", "rmse", "nmi"};
  for (const AblationRow& row : rows)
    table.rows.push_back({row.variant, std::to_string(row.seed), "lasso", "all",
                          format_double(row.metrics.mae), format_double(row.metrics.mape),
                          format_double(row.metrics.rmse),
                          row.nmi >= 0.0 ? format_double(row.nmi) : ""});
  for (const StratumResult& s : strata)
    table.rows.push_back({"full", "", "lasso", s.stratum, format_double(s.metrics.mae),
                          format_double(s.metrics.mape), format_double(s.metrics.rmse), ""});
  write_csv(path, table);
}

}  // namespace graphst
