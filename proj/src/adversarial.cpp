#include "graphst/adversarial.hpp"

#include <algorithm>
#include <cmath>

#include "graphst/csv.hpp"
#include "graphst/encoder.hpp"
#include "graphst/errors.hpp"

namespace graphst {

namespace {

constexpr double kBudgetSlack = 1e-9;

void check_flip_matrix(const Matrix& flips) {
  if (flips.rows() != flips.cols()) throw ValidationError("flip matrix must be square");
  for (int i = 0; i < flips.rows(); ++i) {
    if (flips.at(i, i) != 0.0) throw ValidationError("flip matrix must have zero diagonal");
    for (int j = i + 1; j < flips.cols(); ++j) {
      if (flips.at(i, j) != flips.at(j, i))
        throw ValidationError("flip matrix must be symmetric");
      if (flips.at(i, j) != 0.0 && flips.at(i, j) != 1.0)
        throw ValidationError("flip matrix entries must be 0 or 1");
    }
  }
}

// Collect the strict upper triangle into a 1 x K row.
Matrix upper_triangle(const Matrix& m) {
  const int n = m.rows();
  Matrix out(1, n * (n - 1) / 2);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out[k++] = m.at(i, j);
  return out;
}

Matrix from_upper_triangle(const Matrix& u, int n) {
  Matrix out(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      out.at(i, j) = u[k];
      out.at(j, i) = u[k];
      ++k;
    }
  return out;
}

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

double adv_loss_value(const Matrix& htilde_ref, const Matrix& hhat, double tau) {
  Tape t;
  return adv_loss(t.constant(htilde_ref), t.constant(hhat), tau).scalar();
}

}  // namespace

Var relaxed_normalized_adjacency(Tape& t, Var ledge, const Matrix& adjacency) {
  const int n = adjacency.rows();
  Matrix base = adjacency;
  Matrix toggle_mask(n, n);
  for (int i = 0; i < n; ++i) {
    base.at(i, i) += 1.0;
    for (int j = 0; j < n; ++j)
      if (i != j) toggle_mask.at(i, j) = 1.0 - 2.0 * adjacency.at(i, j);
  }
  Var m = t.add(t.constant(std::move(base)), t.hadamard(ledge, t.constant(std::move(toggle_mask))));
  Var inv_sqrt_deg = t.pow(t.row_sum(m), -0.5);
  return t.hadamard(m, t.matmul(inv_sqrt_deg, t.transpose(inv_sqrt_deg)));
}

Matrix flip_apply(const Matrix& a, const Matrix& flips) {
  if (!a.same_shape(flips)) throw ShapeError("flip_apply: shape mismatch");
  check_flip_matrix(flips);
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = out[i] + flips[i] - 2.0 * out[i] * flips[i];  // XOR on 0/1 values
  return out;
}

Matrix project_budget_box(const Matrix& y, double budget) {
  if (budget < 0.0) throw ConfigError("project_budget_box: budget must be non-negative");
  Matrix clipped = y;
  double sum = 0.0, max_entry = 0.0;
  for (std::size_t i = 0; i < clipped.size(); ++i) {
    max_entry = std::max(max_entry, y[i]);
    clipped[i] = clamp01(y[i]);
    sum += clipped[i];
  }
  if (sum <= budget + kBudgetSlack) return clipped;

  // sum(clip01(y - theta)) is non-increasing in theta; bracket [0, max(y)]
  // always contains the root because the shifted sum vanishes at max(y).
  const auto shifted_sum = [&](double theta) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += clamp01(y[i] - theta);
    return s;
  };
  double lo = 0.0, hi = max_entry;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double s = shifted_sum(mid);
    if (std::fabs(s - budget) <= 1e-10) {
      lo = hi = mid;
      break;
    }
    if (s > budget)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-14 * std::max(1.0, max_entry)) break;
  }
  const double theta = 0.5 * (lo + hi);
  Matrix out = y;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = clamp01(y[i] - theta);
  return out;
}

Matrix project_linf(const Matrix& m, double bound) {
  if (bound < 0.0) throw ConfigError("project_linf: bound must be non-negative");
  Matrix out = m;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::clamp(out[i], -bound, bound);
  return out;
}

Matrix bernoulli_round(const Matrix& probs, double max_flips, Rng& rng) {
  const int n = probs.rows();
  if (probs.cols() != n) throw ShapeError("bernoulli_round: matrix must be square");
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (probs[i] < -1e-9 || probs[i] > 1.0 + 1e-9)
      throw ValidationError("bernoulli_round: probabilities must lie in [0,1]");
  const long budget = static_cast<long>(std::floor(max_flips + kBudgetSlack));

  std::vector<std::pair<int, int>> flips;
  for (int attempt = 0; attempt < 16; ++attempt) {
    flips.clear();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.bernoulli(clamp01(probs.at(i, j)))) flips.push_back({i, j});
    if (static_cast<long>(flips.size()) <= budget) break;
  }
  if (static_cast<long>(flips.size()) > budget) {
    // Keep the most probable flips, drop the rest.
    std::stable_sort(flips.begin(), flips.end(), [&](const auto& a, const auto& b) {
      return probs.at(a.first, a.second) > probs.at(b.first, b.second);
    });
    flips.resize(budget);
  }
  Matrix out(n, n);
  for (const auto& [i, j] : flips) {
    out.at(i, j) = 1.0;
    out.at(j, i) = 1.0;
  }
  return out;
}

Var adv_loss(Var htilde, Var hhat, double tau) { return info_nce(htilde, hhat, tau); }

AdversarialView pgd_attack(const MultiViewGraph& g, const Matrix& h0,
                           const std::vector<Matrix>& encoder_weights,
                           const Matrix& htilde_ref, const AttackConfig& cfg, Rng& rng,
                           std::vector<AttackTraceRow>* trace) {
  if (cfg.budgets.edge_flips < 0.0 || cfg.budgets.feat_linf < 0.0)
    throw ConfigError("pgd_attack: budgets must be non-negative");
  const int n = g.node_count();
  const Matrix& adjacency = g.adjacency;

  PerturbationState state;
  state.edge_flip_probs = Matrix(n, n);
  state.feat_delta = Matrix(h0.rows(), htilde_ref.cols());
  state.budgets = cfg.budgets;

  const Matrix h_clean =
      propagate_value(symmetric_normalize(adjacency), h0, encoder_weights);

  for (int step = 1; step <= cfg.steps; ++step) {
    Tape t;
    Var ledge = t.leaf(state.edge_flip_probs);
    Var lfeat = t.leaf(state.feat_delta);
    std::vector<Var> weights;
    weights.reserve(encoder_weights.size());
    for (const Matrix& w : encoder_weights) weights.push_back(t.constant(w));

    Var anorm = relaxed_normalized_adjacency(t, ledge, adjacency);
    Var hhat = t.add(propagate(t, anorm, t.constant(h0), weights), lfeat);
    Var loss = adv_loss(t.constant(htilde_ref), hhat, cfg.tau);
    t.backward(loss);

    // The free variables are the upper-triangle entries; each appears twice
    // in the symmetric matrix, so its gradient is the sum of both mirrors.
    const Matrix g_edge = t.grad(ledge);
    Matrix ascended = state.edge_flip_probs;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double step_val =
            ascended.at(i, j) + cfg.edge_step * (g_edge.at(i, j) + g_edge.at(j, i));
        ascended.at(i, j) = step_val;
        ascended.at(j, i) = step_val;
      }
    state.edge_flip_probs = from_upper_triangle(
        project_budget_box(upper_triangle(ascended), cfg.budgets.edge_flips), n);

    const Matrix g_feat = t.grad(lfeat);
    for (std::size_t i = 0; i < state.feat_delta.size(); ++i) {
      const double sign = g_feat[i] > 0.0 ? 1.0 : (g_feat[i] < 0.0 ? -1.0 : 0.0);
      state.feat_delta[i] += cfg.feat_step * sign;
    }
    state.feat_delta = project_linf(state.feat_delta, cfg.budgets.feat_linf);

    if (trace) {
      double flip_mass = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) flip_mass += state.edge_flip_probs.at(i, j);
      trace->push_back({step, loss.scalar(), flip_mass, state.feat_delta.max_abs()});
    }
  }

  // Discretize: Bernoulli candidates plus the unflipped fallback; the view
  // with the largest adversarial loss wins.
  AdversarialView best;
  best.ahat = adjacency;
  {
    Matrix hhat = h_clean;
    for (std::size_t i = 0; i < hhat.size(); ++i) hhat[i] += state.feat_delta[i];
    best.hhat = std::move(hhat);
  }
  double best_loss = adv_loss_value(htilde_ref, best.hhat, cfg.tau);

  constexpr int kRoundingDraws = 4;
  for (int draw = 0; draw < kRoundingDraws; ++draw) {
    const Matrix flips = bernoulli_round(state.edge_flip_probs, cfg.budgets.edge_flips, rng);
    Matrix ahat = flip_apply(adjacency, flips);
    Matrix hhat = propagate_value(symmetric_normalize(ahat), h0, encoder_weights);
    for (std::size_t i = 0; i < hhat.size(); ++i) hhat[i] += state.feat_delta[i];
    const double loss = adv_loss_value(htilde_ref, hhat, cfg.tau);
    if (loss > best_loss) {
      best_loss = loss;
      best.ahat = std::move(ahat);
      best.hhat = std::move(hhat);
    }
  }
  return best;
}

void write_attack_trace(const std::vector<AttackTraceRow>& trace, const std::string& path) {
  CsvTable t;
  t.header = {"step", "adv_loss", "flip_mass", "feat_norm"};
  for (const auto& row : trace)
    t.rows.push_back({std::to_string(row.step), format_double(row.adv_loss),
                      format_double(row.flip_mass), format_double(row.feat_norm)});
  write_csv(path, t);
}

}  // namespace graphst
