#include "graphst/gradcheck.hpp"

#include <cmath>
#include <functional>

#include "graphst/adversarial.hpp"
#include "graphst/cross_view.hpp"
#include "graphst/encoder.hpp"
#include "graphst/matrix.hpp"
#include "graphst/rng.hpp"
#include "graphst/tape.hpp"
#include "graphst/trainer.hpp"
#include "graphst/vgae.hpp"

namespace graphst {

namespace {

Matrix random_matrix(Rng& rng, int rows, int cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(lo, hi);
  return m;
}

Matrix fd_gradient(const std::function<double(const std::vector<Matrix>&)>& f,
                   std::vector<Matrix> inputs, std::size_t k, double h = 1e-5) {
  Matrix grad(inputs[k].rows(), inputs[k].cols());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double orig = inputs[k][i];
    inputs[k][i] = orig + h;
    const double fp = f(inputs);
    inputs[k][i] = orig - h;
    const double fm = f(inputs);
    inputs[k][i] = orig;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double rel_error(const Matrix& analytic, const Matrix& fd) {
  double max_diff = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i)
    max_diff = std::max(max_diff, std::fabs(analytic[i] - fd[i]));
  const double scale = std::max({analytic.max_abs(), fd.max_abs(), 1e-8});
  return max_diff / scale;
}

// One named check: `build` runs the forward pass on a tape and returns the
// scalar loss; the harness compares every input's tape gradient with FD.
struct Check {
  const char* name;
  std::function<std::vector<Matrix>(Rng&)> make_inputs;
  std::function<Var(Tape&, const std::vector<Var>&)> build;
};

MultiViewGraph tiny_graph(Rng& rng) {
  // Fused graph on 3 regions, 1 slot: 9 nodes (<= 10).
  EdgeList poi, spatial, mobility;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      if (rng.bernoulli(0.5)) poi.push_back({i, j});
      if (rng.bernoulli(0.5)) spatial.push_back({i, j});
      if (rng.bernoulli(0.3)) mobility.push_back({i, j});
    }
  return fuse_views(poi, mobility, spatial, 3, 1);
}

std::vector<Check> all_checks() {
  std::vector<Check> checks;

  checks.push_back(
      {"matmul_chain",
       [](Rng& rng) {
         return std::vector<Matrix>{random_matrix(rng, 5, 4, -1, 1),
                                    random_matrix(rng, 4, 6, -1, 1),
                                    random_matrix(rng, 6, 3, -1, 1)};
       },
       [](Tape& t, const std::vector<Var>& v) {
         return t.sum_all(t.relu(t.matmul(t.matmul(v[0], v[1]), v[2])));
       }});

  checks.push_back({"info_nce",
                    [](Rng& rng) {
                      const int n = 2 + rng.uniform_int(7);
                      return std::vector<Matrix>{random_matrix(rng, n, 4, 0.1, 1.0),
                                                 random_matrix(rng, n, 4, 0.1, 1.0)};
                    },
                    [](Tape& t, const std::vector<Var>& v) {
                      return info_nce(v[0], v[1], 0.4);
                    }});

  checks.push_back(
      {"propagate",
       [](Rng& rng) {
         MultiViewGraph g = tiny_graph(rng);
         const int n = g.node_count();
         Matrix ledge(n, n);
         for (int i = 0; i < n; ++i)
           for (int j = i + 1; j < n; ++j) {
             const double p = rng.uniform(0.05, 0.5);
             ledge.at(i, j) = p;
             ledge.at(j, i) = p;
           }
         return std::vector<Matrix>{g.adjacency, ledge, random_matrix(rng, n, 3, 0.1, 1.0),
                                    random_matrix(rng, 3, 3, -0.6, 0.6),
                                    random_matrix(rng, 3, 3, -0.6, 0.6)};
       },
       [](Tape& t, const std::vector<Var>& v) {
         // Adjacency gradients flow through the relaxed normalization (the
         // first input is the raw 0/1 adjacency, held constant).
         Var anorm = relaxed_normalized_adjacency(t, v[1], v[0].value());
         return t.sum_all(propagate(t, anorm, v[2], {v[3], v[4]}));
       }});

  checks.push_back(
      {"reparameterize",
       [](Rng& rng) {
         VgaeWeights w = init_vgae(3, rng);
         return std::vector<Matrix>{random_matrix(rng, 6, 3, 0.1, 1.0), w.mean_w1, w.mean_b1,
                                    w.mean_w2,  w.mean_b2, w.std_w1,
                                    w.std_b1,   w.std_w2,  w.std_b2};
       },
       [](Tape& t, const std::vector<Var>& v) {
         VgaeVars params{v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]};
         Rng noise(12345);  // fixed draw: the same gamma on every evaluation
         Var htilde = reparameterize(t, v[0], params, noise);
         return t.mean_all(t.hadamard(htilde, htilde));
       }});

  checks.push_back({"gate",
                    [](Rng& rng) {
                      return std::vector<Matrix>{random_matrix(rng, 5, 3, -1, 1),
                                                 random_matrix(rng, 5, 3, -1, 1),
                                                 random_matrix(rng, 1, 3, -1, 1),
                                                 random_matrix(rng, 1, 1, 0.2, 1.0)};
                    },
                    [](Tape& t, const std::vector<Var>& v) {
                      return gate(t, v[0], v[1], v[2], v[3]);
                    }});

  checks.push_back(
      {"cross_loss",
       [](Rng& rng) {
         GateWeights w = init_gates(3, rng);
         MultiViewGraph g = tiny_graph(rng);
         return std::vector<Matrix>{random_matrix(rng, g.node_count(), 3, 0.1, 1.0),
                                    w.w_pm, w.b_pm, w.w_ms, w.b_ms, w.w_ps, w.b_ps};
       },
       [](Tape& t, const std::vector<Var>& v) {
         // Region/slot layout of tiny_graph is fixed (3 regions, 1 slot).
         MultiViewGraph g = fuse_views({}, {}, {}, 3, 1);
         GateVars gates{v[1], v[2], v[3], v[4], v[5], v[6]};
         return cross_loss(t, split_views(t, v[0], g), gates, 0.4);
       }});

  checks.push_back({"info_regularization",
                    [](Rng& rng) {
                      const int n = 2 + rng.uniform_int(7);
                      return std::vector<Matrix>{random_matrix(rng, n, 3, 0.1, 1.0),
                                                 random_matrix(rng, n, 3, 0.1, 1.0),
                                                 random_matrix(rng, n, 3, 0.1, 1.0)};
                    },
                    [](Tape& t, const std::vector<Var>& v) {
                      return info_regularization(t, v[0], v[1], v[2], 0.6);
                    }});

  return checks;
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck(std::uint64_t seed, int cases_per_op) {
  std::vector<GradCheckResult> results;
  for (const Check& check : all_checks()) {
    GradCheckResult result;
    result.op = check.name;
    Rng rng(seed ^ std::hash<std::string>{}(check.name));
    for (int c = 0; c < cases_per_op; ++c) {
      const std::vector<Matrix> inputs = check.make_inputs(rng);
      Tape t;
      std::vector<Var> vars;
      vars.reserve(inputs.size());
      for (const Matrix& m : inputs) vars.push_back(t.leaf(m));
      Var loss = check.build(t, vars);
      t.backward(loss);

      auto forward = [&](const std::vector<Matrix>& in) {
        Tape t2;
        std::vector<Var> v2;
        v2.reserve(in.size());
        for (const Matrix& m : in) v2.push_back(t2.leaf(m));
        return check.build(t2, v2).scalar();
      };
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        if (std::string(check.name) == "propagate" && k == 0) continue;  // raw 0/1 adjacency
        result.max_rel_error =
            std::max(result.max_rel_error,
                     rel_error(t.grad(vars[k]), fd_gradient(forward, inputs, k)));
      }
      ++result.cases;
    }
    results.push_back(std::move(result));
  }
  return results;
}

}  // namespace graphst
