#pragma once

#include <string>
#include <vector>

#include "graphst/config.hpp"
#include "graphst/dataset.hpp"
#include "graphst/graph.hpp"
#include "graphst/matrix.hpp"
#include "graphst/param_store.hpp"
#include "graphst/tape.hpp"

namespace graphst {

// Training-time module switches for the ablation variants.
struct AblationFlags {
  bool disable_adv = false;      // no adversarial view
  bool disable_vgae = false;     // random edge dropout replaces the VGAE
  bool disable_ir = false;       // no information regularization
  bool disable_infomin = false;  // reconstruction reward pinned to 1
};

struct LossRow {
  int epoch = 0;
  double vgae = 0.0, cross = 0.0, adv = 0.0, recon = 0.0;
  double reward = 0.0, ir = 0.0, total = 0.0;
};

struct TrainState {
  ParamStore params;
  std::vector<LossRow> history;
  Matrix poi_embeddings;   // Ebar: rows the POI graph was thresholded on
  Matrix region_features;  // E: post-attention initial region embeddings
  MultiViewGraph graph;
};

struct TrainResult {
  Matrix embeddings;  // J x d final region embeddings
  TrainState state;
};

// Step reward: 1 while the contrastive loss stays above the threshold,
// otherwise the small floor. Constant w.r.t. the tape (no gradient).
double infomin_reward(double vgae_loss_value, double threshold, double floor_value);

// Hinge penalty keeping the two augmented views from being mutually closer
// than each is to the original embedding:
//   mean_j max(2 s1 - s2 - s3, 0),  s1 = exp(cos(ht_j, ht'_j)/tau),
//   s2 = exp(cos(ht_j, h_j)/tau),   s3 = exp(cos(ht'_j, h_j)/tau).
// `literal_form` instead anchors s3 back to the first augmented view, which
// collapses the hinge to max(s1 - s2, 0); both behaviors ship.
Var info_regularization(Tape& t, Var htilde, Var htilde_prime, Var h, double tau,
                        bool literal_form = false);

// l_vgae + l_cross + l_adv + l_recon * reward + ir_weight * v_ir
Var total_loss(Tape& t, Var l_vgae, Var l_cross, Var l_adv, Var l_recon, Var v_ir,
               double reward, double ir_weight);

struct AttackTraceRow;

// The full optimization loop: feature init, graph fusion, then per epoch
// message passing, two reparameterized draws, the PGD attack, all five loss
// terms, backward and the optimizer step. Deterministic under hp.seed.
// `last_attack_trace`, when given, receives the final epoch's per-step trace.
TrainResult train(const Dataset& dataset, const Hyperparameters& hp,
                  const AblationFlags& flags = {},
                  std::vector<AttackTraceRow>* last_attack_trace = nullptr);

// Final readout for a parameter snapshot: propagate, mean head (skipped when
// the VGAE is disabled), then mean-pool the three view blocks per region.
Matrix readout_embeddings(const MultiViewGraph& g, const Matrix& h0, const ParamStore& params,
                          const Hyperparameters& hp, bool use_mean_head = true);

// CSV export `region_id,e_0,...`: 17 significant digits, sorted by region.
void export_embeddings(const Matrix& embeddings, const std::string& path);
Matrix load_embeddings(const std::string& path);

void write_loss_history(const std::vector<LossRow>& history, const std::string& path);

// Named-tensor snapshot of every parameter plus the frozen init matrices.
void write_snapshot(const TrainState& state, const std::string& path);
struct Snapshot {
  ParamStore params;
  Matrix poi_embeddings;
  Matrix region_features;
};
Snapshot load_snapshot(const std::string& path);

}  // namespace graphst
