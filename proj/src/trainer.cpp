#include "graphst/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "graphst/adversarial.hpp"
#include "graphst/cross_view.hpp"
#include "graphst/csv.hpp"
#include "graphst/encoder.hpp"
#include "graphst/errors.hpp"
#include "graphst/features.hpp"
#include "graphst/vgae.hpp"

namespace graphst {

namespace {

const char* kSnapshotMagic = "graphst-snapshot 1";
const char* kInitPoiName = "__init.poi_embeddings";
const char* kInitFeaturesName = "__init.region_features";

std::vector<std::string> encoder_names(int depth) {
  std::vector<std::string> names;
  for (int l = 0; l < depth; ++l) names.push_back("encoder.w" + std::to_string(l));
  return names;
}

const std::vector<std::string>& vgae_names() {
  static const std::vector<std::string> names = {
      "vgae.mean_w1", "vgae.mean_b1", "vgae.mean_w2", "vgae.mean_b2",
      "vgae.std_w1",  "vgae.std_b1",  "vgae.std_w2",  "vgae.std_b2"};
  return names;
}

const std::vector<std::string>& gate_names() {
  static const std::vector<std::string> names = {"gate.pm_w", "gate.pm_b", "gate.ms_w",
                                                 "gate.ms_b", "gate.ps_w", "gate.ps_b"};
  return names;
}

VgaeVars vgae_vars_from(const std::map<std::string, Var>& entered) {
  return VgaeVars{entered.at("vgae.mean_w1"), entered.at("vgae.mean_b1"),
                  entered.at("vgae.mean_w2"), entered.at("vgae.mean_b2"),
                  entered.at("vgae.std_w1"),  entered.at("vgae.std_b1"),
                  entered.at("vgae.std_w2"),  entered.at("vgae.std_b2")};
}

GateVars gate_vars_from(const std::map<std::string, Var>& entered) {
  return GateVars{entered.at("gate.pm_w"), entered.at("gate.pm_b"),
                  entered.at("gate.ms_w"), entered.at("gate.ms_b"),
                  entered.at("gate.ps_w"), entered.at("gate.ps_b")};
}

std::vector<Matrix> encoder_values(const ParamStore& store, int depth) {
  std::vector<Matrix> weights;
  for (const std::string& name : encoder_names(depth)) weights.push_back(store.value(name));
  return weights;
}

double finite_or_throw(const char* term, int epoch, Var value) {
  const double v = value.scalar();
  if (!std::isfinite(v))
    throw NumericalError(std::string(term) + " is not finite at epoch " +
                         std::to_string(epoch));
  return v;
}

AttackConfig resolve_attack(const Hyperparameters& hp, int fused_edge_count) {
  AttackConfig cfg;
  cfg.budgets.edge_flips =
      hp.edge_flip_budget >= 0.0 ? hp.edge_flip_budget : 0.05 * fused_edge_count;
  cfg.budgets.feat_linf = hp.feat_linf_bound;
  cfg.steps = hp.pgd_steps;
  cfg.tau = hp.temperature;
  cfg.edge_step = hp.edge_step >= 0.0
                      ? hp.edge_step
                      : (cfg.steps > 0 ? 0.5 * cfg.budgets.edge_flips / std::sqrt(cfg.steps)
                                       : 0.0);
  cfg.feat_step = hp.feat_step >= 0.0
                      ? hp.feat_step
                      : (cfg.steps > 0 ? cfg.budgets.feat_linf / cfg.steps : 0.0);
  return cfg;
}

// Edge dropout stand-in for the learned augmentation (no-VGAE ablation).
Matrix dropout_normalized(const Matrix& adjacency, double rate, Rng& rng) {
  Matrix a = adjacency;
  const int n = a.rows();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (a.at(i, j) != 0.0 && rng.bernoulli(rate)) {
        a.at(i, j) = 0.0;
        a.at(j, i) = 0.0;
      }
  return symmetric_normalize(a);
}

void write_tensor(std::ostream& out, const std::string& name, const Matrix& m) {
  out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_double(m.at(i, j));
    out << '\n';
  }
}

}  // namespace

double infomin_reward(double vgae_loss_value, double threshold, double floor_value) {
  if (floor_value <= 0.0 || floor_value >= 1.0)
    throw ConfigError("infomin_reward: floor must lie in (0, 1)");
  return vgae_loss_value > threshold ? 1.0 : floor_value;
}

Var info_regularization(Tape& t, Var htilde, Var htilde_prime, Var h, double tau,
                        bool literal_form) {
  if (tau <= 0.0) throw ConfigError("info_regularization: temperature must be positive");
  for (const Var& v : {htilde, htilde_prime, h}) {
    const Matrix& m = v.value();
    for (int i = 0; i < m.rows(); ++i) {
      double norm = 0.0;
      for (int j = 0; j < m.cols(); ++j) norm += m.at(i, j) * m.at(i, j);
      if (norm == 0.0)
        throw DegenerateInputError("info_regularization: zero-norm row " + std::to_string(i));
    }
  }
  Var n1 = t.row_normalize(htilde);
  Var n2 = t.row_normalize(htilde_prime);
  Var n0 = t.row_normalize(h);
  Var s1 = t.exp(t.affine(t.row_dot(n1, n2), 1.0 / tau));
  Var s2 = t.exp(t.affine(t.row_dot(n1, n0), 1.0 / tau));
  Var s3 = literal_form ? t.exp(t.affine(t.row_dot(n2, n1), 1.0 / tau))
                        : t.exp(t.affine(t.row_dot(n2, n0), 1.0 / tau));
  return t.mean_all(t.relu(t.sub(t.sub(t.affine(s1, 2.0), s2), s3)));
}

Var total_loss(Tape& t, Var l_vgae, Var l_cross, Var l_adv, Var l_recon, Var v_ir,
               double reward, double ir_weight) {
  Var out = t.add(t.add(l_vgae, l_cross), l_adv);
  out = t.add(out, t.affine(l_recon, reward));
  return t.add(out, t.affine(v_ir, ir_weight));
}

TrainResult train(const Dataset& dataset, const Hyperparameters& hp,
                  const AblationFlags& flags, std::vector<AttackTraceRow>* last_attack_trace) {
  validate(hp);
  if (dataset.regions.count < 1) throw ValidationError("train: empty dataset");

  Rng root(hp.seed);
  Rng rng_skipgram = root.fork("skipgram");
  Rng rng_init = root.fork("init");
  Rng rng_noise = root.fork("vgae-noise");
  Rng rng_attack = root.fork("attack");
  Rng rng_dropout = root.fork("dropout");

  // Initial region features: skip-gram categories -> MLP -> self-attention.
  SkipgramConfig sg_cfg{hp.embed_dim, hp.skipgram_epochs, hp.skipgram_negatives,
                        hp.skipgram_lr};
  const Matrix cat_embs = skipgram_train(dataset.poi, sg_cfg, rng_skipgram);
  const MlpParams poi_mlp = init_mlp(hp.embed_dim, hp.embed_dim, hp.embed_dim, rng_init);
  const Matrix ebar = region_poi_embed(dataset.poi, cat_embs, poi_mlp);
  const AttentionParams attention = init_attention(hp.embed_dim, rng_init);
  const Matrix region_features = self_attention_init(ebar, attention);

  // Multi-view graph.
  MultiViewGraph graph = fuse_views(
      build_poi_graph(ebar, hp.poi_threshold), build_mobility_graph(dataset.trajectories),
      build_spatial_graph(dataset.distances, hp.spatial_radius), dataset.regions.count,
      dataset.trajectories.slot_count);
  const Matrix anorm = normalized_adjacency(graph).values;
  const Matrix h0 = init_features(region_features, graph);

  // Trainable parameters. Attention and the POI MLP run once before the
  // epoch loop; they are registered for the snapshot but take no step.
  ParamStore store;
  {
    EncoderParams encoder = init_encoder(hp.embed_dim, hp.encoder_depth, rng_init);
    for (int l = 0; l < hp.encoder_depth; ++l)
      store.add("encoder.w" + std::to_string(l), encoder.weights[l]);
    VgaeWeights vgae = init_vgae(hp.embed_dim, rng_init);
    store.add("vgae.mean_w1", vgae.mean_w1);
    store.add("vgae.mean_b1", vgae.mean_b1);
    store.add("vgae.mean_w2", vgae.mean_w2);
    store.add("vgae.mean_b2", vgae.mean_b2);
    store.add("vgae.std_w1", vgae.std_w1);
    store.add("vgae.std_b1", vgae.std_b1);
    store.add("vgae.std_w2", vgae.std_w2);
    store.add("vgae.std_b2", vgae.std_b2);
    GateWeights gates = init_gates(hp.embed_dim, rng_init);
    store.add("gate.pm_w", gates.w_pm);
    store.add("gate.pm_b", gates.b_pm);
    store.add("gate.ms_w", gates.w_ms);
    store.add("gate.ms_b", gates.b_ms);
    store.add("gate.ps_w", gates.w_ps);
    store.add("gate.ps_b", gates.b_ps);
    store.add("attention.wq", attention.wq);
    store.add("attention.wk", attention.wk);
    store.add("attention.wv", attention.wv);
    store.add("poi_mlp.w1", poi_mlp.w1);
    store.add("poi_mlp.b1", poi_mlp.b1);
    store.add("poi_mlp.w2", poi_mlp.w2);
    store.add("poi_mlp.b2", poi_mlp.b2);
  }

  const AttackConfig attack_cfg = resolve_attack(hp, graph.edge_count());
  AdamConfig adam{hp.learning_rate, hp.weight_decay, 0.9, 0.999, 1e-8};

  std::vector<LossRow> history;
  history.reserve(hp.epochs);

  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    try {
      Tape tape;
      std::vector<std::string> active = encoder_names(hp.encoder_depth);
      for (const std::string& n : gate_names()) active.push_back(n);
      if (!flags.disable_vgae)
        for (const std::string& n : vgae_names()) active.push_back(n);
      auto entered = enter_params(tape, store, active);

      std::vector<Var> encoder_vars;
      for (int l = 0; l < hp.encoder_depth; ++l)
        encoder_vars.push_back(entered.at("encoder.w" + std::to_string(l)));

      Var h = propagate(tape, tape.constant(anorm), tape.constant(h0), encoder_vars);

      Var htilde, htilde_prime;
      if (!flags.disable_vgae) {
        VgaeVars vgae = vgae_vars_from(entered);
        htilde = reparameterize(tape, h, vgae, rng_noise);
        htilde_prime = reparameterize(tape, h, vgae, rng_noise);
      } else {
        // Random edge dropout generates the two augmented views instead.
        Var dropped_a = tape.constant(dropout_normalized(graph.adjacency, hp.dropout_rate, rng_dropout));
        Var dropped_b = tape.constant(dropout_normalized(graph.adjacency, hp.dropout_rate, rng_dropout));
        htilde = propagate(tape, dropped_a, tape.constant(h0), encoder_vars);
        htilde_prime = propagate(tape, dropped_b, tape.constant(h0), encoder_vars);
      }

      LossRow row;
      row.epoch = epoch;

      Var l_vgae = vgae_loss(htilde, htilde_prime, hp.temperature);
      row.vgae = finite_or_throw("l_vgae", epoch, l_vgae);

      Var l_recon;
      if (!flags.disable_vgae) {
        Var atilde = decode_structure(tape, htilde);
        l_recon = recon_loss(tape, atilde, graph.adjacency);
      } else {
        l_recon = tape.constant(Matrix(1, 1, 0.0));
      }
      row.recon = finite_or_throw("l_recon", epoch, l_recon);

      row.reward = flags.disable_infomin
                       ? 1.0
                       : infomin_reward(row.vgae, hp.reward_threshold, hp.reward_floor);

      Var l_adv;
      if (!flags.disable_adv) {
        std::vector<AttackTraceRow>* trace =
            (last_attack_trace && epoch == hp.epochs) ? last_attack_trace : nullptr;
        AdversarialView adv =
            pgd_attack(graph, h0, encoder_values(store, hp.encoder_depth), htilde.value(),
                       attack_cfg, rng_attack, trace);
        // Outer minimization: the attack output enters as a constant.
        l_adv = adv_loss(htilde, tape.constant(adv.hhat), hp.temperature);
      } else {
        l_adv = tape.constant(Matrix(1, 1, 0.0));
      }
      row.adv = finite_or_throw("l_adv", epoch, l_adv);

      Var l_cross =
          cross_loss(tape, split_views(tape, htilde, graph), gate_vars_from(entered),
                     hp.temperature);
      row.cross = finite_or_throw("l_cross", epoch, l_cross);

      Var v_ir = flags.disable_ir
                     ? tape.constant(Matrix(1, 1, 0.0))
                     : info_regularization(tape, htilde, htilde_prime, h, hp.temperature,
                                           hp.ir_literal);
      row.ir = finite_or_throw("v_ir", epoch, v_ir);

      Var total = total_loss(tape, tape.affine(l_vgae, hp.w_vgae),
                             tape.affine(l_cross, hp.w_cross), tape.affine(l_adv, hp.w_adv),
                             l_recon, v_ir, row.reward, hp.ir_weight);
      row.total = finite_or_throw("total", epoch, total);

      tape.backward(total);
      adam_update(store, collect_grads(tape, entered), adam);
      history.push_back(row);
    } catch (const NumericalError& e) {
      const std::string msg = e.what();
      if (msg.find("epoch") != std::string::npos) throw;
      throw NumericalError(msg + " at epoch " + std::to_string(epoch));
    }
  }

  TrainResult result;
  result.state.history = std::move(history);
  result.state.poi_embeddings = ebar;
  result.state.region_features = region_features;
  result.embeddings = readout_embeddings(graph, h0, store, hp, !flags.disable_vgae);
  result.state.graph = std::move(graph);
  result.state.params = std::move(store);
  return result;
}

Matrix readout_embeddings(const MultiViewGraph& g, const Matrix& h0, const ParamStore& params,
                          const Hyperparameters& hp, bool use_mean_head) {
  Tape t;
  std::vector<Var> weights;
  for (const std::string& name : encoder_names(hp.encoder_depth))
    weights.push_back(t.constant(params.value(name)));
  Var h = propagate(t, t.constant(symmetric_normalize(g.adjacency)), t.constant(h0), weights);
  if (use_mean_head) {
    VgaeVars vgae{t.constant(params.value("vgae.mean_w1")), t.constant(params.value("vgae.mean_b1")),
                  t.constant(params.value("vgae.mean_w2")), t.constant(params.value("vgae.mean_b2")),
                  t.constant(params.value("vgae.std_w1")),  t.constant(params.value("vgae.std_b1")),
                  t.constant(params.value("vgae.std_w2")),  t.constant(params.value("vgae.std_b2"))};
    h = vgae_mean_head(t, h, vgae);
  }
  ViewEmbeddings views = split_views(t, h, g);
  Var pooled = t.affine(t.add(t.add(views.poi, views.mobility), views.spatial), 1.0 / 3.0);
  return pooled.value();
}

void export_embeddings(const Matrix& embeddings, const std::string& path) {
  CsvTable table;
  table.header.push_back("region_id");
  for (int d = 0; d < embeddings.cols(); ++d) table.header.push_back("e_" + std::to_string(d));
  for (int j = 0; j < embeddings.rows(); ++j) {
    std::vector<std::string> row{std::to_string(j)};
    for (int d = 0; d < embeddings.cols(); ++d)
      row.push_back(format_double(embeddings.at(j, d)));
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

Matrix load_embeddings(const std::string& path) {
  CsvTable table = read_csv(path);
  if (table.header.empty() || table.header[0] != "region_id")
    throw ParseError(path + " line 1: first header field must be region_id");
  const int dim = static_cast<int>(table.header.size()) - 1;
  Matrix out(static_cast<int>(table.rows.size()), dim);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const int line = static_cast<int>(r) + 2;
    const long id = parse_int_field(table.rows[r][0], path, line, 1);
    if (id < 0 || id >= out.rows())
      throw ValidationError(path + " line " + std::to_string(line) + ": region id out of range");
    for (int d = 0; d < dim; ++d)
      out.at(static_cast<int>(id), d) = parse_double_field(table.rows[r][d + 1], path, line, d + 2);
  }
  return out;
}

void write_loss_history(const std::vector<LossRow>& history, const std::string& path) {
  CsvTable table;
  table.header = {"epoch", "l_vgae", "l_cross", "l_adv", "l_recon", "reward", "v_ir", "total"};
  for (const LossRow& row : history)
    table.rows.push_back({std::to_string(row.epoch), format_double(row.vgae),
                          format_double(row.cross), format_double(row.adv),
                          format_double(row.recon), format_double(row.reward),
                          format_double(row.ir), format_double(row.total)});
  write_csv(path, table);
}

void write_snapshot(const TrainState& state, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write snapshot " + path);
  out << kSnapshotMagic << '\n';
  for (const std::string& name : state.params.names())
    write_tensor(out, name, state.params.value(name));
  write_tensor(out, kInitPoiName, state.poi_embeddings);
  write_tensor(out, kInitFeaturesName, state.region_features);
  if (!out) throw IoError("write failed for snapshot " + path);
}

Snapshot load_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open snapshot " + path);
  std::string line;
  if (!std::getline(in, line) || line != kSnapshotMagic)
    throw ParseError(path + ": not a graphst snapshot");
  Snapshot snap;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream header(line);
    std::string tag, name;
    int rows = 0, cols = 0;
    if (!(header >> tag >> name >> rows >> cols) || tag != "tensor")
      throw ParseError(path + ": malformed tensor header '" + line + "'");
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      if (!std::getline(in, line)) throw ParseError(path + ": truncated tensor " + name);
      std::istringstream row(line);
      for (int j = 0; j < cols; ++j)
        if (!(row >> m.at(i, j))) throw ParseError(path + ": truncated tensor row in " + name);
    }
    if (name == kInitPoiName)
      snap.poi_embeddings = std::move(m);
    else if (name == kInitFeaturesName)
      snap.region_features = std::move(m);
    else
      snap.params.add(name, std::move(m));
  }
  return snap;
}

}  // namespace graphst
