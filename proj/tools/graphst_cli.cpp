#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include "graphst/adversarial.hpp"
#include "graphst/config.hpp"
#include "graphst/dataset.hpp"
#include "graphst/encoder.hpp"
#include "graphst/errors.hpp"
#include "graphst/eval.hpp"
#include "graphst/features.hpp"
#include "graphst/gradcheck.hpp"
#include "graphst/graph.hpp"
#include "graphst/trainer.hpp"

namespace fs = std::filesystem;
using namespace graphst;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  bool seed_given = false;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "hyperparameter file (name = value lines)");
  cmd->add_option("--set", opts.overrides, "override a config key, e.g. --set epochs=50")
      ->take_all();
  cmd->add_option("--seed", opts.seed, "random seed")->each([&](const std::string&) {
    opts.seed_given = true;
  });
}

Hyperparameters resolve_config(const CommonOpts& opts) {
  Hyperparameters hp;
  if (!opts.config_path.empty()) hp = load_config(opts.config_path);
  for (const std::string& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_override(hp, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opts.seed_given) hp.seed = opts.seed;
  validate(hp);
  return hp;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir);
}

int ablation_threads() {
  if (const char* env = std::getenv("GRAPHST_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return static_cast<int>(std::thread::hardware_concurrency());
}

// Rebuild the fused graph exactly as training does: the POI view thresholds
// the pre-attention embeddings.
MultiViewGraph rebuild_graph(const Dataset& ds, const Matrix& poi_embeddings,
                             const Hyperparameters& hp) {
  return fuse_views(build_poi_graph(poi_embeddings, hp.poi_threshold),
                    build_mobility_graph(ds.trajectories),
                    build_spatial_graph(ds.distances, hp.spatial_radius), ds.regions.count,
                    ds.trajectories.slot_count);
}

std::optional<std::vector<int>> try_load_communities(const std::string& data_dir) {
  const std::string path = data_dir + "/communities.csv";
  if (!fs::exists(path)) return std::nullopt;
  return load_communities(path);
}

void print_metrics_table(const std::vector<AblationRow>& rows) {
  std::printf("%-10s %-6s %10s %10s %10s %8s\n", "variant", "seed", "mae", "mape", "rmse",
              "nmi");
  for (const auto& row : rows) {
    std::printf("%-10s %-6llu %10.4f %10.4f %10.4f ", row.variant.c_str(),
                static_cast<unsigned long long>(row.seed), row.metrics.mae, row.metrics.mape,
                row.metrics.rmse);
    if (row.nmi >= 0.0)
      std::printf("%8.4f\n", row.nmi);
    else
      std::printf("%8s\n", "-");
  }
}

int run(int argc, char** argv) {
  CLI::App app{"GraphST: adversarial-contrastive spatial-temporal region embeddings"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic city dataset");
  std::string gen_out = "data";
  SynthConfig synth_cfg;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", synth_cfg.seed, "generator seed");
  gen->add_option("--regions", synth_cfg.region_count, "number of regions");
  gen->add_option("--categories", synth_cfg.category_count, "number of POI categories");
  gen->add_option("--slots", synth_cfg.slot_count, "number of time slots");
  gen->add_option("--communities", synth_cfg.communities, "planted communities");
  gen->add_option("--noise", synth_cfg.noise, "noise level");
  gen->add_option("--density", synth_cfg.trip_density, "mean extra trips per (region, slot)");

  // build-graph
  auto* bg = app.add_subcommand("build-graph", "construct and dump the multi-view graph");
  std::string bg_data, bg_out = "graph";
  CommonOpts bg_opts;
  bg->add_option("--data", bg_data, "dataset directory")->required();
  bg->add_option("--out", bg_out, "output directory")->required();
  add_common(bg, bg_opts);

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "run the self-supervised training loop");
  std::string pre_data, pre_out = "run";
  bool pre_trace = false;
  CommonOpts pre_opts;
  pre->add_option("--data", pre_data, "dataset directory")->required();
  pre->add_option("--out", pre_out, "output directory")->required();
  pre->add_flag("--attack-trace", pre_trace, "dump the final epoch's attack trace");
  add_common(pre, pre_opts);

  // embed
  auto* emb = app.add_subcommand("embed", "export embeddings from a parameter snapshot");
  std::string emb_data, emb_snapshot, emb_out = "run";
  CommonOpts emb_opts;
  emb->add_option("--data", emb_data, "dataset directory")->required();
  emb->add_option("--snapshot", emb_snapshot, "params.txt from pretrain")->required();
  emb->add_option("--out", emb_out, "output directory")->required();
  add_common(emb, emb_opts);

  // eval
  auto* ev = app.add_subcommand("eval", "downstream evaluation of exported embeddings");
  std::string ev_data, ev_embeddings, ev_out = "eval";
  int ev_folds = 5;
  double ev_alpha = 0.01;
  CommonOpts ev_opts;
  ev->add_option("--data", ev_data, "dataset directory")->required();
  ev->add_option("--embeddings", ev_embeddings, "embeddings.csv")->required();
  ev->add_option("--out", ev_out, "output directory")->required();
  ev->add_option("--folds", ev_folds, "cross-validation folds");
  ev->add_option("--alpha", ev_alpha, "lasso regularization");
  add_common(ev, ev_opts);

  // ablate
  auto* ab = app.add_subcommand("ablate", "train and compare the ablation variants");
  std::string ab_data, ab_out = "ablation", ab_seeds = "1,2,3,4,5";
  int ab_folds = 5;
  double ab_alpha = 0.01;
  CommonOpts ab_opts;
  ab->add_option("--data", ab_data, "dataset directory")->required();
  ab->add_option("--out", ab_out, "output directory")->required();
  ab->add_option("--seeds", ab_seeds, "comma-separated training seeds");
  ab->add_option("--folds", ab_folds, "cross-validation folds");
  ab->add_option("--alpha", ab_alpha, "lasso regularization");
  add_common(ab, ab_opts);

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every operation");
  std::uint64_t gc_seed = 7;
  int gc_cases = 15;
  gc->add_option("--seed", gc_seed, "case seed");
  gc->add_option("--cases", gc_cases, "cases per operation");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    ensure_dir(gen_out);
    SynthResult synth = synth_city(synth_cfg);
    write_dataset(synth.dataset, gen_out);
    write_communities(synth.communities, gen_out + "/communities.csv");
    std::printf("wrote %d regions, %zu trajectories to %s\n", synth.dataset.regions.count,
                synth.dataset.trajectories.records.size(), gen_out.c_str());
    return kExitOk;
  }

  if (bg->parsed()) {
    Hyperparameters hp = resolve_config(bg_opts);
    Dataset ds = load_dataset_dir(bg_data);
    Rng root(hp.seed);
    Rng rng_skipgram = root.fork("skipgram");
    Rng rng_init = root.fork("init");
    SkipgramConfig sg{hp.embed_dim, hp.skipgram_epochs, hp.skipgram_negatives, hp.skipgram_lr};
    Matrix cat_embs = skipgram_train(ds.poi, sg, rng_skipgram);
    MlpParams mlp = init_mlp(hp.embed_dim, hp.embed_dim, hp.embed_dim, rng_init);
    Matrix ebar = region_poi_embed(ds.poi, cat_embs, mlp);
    MultiViewGraph g = rebuild_graph(ds, ebar, hp);
    ensure_dir(bg_out);
    write_graph(g, bg_out);
    write_config(hp, bg_out + "/run_config.txt");
    std::printf("graph: %d nodes, %d edges -> %s\n", g.node_count(), g.edge_count(),
                bg_out.c_str());
    return kExitOk;
  }

  if (pre->parsed()) {
    Hyperparameters hp = resolve_config(pre_opts);
    Dataset ds = load_dataset_dir(pre_data);
    ensure_dir(pre_out);
    std::vector<AttackTraceRow> trace;
    TrainResult result = train(ds, hp, {}, pre_trace ? &trace : nullptr);
    write_loss_history(result.state.history, pre_out + "/loss_history.csv");
    export_embeddings(result.embeddings, pre_out + "/embeddings.csv");
    write_snapshot(result.state, pre_out + "/params.txt");
    write_config(hp, pre_out + "/run_config.txt");
    if (pre_trace) write_attack_trace(trace, pre_out + "/attack_trace.csv");
    const double final_total =
        result.state.history.empty() ? 0.0 : result.state.history.back().total;
    std::printf("trained %d epochs, final total loss %.6f -> %s\n", hp.epochs, final_total,
                pre_out.c_str());
    return kExitOk;
  }

  if (emb->parsed()) {
    Hyperparameters hp = resolve_config(emb_opts);
    Dataset ds = load_dataset_dir(emb_data);
    Snapshot snap = load_snapshot(emb_snapshot);
    MultiViewGraph g = rebuild_graph(ds, snap.poi_embeddings, hp);
    Matrix h0 = init_features(snap.region_features, g);
    Matrix embeddings = readout_embeddings(g, h0, snap.params, hp);
    ensure_dir(emb_out);
    export_embeddings(embeddings, emb_out + "/embeddings.csv");
    std::printf("exported %dx%d embeddings -> %s/embeddings.csv\n", embeddings.rows(),
                embeddings.cols(), emb_out.c_str());
    return kExitOk;
  }

  if (ev->parsed()) {
    Hyperparameters hp = resolve_config(ev_opts);
    Dataset ds = load_dataset_dir(ev_data);
    if (!ds.labels) throw ValidationError("eval: dataset has no labels.csv");
    Matrix embeddings = load_embeddings(ev_embeddings);
    if (embeddings.rows() != ds.regions.count)
      throw ValidationError("eval: embeddings do not match the dataset's region count");

    Rng eval_rng(hp.seed ^ 0x5eedULL);
    AblationRow row;
    row.variant = "full";
    row.seed = hp.seed;
    row.metrics =
        kfold_lasso_eval(embeddings, ds.labels->targets, ev_folds, ev_alpha, eval_rng);
    if (auto communities = try_load_communities(ev_data)) {
      const int k = *std::max_element(communities->begin(), communities->end()) + 1;
      Rng km_rng(99);
      row.nmi = normalized_mutual_information(kmeans(embeddings, k, 50, km_rng), *communities);
    }
    auto strata = density_strata_eval(embeddings, ds.labels->targets,
                                      arrival_series(ds.trajectories, ds.regions.count),
                                      ev_folds, ev_alpha, eval_rng);
    ensure_dir(ev_out);
    write_eval_report({row}, strata, ev_out + "/eval_report.csv");
    print_metrics_table({row});
    for (const auto& s : strata)
      std::printf("stratum %-10s regions=%3d mae=%.4f rmse=%.4f\n", s.stratum.c_str(),
                  s.region_count, s.metrics.mae, s.metrics.rmse);
    return kExitOk;
  }

  if (ab->parsed()) {
    Hyperparameters hp = resolve_config(ab_opts);
    Dataset ds = load_dataset_dir(ab_data);
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(ab_seeds);
    for (std::string item; std::getline(ss, item, ',');)
      if (!item.empty()) seeds.push_back(std::strtoull(item.c_str(), nullptr, 10));
    if (seeds.empty()) throw ConfigError("ablate: no seeds given");

    auto rows = run_ablation(ds, hp, standard_variants(), seeds, try_load_communities(ab_data),
                             ab_folds, ab_alpha, ablation_threads());
    ensure_dir(ab_out);
    write_eval_report(rows, {}, ab_out + "/eval_report.csv");
    print_metrics_table(rows);
    return kExitOk;
  }

  // gradcheck
  const auto results = run_gradcheck(gc_seed, gc_cases);
  double worst = 0.0;
  for (const auto& r : results) {
    std::printf("%-22s cases=%-4d max rel error %.3e\n", r.op.c_str(), r.cases,
                r.max_rel_error);
    worst = std::max(worst, r.max_rel_error);
  }
  std::printf("worst: %.3e (budget 1e-5)\n", worst);
  return worst < 1e-5 ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
