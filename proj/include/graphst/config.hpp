#pragma once

#include <cstdint>
#include <string>

namespace graphst {

// Every scalar knob of the training pipeline with its default. Negative
// values for the attack budget/steps mean "derive from the graph" (see
// resolve_attack_defaults in trainer.cpp).
struct Hyperparameters {
  std::uint64_t seed = 7;

  int embed_dim = 96;
  int encoder_depth = 2;
  double temperature = 0.4;
  double learning_rate = 5e-4;
  double weight_decay = 0.01;
  int epochs = 200;

  double reward_floor = 0.01;      // reward when the contrastive loss is low
  double reward_threshold = 0.1;   // unstated in the source material; desk-scale tuned
  double ir_weight = 0.5;          // unstated in the source material; desk-scale tuned
  bool ir_literal = false;         // see info_regularization

  double edge_flip_budget = -1.0;  // < 0: 5% of the fused edge count
  double feat_linf_bound = 0.1;
  double edge_step = -1.0;         // < 0: 0.5 * budget / sqrt(steps)
  double feat_step = -1.0;         // < 0: bound / steps
  int pgd_steps = 10;

  double poi_threshold = 0.5;
  double spatial_radius = 2.5;

  double w_vgae = 1.0;  // optional SSL loss multipliers, default unit
  double w_cross = 1.0;
  double w_adv = 1.0;

  int skipgram_epochs = 50;
  int skipgram_negatives = 5;
  double skipgram_lr = 0.025;

  double dropout_rate = 0.1;  // edge dropout for the no-VGAE ablation
};

// Throws ConfigError when a knob is outside its legal range.
void validate(const Hyperparameters& hp);

// Text config: one `name = value` per line, '#' starts a comment.
Hyperparameters load_config(const std::string& path);
void apply_override(Hyperparameters& hp, const std::string& key, const std::string& value);
void write_config(const Hyperparameters& hp, const std::string& path);

}  // namespace graphst
