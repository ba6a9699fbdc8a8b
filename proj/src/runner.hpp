#pragma once

#include <utility>
#include <vector>

#include "checkpoint.hpp"
#include "config.hpp"
#include "evaluator.hpp"
#include "synthetic.hpp"

namespace protoforge {

// High-level entry points the C API and CLI bind to. Each takes the merged
// key=value configuration; unknown keys fall back to the trained-model
// defaults listed in effective_config().

/// All known keys with their defaults, overlaid with the user's values.
/// Seed keys honor the PROTOFORGE_SEED environment variable when unset.
KvConfig effective_config(const KvConfig& user);

ModelConfig model_config_from(const KvConfig& cfg);
TrainConfig train_config_from(const KvConfig& cfg);
LossConfig loss_config_from(const KvConfig& cfg);
EvalConfig eval_config_from(const KvConfig& cfg);
SyntheticSpec synth_spec_from(const KvConfig& cfg);
EntityOffset entity_offset_from(const KvConfig& cfg);

struct TrainOutcome {
  std::string checkpoint_path;
  double best_val_acc = 0.0;
  int best_episode = 0;
  int episodes_run = 0;
};

/// Loads data, trains per config, writes the best checkpoint and a run log
/// (effective config echoed first, then the per-interval lines).
TrainOutcome run_train(const KvConfig& cfg, const std::string& checkpoint_out,
                       const std::string& log_path, const LogSink& log = {});

/// Evaluates a checkpoint on the configured test split; returns the report
/// (machine-readable lines, then the aligned table).
std::string run_eval(const KvConfig& cfg, const std::string& checkpoint_path);

/// Finite-difference check of the configured loss on a fixed toy episode.
/// scope: all | encoder | protonet | losses. Returns (pass, table).
std::pair<bool, std::string> run_gradcheck(const KvConfig& cfg, const std::string& scope);

/// Generates the synthetic train/val/test datasets plus embedding and
/// relation-name files; returns the written paths.
std::vector<std::string> run_synth(const KvConfig& cfg, const std::string& out_dir);

/// Formats one sampled episode for inspection.
std::string run_sample_episode(const KvConfig& cfg);

}  // namespace protoforge
