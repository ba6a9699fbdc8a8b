#pragma once

#include <cmath>
#include <functional>

#include "episode.hpp"
#include "losses.hpp"
#include "model.hpp"

namespace protoforge {

/// Per-relation label inputs, resolved once per dataset: word ids for the
/// word variant, an indexed description (zero position indices, no entities
/// exist) for the description variant.
struct LabelLexicon {
  std::map<std::string, std::vector<int>> word_ids;
  std::map<std::string, IndexedInstance> descriptions;
  int oov_fallbacks = 0;  // relations whose label words were all unknown
};

LabelLexicon build_label_lexicon(const IndexedDataset& ds, const Vocabulary& vocab,
                                 const EncoderConfig& cfg, Variant variant);

struct LossBreakdown {
  double ce = 0.0;
  double rep = 0.0;
  double joint = 0.0;
  int active_triplets = 0;
  int skipped_anchors = 0;
};

/// Everything one episode pass produces; holds the caches backward needs.
template <typename T>
struct EpisodeForward {
  EncodedBatch<T> support, query;
  Array2<T> prototypes;      // N x d_h
  LabelVectors<T> labels;    // when the variant uses them
  MixResult<T> mix;
  Array2<T> class_protos;    // the prototypes classification used
  Array2<T> dist;            // R x N squared distances
  NllResult<T> nll;          // over scores = -(distances)
  Array2<T> pooled;          // (N*K + R) x d_h, support rows first
  std::vector<int> pooled_labels;
  TripletResult<T> triplet;
  LossBreakdown losses;
};

/// Forward pass of one episode: encode support and query, prototypes, label
/// vectors and mixture per variant, distance softmax, representation loss
/// over the pooled support+query encodings, joint objective. `frozen` reuses
/// a prior mining selection (gradient checking).
template <typename T>
EpisodeForward<T> forward_episode(const Model<T>& model, const Episode& ep,
                                  const LabelLexicon& lex, const LossConfig& loss_cfg,
                                  Mode mode, Rng* dropout_rng,
                                  const TripletResult<T>* frozen = nullptr);

/// Accumulates all parameter gradients for the episode.
template <typename T>
void backward_episode(Model<T>& model, EpisodeForward<T>& fwd, const LossConfig& loss_cfg);

struct TrainConfig {
  int n_train = 20;  // episode width during training, usually > n_eval
  int n_eval = 5;
  int k_shot = 5;
  int n_query = 5;
  double lr = 0.1;
  double weight_decay = 1e-5;
  int max_episodes = 10000;
  int val_interval = 1000;
  int val_episodes = 1000;
  int batch_episodes = 1;  // gradients summed over this many episodes per update
  uint64_t seed = 1;
  std::string lr_schedule = "constant";  // constant | step
  double lr_step_factor = 0.1;
  int lr_step_every = 0;  // episodes; 0 disables
  SamplerOptions sampler;

  void validate() const {
    if (n_train < 1 || n_eval < 1 || k_shot < 1 || n_query < 1)
      throw ConfigError("train: N, K, R must be positive");
    if (lr <= 0.0) throw ConfigError("train: learning rate must be positive");
    if (weight_decay < 0.0) throw ConfigError("train: weight decay must be >= 0");
    if (max_episodes < 0) throw ConfigError("train: max episodes must be >= 0");
    if (val_interval < 1 || val_episodes < 1)
      throw ConfigError("train: validation interval and episode count must be positive");
    if (batch_episodes < 1) throw ConfigError("train: batch_episodes must be >= 1");
    if (lr_schedule != "constant" && lr_schedule != "step")
      throw ConfigError("train: lr schedule must be `constant` or `step`");
  }

  double lr_at(int episode) const {
    if (lr_schedule == "step" && lr_step_every > 0)
      return lr * std::pow(lr_step_factor, episode / lr_step_every);
    return lr;
  }
};

/// One SGD step on one episode: forward, backward, update. Aborts with the
/// offending term named when a loss turns non-finite.
template <typename T>
LossBreakdown train_step(Model<T>& model, const Episode& ep, const LabelLexicon& lex,
                         const LossConfig& loss_cfg, double lr, double weight_decay,
                         Rng& dropout_rng);

template <typename T>
struct TrainResult {
  Model<T> best_model;     // parameters at the best validation accuracy
  double best_val_acc = -1.0;
  int best_episode = 0;
  int episodes_run = 0;
  std::vector<std::string> log_lines;  // episode \t joint \t ce \t rep \t val_acc
  std::map<std::string, std::string> rng_states;  // sampler/dropout engines at exit
};

using LogSink = std::function<void(const std::string&)>;

/// Episodic training with periodic validation and best-checkpoint retention.
/// Train and validation relation sets must be disjoint. Deterministic under
/// (seed, config, data).
template <typename T>
TrainResult<T> train(Model<T> model, const IndexedDataset& train_ds,
                     const IndexedDataset& val_ds, const LabelLexicon& train_lex,
                     const LabelLexicon& val_lex, const TrainConfig& tc,
                     const LossConfig& loss_cfg, const LogSink& log = {});

}  // namespace protoforge
