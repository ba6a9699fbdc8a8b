#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace protoforge {

LabelLexicon build_label_lexicon(const IndexedDataset& ds, const Vocabulary& vocab,
                                 const EncoderConfig& cfg, Variant variant) {
  LabelLexicon lex;
  if (variant == Variant::kProNet) return lex;
  for (const std::string& rel : ds.relation_ids) {
    auto it = ds.relations.find(rel);
    if (it == ds.relations.end())
      throw DataError("label lexicon: no relation info for " + rel +
                      " (is a relation-name table configured?)");
    const RelationInfo& info = it->second;
    if (variant == Variant::kApnLw) {
      std::vector<int> ids;
      bool any_known = false;
      for (const std::string& w : info.label_words) {
        int id = vocab.lookup(w);
        any_known = any_known || id != Vocabulary::kUnk;
        ids.push_back(id);
      }
      if (!any_known) {
        // every label word unknown: fall back to the shared UNK vector
        ids.assign(1, Vocabulary::kUnk);
        ++lex.oov_fallbacks;
      }
      lex.word_ids[rel] = std::move(ids);
    } else {
      if (info.description.empty())
        throw DataError("label lexicon: relation " + rel +
                        " has no description, apn-ld unavailable");
      IndexedInstance desc;
      desc.relation_id = rel;
      desc.true_len = std::min<int>(static_cast<int>(info.description.size()), cfg.max_len);
      desc.token_ids.assign(cfg.max_len, Vocabulary::kPad);
      for (int i = 0; i < desc.true_len; ++i)
        desc.token_ids[i] = vocab.lookup(info.description[i]);
      // descriptions mention no entities; position features are pinned to
      // index zero rather than invented
      desc.pos_head.assign(cfg.max_len, 0);
      desc.pos_tail.assign(cfg.max_len, 0);
      lex.descriptions[rel] = std::move(desc);
    }
  }
  return lex;
}

template <typename T>
EpisodeForward<T> forward_episode(const Model<T>& model, const Episode& ep,
                                  const LabelLexicon& lex, const LossConfig& loss_cfg,
                                  Mode mode, Rng* dropout_rng,
                                  const TripletResult<T>* frozen) {
  loss_cfg.validate();
  const ModelConfig& cfg = model.cfg;
  const int n = ep.n_way, k = ep.k_shot, r = ep.query_count();
  if (static_cast<int>(ep.support.size()) != n * k)
    throw ShapeError("forward_episode: support size is not N*K");
  if (r < 1) throw ShapeError("forward_episode: episode has no queries");

  EpisodeForward<T> fwd;
  fwd.support = encode_batch<T>(ep.support, cfg.encoder, model.params, mode, dropout_rng);
  fwd.query = encode_batch<T>(ep.query, cfg.encoder, model.params, mode, dropout_rng);
  fwd.prototypes = class_prototypes(fwd.support.vectors, n, k);

  if (cfg.uses_labels()) {
    if (cfg.variant == Variant::kApnLw) {
      std::vector<std::vector<int>> ids;
      for (const std::string& rel : ep.relation_ids) ids.push_back(lex.word_ids.at(rel));
      fwd.labels = label_vectors_from_words(ids, model.params);
    } else {
      std::vector<IndexedInstance> descs;
      for (const std::string& rel : ep.relation_ids) descs.push_back(lex.descriptions.at(rel));
      fwd.labels = label_vectors_from_descriptions<T>(descs, cfg.encoder, model.params, mode,
                                                      dropout_rng);
    }
    fwd.mix = mix_prototypes(fwd.prototypes, fwd.labels.vectors, model.params,
                             cfg.force_lambda, cfg.mix_hidden);
    fwd.class_protos = fwd.mix.adapted;
  } else {
    fwd.class_protos = fwd.prototypes;
  }

  fwd.dist = pairwise_sq_euclidean(fwd.query.vectors, fwd.class_protos);
  Array2<T> scores(r, n);
  for (size_t i = 0; i < fwd.dist.size(); ++i)
    scores[i] = cfg.sqrt_distance ? -std::sqrt(fwd.dist[i]) : -fwd.dist[i];
  fwd.nll = log_softmax_nll(scores, ep.query_class);

  if (loss_cfg.variant != RepLossKind::kNone) {
    fwd.pooled = Array2<T>(n * k + r, cfg.encoder.d_h);
    for (int i = 0; i < n * k; ++i)
      std::copy(fwd.support.vectors.row(i), fwd.support.vectors.row(i) + cfg.encoder.d_h,
                fwd.pooled.row(i));
    for (int i = 0; i < r; ++i)
      std::copy(fwd.query.vectors.row(i), fwd.query.vectors.row(i) + cfg.encoder.d_h,
                fwd.pooled.row(n * k + i));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) fwd.pooled_labels.push_back(i);
    for (int q = 0; q < r; ++q) fwd.pooled_labels.push_back(ep.query_class[q]);

    const T margin = static_cast<T>(loss_cfg.margin);
    if (loss_cfg.variant == RepLossKind::kJrl) {
      fwd.triplet = frozen ? hardest_triplet_refresh(fwd.pooled, frozen->triplets, margin)
                           : hardest_triplet_loss<T>(fwd.pooled, fwd.pooled_labels, margin);
    } else {
      fwd.triplet = frozen
                        ? prototype_triplet_refresh(fwd.pooled, fwd.class_protos,
                                                    frozen->triplets, margin)
                        : prototype_triplet_loss<T>(fwd.pooled, fwd.class_protos,
                                                    fwd.pooled_labels, margin);
    }
    if (frozen) fwd.triplet.skipped_anchors = frozen->skipped_anchors;
  }

  fwd.losses.ce = static_cast<double>(fwd.nll.loss);
  fwd.losses.rep = static_cast<double>(fwd.triplet.loss);
  fwd.losses.joint = loss_cfg.ce_weight * fwd.losses.ce + loss_cfg.alpha * fwd.losses.rep;
  fwd.losses.skipped_anchors = fwd.triplet.skipped_anchors;
  for (const auto& tc : fwd.triplet.triplets)
    if (tc.hinge > T(0)) ++fwd.losses.active_triplets;
  return fwd;
}

template <typename T>
void backward_episode(Model<T>& model, EpisodeForward<T>& fwd, const LossConfig& loss_cfg) {
  const ModelConfig& cfg = model.cfg;
  const int n = fwd.prototypes.rows();
  const int k = fwd.support.count() / std::max(1, n);
  const int r = fwd.query.count();
  const int d_h = cfg.encoder.d_h;

  Array2<T> grad_support(fwd.support.count(), d_h);
  Array2<T> grad_query(r, d_h);
  Array2<T> grad_class_protos(n, d_h);

  // classification path
  if (loss_cfg.ce_weight > 0.0) {
    const T w = static_cast<T>(loss_cfg.ce_weight);
    Array2<T> grad_dist(r, n);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < n; ++j) {
        T gs = w * fwd.nll.grad_scores.at(i, j);
        if (cfg.sqrt_distance) {
          T dist = fwd.dist.at(i, j);
          grad_dist.at(i, j) = dist > T(1e-12) ? -gs * T(0.5) / std::sqrt(dist) : T(0);
        } else {
          grad_dist.at(i, j) = -gs;
        }
      }
    }
    pairwise_sq_euclidean_backward(fwd.query.vectors, fwd.class_protos, grad_dist, grad_query,
                                   grad_class_protos);
  }

  // representation path
  if (loss_cfg.variant != RepLossKind::kNone && loss_cfg.alpha > 0.0) {
    const T alpha = static_cast<T>(loss_cfg.alpha);
    Array2<T> grad_pooled(fwd.pooled.rows(), d_h);
    if (loss_cfg.variant == RepLossKind::kJrl)
      hardest_triplet_backward(fwd.pooled, fwd.triplet, grad_pooled, alpha);
    else
      prototype_triplet_backward(fwd.pooled, fwd.class_protos, fwd.triplet, grad_pooled,
                                 grad_class_protos, alpha);
    for (int i = 0; i < n * k; ++i)
      for (int c = 0; c < d_h; ++c) grad_support.at(i, c) += grad_pooled.at(i, c);
    for (int i = 0; i < r; ++i)
      for (int c = 0; c < d_h; ++c) grad_query.at(i, c) += grad_pooled.at(n * k + i, c);
  }

  // prototypes (and the mixture when present)
  Array2<T> grad_protos(n, d_h);
  if (cfg.uses_labels()) {
    Array2<T> grad_c(n, d_h);
    mix_prototypes_backward(fwd.mix, fwd.prototypes, fwd.labels.vectors, grad_class_protos,
                            model.params, grad_protos, grad_c, cfg.mix_hidden);
    const bool lambda_pins_prototype = fwd.mix.forced && *fwd.mix.forced == 1.0;
    if (!lambda_pins_prototype) {
      if (cfg.variant == Variant::kApnLw)
        label_vectors_from_words_backward(fwd.labels, grad_c, model.params,
                                          cfg.freeze_label_lookup);
      else
        label_vectors_from_descriptions_backward(fwd.labels, grad_c, cfg.encoder,
                                                 model.params);
    }
  } else {
    grad_protos = grad_class_protos;
  }

  class_prototypes_backward(grad_protos, n, k, grad_support);
  encode_backward(fwd.support, grad_support, cfg.encoder, model.params);
  encode_backward(fwd.query, grad_query, cfg.encoder, model.params);
}

template <typename T>
LossBreakdown train_step(Model<T>& model, const Episode& ep, const LabelLexicon& lex,
                         const LossConfig& loss_cfg, double lr, double weight_decay,
                         Rng& dropout_rng) {
  model.params.zero_grads();
  EpisodeForward<T> fwd = forward_episode(model, ep, lex, loss_cfg, Mode::kTrain,
                                          &dropout_rng);
  if (!std::isfinite(fwd.losses.ce)) throw TrainError("train_step: cross-entropy non-finite");
  if (!std::isfinite(fwd.losses.rep))
    throw TrainError("train_step: representation loss non-finite");
  backward_episode(model, fwd, loss_cfg);
  model.params.sgd_step(static_cast<T>(lr), static_cast<T>(weight_decay));
  return fwd.losses;
}

namespace {

template <typename T>
int count_correct(const EpisodeForward<T>& fwd, const Episode& ep) {
  int correct = 0;
  for (int q = 0; q < ep.query_count(); ++q) {
    int best = 0;
    for (int j = 1; j < fwd.dist.cols(); ++j)
      if (fwd.dist.at(q, j) < fwd.dist.at(q, best)) best = j;
    if (best == ep.query_class[q]) ++correct;
  }
  return correct;
}

template <typename T>
double validation_accuracy(const Model<T>& model, const IndexedDataset& ds,
                           const LabelLexicon& lex, const TrainConfig& tc) {
  LossConfig no_rep;
  no_rep.variant = RepLossKind::kNone;
  Rng rng(tc.seed, "validation");  // same episodes at every interval
  long correct = 0, total = 0;
  for (int e = 0; e < tc.val_episodes; ++e) {
    Episode ep = sample_episode(ds, tc.n_eval, tc.k_shot, tc.n_query, rng, tc.sampler);
    EpisodeForward<T> fwd = forward_episode(model, ep, lex, no_rep, Mode::kEval, nullptr);
    correct += count_correct(fwd, ep);
    total += ep.query_count();
  }
  return total ? static_cast<double>(correct) / total : 0.0;
}

}  // namespace

template <typename T>
TrainResult<T> train(Model<T> model, const IndexedDataset& train_ds,
                     const IndexedDataset& val_ds, const LabelLexicon& train_lex,
                     const LabelLexicon& val_lex, const TrainConfig& tc,
                     const LossConfig& loss_cfg, const LogSink& log) {
  tc.validate();
  loss_cfg.validate();
  {
    std::set<std::string> train_rels(train_ds.relation_ids.begin(),
                                     train_ds.relation_ids.end());
    for (const std::string& rel : val_ds.relation_ids)
      if (train_rels.count(rel))
        throw ConfigError("train/validation relation sets overlap at " + rel);
  }

  TrainResult<T> out;
  out.best_model = model;  // episode-0 snapshot; kept when nothing validates better

  Rng sampler(tc.seed, "train-sampler");
  Rng dropout_rng(tc.seed, "dropout");
  int since_update = 0;

  auto emit = [&](const std::string& line) {
    out.log_lines.push_back(line);
    if (log) log(line);
  };

  for (int episode = 1; episode <= tc.max_episodes; ++episode) {
    Episode ep = sample_episode(train_ds, tc.n_train, tc.k_shot, tc.n_query, sampler,
                                tc.sampler);
    if (since_update == 0) model.params.zero_grads();
    EpisodeForward<T> fwd;
    try {
      fwd = forward_episode(model, ep, train_lex, loss_cfg, Mode::kTrain, &dropout_rng);
    } catch (const Error& e) {
      throw TrainError(strfmt("episode %d: %s", episode, e.what()));
    }
    if (!std::isfinite(fwd.losses.ce))
      throw TrainError(strfmt("episode %d: cross-entropy non-finite", episode));
    if (!std::isfinite(fwd.losses.rep))
      throw TrainError(strfmt("episode %d: representation loss non-finite", episode));
    backward_episode(model, fwd, loss_cfg);
    ++since_update;
    if (since_update == tc.batch_episodes || episode == tc.max_episodes) {
      model.params.sgd_step(static_cast<T>(tc.lr_at(episode)),
                            static_cast<T>(tc.weight_decay));
      since_update = 0;
    }
    out.episodes_run = episode;

    if (episode % tc.val_interval == 0 || episode == tc.max_episodes) {
      double acc = validation_accuracy(model, val_ds, val_lex, tc);
      emit(strfmt("%d\t%.6f\t%.6f\t%.6f\t%.4f", episode, fwd.losses.joint, fwd.losses.ce,
                  fwd.losses.rep, acc));
      if (acc > out.best_val_acc) {
        out.best_val_acc = acc;
        out.best_episode = episode;
        out.best_model = model;
      }
    }
  }
  {
    std::ostringstream ss;
    ss << sampler.engine();
    out.rng_states["train-sampler"] = ss.str();
    ss.str("");
    ss << dropout_rng.engine();
    out.rng_states["dropout"] = ss.str();
  }
  return out;
}

#define PROTOFORGE_INSTANTIATE_TRAINER(T)                                                     \
  template EpisodeForward<T> forward_episode<T>(const Model<T>&, const Episode&,              \
                                                const LabelLexicon&, const LossConfig&,       \
                                                Mode, Rng*, const TripletResult<T>*);         \
  template void backward_episode<T>(Model<T>&, EpisodeForward<T>&, const LossConfig&);        \
  template LossBreakdown train_step<T>(Model<T>&, const Episode&, const LabelLexicon&,        \
                                       const LossConfig&, double, double, Rng&);              \
  template TrainResult<T> train<T>(Model<T>, const IndexedDataset&, const IndexedDataset&,    \
                                   const LabelLexicon&, const LabelLexicon&,                  \
                                   const TrainConfig&, const LossConfig&, const LogSink&);

PROTOFORGE_INSTANTIATE_TRAINER(float)
PROTOFORGE_INSTANTIATE_TRAINER(double)

}  // namespace protoforge
