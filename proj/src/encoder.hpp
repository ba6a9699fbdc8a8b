#pragma once

#include "dataset.hpp"
#include "ops.hpp"
#include "param_store.hpp"

namespace protoforge {

/// Sentence encoder dimensions. Defaults follow the trained configuration:
/// 50-d word vectors, two 5-d position embeddings (60-d token rows), a
/// window-3 convolution to 230 hidden channels over 40-token sentences.
struct EncoderConfig {
  int d_w = 50;
  int d_p = 5;
  int d_h = 230;
  int window = 3;
  int max_len = 40;
  int max_rel = 40;  // position clip range; |P| = 2*max_rel + 1
  double dropout = 0.2;
  bool relu_after_pool = true;

  int d() const { return d_w + 2 * d_p; }
  int pos_rows() const { return 2 * max_rel + 1; }

  void validate() const {
    if (window % 2 == 0 || window <= 0)
      throw ConfigError("encoder window must be odd and positive");
    if (d_w < 1 || d_p < 1 || d_h < 1 || max_len < 1 || max_rel < 1)
      throw ConfigError("encoder dimensions must be positive");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("encoder dropout must be in [0, 1)");
  }
};

/// Per-instance intermediates kept for the backward pass.
template <typename T>
struct EncodeCache {
  Array2<T> embedded;       // max_len x d
  std::vector<int> argmax;  // winning conv row per channel
  Array2<T> pooled;         // 1 x d_h, pre-activation
  Array2<T> dropout_mask;   // 1 x d_h, already scaled
};

/// Encoded sentences with provenance and backward caches.
template <typename T>
struct EncodedBatch {
  Array2<T> vectors;  // n x d_h
  std::vector<IndexedInstance> items;
  std::vector<EncodeCache<T>> caches;

  int count() const { return vectors.rows(); }
};

/// Token row i = word vector of ids[i], then head- and tail-position vectors.
template <typename T>
Array2<T> embed_instance(const IndexedInstance& inst, const Array2<T>& word_table,
                         const Array2<T>& pos_head_table, const Array2<T>& pos_tail_table);

/// Full encoder: embed, convolve (same padding), max over time, optional
/// rectifier, dropout on the pooled vector in train mode.
/// Requires params word_emb, pos_head, pos_tail, conv_kernel, conv_bias.
template <typename T>
EncodedBatch<T> encode_batch(std::span<const IndexedInstance> batch, const EncoderConfig& cfg,
                             const ParamStore<T>& params, Mode mode, Rng* dropout_rng);

/// Accumulates parameter gradients for the whole batch given d(loss)/d(vectors).
template <typename T>
void encode_backward(const EncodedBatch<T>& fwd, const Array2<T>& grad_vectors,
                     const EncoderConfig& cfg, ParamStore<T>& params);

}  // namespace protoforge
