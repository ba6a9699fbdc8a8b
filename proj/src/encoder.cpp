#include "encoder.hpp"

#include <algorithm>

namespace protoforge {

template <typename T>
Array2<T> embed_instance(const IndexedInstance& inst, const Array2<T>& word_table,
                         const Array2<T>& pos_head_table, const Array2<T>& pos_tail_table) {
  const int steps = static_cast<int>(inst.token_ids.size());
  const int d_w = word_table.cols(), d_p = pos_head_table.cols();
  Array2<T> words = embedding_lookup(word_table, inst.token_ids);
  Array2<T> heads = embedding_lookup(pos_head_table, inst.pos_head);
  Array2<T> tails = embedding_lookup(pos_tail_table, inst.pos_tail);
  Array2<T> out(steps, d_w + 2 * d_p);
  for (int t = 0; t < steps; ++t) {
    T* row = out.row(t);
    std::copy(words.row(t), words.row(t) + d_w, row);
    std::copy(heads.row(t), heads.row(t) + d_p, row + d_w);
    std::copy(tails.row(t), tails.row(t) + d_p, row + d_w + d_p);
  }
  return out;
}

template <typename T>
EncodedBatch<T> encode_batch(std::span<const IndexedInstance> batch, const EncoderConfig& cfg,
                             const ParamStore<T>& params, Mode mode, Rng* dropout_rng) {
  cfg.validate();
  if (mode == Mode::kTrain && cfg.dropout > 0.0 && dropout_rng == nullptr)
    throw ConfigError("encode_batch: train mode with dropout needs an rng");

  const Array2<T>& word = params.value("word_emb");
  const Array2<T>& pos_h = params.value("pos_head");
  const Array2<T>& pos_t = params.value("pos_tail");
  const Array2<T>& kernel = params.value("conv_kernel");
  const Array2<T>& bias = params.value("conv_bias");

  EncodedBatch<T> out;
  out.vectors = Array2<T>(static_cast<int>(batch.size()), cfg.d_h);
  Rng unused(0);
  for (size_t i = 0; i < batch.size(); ++i) {
    const IndexedInstance& inst = batch[i];
    if (static_cast<int>(inst.token_ids.size()) != cfg.max_len)
      throw ShapeError(strfmt("encode_batch: instance has %zu token ids, encoder expects %d",
                              inst.token_ids.size(), cfg.max_len));
    EncodeCache<T> cache;
    cache.embedded = embed_instance(inst, word, pos_h, pos_t);
    Array2<T> conv = conv1d_same(cache.embedded, kernel, bias, cfg.window);
    MaxPool<T> pool = max_over_time(conv);
    cache.argmax = std::move(pool.argmax);
    cache.pooled = std::move(pool.values);
    Array2<T> act = cfg.relu_after_pool ? relu(cache.pooled) : cache.pooled;
    Array2<T> final = dropout(act, cfg.dropout, mode, dropout_rng ? *dropout_rng : unused,
                              &cache.dropout_mask);
    final.check_finite("encoded sentence vector");
    std::copy(final.row(0), final.row(0) + cfg.d_h, out.vectors.row(static_cast<int>(i)));
    out.items.push_back(inst);
    out.caches.push_back(std::move(cache));
  }
  return out;
}

template <typename T>
void encode_backward(const EncodedBatch<T>& fwd, const Array2<T>& grad_vectors,
                     const EncoderConfig& cfg, ParamStore<T>& params) {
  if (grad_vectors.rows() != fwd.count() || grad_vectors.cols() != cfg.d_h)
    throw ShapeError("encode_backward: gradient shape mismatch");
  const Array2<T>& kernel = params.value("conv_kernel");
  Array2<T>& g_word = params.grad("word_emb");
  Array2<T>& g_pos_h = params.grad("pos_head");
  Array2<T>& g_pos_t = params.grad("pos_tail");
  Array2<T>& g_kernel = params.grad("conv_kernel");
  Array2<T>& g_bias = params.grad("conv_bias");
  const int d_w = cfg.d_w, d_p = cfg.d_p;

  for (int i = 0; i < fwd.count(); ++i) {
    const EncodeCache<T>& cache = fwd.caches[i];
    const IndexedInstance& inst = fwd.items[i];

    Array2<T> g_row(1, cfg.d_h);
    for (int c = 0; c < cfg.d_h; ++c) g_row.at(0, c) = grad_vectors.at(i, c);

    Array2<T> g_act(1, cfg.d_h);
    dropout_backward(cache.dropout_mask, g_row, g_act);

    Array2<T> g_pooled(1, cfg.d_h);
    if (cfg.relu_after_pool)
      relu_backward(cache.pooled, g_act, g_pooled);
    else
      g_pooled = g_act;

    Array2<T> g_conv(cfg.max_len, cfg.d_h);
    max_over_time_backward(cache.argmax, g_pooled, g_conv);

    Array2<T> g_embedded(cfg.max_len, cfg.d());
    conv1d_same_backward(cache.embedded, kernel, cfg.window, g_conv, g_embedded, g_kernel,
                         g_bias);

    // split token-row gradients back into the three tables
    Array2<T> gw(cfg.max_len, d_w), gh(cfg.max_len, d_p), gt(cfg.max_len, d_p);
    for (int t = 0; t < cfg.max_len; ++t) {
      const T* src = g_embedded.row(t);
      std::copy(src, src + d_w, gw.row(t));
      std::copy(src + d_w, src + d_w + d_p, gh.row(t));
      std::copy(src + d_w + d_p, src + d_w + 2 * d_p, gt.row(t));
    }
    embedding_lookup_backward<T>(inst.token_ids, gw, g_word);
    embedding_lookup_backward<T>(inst.pos_head, gh, g_pos_h);
    embedding_lookup_backward<T>(inst.pos_tail, gt, g_pos_t);
  }
}

#define PROTOFORGE_INSTANTIATE_ENCODER(T)                                                     \
  template Array2<T> embed_instance<T>(const IndexedInstance&, const Array2<T>&,              \
                                       const Array2<T>&, const Array2<T>&);                   \
  template EncodedBatch<T> encode_batch<T>(std::span<const IndexedInstance>,                  \
                                           const EncoderConfig&, const ParamStore<T>&, Mode,  \
                                           Rng*);                                             \
  template void encode_backward<T>(const EncodedBatch<T>&, const Array2<T>&,                  \
                                   const EncoderConfig&, ParamStore<T>&);

PROTOFORGE_INSTANTIATE_ENCODER(float)
PROTOFORGE_INSTANTIATE_ENCODER(double)

}  // namespace protoforge
