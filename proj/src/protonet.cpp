#include "protonet.hpp"

#include <cmath>

namespace protoforge {

template <typename T>
Array2<T> class_prototypes(const Array2<T>& support, int n_way, int k_shot) {
  if (support.rows() != n_way * k_shot)
    throw ShapeError(strfmt("class_prototypes: %d support rows, expected %d x %d",
                            support.rows(), n_way, k_shot));
  Array2<T> protos(n_way, support.cols());
  for (int i = 0; i < n_way; ++i) {
    T* p = protos.row(i);
    for (int k = 0; k < k_shot; ++k) {
      const T* s = support.row(i * k_shot + k);
      for (int j = 0; j < support.cols(); ++j) p[j] += s[j];
    }
    for (int j = 0; j < support.cols(); ++j) p[j] /= T(k_shot);
  }
  return protos;
}

template <typename T>
void class_prototypes_backward(const Array2<T>& grad_protos, int n_way, int k_shot,
                               Array2<T>& grad_support) {
  if (grad_support.rows() != n_way * k_shot || grad_support.cols() != grad_protos.cols())
    throw ShapeError("class_prototypes_backward: shape mismatch");
  for (int i = 0; i < n_way; ++i) {
    const T* g = grad_protos.row(i);
    for (int k = 0; k < k_shot; ++k) {
      T* gs = grad_support.row(i * k_shot + k);
      for (int j = 0; j < grad_protos.cols(); ++j) gs[j] += g[j] / T(k_shot);
    }
  }
}

template <typename T>
LabelVectors<T> label_vectors_from_words(const std::vector<std::vector<int>>& word_ids,
                                         const ParamStore<T>& params) {
  const Array2<T>& word = params.value("word_emb");
  const Array2<T>& proj_w = params.value("label_proj_w");
  const Array2<T>& proj_b = params.value("label_proj_b");
  const int n = static_cast<int>(word_ids.size());

  LabelVectors<T> out;
  out.word_ids = word_ids;
  out.means = Array2<T>(n, word.cols());
  for (int i = 0; i < n; ++i) {
    const auto& ids = word_ids[i];
    if (ids.empty()) throw DataError(strfmt("label_vectors: class %d has no label words", i));
    Array2<T> rows = embedding_lookup(word, ids);
    T* m = out.means.row(i);
    for (int r = 0; r < rows.rows(); ++r)
      for (int c = 0; c < rows.cols(); ++c) m[c] += rows.at(r, c);
    for (int c = 0; c < word.cols(); ++c) m[c] /= T(ids.size());
  }
  out.vectors = linear(out.means, proj_w, proj_b);
  return out;
}

template <typename T>
void label_vectors_from_words_backward(const LabelVectors<T>& fwd, const Array2<T>& grad_c,
                                       ParamStore<T>& params, bool freeze_lookup) {
  const Array2<T>& proj_w = params.value("label_proj_w");
  Array2<T> grad_means(fwd.means.rows(), fwd.means.cols());
  linear_backward(fwd.means, proj_w, grad_c, grad_means, params.grad("label_proj_w"),
                  params.grad("label_proj_b"));
  if (freeze_lookup) return;
  Array2<T>& g_word = params.grad("word_emb");
  for (int i = 0; i < grad_means.rows(); ++i) {
    const auto& ids = fwd.word_ids[i];
    const T inv = T(1) / T(ids.size());
    for (int id : ids) {
      T* dst = g_word.row(id);
      for (int c = 0; c < grad_means.cols(); ++c) dst[c] += grad_means.at(i, c) * inv;
    }
  }
}

template <typename T>
LabelVectors<T> label_vectors_from_descriptions(std::span<const IndexedInstance> descriptions,
                                                const EncoderConfig& cfg,
                                                const ParamStore<T>& params, Mode mode,
                                                Rng* dropout_rng) {
  LabelVectors<T> out;
  out.encoded = std::make_unique<EncodedBatch<T>>(
      encode_batch(descriptions, cfg, params, mode, dropout_rng));
  out.vectors = out.encoded->vectors;
  return out;
}

template <typename T>
void label_vectors_from_descriptions_backward(const LabelVectors<T>& fwd,
                                              const Array2<T>& grad_c,
                                              const EncoderConfig& cfg, ParamStore<T>& params) {
  encode_backward(*fwd.encoded, grad_c, cfg, params);
}

namespace {

template <typename T>
Array2<T> mix_h_forward(const Array2<T>& label_vecs, const ParamStore<T>& params,
                        int mix_hidden, MixResult<T>& cache) {
  if (mix_hidden > 0) {
    cache.hidden_pre = linear(label_vecs, params.value("mix_hidden_w"),
                              params.value("mix_hidden_b"));
    cache.hidden_act = tanh_act(cache.hidden_pre);
    return linear(cache.hidden_act, params.value("mix_w"), params.value("mix_b"));
  }
  return linear(label_vecs, params.value("mix_w"), params.value("mix_b"));
}

}  // namespace

template <typename T>
MixResult<T> mix_prototypes(const Array2<T>& protos, const Array2<T>& label_vecs,
                            const ParamStore<T>& params, std::optional<double> force_lambda,
                            int mix_hidden) {
  check_same_shape(protos, label_vecs, "mix_prototypes");
  const int n = protos.rows(), d = protos.cols();
  MixResult<T> out;
  out.forced = force_lambda;

  if (force_lambda) {
    out.lambda = Array2<T>::filled(n, 1, T(*force_lambda));
  } else {
    out.h_out = mix_h_forward(label_vecs, params, mix_hidden, out);
    out.lambda = sigmoid(out.h_out);
  }

  out.adapted = Array2<T>(n, d);
  for (int i = 0; i < n; ++i) {
    const T lam = out.lambda.at(i, 0);
    T* a = out.adapted.row(i);
    if (lam == T(1)) {  // exact endpoint, keeps the plain-prototype reduction bitwise
      std::copy(protos.row(i), protos.row(i) + d, a);
    } else if (lam == T(0)) {
      std::copy(label_vecs.row(i), label_vecs.row(i) + d, a);
    } else {
      const T* p = protos.row(i);
      const T* c = label_vecs.row(i);
      for (int j = 0; j < d; ++j) a[j] = lam * p[j] + (T(1) - lam) * c[j];
    }
  }
  return out;
}

template <typename T>
void mix_prototypes_backward(const MixResult<T>& fwd, const Array2<T>& protos,
                             const Array2<T>& label_vecs, const Array2<T>& grad_adapted,
                             ParamStore<T>& params, Array2<T>& grad_protos,
                             Array2<T>& grad_label_vecs, int mix_hidden) {
  const int n = protos.rows(), d = protos.cols();
  Array2<T> grad_lambda(n, 1);
  for (int i = 0; i < n; ++i) {
    const T lam = fwd.lambda.at(i, 0);
    const T* g = grad_adapted.row(i);
    const T* p = protos.row(i);
    const T* c = label_vecs.row(i);
    T* gp = grad_protos.row(i);
    T* gc = grad_label_vecs.row(i);
    T gl = T(0);
    if (lam == T(1)) {
      for (int j = 0; j < d; ++j) {
        gp[j] += g[j];
        gl += g[j] * (p[j] - c[j]);
      }
    } else if (lam == T(0)) {
      for (int j = 0; j < d; ++j) {
        gc[j] += g[j];
        gl += g[j] * (p[j] - c[j]);
      }
    } else {
      for (int j = 0; j < d; ++j) {
        gp[j] += lam * g[j];
        gc[j] += (T(1) - lam) * g[j];
        gl += g[j] * (p[j] - c[j]);
      }
    }
    grad_lambda.at(i, 0) = gl;
  }
  if (fwd.forced) return;  // constant coefficient, nothing flows into h

  Array2<T> grad_h(n, 1);
  sigmoid_backward(fwd.lambda, grad_lambda, grad_h);
  if (mix_hidden > 0) {
    Array2<T> grad_hidden_act(n, mix_hidden);
    linear_backward(fwd.hidden_act, params.value("mix_w"), grad_h, grad_hidden_act,
                    params.grad("mix_w"), params.grad("mix_b"));
    Array2<T> grad_hidden_pre(n, mix_hidden);
    tanh_backward(fwd.hidden_act, grad_hidden_act, grad_hidden_pre);
    linear_backward(label_vecs, params.value("mix_hidden_w"), grad_hidden_pre, grad_label_vecs,
                    params.grad("mix_hidden_w"), params.grad("mix_hidden_b"));
  } else {
    linear_backward(label_vecs, params.value("mix_w"), grad_h, grad_label_vecs,
                    params.grad("mix_w"), params.grad("mix_b"));
  }
}

template <typename T>
Array2<T> classify(const Array2<T>& queries, const Array2<T>& prototypes, bool sqrt_distance) {
  Array2<T> dist = pairwise_sq_euclidean(queries, prototypes);
  Array2<T> scores(dist.rows(), dist.cols());
  for (size_t i = 0; i < dist.size(); ++i)
    scores[i] = sqrt_distance ? -std::sqrt(dist[i]) : -dist[i];
  // softmax rows via the stable fused path
  std::vector<int> zeros(static_cast<size_t>(scores.rows()), 0);
  NllResult<T> nll = log_softmax_nll(scores, zeros);
  Array2<T> probs(scores.rows(), scores.cols());
  for (int i = 0; i < scores.rows(); ++i)
    for (int c = 0; c < scores.cols(); ++c) probs.at(i, c) = std::exp(nll.log_probs.at(i, c));
  return probs;
}

#define PROTOFORGE_INSTANTIATE_PROTONET(T)                                                    \
  template Array2<T> class_prototypes<T>(const Array2<T>&, int, int);                         \
  template void class_prototypes_backward<T>(const Array2<T>&, int, int, Array2<T>&);         \
  template LabelVectors<T> label_vectors_from_words<T>(const std::vector<std::vector<int>>&,  \
                                                       const ParamStore<T>&);                 \
  template void label_vectors_from_words_backward<T>(const LabelVectors<T>&,                 \
                                                     const Array2<T>&, ParamStore<T>&, bool); \
  template LabelVectors<T> label_vectors_from_descriptions<T>(                                \
      std::span<const IndexedInstance>, const EncoderConfig&, const ParamStore<T>&, Mode,     \
      Rng*);                                                                                  \
  template void label_vectors_from_descriptions_backward<T>(                                  \
      const LabelVectors<T>&, const Array2<T>&, const EncoderConfig&, ParamStore<T>&);        \
  template MixResult<T> mix_prototypes<T>(const Array2<T>&, const Array2<T>&,                 \
                                          const ParamStore<T>&, std::optional<double>, int);  \
  template void mix_prototypes_backward<T>(const MixResult<T>&, const Array2<T>&,             \
                                           const Array2<T>&, const Array2<T>&,                \
                                           ParamStore<T>&, Array2<T>&, Array2<T>&, int);      \
  template Array2<T> classify<T>(const Array2<T>&, const Array2<T>&, bool);

PROTOFORGE_INSTANTIATE_PROTONET(float)
PROTOFORGE_INSTANTIATE_PROTONET(double)

}  // namespace protoforge
