#pragma once

#include <memory>
#include <optional>

#include "encoder.hpp"

namespace protoforge {

/// p_i = mean of the K support vectors of class i; support rows class-major.
template <typename T>
Array2<T> class_prototypes(const Array2<T>& support, int n_way, int k_shot);

template <typename T>
void class_prototypes_backward(const Array2<T>& grad_protos, int n_way, int k_shot,
                               Array2<T>& grad_support);

/// Label vectors c_i with their backward caches. Label-word mode averages the
/// classes' word embedding rows and projects d_w -> d_h through label_proj;
/// description mode runs the instance encoder, no projection.
template <typename T>
struct LabelVectors {
  Array2<T> vectors;                      // N x d_h
  Array2<T> means;                        // N x d_w (word mode)
  std::vector<std::vector<int>> word_ids; // word mode
  std::unique_ptr<EncodedBatch<T>> encoded;  // description mode
};

template <typename T>
LabelVectors<T> label_vectors_from_words(const std::vector<std::vector<int>>& word_ids,
                                         const ParamStore<T>& params);

/// freeze_lookup stops the label-path gradient into the shared word table.
template <typename T>
void label_vectors_from_words_backward(const LabelVectors<T>& fwd, const Array2<T>& grad_c,
                                       ParamStore<T>& params, bool freeze_lookup);

template <typename T>
LabelVectors<T> label_vectors_from_descriptions(std::span<const IndexedInstance> descriptions,
                                                const EncoderConfig& cfg,
                                                const ParamStore<T>& params, Mode mode,
                                                Rng* dropout_rng);

template <typename T>
void label_vectors_from_descriptions_backward(const LabelVectors<T>& fwd,
                                              const Array2<T>& grad_c,
                                              const EncoderConfig& cfg, ParamStore<T>& params);

/// Adaptive convex combination p'_i = lambda_i p_i + (1 - lambda_i) c_i with
/// lambda_i = sigmoid(h(c_i)). h is an affine map d_h -> 1, optionally with a
/// tanh hidden layer of width mix_hidden. force_lambda bypasses h with a
/// constant treated as such by the backward pass; 1 and 0 reproduce the
/// endpoint exactly (bit-identical row copy).
template <typename T>
struct MixResult {
  Array2<T> lambda;   // N x 1
  Array2<T> adapted;  // N x d_h
  Array2<T> h_out;    // N x 1, pre-sigmoid
  Array2<T> hidden_pre, hidden_act;  // N x H when mix_hidden > 0
  std::optional<double> forced;
};

template <typename T>
MixResult<T> mix_prototypes(const Array2<T>& protos, const Array2<T>& label_vecs,
                            const ParamStore<T>& params, std::optional<double> force_lambda,
                            int mix_hidden);

template <typename T>
void mix_prototypes_backward(const MixResult<T>& fwd, const Array2<T>& protos,
                             const Array2<T>& label_vecs, const Array2<T>& grad_adapted,
                             ParamStore<T>& params, Array2<T>& grad_protos,
                             Array2<T>& grad_label_vecs, int mix_hidden);

/// Softmax over negative (squared, by default) euclidean distances to the
/// prototypes. Rows sum to 1; the argmax is the nearest prototype.
template <typename T>
Array2<T> classify(const Array2<T>& queries, const Array2<T>& prototypes,
                   bool sqrt_distance = false);

}  // namespace protoforge
