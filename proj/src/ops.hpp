#pragma once

#include <span>
#include <vector>

#include "array.hpp"
#include "common.hpp"

namespace protoforge {

enum class Mode { kTrain, kEval };

// Fixed set of layer ops with hand-derived backward passes. Backward
// functions ACCUMULATE into their grad outputs; callers zero the buffers
// (ParamStore accumulators start zeroed).

// --- embedding lookup ------------------------------------------------------

/// Row gather: out row i = table row ids[i].
template <typename T>
Array2<T> embedding_lookup(const Array2<T>& table, std::span<const int> ids);

/// Scatter-add of upstream row gradients into the table gradient; duplicate
/// ids accumulate.
template <typename T>
void embedding_lookup_backward(std::span<const int> ids, const Array2<T>& grad_out,
                               Array2<T>& table_grad);

// --- 1-d convolution over time, same padding --------------------------------

/// input T x d, kernel (u*d) x d_h laid out window-major, bias 1 x d_h.
/// Output row t sees input rows t-(u-1)/2 .. t+(u-1)/2, zero padded.
template <typename T>
Array2<T> conv1d_same(const Array2<T>& input, const Array2<T>& kernel, const Array2<T>& bias,
                      int window);

template <typename T>
void conv1d_same_backward(const Array2<T>& input, const Array2<T>& kernel, int window,
                          const Array2<T>& grad_out, Array2<T>& grad_input,
                          Array2<T>& grad_kernel, Array2<T>& grad_bias);

// --- max over time -----------------------------------------------------------

template <typename T>
struct MaxPool {
  Array2<T> values;         // 1 x d
  std::vector<int> argmax;  // winning row per column, first row wins ties
};

template <typename T>
MaxPool<T> max_over_time(const Array2<T>& input);

template <typename T>
void max_over_time_backward(const std::vector<int>& argmax, const Array2<T>& grad_out,
                            Array2<T>& grad_input);

// --- pairwise squared euclidean distance -------------------------------------

/// out[i][j] = sum_k (a[i][k] - b[j][k])^2. Computed by direct differencing
/// (not the norm expansion), so the result is bit-identical to a scalar
/// double loop over the same data.
template <typename T>
Array2<T> pairwise_sq_euclidean(const Array2<T>& a, const Array2<T>& b);

template <typename T>
void pairwise_sq_euclidean_backward(const Array2<T>& a, const Array2<T>& b,
                                    const Array2<T>& grad_out, Array2<T>& grad_a,
                                    Array2<T>& grad_b);

// --- elementwise nonlinearities ----------------------------------------------

template <typename T>
Array2<T> sigmoid(const Array2<T>& x);
/// d/dx = out * (1 - out); pass the forward output.
template <typename T>
void sigmoid_backward(const Array2<T>& out, const Array2<T>& grad_out, Array2<T>& grad_in);

template <typename T>
Array2<T> relu(const Array2<T>& x);
template <typename T>
void relu_backward(const Array2<T>& x, const Array2<T>& grad_out, Array2<T>& grad_in);

template <typename T>
Array2<T> tanh_act(const Array2<T>& x);
template <typename T>
void tanh_backward(const Array2<T>& out, const Array2<T>& grad_out, Array2<T>& grad_in);

// --- fused log-softmax + negative log likelihood ------------------------------

template <typename T>
struct NllResult {
  T loss;                 // sum over rows of -log softmax(scores_i)[labels_i]
  Array2<T> grad_scores;  // softmax - onehot, per row
  Array2<T> log_probs;    // n x C
};

/// Max-subtracted for stability; labels index columns.
template <typename T>
NllResult<T> log_softmax_nll(const Array2<T>& scores, std::span<const int> labels);

// --- affine -------------------------------------------------------------------

/// out = input (n x a) * weight (a x b) + bias (1 x b)
template <typename T>
Array2<T> linear(const Array2<T>& input, const Array2<T>& weight, const Array2<T>& bias);

template <typename T>
void linear_backward(const Array2<T>& input, const Array2<T>& weight, const Array2<T>& grad_out,
                     Array2<T>& grad_input, Array2<T>& grad_weight, Array2<T>& grad_bias);

// --- inverted dropout -----------------------------------------------------------

/// Train mode zeroes each element with probability `rate` and scales survivors
/// by 1/(1-rate); eval mode is the identity. The mask (already scaled) is
/// written to *mask_out when given, for the backward pass.
template <typename T>
Array2<T> dropout(const Array2<T>& input, double rate, Mode mode, Rng& rng, Array2<T>* mask_out);

template <typename T>
void dropout_backward(const Array2<T>& mask, const Array2<T>& grad_out, Array2<T>& grad_in);

}  // namespace protoforge
