#include "ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace protoforge {

template <typename T>
Array2<T> embedding_lookup(const Array2<T>& table, std::span<const int> ids) {
  Array2<T> out(static_cast<int>(ids.size()), table.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    int id = ids[i];
    if (id < 0 || id >= table.rows())
      throw IndexError(strfmt("embedding_lookup: id %d out of range [0, %d)", id, table.rows()));
    std::copy(table.row(id), table.row(id) + table.cols(), out.row(static_cast<int>(i)));
  }
  return out;
}

template <typename T>
void embedding_lookup_backward(std::span<const int> ids, const Array2<T>& grad_out,
                               Array2<T>& table_grad) {
  if (grad_out.rows() != static_cast<int>(ids.size()) || grad_out.cols() != table_grad.cols())
    throw ShapeError("embedding_lookup_backward: gradient shape mismatch");
  for (size_t i = 0; i < ids.size(); ++i) {
    int id = ids[i];
    if (id < 0 || id >= table_grad.rows())
      throw IndexError(strfmt("embedding_lookup_backward: id %d out of range", id));
    T* dst = table_grad.row(id);
    const T* src = grad_out.row(static_cast<int>(i));
    for (int c = 0; c < grad_out.cols(); ++c) dst[c] += src[c];
  }
}

template <typename T>
Array2<T> conv1d_same(const Array2<T>& input, const Array2<T>& kernel, const Array2<T>& bias,
                      int window) {
  if (window % 2 == 0 || window <= 0)
    throw ConfigError(strfmt("conv1d_same: window must be odd and positive, got %d", window));
  const int steps = input.rows(), d = input.cols(), d_h = kernel.cols();
  if (kernel.rows() != window * d)
    throw ShapeError(strfmt("conv1d_same: kernel rows %d != window*d = %d", kernel.rows(),
                            window * d));
  if (bias.rows() != 1 || bias.cols() != d_h)
    throw ShapeError("conv1d_same: bias must be 1 x d_h");
  const int half = (window - 1) / 2;
  Array2<T> out(steps, d_h);
  for (int t = 0; t < steps; ++t) {
    T* o = out.row(t);
    std::copy(bias.row(0), bias.row(0) + d_h, o);
    for (int k = 0; k < window; ++k) {
      int src = t + k - half;
      if (src < 0 || src >= steps) continue;  // zero padding
      const T* in = input.row(src);
      for (int j = 0; j < d; ++j) {
        const T x = in[j];
        if (x == T(0)) continue;
        const T* w = kernel.row(k * d + j);
        for (int c = 0; c < d_h; ++c) o[c] += x * w[c];
      }
    }
  }
  return out;
}

template <typename T>
void conv1d_same_backward(const Array2<T>& input, const Array2<T>& kernel, int window,
                          const Array2<T>& grad_out, Array2<T>& grad_input,
                          Array2<T>& grad_kernel, Array2<T>& grad_bias) {
  const int steps = input.rows(), d = input.cols(), d_h = kernel.cols();
  if (grad_out.rows() != steps || grad_out.cols() != d_h)
    throw ShapeError("conv1d_same_backward: grad_out shape mismatch");
  const int half = (window - 1) / 2;
  for (int t = 0; t < steps; ++t) {
    const T* go = grad_out.row(t);
    for (int c = 0; c < d_h; ++c) grad_bias.at(0, c) += go[c];
    for (int k = 0; k < window; ++k) {
      int src = t + k - half;
      if (src < 0 || src >= steps) continue;
      const T* in = input.row(src);
      T* gi = grad_input.row(src);
      for (int j = 0; j < d; ++j) {
        const T* w = kernel.row(k * d + j);
        T* gw = grad_kernel.row(k * d + j);
        T acc = T(0);
        const T x = in[j];
        for (int c = 0; c < d_h; ++c) {
          acc += go[c] * w[c];
          gw[c] += go[c] * x;
        }
        gi[j] += acc;
      }
    }
  }
}

template <typename T>
MaxPool<T> max_over_time(const Array2<T>& input) {
  if (input.rows() < 1) throw ShapeError("max_over_time: empty input");
  MaxPool<T> res;
  res.values = Array2<T>(1, input.cols());
  res.argmax.assign(input.cols(), 0);
  for (int c = 0; c < input.cols(); ++c) res.values.at(0, c) = input.at(0, c);
  for (int r = 1; r < input.rows(); ++r) {
    const T* row = input.row(r);
    for (int c = 0; c < input.cols(); ++c) {
      if (row[c] > res.values.at(0, c)) {  // strict: first row wins ties
        res.values.at(0, c) = row[c];
        res.argmax[c] = r;
      }
    }
  }
  return res;
}

template <typename T>
void max_over_time_backward(const std::vector<int>& argmax, const Array2<T>& grad_out,
                            Array2<T>& grad_input) {
  if (grad_out.cols() != static_cast<int>(argmax.size()) || grad_out.rows() != 1)
    throw ShapeError("max_over_time_backward: grad shape mismatch");
  for (int c = 0; c < grad_out.cols(); ++c) grad_input.at(argmax[c], c) += grad_out.at(0, c);
}

template <typename T>
Array2<T> pairwise_sq_euclidean(const Array2<T>& a, const Array2<T>& b) {
  if (a.cols() != b.cols())
    throw ShapeError(strfmt("pairwise_sq_euclidean: inner dims %d vs %d", a.cols(), b.cols()));
  Array2<T> out(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i) {
    const T* ra = a.row(i);
    for (int j = 0; j < b.rows(); ++j) {
      const T* rb = b.row(j);
      T acc = T(0);
      for (int k = 0; k < a.cols(); ++k) {
        T diff = ra[k] - rb[k];
        acc += diff * diff;
      }
      out.at(i, j) = acc;
    }
  }
  return out;
}

template <typename T>
void pairwise_sq_euclidean_backward(const Array2<T>& a, const Array2<T>& b,
                                    const Array2<T>& grad_out, Array2<T>& grad_a,
                                    Array2<T>& grad_b) {
  if (grad_out.rows() != a.rows() || grad_out.cols() != b.rows())
    throw ShapeError("pairwise_sq_euclidean_backward: grad shape mismatch");
  for (int i = 0; i < a.rows(); ++i) {
    const T* ra = a.row(i);
    T* ga = grad_a.row(i);
    for (int j = 0; j < b.rows(); ++j) {
      const T g = grad_out.at(i, j);
      if (g == T(0)) continue;
      const T* rb = b.row(j);
      T* gb = grad_b.row(j);
      for (int k = 0; k < a.cols(); ++k) {
        T diff2 = T(2) * (ra[k] - rb[k]);
        ga[k] += g * diff2;
        gb[k] -= g * diff2;
      }
    }
  }
}

template <typename T>
Array2<T> sigmoid(const Array2<T>& x) {
  // saturation clamps to the nearest representable values inside (0,1), the
  // exact result stays on the open interval for every finite input
  const T lo = std::numeric_limits<T>::min();
  const T hi = std::nextafter(T(1), T(0));
  Array2<T> out(x.rows(), x.cols());
  for (size_t i = 0; i < x.size(); ++i) {
    T v = x[i];
    T y;
    // evaluate on the negative side only so exp never overflows
    if (v >= T(0)) {
      T e = std::exp(-v);
      y = T(1) / (T(1) + e);
    } else {
      T e = std::exp(v);
      y = e / (T(1) + e);
    }
    out[i] = std::min(std::max(y, lo), hi);
  }
  return out;
}

template <typename T>
void sigmoid_backward(const Array2<T>& out, const Array2<T>& grad_out, Array2<T>& grad_in) {
  for (size_t i = 0; i < out.size(); ++i) grad_in[i] += grad_out[i] * out[i] * (T(1) - out[i]);
}

template <typename T>
Array2<T> relu(const Array2<T>& x) {
  Array2<T> out(x.rows(), x.cols());
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
  return out;
}

template <typename T>
void relu_backward(const Array2<T>& x, const Array2<T>& grad_out, Array2<T>& grad_in) {
  for (size_t i = 0; i < x.size(); ++i)
    if (x[i] > T(0)) grad_in[i] += grad_out[i];
}

template <typename T>
Array2<T> tanh_act(const Array2<T>& x) {
  Array2<T> out(x.rows(), x.cols());
  for (size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
  return out;
}

template <typename T>
void tanh_backward(const Array2<T>& out, const Array2<T>& grad_out, Array2<T>& grad_in) {
  for (size_t i = 0; i < out.size(); ++i) grad_in[i] += grad_out[i] * (T(1) - out[i] * out[i]);
}

template <typename T>
NllResult<T> log_softmax_nll(const Array2<T>& scores, std::span<const int> labels) {
  const int n = scores.rows(), classes = scores.cols();
  if (static_cast<int>(labels.size()) != n)
    throw ShapeError("log_softmax_nll: one label per row required");
  NllResult<T> res;
  res.loss = T(0);
  res.grad_scores = Array2<T>(n, classes);
  res.log_probs = Array2<T>(n, classes);
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= classes)
      throw IndexError(strfmt("log_softmax_nll: label %d out of range [0, %d)", labels[i],
                              classes));
    const T* s = scores.row(i);
    T mx = s[0];
    for (int c = 1; c < classes; ++c) mx = std::max(mx, s[c]);
    T sum = T(0);
    for (int c = 0; c < classes; ++c) sum += std::exp(s[c] - mx);
    T lse = mx + std::log(sum);
    T* lp = res.log_probs.row(i);
    T* g = res.grad_scores.row(i);
    for (int c = 0; c < classes; ++c) {
      lp[c] = s[c] - lse;
      g[c] = std::exp(lp[c]);
    }
    g[labels[i]] -= T(1);
    res.loss -= lp[labels[i]];
  }
  return res;
}

template <typename T>
Array2<T> linear(const Array2<T>& input, const Array2<T>& weight, const Array2<T>& bias) {
  const int n = input.rows(), a = input.cols(), b = weight.cols();
  if (weight.rows() != a)
    throw ShapeError(strfmt("linear: input cols %d vs weight rows %d", a, weight.rows()));
  if (bias.rows() != 1 || bias.cols() != b) throw ShapeError("linear: bias must be 1 x b");
  Array2<T> out(n, b);
  for (int i = 0; i < n; ++i) {
    T* o = out.row(i);
    std::copy(bias.row(0), bias.row(0) + b, o);
    const T* in = input.row(i);
    for (int k = 0; k < a; ++k) {
      const T x = in[k];
      if (x == T(0)) continue;
      const T* w = weight.row(k);
      for (int j = 0; j < b; ++j) o[j] += x * w[j];
    }
  }
  return out;
}

template <typename T>
void linear_backward(const Array2<T>& input, const Array2<T>& weight, const Array2<T>& grad_out,
                     Array2<T>& grad_input, Array2<T>& grad_weight, Array2<T>& grad_bias) {
  const int n = input.rows(), a = input.cols(), b = weight.cols();
  if (grad_out.rows() != n || grad_out.cols() != b)
    throw ShapeError("linear_backward: grad_out shape mismatch");
  for (int i = 0; i < n; ++i) {
    const T* go = grad_out.row(i);
    const T* in = input.row(i);
    T* gi = grad_input.row(i);
    for (int j = 0; j < b; ++j) grad_bias.at(0, j) += go[j];
    for (int k = 0; k < a; ++k) {
      const T* w = weight.row(k);
      T* gw = grad_weight.row(k);
      T acc = T(0);
      for (int j = 0; j < b; ++j) {
        acc += go[j] * w[j];
        gw[j] += go[j] * in[k];
      }
      gi[k] += acc;
    }
  }
}

template <typename T>
Array2<T> dropout(const Array2<T>& input, double rate, Mode mode, Rng& rng,
                  Array2<T>* mask_out) {
  if (rate < 0.0 || rate >= 1.0)
    throw ConfigError(strfmt("dropout: rate must be in [0, 1), got %g", rate));
  if (mode == Mode::kEval || rate == 0.0) {
    if (mask_out) *mask_out = Array2<T>::filled(input.rows(), input.cols(), T(1));
    return input;
  }
  const T keep_scale = T(1.0 / (1.0 - rate));
  Array2<T> mask(input.rows(), input.cols());
  Array2<T> out(input.rows(), input.cols());
  for (size_t i = 0; i < input.size(); ++i) {
    T m = rng.uniform_real() < rate ? T(0) : keep_scale;
    mask[i] = m;
    out[i] = input[i] * m;
  }
  if (mask_out) *mask_out = std::move(mask);
  return out;
}

template <typename T>
void dropout_backward(const Array2<T>& mask, const Array2<T>& grad_out, Array2<T>& grad_in) {
  for (size_t i = 0; i < mask.size(); ++i) grad_in[i] += grad_out[i] * mask[i];
}

#define PROTOFORGE_INSTANTIATE_OPS(T)                                                          \
  template Array2<T> embedding_lookup<T>(const Array2<T>&, std::span<const int>);              \
  template void embedding_lookup_backward<T>(std::span<const int>, const Array2<T>&,           \
                                             Array2<T>&);                                      \
  template Array2<T> conv1d_same<T>(const Array2<T>&, const Array2<T>&, const Array2<T>&,     \
                                    int);                                                      \
  template void conv1d_same_backward<T>(const Array2<T>&, const Array2<T>&, int,               \
                                        const Array2<T>&, Array2<T>&, Array2<T>&, Array2<T>&); \
  template MaxPool<T> max_over_time<T>(const Array2<T>&);                                      \
  template void max_over_time_backward<T>(const std::vector<int>&, const Array2<T>&,           \
                                          Array2<T>&);                                         \
  template Array2<T> pairwise_sq_euclidean<T>(const Array2<T>&, const Array2<T>&);             \
  template void pairwise_sq_euclidean_backward<T>(const Array2<T>&, const Array2<T>&,          \
                                                  const Array2<T>&, Array2<T>&, Array2<T>&);   \
  template Array2<T> sigmoid<T>(const Array2<T>&);                                             \
  template void sigmoid_backward<T>(const Array2<T>&, const Array2<T>&, Array2<T>&);           \
  template Array2<T> relu<T>(const Array2<T>&);                                                \
  template void relu_backward<T>(const Array2<T>&, const Array2<T>&, Array2<T>&);              \
  template Array2<T> tanh_act<T>(const Array2<T>&);                                            \
  template void tanh_backward<T>(const Array2<T>&, const Array2<T>&, Array2<T>&);              \
  template NllResult<T> log_softmax_nll<T>(const Array2<T>&, std::span<const int>);            \
  template Array2<T> linear<T>(const Array2<T>&, const Array2<T>&, const Array2<T>&);          \
  template void linear_backward<T>(const Array2<T>&, const Array2<T>&, const Array2<T>&,       \
                                   Array2<T>&, Array2<T>&, Array2<T>&);                        \
  template Array2<T> dropout<T>(const Array2<T>&, double, Mode, Rng&, Array2<T>*);             \
  template void dropout_backward<T>(const Array2<T>&, const Array2<T>&, Array2<T>&);

PROTOFORGE_INSTANTIATE_OPS(float)
PROTOFORGE_INSTANTIATE_OPS(double)

}  // namespace protoforge
