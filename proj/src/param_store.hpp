#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "array.hpp"

namespace protoforge {

/// One named trainable (or frozen) array with its gradient accumulator.
template <typename T>
struct Param {
  std::string name;
  Array2<T> value;
  Array2<T> grad;
  bool trainable = true;
};

/// All model parameters, addressable by name. Iteration order is insertion
/// order, which makes SGD sweeps and checkpoint layout deterministic.
template <typename T>
class ParamStore {
 public:
  Param<T>& add(const std::string& name, Array2<T> value, bool trainable = true) {
    if (index_.count(name)) throw ConfigError("duplicate parameter: " + name);
    index_[name] = params_.size();
    params_.push_back(Param<T>{name, std::move(value), {}, trainable});
    Param<T>& p = params_.back();
    p.grad = Array2<T>::zeros(p.value.rows(), p.value.cols());
    return p;
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  Param<T>& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw IndexError("unknown parameter: " + name);
    return params_[it->second];
  }
  const Param<T>& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw IndexError("unknown parameter: " + name);
    return params_[it->second];
  }

  const Array2<T>& value(const std::string& name) const { return get(name).value; }
  Array2<T>& grad(const std::string& name) { return get(name).grad; }

  std::vector<Param<T>>& entries() { return params_; }
  const std::vector<Param<T>>& entries() const { return params_; }
  size_t count() const { return params_.size(); }

  void zero_grads() {
    for (auto& p : params_) p.grad.zero();
  }

  /// param <- param - lr * (grad + weight_decay * param), trainable entries only
  void sgd_step(T lr, T weight_decay) {
    for (auto& p : params_) {
      if (!p.trainable) continue;
      T* v = p.value.data();
      const T* g = p.grad.data();
      for (size_t i = 0; i < p.value.size(); ++i) v[i] -= lr * (g[i] + weight_decay * v[i]);
    }
  }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& p : params_) out.add(p.name, p.value.template cast<U>(), p.trainable);
    return out;
  }

 private:
  std::vector<Param<T>> params_;
  std::unordered_map<std::string, size_t> index_;
};

}  // namespace protoforge
