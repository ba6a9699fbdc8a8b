#pragma once

#include "ops.hpp"

namespace protoforge {

enum class RepLossKind { kNone, kJrl, kPjrl };

struct LossConfig {
  RepLossKind variant = RepLossKind::kJrl;
  double margin = 0.5;  // squared-distance units
  double alpha = 1.0;
  double ce_weight = 1.0;  // not user-facing; gradcheck isolates the rep term with it

  void validate() const {
    if (margin < 0.0) throw ConfigError("loss margin must be >= 0");
    if (alpha < 0.0) throw ConfigError("loss alpha must be >= 0");
    if (ce_weight < 0.0) throw ConfigError("loss ce weight must be >= 0");
  }
};

const char* rep_loss_name(RepLossKind k);
RepLossKind rep_loss_from_name(const std::string& name);

/// One mined triplet. For the prototype variant `positive`/`negative` index
/// prototypes; otherwise they index pooled samples.
template <typename T>
struct TripletChoice {
  int anchor = -1;
  int positive = -1;
  int negative = -1;
  T d_pos = T(0);  // farthest same-class distance
  T d_neg = T(0);  // nearest other-class distance
  T hinge = T(0);  // max(0, margin + d_pos - d_neg)
};

template <typename T>
struct TripletResult {
  T loss = T(0);
  std::vector<TripletChoice<T>> triplets;
  int skipped_anchors = 0;  // anchors with no same-class partner
};

/// -sum log p[label] from an explicit probability matrix. Training uses the
/// fused log_softmax_nll path on raw scores instead; this direct form exists
/// for reporting and tests and rejects a zero probability at the true class.
template <typename T>
T cross_entropy(const Array2<T>& probabilities, std::span<const int> labels);

/// Hardest-triplet mining over the pooled samples: every sample is an anchor;
/// the positive is the farthest same-class sample (anchor excluded), the
/// negative the nearest other-class sample, ties to the lowest index.
/// Distances are squared euclidean. Anchors with no positive are skipped and
/// counted. A single-class pool is an error.
template <typename T>
TripletResult<T> hardest_triplet_loss(const Array2<T>& emb, std::span<const int> labels,
                                      T margin);

/// Gradient flows only through the selected pairs of active hinges; the
/// selection is treated as constant. `scale` folds in the joint-loss alpha.
template <typename T>
void hardest_triplet_backward(const Array2<T>& emb, const TripletResult<T>& mined,
                              Array2<T>& grad_emb, T scale = T(1));

/// Distances and hinges recomputed for a fixed selection; pairs with gradient
/// checking, which must not let the argmin/argmax choices move under
/// perturbation.
template <typename T>
TripletResult<T> hardest_triplet_refresh(const Array2<T>& emb,
                                         const std::vector<TripletChoice<T>>& selection,
                                         T margin);

/// Prototype variant: the positive is the anchor's own class prototype (the
/// only one, so "farthest" degenerates to it) and the negative the nearest
/// other-class prototype.
template <typename T>
TripletResult<T> prototype_triplet_loss(const Array2<T>& emb, const Array2<T>& protos,
                                        std::span<const int> labels, T margin);

template <typename T>
void prototype_triplet_backward(const Array2<T>& emb, const Array2<T>& protos,
                                const TripletResult<T>& mined, Array2<T>& grad_emb,
                                Array2<T>& grad_protos, T scale = T(1));

template <typename T>
TripletResult<T> prototype_triplet_refresh(const Array2<T>& emb, const Array2<T>& protos,
                                           const std::vector<TripletChoice<T>>& selection,
                                           T margin);

/// ce + alpha * rep (Gradients superpose linearly; handled by the callers.)
template <typename T>
T joint_loss(T ce, T rep, T alpha) {
  return ce + alpha * rep;
}

}  // namespace protoforge
