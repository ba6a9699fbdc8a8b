#include "losses.hpp"

#include <cmath>

namespace protoforge {

namespace {

template <typename T>
T sq_dist(const Array2<T>& a, int i, const Array2<T>& b, int j) {
  const T* ra = a.row(i);
  const T* rb = b.row(j);
  T acc = T(0);
  for (int k = 0; k < a.cols(); ++k) {
    T diff = ra[k] - rb[k];
    acc += diff * diff;
  }
  return acc;
}

template <typename T>
void check_two_classes(std::span<const int> labels) {
  if (labels.empty()) throw LossError("triplet loss: empty pool");
  for (size_t i = 1; i < labels.size(); ++i)
    if (labels[i] != labels[0]) return;
  throw LossError("triplet loss: pool contains a single class");
}

}  // namespace

const char* rep_loss_name(RepLossKind k) {
  switch (k) {
    case RepLossKind::kNone: return "none";
    case RepLossKind::kJrl: return "jrl";
    case RepLossKind::kPjrl: return "pjrl";
  }
  return "?";
}

RepLossKind rep_loss_from_name(const std::string& name) {
  if (name == "none") return RepLossKind::kNone;
  if (name == "jrl") return RepLossKind::kJrl;
  if (name == "pjrl") return RepLossKind::kPjrl;
  throw ConfigError("unknown representation loss `" + name + "` (none | jrl | pjrl)");
}

template <typename T>
T cross_entropy(const Array2<T>& probabilities, std::span<const int> labels) {
  if (probabilities.rows() != static_cast<int>(labels.size()))
    throw ShapeError("cross_entropy: one label per row required");
  T loss = T(0);
  for (int i = 0; i < probabilities.rows(); ++i) {
    if (labels[i] < 0 || labels[i] >= probabilities.cols())
      throw IndexError(strfmt("cross_entropy: label %d out of range", labels[i]));
    T p = probabilities.at(i, labels[i]);
    if (p <= T(0))
      throw LossError(strfmt("cross_entropy: zero probability at true class (row %d)", i));
    loss -= std::log(p);
  }
  return loss;
}

template <typename T>
TripletResult<T> hardest_triplet_loss(const Array2<T>& emb, std::span<const int> labels,
                                      T margin) {
  if (emb.rows() != static_cast<int>(labels.size()))
    throw ShapeError("hardest_triplet_loss: one label per embedding row required");
  check_two_classes<T>(labels);
  const int n = emb.rows();
  Array2<T> dist = pairwise_sq_euclidean(emb, emb);

  TripletResult<T> out;
  for (int a = 0; a < n; ++a) {
    TripletChoice<T> tc;
    tc.anchor = a;
    for (int i = 0; i < n; ++i) {
      if (i == a) continue;
      const T d = dist.at(a, i);
      if (labels[i] == labels[a]) {
        if (tc.positive < 0 || d > tc.d_pos) {  // strict: lowest index wins ties
          tc.positive = i;
          tc.d_pos = d;
        }
      } else {
        if (tc.negative < 0 || d < tc.d_neg) {
          tc.negative = i;
          tc.d_neg = d;
        }
      }
    }
    if (tc.positive < 0) {
      ++out.skipped_anchors;
      continue;
    }
    T h = margin + tc.d_pos - tc.d_neg;
    tc.hinge = h > T(0) ? h : T(0);
    out.loss += tc.hinge;
    out.triplets.push_back(tc);
  }
  return out;
}

template <typename T>
void hardest_triplet_backward(const Array2<T>& emb, const TripletResult<T>& mined,
                              Array2<T>& grad_emb, T scale) {
  check_same_shape(emb, grad_emb, "hardest_triplet_backward");
  for (const TripletChoice<T>& tc : mined.triplets) {
    if (tc.hinge <= T(0)) continue;
    const T* xa = emb.row(tc.anchor);
    const T* xp = emb.row(tc.positive);
    const T* xn = emb.row(tc.negative);
    T* ga = grad_emb.row(tc.anchor);
    T* gp = grad_emb.row(tc.positive);
    T* gn = grad_emb.row(tc.negative);
    for (int k = 0; k < emb.cols(); ++k) {
      const T two = T(2) * scale;
      ga[k] += two * ((xa[k] - xp[k]) - (xa[k] - xn[k]));
      gp[k] -= two * (xa[k] - xp[k]);
      gn[k] += two * (xa[k] - xn[k]);
    }
  }
}

template <typename T>
TripletResult<T> hardest_triplet_refresh(const Array2<T>& emb,
                                         const std::vector<TripletChoice<T>>& selection,
                                         T margin) {
  TripletResult<T> out;
  for (const TripletChoice<T>& sel : selection) {
    TripletChoice<T> tc = sel;
    tc.d_pos = sq_dist(emb, tc.anchor, emb, tc.positive);
    tc.d_neg = sq_dist(emb, tc.anchor, emb, tc.negative);
    T h = margin + tc.d_pos - tc.d_neg;
    tc.hinge = h > T(0) ? h : T(0);
    out.loss += tc.hinge;
    out.triplets.push_back(tc);
  }
  return out;
}

template <typename T>
TripletResult<T> prototype_triplet_loss(const Array2<T>& emb, const Array2<T>& protos,
                                        std::span<const int> labels, T margin) {
  if (emb.rows() != static_cast<int>(labels.size()))
    throw ShapeError("prototype_triplet_loss: one label per embedding row required");
  if (protos.rows() < 2) throw LossError("prototype_triplet_loss: need at least two classes");
  TripletResult<T> out;
  for (int a = 0; a < emb.rows(); ++a) {
    const int own = labels[a];
    if (own < 0 || own >= protos.rows())
      throw IndexError(strfmt("prototype_triplet_loss: label %d out of range", own));
    TripletChoice<T> tc;
    tc.anchor = a;
    tc.positive = own;
    tc.d_pos = sq_dist(emb, a, protos, own);
    for (int l = 0; l < protos.rows(); ++l) {
      if (l == own) continue;
      const T d = sq_dist(emb, a, protos, l);
      if (tc.negative < 0 || d < tc.d_neg) {
        tc.negative = l;
        tc.d_neg = d;
      }
    }
    T h = margin + tc.d_pos - tc.d_neg;
    tc.hinge = h > T(0) ? h : T(0);
    out.loss += tc.hinge;
    out.triplets.push_back(tc);
  }
  return out;
}

template <typename T>
void prototype_triplet_backward(const Array2<T>& emb, const Array2<T>& protos,
                                const TripletResult<T>& mined, Array2<T>& grad_emb,
                                Array2<T>& grad_protos, T scale) {
  check_same_shape(emb, grad_emb, "prototype_triplet_backward");
  check_same_shape(protos, grad_protos, "prototype_triplet_backward");
  for (const TripletChoice<T>& tc : mined.triplets) {
    if (tc.hinge <= T(0)) continue;
    const T* xa = emb.row(tc.anchor);
    const T* pp = protos.row(tc.positive);
    const T* pn = protos.row(tc.negative);
    T* ga = grad_emb.row(tc.anchor);
    T* gp = grad_protos.row(tc.positive);
    T* gn = grad_protos.row(tc.negative);
    for (int k = 0; k < emb.cols(); ++k) {
      const T two = T(2) * scale;
      ga[k] += two * ((xa[k] - pp[k]) - (xa[k] - pn[k]));
      gp[k] -= two * (xa[k] - pp[k]);
      gn[k] += two * (xa[k] - pn[k]);
    }
  }
}

template <typename T>
TripletResult<T> prototype_triplet_refresh(const Array2<T>& emb, const Array2<T>& protos,
                                           const std::vector<TripletChoice<T>>& selection,
                                           T margin) {
  TripletResult<T> out;
  for (const TripletChoice<T>& sel : selection) {
    TripletChoice<T> tc = sel;
    tc.d_pos = sq_dist(emb, tc.anchor, protos, tc.positive);
    tc.d_neg = sq_dist(emb, tc.anchor, protos, tc.negative);
    T h = margin + tc.d_pos - tc.d_neg;
    tc.hinge = h > T(0) ? h : T(0);
    out.loss += tc.hinge;
    out.triplets.push_back(tc);
  }
  return out;
}

#define PROTOFORGE_INSTANTIATE_LOSSES(T)                                                       \
  template T cross_entropy<T>(const Array2<T>&, std::span<const int>);                         \
  template TripletResult<T> hardest_triplet_loss<T>(const Array2<T>&, std::span<const int>,    \
                                                    T);                                        \
  template void hardest_triplet_backward<T>(const Array2<T>&, const TripletResult<T>&,         \
                                            Array2<T>&, T);                                    \
  template TripletResult<T> hardest_triplet_refresh<T>(                                        \
      const Array2<T>&, const std::vector<TripletChoice<T>>&, T);                              \
  template TripletResult<T> prototype_triplet_loss<T>(const Array2<T>&, const Array2<T>&,      \
                                                      std::span<const int>, T);                \
  template void prototype_triplet_backward<T>(const Array2<T>&, const Array2<T>&,              \
                                              const TripletResult<T>&, Array2<T>&,             \
                                              Array2<T>&, T);                                  \
  template TripletResult<T> prototype_triplet_refresh<T>(                                      \
      const Array2<T>&, const Array2<T>&, const std::vector<TripletChoice<T>>&, T);

PROTOFORGE_INSTANTIATE_LOSSES(float)
PROTOFORGE_INSTANTIATE_LOSSES(double)

}  // namespace protoforge
