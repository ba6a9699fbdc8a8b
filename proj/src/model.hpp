#pragma once

#include "embeddings.hpp"
#include "encoder.hpp"
#include "protonet.hpp"

namespace protoforge {

enum class Variant { kProNet, kApnLw, kApnLd };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
  EncoderConfig encoder;
  Variant variant = Variant::kApnLw;
  std::optional<double> force_lambda;  // bypass the mixing network
  int mix_hidden = 0;                  // width of the optional tanh layer in h
  bool sqrt_distance = false;          // root instead of squared euclidean
  bool freeze_word_emb = false;
  bool freeze_label_lookup = false;    // no label-path gradient into word_emb

  bool uses_labels() const { return variant != Variant::kProNet; }
  bool has_mixing_network() const { return uses_labels() && !force_lambda; }
};

/// Parameter bundle plus the configuration that shaped it.
template <typename T>
struct Model {
  ModelConfig cfg;
  ParamStore<T> params;
};

/// Creates and initializes all parameters the configured variant needs.
/// word_emb copies the pretrained table; conv and projection weights are
/// uniform +-sqrt(6/(fan_in+fan_out)), position tables uniform +-0.1, biases
/// zero. Every parameter draws from its own named rng stream, so variants
/// sharing a seed initialize their common parameters identically.
template <typename T>
Model<T> build_model(const ModelConfig& cfg, const EmbeddingTable& pretrained, uint64_t seed);

/// Parameter names belonging to a gradcheck scope ("encoder", "protonet",
/// or "all").
template <typename T>
std::vector<std::string> param_group(const Model<T>& model, const std::string& scope);

}  // namespace protoforge
