#include "model.hpp"

#include <algorithm>
#include <cmath>

namespace protoforge {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kProNet: return "pronet";
    case Variant::kApnLw: return "apn-lw";
    case Variant::kApnLd: return "apn-ld";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  if (name == "pronet") return Variant::kProNet;
  if (name == "apn-lw") return Variant::kApnLw;
  if (name == "apn-ld") return Variant::kApnLd;
  throw ConfigError("unknown variant `" + name + "` (pronet | apn-lw | apn-ld)");
}

namespace {

// All init values are drawn in double and cast, so float and double models
// with one seed share the same starting point.
template <typename T>
Array2<T> uniform_init(int rows, int cols, double range, uint64_t seed,
                       const std::string& name) {
  Rng rng(seed, "init:" + name);
  Array2<T> out(rows, cols);
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<T>(rng.uniform_real(-range, range));
  return out;
}

double glorot_range(int fan_in, int fan_out) { return std::sqrt(6.0 / (fan_in + fan_out)); }

}  // namespace

template <typename T>
Model<T> build_model(const ModelConfig& cfg, const EmbeddingTable& pretrained, uint64_t seed) {
  cfg.encoder.validate();
  if (pretrained.cols != cfg.encoder.d_w)
    throw ConfigError(strfmt("build_model: embedding table is %d-d but encoder.d_w is %d",
                             pretrained.cols, cfg.encoder.d_w));
  if (cfg.force_lambda && (*cfg.force_lambda < 0.0 || *cfg.force_lambda > 1.0))
    throw ConfigError("force_lambda must lie in [0, 1]");

  Model<T> model;
  model.cfg = cfg;
  const EncoderConfig& e = cfg.encoder;

  Array2<T> word(pretrained.rows, pretrained.cols);
  for (size_t i = 0; i < word.size(); ++i) word[i] = static_cast<T>(pretrained.values[i]);
  model.params.add("word_emb", std::move(word), !cfg.freeze_word_emb);
  model.params.add("pos_head", uniform_init<T>(e.pos_rows(), e.d_p, 0.1, seed, "pos_head"));
  model.params.add("pos_tail", uniform_init<T>(e.pos_rows(), e.d_p, 0.1, seed, "pos_tail"));
  model.params.add("conv_kernel",
                   uniform_init<T>(e.window * e.d(), e.d_h,
                                   glorot_range(e.window * e.d(), e.d_h), seed, "conv_kernel"));
  model.params.add("conv_bias", Array2<T>(1, e.d_h));

  if (cfg.variant == Variant::kApnLw) {
    model.params.add("label_proj_w",
                     uniform_init<T>(e.d_w, e.d_h, glorot_range(e.d_w, e.d_h), seed,
                                     "label_proj_w"));
    model.params.add("label_proj_b", Array2<T>(1, e.d_h));
  }
  if (cfg.has_mixing_network()) {
    if (cfg.mix_hidden > 0) {
      model.params.add("mix_hidden_w",
                       uniform_init<T>(e.d_h, cfg.mix_hidden,
                                       glorot_range(e.d_h, cfg.mix_hidden), seed,
                                       "mix_hidden_w"));
      model.params.add("mix_hidden_b", Array2<T>(1, cfg.mix_hidden));
      model.params.add("mix_w", uniform_init<T>(cfg.mix_hidden, 1,
                                                glorot_range(cfg.mix_hidden, 1), seed,
                                                "mix_w"));
    } else {
      model.params.add("mix_w", uniform_init<T>(e.d_h, 1, glorot_range(e.d_h, 1), seed,
                                                "mix_w"));
    }
    model.params.add("mix_b", Array2<T>(1, 1));
  }
  return model;
}

template <typename T>
std::vector<std::string> param_group(const Model<T>& model, const std::string& scope) {
  static const std::vector<std::string> encoder_names = {"word_emb", "pos_head", "pos_tail",
                                                         "conv_kernel", "conv_bias"};
  std::vector<std::string> out;
  for (const auto& p : model.params.entries()) {
    bool is_encoder = std::find(encoder_names.begin(), encoder_names.end(), p.name) !=
                      encoder_names.end();
    if (scope == "all" || (scope == "encoder" && is_encoder) ||
        (scope == "protonet" && !is_encoder) || scope == "losses")
      out.push_back(p.name);
  }
  if (out.empty())
    throw ConfigError("gradcheck scope `" + scope + "` selects no parameters for variant " +
                      variant_name(model.cfg.variant));
  return out;
}

template Model<float> build_model<float>(const ModelConfig&, const EmbeddingTable&, uint64_t);
template Model<double> build_model<double>(const ModelConfig&, const EmbeddingTable&, uint64_t);
template std::vector<std::string> param_group<float>(const Model<float>&, const std::string&);
template std::vector<std::string> param_group<double>(const Model<double>&, const std::string&);

}  // namespace protoforge
