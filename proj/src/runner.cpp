#include "runner.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "grad_check.hpp"

namespace protoforge {

namespace {

std::string env_seed() {
  const char* v = std::getenv("PROTOFORGE_SEED");
  return v ? std::string(v) : std::string();
}

void apply_seed_default(KvConfig& cfg, const std::string& key) {
  if (cfg.has(key) && !cfg.get_str(key, "").empty()) return;
  std::string env = env_seed();
  cfg.set(key, env.empty() ? "1" : env);
}

}  // namespace

KvConfig effective_config(const KvConfig& user) {
  KvConfig cfg;
  // data
  cfg.set("data.train", "");
  cfg.set("data.val", "");
  cfg.set("data.test", "");
  cfg.set("data.embeddings", "");
  cfg.set("data.relations", "");
  cfg.set("data.balanced_query", "0");
  cfg.set("data.entity_offset", "start");
  // encoder
  cfg.set("encoder.d_w", "50");
  cfg.set("encoder.d_p", "5");
  cfg.set("encoder.d_h", "230");
  cfg.set("encoder.window", "3");
  cfg.set("encoder.max_len", "40");
  cfg.set("encoder.max_rel", "40");
  cfg.set("encoder.dropout", "0.2");
  cfg.set("encoder.relu", "1");
  cfg.set("encoder.freeze_word_emb", "0");
  // protonet
  cfg.set("protonet.variant", "apn-lw");
  cfg.set("protonet.force_lambda", "");
  cfg.set("protonet.mix_hidden", "0");
  cfg.set("protonet.sqrt_distance", "0");
  cfg.set("protonet.freeze_label_lookup", "0");
  // loss
  cfg.set("loss.variant", "jrl");
  cfg.set("loss.margin", "0.5");
  cfg.set("loss.alpha", "1");
  // train
  cfg.set("train.n_train", "20");
  cfg.set("train.n_eval", "5");
  cfg.set("train.k", "5");
  cfg.set("train.r", "5");
  cfg.set("train.lr", "0.1");
  cfg.set("train.weight_decay", "1e-5");
  cfg.set("train.episodes", "10000");
  cfg.set("train.val_interval", "1000");
  cfg.set("train.val_episodes", "1000");
  cfg.set("train.batch_episodes", "1");
  cfg.set("train.lr_schedule", "constant");
  cfg.set("train.lr_step_factor", "0.1");
  cfg.set("train.lr_step_every", "0");
  cfg.set("train.precision", "f32");
  // eval
  cfg.set("eval.n", "5");
  cfg.set("eval.k", "1");
  cfg.set("eval.r", "5");
  cfg.set("eval.episodes", "2000");
  cfg.set("eval.seeds", "10");
  // synth
  cfg.set("synth.train_relations", "20");
  cfg.set("synth.val_relations", "5");
  cfg.set("synth.test_relations", "5");
  cfg.set("synth.instances", "50");
  cfg.set("synth.vocab", "200");
  cfg.set("synth.signal_tokens", "2");
  cfg.set("synth.noise_rate", "0");
  cfg.set("synth.sentence_len", "10");
  cfg.set("synth.dim", "16");
  // gradcheck toy world
  cfg.set("gradcheck.d_w", "8");
  cfg.set("gradcheck.d_p", "2");
  cfg.set("gradcheck.d_h", "16");
  cfg.set("gradcheck.vocab", "50");
  cfg.set("gradcheck.max_len", "10");
  cfg.set("gradcheck.n", "3");
  cfg.set("gradcheck.k", "2");
  cfg.set("gradcheck.r", "3");
  cfg.set("gradcheck.noise_rate", "0.5");
  cfg.set("gradcheck.eps", "1e-3");
  cfg.set("gradcheck.tol", "1e-4");
  cfg.set("gradcheck.samples", "100");
  // sampling dump
  cfg.set("sample.split", "train");

  cfg.merge(user);
  apply_seed_default(cfg, "train.seed");
  apply_seed_default(cfg, "eval.seed");
  apply_seed_default(cfg, "synth.seed");
  apply_seed_default(cfg, "gradcheck.seed");
  return cfg;
}

EntityOffset entity_offset_from(const KvConfig& cfg) {
  std::string mode = cfg.get_str("data.entity_offset", "start");
  if (mode == "start") return EntityOffset::kSpanStart;
  if (mode == "nearest") return EntityOffset::kNearestToken;
  throw ConfigError("data.entity_offset must be `start` or `nearest`, got " + mode);
}

ModelConfig model_config_from(const KvConfig& cfg) {
  ModelConfig mc;
  mc.encoder.d_w = cfg.get_int("encoder.d_w", 50);
  mc.encoder.d_p = cfg.get_int("encoder.d_p", 5);
  mc.encoder.d_h = cfg.get_int("encoder.d_h", 230);
  mc.encoder.window = cfg.get_int("encoder.window", 3);
  mc.encoder.max_len = cfg.get_int("encoder.max_len", 40);
  mc.encoder.max_rel = cfg.get_int("encoder.max_rel", 40);
  mc.encoder.dropout = cfg.get_double("encoder.dropout", 0.2);
  mc.encoder.relu_after_pool = cfg.get_bool("encoder.relu", true);
  mc.variant = variant_from_name(cfg.get_str("protonet.variant", "apn-lw"));
  mc.force_lambda = cfg.get_opt_double("protonet.force_lambda");
  mc.mix_hidden = cfg.get_int("protonet.mix_hidden", 0);
  mc.sqrt_distance = cfg.get_bool("protonet.sqrt_distance", false);
  mc.freeze_word_emb = cfg.get_bool("encoder.freeze_word_emb", false);
  mc.freeze_label_lookup = cfg.get_bool("protonet.freeze_label_lookup", false);
  mc.encoder.validate();
  return mc;
}

TrainConfig train_config_from(const KvConfig& cfg) {
  TrainConfig tc;
  tc.n_train = cfg.get_int("train.n_train", 20);
  tc.n_eval = cfg.get_int("train.n_eval", 5);
  tc.k_shot = cfg.get_int("train.k", 5);
  tc.n_query = cfg.get_int("train.r", 5);
  tc.lr = cfg.get_double("train.lr", 0.1);
  tc.weight_decay = cfg.get_double("train.weight_decay", 1e-5);
  tc.max_episodes = cfg.get_int("train.episodes", 10000);
  tc.val_interval = cfg.get_int("train.val_interval", 1000);
  tc.val_episodes = cfg.get_int("train.val_episodes", 1000);
  tc.batch_episodes = cfg.get_int("train.batch_episodes", 1);
  tc.seed = cfg.get_u64("train.seed", 1);
  tc.lr_schedule = cfg.get_str("train.lr_schedule", "constant");
  tc.lr_step_factor = cfg.get_double("train.lr_step_factor", 0.1);
  tc.lr_step_every = cfg.get_int("train.lr_step_every", 0);
  tc.sampler.balanced_query = cfg.get_bool("data.balanced_query", false);
  tc.validate();
  return tc;
}

LossConfig loss_config_from(const KvConfig& cfg) {
  LossConfig lc;
  lc.variant = rep_loss_from_name(cfg.get_str("loss.variant", "jrl"));
  lc.margin = cfg.get_double("loss.margin", 0.5);
  lc.alpha = cfg.get_double("loss.alpha", 1.0);
  lc.validate();
  return lc;
}

EvalConfig eval_config_from(const KvConfig& cfg) {
  EvalConfig ec;
  ec.n_way = cfg.get_int("eval.n", 5);
  ec.k_shot = cfg.get_int("eval.k", 1);
  ec.n_query = cfg.get_int("eval.r", 5);
  ec.episodes = cfg.get_int("eval.episodes", 2000);
  ec.seeds = cfg.get_int("eval.seeds", 10);
  ec.base_seed = cfg.get_u64("eval.seed", 1);
  ec.sampler.balanced_query = cfg.get_bool("data.balanced_query", false);
  ec.validate();
  return ec;
}

SyntheticSpec synth_spec_from(const KvConfig& cfg) {
  SyntheticSpec spec;
  spec.n_relations = cfg.get_int("synth.train_relations", 20) +
                     cfg.get_int("synth.val_relations", 5) +
                     cfg.get_int("synth.test_relations", 5);
  spec.n_instances = cfg.get_int("synth.instances", 50);
  spec.vocab_size = cfg.get_int("synth.vocab", 200);
  spec.signal_tokens = cfg.get_int("synth.signal_tokens", 2);
  spec.noise_rate = cfg.get_double("synth.noise_rate", 0.0);
  spec.sentence_len = cfg.get_int("synth.sentence_len", 10);
  spec.embedding_dim = cfg.get_int("synth.dim", 16);
  spec.seed = cfg.get_u64("synth.seed", 1);
  return spec;
}

namespace {

struct LoadedData {
  LoadedEmbeddings emb;
  IndexedDataset ds;
  LabelLexicon lex;
};

std::optional<std::string> relations_path(const KvConfig& cfg) {
  std::string p = cfg.get_str("data.relations", "");
  if (p.empty()) return std::nullopt;
  return p;
}

LoadedData load_split(const KvConfig& cfg, const std::string& path_key,
                      const ModelConfig& mc, uint64_t seed) {
  LoadedData out;
  Rng unk_rng(seed, "unk-init");
  out.emb = load_embeddings(cfg.require_str("data.embeddings"), unk_rng);
  Dataset raw = load_fewrel(cfg.require_str(path_key), relations_path(cfg));
  out.ds = index_dataset(raw, out.emb.vocab, mc.encoder.max_len, mc.encoder.max_rel,
                         entity_offset_from(cfg));
  out.lex = build_label_lexicon(out.ds, out.emb.vocab, mc.encoder, mc.variant);
  return out;
}

template <typename T>
TrainOutcome run_train_typed(const KvConfig& eff, const std::string& checkpoint_out,
                             const std::string& log_path, const LogSink& log) {
  ModelConfig mc = model_config_from(eff);
  TrainConfig tc = train_config_from(eff);
  LossConfig lc = loss_config_from(eff);

  Rng unk_rng(tc.seed, "unk-init");
  LoadedEmbeddings emb = load_embeddings(eff.require_str("data.embeddings"), unk_rng);
  Dataset train_raw = load_fewrel(eff.require_str("data.train"), relations_path(eff));
  Dataset val_raw = load_fewrel(eff.require_str("data.val"), relations_path(eff));
  EntityOffset offset = entity_offset_from(eff);
  IndexedDataset train_ds = index_dataset(train_raw, emb.vocab, mc.encoder.max_len,
                                          mc.encoder.max_rel, offset);
  IndexedDataset val_ds = index_dataset(val_raw, emb.vocab, mc.encoder.max_len,
                                        mc.encoder.max_rel, offset);
  LabelLexicon train_lex = build_label_lexicon(train_ds, emb.vocab, mc.encoder, mc.variant);
  LabelLexicon val_lex = build_label_lexicon(val_ds, emb.vocab, mc.encoder, mc.variant);

  std::ofstream log_file;
  if (!log_path.empty()) {
    log_file.open(log_path);
    if (!log_file) throw ConfigError("run_train: cannot write log " + log_path);
    for (const auto& [k, v] : eff.entries()) log_file << "# " << k << '=' << v << "\n";
  }
  LogSink sink = [&](const std::string& line) {
    if (log_file.is_open()) log_file << line << "\n";
    if (log) log(line);
  };

  Model<T> model = build_model<T>(mc, emb.table, tc.seed);
  TrainResult<T> result = train(std::move(model), train_ds, val_ds, train_lex, val_lex, tc, lc,
                                sink);

  CheckpointData ckpt;
  ckpt.dtype = std::is_same_v<T, double> ? "f64" : "f32";
  ckpt.episode = result.best_episode;
  ckpt.best_val_acc = result.best_val_acc;
  ckpt.config = eff.entries();
  ckpt.rng_states = result.rng_states;
  if constexpr (std::is_same_v<T, double>)
    ckpt.params_f64 = result.best_model.params;
  else
    ckpt.params_f32 = result.best_model.params;
  save_checkpoint(ckpt, checkpoint_out);

  TrainOutcome outcome;
  outcome.checkpoint_path = checkpoint_out;
  outcome.best_val_acc = result.best_val_acc;
  outcome.best_episode = result.best_episode;
  outcome.episodes_run = result.episodes_run;
  return outcome;
}

}  // namespace

TrainOutcome run_train(const KvConfig& cfg, const std::string& checkpoint_out,
                       const std::string& log_path, const LogSink& log) {
  KvConfig eff = effective_config(cfg);
  std::string precision = eff.get_str("train.precision", "f32");
  if (precision == "f32") return run_train_typed<float>(eff, checkpoint_out, log_path, log);
  if (precision == "f64") return run_train_typed<double>(eff, checkpoint_out, log_path, log);
  throw ConfigError("train.precision must be f32 or f64, got " + precision);
}

namespace {

template <typename T>
std::string run_eval_typed(const KvConfig& eff, ParamStore<T> params) {
  ModelConfig mc = model_config_from(eff);
  EvalConfig ec = eval_config_from(eff);
  LoadedData data = load_split(eff, "data.test", mc, ec.base_seed);
  if (data.emb.vocab.size() != params.value("word_emb").rows())
    throw CheckpointError(strfmt(
        "checkpoint vocabulary (%d rows) does not match the embedding file (%d tokens)",
        params.value("word_emb").rows(), data.emb.vocab.size()));
  Model<T> model;
  model.cfg = mc;
  model.params = std::move(params);
  EvalReport report = evaluate(model, data.ds, data.lex, ec);
  return report.to_text() + "\n" + report.to_table();
}

}  // namespace

std::string run_eval(const KvConfig& cfg, const std::string& checkpoint_path) {
  CheckpointData ckpt = load_checkpoint(checkpoint_path);
  KvConfig eff;
  for (const auto& [k, v] : ckpt.config) eff.set(k, v);
  eff.merge(cfg);
  eff = effective_config(eff);
  if (ckpt.is_f64()) return run_eval_typed<double>(eff, std::move(ckpt.params_f64));
  return run_eval_typed<float>(eff, std::move(ckpt.params_f32));
}

std::pair<bool, std::string> run_gradcheck(const KvConfig& cfg, const std::string& scope) {
  if (scope != "all" && scope != "encoder" && scope != "protonet" && scope != "losses")
    throw ConfigError("gradcheck scope must be all | encoder | protonet | losses, got " +
                      scope);
  KvConfig eff = effective_config(cfg);
  const uint64_t seed = eff.get_u64("gradcheck.seed", 1);
  const int n_way = eff.get_int("gradcheck.n", 3);
  const int k_shot = eff.get_int("gradcheck.k", 2);
  const int n_query = eff.get_int("gradcheck.r", 3);

  ModelConfig mc = model_config_from(eff);
  mc.encoder.d_w = eff.get_int("gradcheck.d_w", 8);
  mc.encoder.d_p = eff.get_int("gradcheck.d_p", 2);
  mc.encoder.d_h = eff.get_int("gradcheck.d_h", 16);
  mc.encoder.max_len = eff.get_int("gradcheck.max_len", 10);
  mc.encoder.max_rel = mc.encoder.max_len;
  mc.encoder.dropout = 0.0;  // the checked loss must be deterministic

  LossConfig lc = loss_config_from(eff);
  if (scope == "losses") {
    if (lc.variant == RepLossKind::kNone)
      throw ConfigError("gradcheck scope `losses` needs loss.variant jrl or pjrl");
    lc.ce_weight = 0.0;  // isolate the representation term
  }

  SyntheticSpec spec;
  spec.n_relations = n_way + 1;
  spec.n_instances = k_shot + n_query + 2;
  spec.vocab_size = eff.get_int("gradcheck.vocab", 50);
  spec.signal_tokens = 2;
  spec.noise_rate = eff.get_double("gradcheck.noise_rate", 0.5);
  spec.sentence_len = mc.encoder.max_len - 2;
  spec.embedding_dim = mc.encoder.d_w;
  spec.seed = seed;
  SyntheticData synth = make_synthetic(spec);

  IndexedDataset ds = index_dataset(synth.dataset, synth.vocab, mc.encoder.max_len,
                                    mc.encoder.max_rel);
  LabelLexicon lex = build_label_lexicon(ds, synth.vocab, mc.encoder, mc.variant);
  Rng episode_rng(seed, "gradcheck-episode");
  Episode ep = sample_episode(ds, n_way, k_shot, n_query, episode_rng);

  Model<double> model = build_model<double>(mc, synth.table, seed);
  EpisodeForward<double> base = forward_episode<double>(model, ep, lex, lc, Mode::kEval,
                                                        nullptr);
  const TripletResult<double> frozen = base.triplet;
  const TripletResult<double>* frozen_ptr =
      lc.variant == RepLossKind::kNone ? nullptr : &frozen;

  auto loss_fn = [&](bool with_grad) -> double {
    EpisodeForward<double> fwd = forward_episode<double>(model, ep, lex, lc, Mode::kEval,
                                                         nullptr, frozen_ptr);
    if (with_grad) backward_episode(model, fwd, lc);
    return fwd.losses.joint;
  };

  Rng coord_rng(seed, "gradcheck-coords");
  GradCheckReport report = grad_check(loss_fn, model.params, param_group(model, scope),
                                      eff.get_double("gradcheck.eps", 1e-3),
                                      eff.get_double("gradcheck.tol", 1e-4),
                                      eff.get_int("gradcheck.samples", 100), coord_rng);
  return {report.pass, report.table()};
}

std::vector<std::string> run_synth(const KvConfig& cfg, const std::string& out_dir) {
  KvConfig eff = effective_config(cfg);
  SyntheticSpec spec = synth_spec_from(eff);
  SyntheticData synth = make_synthetic(spec);
  std::vector<int> sizes = {eff.get_int("synth.train_relations", 20),
                            eff.get_int("synth.val_relations", 5),
                            eff.get_int("synth.test_relations", 5)};
  std::vector<Dataset> splits = split_dataset(synth.dataset, sizes);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ConfigError("synth: cannot create output directory " + out_dir);

  auto path = [&](const char* name) { return out_dir + "/" + name; };
  std::vector<std::string> written;
  const char* names[3] = {"train.json", "val.json", "test.json"};
  for (int i = 0; i < 3; ++i) {
    save_fewrel(splits[i], path(names[i]));
    written.push_back(path(names[i]));
  }
  save_relation_info(synth.dataset, path("relations.json"));
  written.push_back(path("relations.json"));
  save_embedding_file(synth.vocab, synth.table, path("embeddings.txt"));
  written.push_back(path("embeddings.txt"));
  return written;
}

std::string run_sample_episode(const KvConfig& cfg) {
  KvConfig eff = effective_config(cfg);
  ModelConfig mc = model_config_from(eff);
  std::string split = eff.get_str("sample.split", "train");
  if (split != "train" && split != "val" && split != "test")
    throw ConfigError("sample.split must be train | val | test");
  EvalConfig ec = eval_config_from(eff);
  LoadedData data = load_split(eff, "data." + split, mc, ec.base_seed);
  Rng rng(ec.base_seed, "sample-episode");
  Episode ep = sample_episode(data.ds, ec.n_way, ec.k_shot, ec.n_query, rng, ec.sampler);
  return format_episode(ep, data.emb.vocab);
}

}  // namespace protoforge
