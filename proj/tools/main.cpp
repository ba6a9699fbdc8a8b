// protoforge command line: train / eval / gradcheck / synth / sample-episode.
// Talks to the core exclusively through the C API in protoforge/protoforge.h.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "protoforge/protoforge.h"

namespace {

struct ConfigHandle {
  pf_config* cfg;
  ConfigHandle() : cfg(pf_config_new()) {}
  ~ConfigHandle() { pf_config_free(cfg); }
};

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "key=value config file");
  cmd->add_option("--set", opts.sets, "override a config key (key=value), repeatable")
      ->take_all();
}

// exit 2 on config/usage problems, 1 on runtime failures
int fail(pf_status status, const char* what) {
  std::fprintf(stderr, "%s: %s\n", what, pf_last_error());
  return status == PF_BAD_CONFIG ? 2 : 1;
}

int apply_common(ConfigHandle& h, const CommonOpts& opts) {
  if (!opts.config_path.empty()) {
    pf_status s = pf_config_load_file(h.cfg, opts.config_path.c_str());
    if (s != PF_OK) return fail(s, "config");
  }
  for (const std::string& pair : opts.sets) {
    size_t eq = pair.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "--set expects key=value, got `%s`\n", pair.c_str());
      return 2;
    }
    pf_config_set(h.cfg, pair.substr(0, eq).c_str(), pair.substr(eq + 1).c_str());
  }
  return 0;
}

void stdout_logger(const char* line, void*) { std::printf("%s\n", line); }

void print_result(char* text) {
  if (!text) return;
  std::fputs(text, stdout);
  pf_string_free(text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"protoforge: adaptive prototypical networks for few-shot relation "
               "classification"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  CommonOpts train_opts, eval_opts, grad_opts, synth_opts, sample_opts;

  auto* cmd_train = app.add_subcommand("train", "train a model and keep the best checkpoint");
  add_common(cmd_train, train_opts);
  std::string ckpt_out = "model.ckpt", log_out;
  int episodes = -1;
  std::string variant, seed, alpha;
  cmd_train->add_option("--out", ckpt_out, "checkpoint output path");
  cmd_train->add_option("--log", log_out, "training log path");
  cmd_train->add_option("--episodes", episodes, "training episodes (train.episodes)");
  cmd_train->add_option("--variant", variant, "pronet | apn-lw | apn-ld (protonet.variant)");
  cmd_train->add_option("--alpha", alpha, "representation loss weight (loss.alpha)");
  cmd_train->add_option("--seed", seed, "training seed (train.seed)");

  auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  add_common(cmd_eval, eval_opts);
  std::string ckpt_in;
  int eval_n = -1, eval_k = -1, eval_r = -1;
  std::string eval_seed;
  cmd_eval->add_option("checkpoint", ckpt_in, "checkpoint path")->required();
  cmd_eval->add_option("--n", eval_n, "N-way (eval.n)");
  cmd_eval->add_option("--k", eval_k, "K-shot (eval.k)");
  cmd_eval->add_option("--r", eval_r, "queries per episode (eval.r)");
  cmd_eval->add_option("--seed", eval_seed, "evaluation base seed (eval.seed)");

  auto* cmd_grad = app.add_subcommand("gradcheck",
                                      "finite-difference check on a fixed toy episode");
  add_common(cmd_grad, grad_opts);
  std::string scope = "all";
  cmd_grad->add_option("--scope", scope, "all | encoder | protonet | losses");

  auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(cmd_synth, synth_opts);
  std::string out_dir = "synth-data";
  cmd_synth->add_option("--out", out_dir, "output directory");

  auto* cmd_sample = app.add_subcommand("sample-episode",
                                        "dump one formatted episode for inspection");
  add_common(cmd_sample, sample_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ConfigHandle h;

  if (cmd_train->parsed()) {
    if (int rc = apply_common(h, train_opts)) return rc;
    if (episodes >= 0) pf_config_set(h.cfg, "train.episodes", std::to_string(episodes).c_str());
    if (!variant.empty()) pf_config_set(h.cfg, "protonet.variant", variant.c_str());
    if (!alpha.empty()) pf_config_set(h.cfg, "loss.alpha", alpha.c_str());
    if (!seed.empty()) pf_config_set(h.cfg, "train.seed", seed.c_str());
    pf_set_logger(stdout_logger, nullptr);
    pf_status s = pf_train(h.cfg, ckpt_out.c_str(), log_out.empty() ? nullptr : log_out.c_str());
    if (s != PF_OK) return fail(s, "train");
    std::printf("checkpoint written to %s\n", ckpt_out.c_str());
    return 0;
  }

  if (cmd_eval->parsed()) {
    if (int rc = apply_common(h, eval_opts)) return rc;
    if (eval_n >= 0) pf_config_set(h.cfg, "eval.n", std::to_string(eval_n).c_str());
    if (eval_k >= 0) pf_config_set(h.cfg, "eval.k", std::to_string(eval_k).c_str());
    if (eval_r >= 0) pf_config_set(h.cfg, "eval.r", std::to_string(eval_r).c_str());
    if (!eval_seed.empty()) pf_config_set(h.cfg, "eval.seed", eval_seed.c_str());
    char* report = nullptr;
    pf_status s = pf_evaluate(h.cfg, ckpt_in.c_str(), &report);
    if (s != PF_OK) return fail(s, "eval");
    print_result(report);
    return 0;
  }

  if (cmd_grad->parsed()) {
    if (int rc = apply_common(h, grad_opts)) return rc;
    char* table = nullptr;
    pf_status s = pf_grad_check(h.cfg, scope.c_str(), &table);
    print_result(table);
    if (s == PF_CHECK_FAILED) {
      std::fprintf(stderr, "gradcheck: tolerance exceeded\n");
      return 1;
    }
    if (s != PF_OK) return fail(s, "gradcheck");
    return 0;
  }

  if (cmd_synth->parsed()) {
    if (int rc = apply_common(h, synth_opts)) return rc;
    char* files = nullptr;
    pf_status s = pf_make_synthetic(h.cfg, out_dir.c_str(), &files);
    if (s != PF_OK) return fail(s, "synth");
    print_result(files);
    return 0;
  }

  if (cmd_sample->parsed()) {
    if (int rc = apply_common(h, sample_opts)) return rc;
    char* episode = nullptr;
    pf_status s = pf_sample_episode(h.cfg, &episode);
    if (s != PF_OK) return fail(s, "sample-episode");
    print_result(episode);
    return 0;
  }

  return 2;
}
