#include "protoforge/protoforge.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "runner.hpp"

using namespace protoforge;

struct pf_config {
  KvConfig kv;
  std::string scratch;  // backs pf_config_get
};

namespace {

thread_local std::string g_last_error;
pf_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

pf_status status_of(const std::exception& e) {
  g_last_error = e.what();
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParseError*>(&e))
    return PF_BAD_CONFIG;
  return PF_ERROR;
}

template <typename Fn>
pf_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const std::exception& e) {
    return status_of(e);
  } catch (...) {
    g_last_error = "unknown error";
    return PF_ERROR;
  }
}

}  // namespace

extern "C" {

pf_config* pf_config_new(void) { return new pf_config(); }

void pf_config_free(pf_config* cfg) { delete cfg; }

pf_status pf_config_load_file(pf_config* cfg, const char* path) {
  if (!cfg || !path) {
    g_last_error = "pf_config_load_file: null argument";
    return PF_BAD_CONFIG;
  }
  return guarded([&] {
    cfg->kv.merge(KvConfig::from_file(path));
    return PF_OK;
  });
}

pf_status pf_config_set(pf_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) {
    g_last_error = "pf_config_set: null argument";
    return PF_BAD_CONFIG;
  }
  return guarded([&] {
    cfg->kv.set(key, value);
    return PF_OK;
  });
}

const char* pf_config_get(pf_config* cfg, const char* key) {
  if (!cfg || !key || !cfg->kv.has(key)) return nullptr;
  cfg->scratch = cfg->kv.get_str(key, "");
  return cfg->scratch.c_str();
}

char* pf_config_dump(const pf_config* cfg) {
  if (!cfg) return nullptr;
  return dup_string(effective_config(cfg->kv).dump());
}

void pf_set_logger(pf_log_fn fn, void* user) {
  g_log_fn = fn;
  g_log_user = user;
}

pf_status pf_train(const pf_config* cfg, const char* checkpoint_out, const char* log_path) {
  if (!cfg || !checkpoint_out) {
    g_last_error = "pf_train: null argument";
    return PF_BAD_CONFIG;
  }
  return guarded([&] {
    LogSink sink;
    if (g_log_fn) {
      sink = [](const std::string& line) {
        if (g_log_fn) g_log_fn(line.c_str(), g_log_user);
      };
    }
    run_train(cfg->kv, checkpoint_out, log_path ? log_path : "", sink);
    return PF_OK;
  });
}

pf_status pf_evaluate(const pf_config* cfg, const char* checkpoint_path, char** report_out) {
  if (!cfg || !checkpoint_path || !report_out) {
    g_last_error = "pf_evaluate: null argument";
    return PF_BAD_CONFIG;
  }
  return guarded([&] {
    *report_out = dup_string(run_eval(cfg->kv, checkpoint_path));
    return PF_OK;
  });
}

pf_status pf_grad_check(const pf_config* cfg, const char* scope, char** table_out) {
  if (!cfg || !scope || !table_out) {
    g_last_error = "pf_grad_check: null argument";
    return PF_BAD_CONFIG;
  }
  return guarded([&] {
    auto [pass, table] = run_gradcheck(cfg->kv, scope);
    *table_out = dup_string(table);
    if (!pass) {
      g_last_error = "gradient check exceeded tolerance";
      return PF_CHECK_FAILED;
    }
    return PF_OK;
  });
}

pf_status pf_make_synthetic(const pf_config* cfg, const char* out_dir, char** files_out) {
  if (!cfg || !out_dir) {
    g_last_error = "pf_make_synthetic: null argument";
    return PF_BAD_CONFIG;
  }
  return guarded([&] {
    std::vector<std::string> files = run_synth(cfg->kv, out_dir);
    if (files_out) {
      std::string joined;
      for (const auto& f : files) {
        joined += f;
        joined += '\n';
      }
      *files_out = dup_string(joined);
    }
    return PF_OK;
  });
}

pf_status pf_sample_episode(const pf_config* cfg, char** episode_out) {
  if (!cfg || !episode_out) {
    g_last_error = "pf_sample_episode: null argument";
    return PF_BAD_CONFIG;
  }
  return guarded([&] {
    *episode_out = dup_string(run_sample_episode(cfg->kv));
    return PF_OK;
  });
}

const char* pf_last_error(void) { return g_last_error.c_str(); }

void pf_string_free(char* s) { std::free(s); }

const char* pf_version(void) { return "0.1.0"; }

}  // extern "C"
