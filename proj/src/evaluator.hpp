#pragma once

#include "trainer.hpp"

namespace protoforge {

struct EvalConfig {
  int n_way = 5;
  int k_shot = 1;
  int n_query = 5;
  int episodes = 2000;  // per seed
  int seeds = 10;       // independent runs, mean +- std reported
  uint64_t base_seed = 1;
  SamplerOptions sampler;

  void validate() const {
    if (n_way < 1 || k_shot < 1 || n_query < 1) throw ConfigError("eval: N, K, R must be positive");
    if (episodes < 1 || seeds < 1) throw ConfigError("eval: episodes and seeds must be positive");
  }
};

struct EvalReport {
  std::string name;  // variant or run label, used by compare()
  int n_way = 0, k_shot = 0, n_query = 0;
  int episodes = 0, seeds = 0;
  uint64_t base_seed = 0;
  double mean_acc = 0.0;
  double std_acc = 0.0;  // sample std across seeds; 0 for a single seed
  std::vector<double> per_seed_acc;
  std::map<std::pair<std::string, std::string>, long> confusion;  // (true, predicted) -> count
  long total_queries = 0;

  std::string to_text() const;   // machine-readable tab-separated lines
  std::string to_table() const;  // aligned summary
};

/// Accuracy over `episodes` sampled episodes for each of `seeds` independent
/// streams; parameters are read-only throughout. Dropout is off (eval mode).
template <typename T>
EvalReport evaluate(const Model<T>& model, const IndexedDataset& ds, const LabelLexicon& lex,
                    const EvalConfig& ec, const std::string& name = "");

/// Ranking table over reports sharing one (N, K, R) setting; sorted by mean
/// accuracy, ties kept in name order.
std::string compare_reports(std::vector<EvalReport> reports);

}  // namespace protoforge
