#pragma once

#include "dataset.hpp"

namespace protoforge {

/// One N-way K-shot task: support instances class-major (class i occupies
/// rows i*K .. i*K+K-1) and R query instances labeled by class index.
struct Episode {
  std::vector<std::string> relation_ids;  // N distinct
  std::vector<IndexedInstance> support;   // N*K
  std::vector<IndexedInstance> query;     // R
  std::vector<int> query_class;           // R values in [0, N)
  int n_way = 0;
  int k_shot = 0;

  int query_count() const { return static_cast<int>(query.size()); }
};

struct SamplerOptions {
  bool balanced_query = false;  // default pools the remainder across classes
};

/// Draws N relations without replacement, K support instances per relation,
/// and R query instances from the pooled remainder of the chosen relations
/// (uniform over instances). Deterministic under a fixed rng state. A chosen
/// relation with fewer than K+1 instances is a sampling error.
Episode sample_episode(const IndexedDataset& ds, int n_way, int k_shot, int n_query, Rng& rng,
                       const SamplerOptions& opts = {});

/// Human-readable dump (tokens reconstructed through the vocabulary).
std::string format_episode(const Episode& ep, const Vocabulary& vocab);

}  // namespace protoforge
