#pragma once

#include "dataset.hpp"
#include "embeddings.hpp"

namespace protoforge {

/// Desk-scale dataset generator. Each relation owns `signal_tokens` disjoint
/// vocabulary tokens; each instance is two entity placeholders plus body
/// slots, where every body slot is a noise token with probability
/// `noise_rate` and one of the relation's signal tokens otherwise. So
/// noise_rate 0 makes class membership fully determined by the tokens and
/// noise_rate 1 erases the class signal entirely. Label words of a relation
/// are its signal tokens.
struct SyntheticSpec {
  int n_relations = 25;
  int n_instances = 50;      // per relation
  int vocab_size = 200;      // total tokens incl. PAD/UNK and placeholders
  int signal_tokens = 2;     // per relation, disjoint across relations
  double noise_rate = 0.0;
  int sentence_len = 10;     // body slots, entities excluded
  int embedding_dim = 16;    // d_w of the generated table
  uint64_t seed = 1;
};

struct SyntheticData {
  Dataset dataset;
  Vocabulary vocab;
  EmbeddingTable table;  // vocab.size() x embedding_dim, uniform [-0.5, 0.5]
};

SyntheticData make_synthetic(const SyntheticSpec& spec);

/// Splits relations (in canonical order) into consecutive groups of the given
/// sizes; the groups' relation sets are disjoint by construction.
std::vector<Dataset> split_dataset(const Dataset& ds, const std::vector<int>& group_sizes);

/// Writes the generated table in the text embedding-file layout.
void save_embedding_file(const Vocabulary& vocab, const EmbeddingTable& table,
                         const std::string& path);

}  // namespace protoforge
