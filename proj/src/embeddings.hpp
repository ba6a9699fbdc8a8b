#pragma once

#include <string>

#include "vocab.hpp"

namespace protoforge {

/// Pretrained word vectors, kept in double so one load can seed either a
/// float or a double model identically.
struct EmbeddingTable {
  int rows = 0;
  int cols = 0;  // d_w
  std::vector<double> values;

  double* row(int r) { return values.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return values.data() + static_cast<size_t>(r) * cols; }
};

struct LoadedEmbeddings {
  Vocabulary vocab;
  EmbeddingTable table;  // vocab.size() x d_w; PAD row zero, UNK row seeded random
};

/// Reads a text embedding file, one `token v1 .. v_dw` line each. The word
/// dimension is taken from the first line; a line with a different count is a
/// parse error naming the line. Tokens are lowercased. The UNK row is drawn
/// uniform in [-0.5/d_w, 0.5/d_w] from `rng`.
LoadedEmbeddings load_embeddings(const std::string& path, Rng& rng);

}  // namespace protoforge
