#include "synthetic.hpp"

#include <fstream>

namespace protoforge {

SyntheticData make_synthetic(const SyntheticSpec& spec) {
  if (spec.n_relations < 1 || spec.n_instances < 2)
    throw ConfigError("make_synthetic: need >= 1 relation and >= 2 instances per relation");
  if (spec.signal_tokens < 1)
    throw ConfigError("make_synthetic: signal_tokens must be >= 1");
  if (spec.sentence_len < 1) throw ConfigError("make_synthetic: sentence_len must be >= 1");
  if (spec.noise_rate < 0.0 || spec.noise_rate > 1.0)
    throw ConfigError("make_synthetic: noise_rate must be in [0, 1]");

  const int reserved = 4;  // PAD, UNK, head/tail placeholders
  const int needed_signal = spec.n_relations * spec.signal_tokens;
  const int noise_pool = spec.vocab_size - reserved - needed_signal;
  if (noise_pool < 0)
    throw ConfigError(strfmt(
        "make_synthetic: vocab of %d cannot give %d relations %d disjoint signal tokens each",
        spec.vocab_size, spec.n_relations, spec.signal_tokens));
  if (spec.noise_rate > 0.0 && noise_pool < 1)
    throw ConfigError("make_synthetic: noise_rate > 0 needs at least one noise token");

  Rng rng(spec.seed, "synthetic");
  SyntheticData out;
  out.vocab.add_token("enthead");
  out.vocab.add_token("enttail");

  std::vector<std::vector<std::string>> signal(spec.n_relations);
  for (int r = 0; r < spec.n_relations; ++r)
    for (int j = 0; j < spec.signal_tokens; ++j)
      signal[r].push_back(strfmt("sig%03dw%d", r, j));
  std::vector<std::string> noise(noise_pool);
  for (int k = 0; k < noise_pool; ++k) noise[k] = strfmt("noise%04d", k);
  for (const auto& words : signal)
    for (const auto& w : words) out.vocab.add_token(w);
  for (const auto& w : noise) out.vocab.add_token(w);

  out.table.rows = out.vocab.size();
  out.table.cols = spec.embedding_dim;
  out.table.values.assign(static_cast<size_t>(out.table.rows) * spec.embedding_dim, 0.0);
  for (int r = Vocabulary::kUnk; r < out.table.rows; ++r)  // PAD row stays zero
    for (int j = 0; j < spec.embedding_dim; ++j)
      out.table.row(r)[j] = rng.uniform_real(-0.5, 0.5);

  const int total_len = spec.sentence_len + 2;
  for (int r = 0; r < spec.n_relations; ++r) {
    std::string rel = strfmt("R%03d", r);
    RelationInfo info;
    info.id = rel;
    info.label_words = signal[r];
    info.description = signal[r];
    out.dataset.relations[rel] = info;
    out.dataset.relation_ids.push_back(rel);

    std::vector<Instance> list;
    for (int i = 0; i < spec.n_instances; ++i) {
      Instance inst;
      inst.relation_id = rel;
      inst.tokens.resize(total_len);
      std::vector<int> ent = rng.sample_without_replacement(total_len, 2);
      inst.head = Span{ent[0], ent[0]};
      inst.tail = Span{ent[1], ent[1]};
      inst.tokens[ent[0]] = "enthead";
      inst.tokens[ent[1]] = "enttail";
      for (int t = 0; t < total_len; ++t) {
        if (t == ent[0] || t == ent[1]) continue;
        if (spec.noise_rate > 0.0 && rng.uniform_real() < spec.noise_rate)
          inst.tokens[t] = noise[rng.uniform_int(noise.size())];
        else
          inst.tokens[t] = signal[r][rng.uniform_int(signal[r].size())];
      }
      list.push_back(std::move(inst));
    }
    out.dataset.instances[rel] = std::move(list);
  }
  return out;
}

std::vector<Dataset> split_dataset(const Dataset& ds, const std::vector<int>& group_sizes) {
  int total = 0;
  for (int g : group_sizes) total += g;
  if (total > ds.relation_count())
    throw ConfigError(strfmt("split_dataset: groups need %d relations, dataset has %d", total,
                             ds.relation_count()));
  std::vector<Dataset> out;
  int at = 0;
  for (int g : group_sizes) {
    Dataset part;
    part.stats = ds.stats;
    for (int i = 0; i < g; ++i) {
      const std::string& rel = ds.relation_ids[at++];
      part.relation_ids.push_back(rel);
      part.instances[rel] = ds.instances.at(rel);
      auto it = ds.relations.find(rel);
      if (it != ds.relations.end()) part.relations[rel] = it->second;
    }
    out.push_back(std::move(part));
  }
  return out;
}

void save_embedding_file(const Vocabulary& vocab, const EmbeddingTable& table,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("save_embedding_file: cannot write " + path);
  for (int r = 2; r < vocab.size(); ++r) {  // PAD/UNK are re-created on load
    out << vocab.token(r);
    for (int j = 0; j < table.cols; ++j) out << ' ' << strfmt("%.17g", table.row(r)[j]);
    out << '\n';
  }
}

}  // namespace protoforge
