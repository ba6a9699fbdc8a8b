#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vocab.hpp"

namespace protoforge {

/// Inclusive token index range of an entity mention.
struct Span {
  int begin = 0;
  int end = 0;  // inclusive
  int length() const { return end - begin + 1; }
};

/// One tokenized sentence with its marked head/tail entities and relation.
struct Instance {
  std::string relation_id;
  std::vector<std::string> tokens;
  Span head;
  Span tail;
};

struct RelationInfo {
  std::string id;
  std::vector<std::string> label_words;  // non-empty
  std::vector<std::string> description;  // may be empty
};

struct LoadStats {
  int skipped_records = 0;  // empty tokens or missing entity positions
};

/// Instances grouped by relation, plus per-relation label info. Immutable
/// after load; relation_ids is the canonical (sorted) iteration order.
struct Dataset {
  std::vector<std::string> relation_ids;
  std::map<std::string, std::vector<Instance>> instances;
  std::map<std::string, RelationInfo> relations;
  LoadStats stats;

  int relation_count() const { return static_cast<int>(relation_ids.size()); }
  int instance_count() const;
};

/// Parses the FewRel interchange layout: a JSON object mapping relation id to
/// an array of records with `tokens` and `h`/`t` entries carrying token-index
/// spans. Records without usable positions or tokens are skipped and counted.
/// A relation with fewer than 2 usable instances is a dataset error. When
/// `relations_path` is given, label words and descriptions are read from the
/// relation-name table there; relations missing from it are an error.
Dataset load_fewrel(const std::string& path,
                    const std::optional<std::string>& relations_path = std::nullopt);

/// Writes the same layout load_fewrel reads.
void save_fewrel(const Dataset& ds, const std::string& path);

/// Writes the relation-name table (id -> {label, description}).
void save_relation_info(const Dataset& ds, const std::string& path);

// --- indexing ----------------------------------------------------------------

enum class EntityOffset { kSpanStart, kNearestToken };

/// Fixed-length integer view of an instance: token ids plus head/tail
/// relative-position indices, all exactly max_len long.
struct IndexedInstance {
  std::string relation_id;
  int source_index = -1;  // position within the relation's instance list
  std::vector<int> token_ids;
  std::vector<int> pos_head;
  std::vector<int> pos_tail;
  int true_len = 0;
};

/// Relative position of token i to a span, clipped to [-max_rel, max_rel] and
/// shifted by +max_rel so it indexes a (2*max_rel+1)-row position table.
int relative_position_index(int token, const Span& span, int max_rel, EntityOffset mode);

/// Pads with PAD or truncates to max_len. Truncation that would drop part of
/// an entity span rejects the instance (DataError); callers count rejects and
/// exclude the instance from sampling.
IndexedInstance index_instance(const Instance& inst, const Vocabulary& vocab, int max_len,
                               int max_rel, EntityOffset mode = EntityOffset::kSpanStart);

/// Dataset after vocabulary indexing; rejected instances are dropped.
struct IndexedDataset {
  std::vector<std::string> relation_ids;
  std::map<std::string, std::vector<IndexedInstance>> instances;
  std::map<std::string, RelationInfo> relations;
  int max_len = 0;
  int max_rel = 0;
  int rejected = 0;

  int relation_count() const { return static_cast<int>(relation_ids.size()); }
};

IndexedDataset index_dataset(const Dataset& ds, const Vocabulary& vocab, int max_len,
                             int max_rel, EntityOffset mode = EntityOffset::kSpanStart);

}  // namespace protoforge
