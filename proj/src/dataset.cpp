#include "dataset.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace protoforge {

using nlohmann::json;

int Dataset::instance_count() const {
  int n = 0;
  for (const auto& [rel, list] : instances) n += static_cast<int>(list.size());
  return n;
}

namespace {

// FewRel entity entry: [surface, entity id, [[token indices...], ...]].
// The first index array is the span; empty/missing positions are a record
// error handled by the caller.
std::optional<Span> parse_entity_span(const json& ent) {
  if (!ent.is_array() || ent.size() < 3) return std::nullopt;
  const json& pos = ent[2];
  if (!pos.is_array() || pos.empty()) return std::nullopt;
  const json& first = pos[0];
  if (!first.is_array() || first.empty()) return std::nullopt;
  int lo = first[0].get<int>(), hi = lo;
  for (const auto& v : first) {
    int i = v.get<int>();
    lo = std::min(lo, i);
    hi = std::max(hi, i);
  }
  return Span{lo, hi};
}

json entity_to_json(const Span& span, const std::vector<std::string>& tokens,
                    const std::string& fallback_id) {
  std::string surface;
  for (int i = span.begin; i <= span.end && i < static_cast<int>(tokens.size()); ++i) {
    if (!surface.empty()) surface += ' ';
    surface += tokens[i];
  }
  std::vector<int> idx;
  for (int i = span.begin; i <= span.end; ++i) idx.push_back(i);
  return json::array({surface, fallback_id, json::array({idx})});
}

std::map<std::string, RelationInfo> load_relation_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("relation table: cannot open " + path);
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw ParseError(strfmt("relation table %s: %s", path.c_str(), e.what()));
  }
  if (!root.is_object()) throw ParseError("relation table: top level must be an object");
  std::map<std::string, RelationInfo> out;
  for (auto& [id, val] : root.items()) {
    RelationInfo info;
    info.id = id;
    if (val.contains("label")) info.label_words = split_ws(lowercase(val["label"].get<std::string>()));
    if (val.contains("description"))
      info.description = split_ws(lowercase(val["description"].get<std::string>()));
    if (info.label_words.empty())
      throw DataError("relation table: empty label words for relation " + id);
    out[id] = std::move(info);
  }
  return out;
}

}  // namespace

Dataset load_fewrel(const std::string& path, const std::optional<std::string>& relations_path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_fewrel: cannot open " + path);
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw ParseError(strfmt("%s: %s", path.c_str(), e.what()));
  }
  if (!root.is_object()) throw ParseError(path + ": top level must map relation id to records");

  Dataset ds;
  for (auto& [rel, records] : root.items()) {
    if (!records.is_array())
      throw ParseError(strfmt("%s: relation %s: records must be an array", path.c_str(),
                              rel.c_str()));
    std::vector<Instance> list;
    for (const auto& rec : records) {
      Instance inst;
      inst.relation_id = rel;
      if (rec.contains("tokens"))
        for (const auto& t : rec["tokens"]) inst.tokens.push_back(t.get<std::string>());
      if (inst.tokens.empty()) {
        ++ds.stats.skipped_records;
        continue;
      }
      auto head = rec.contains("h") ? parse_entity_span(rec["h"]) : std::nullopt;
      auto tail = rec.contains("t") ? parse_entity_span(rec["t"]) : std::nullopt;
      if (!head || !tail) {
        ++ds.stats.skipped_records;
        continue;
      }
      const int n = static_cast<int>(inst.tokens.size());
      if (head->begin < 0 || head->end >= n || tail->begin < 0 || tail->end >= n) {
        ++ds.stats.skipped_records;
        continue;
      }
      inst.head = *head;
      inst.tail = *tail;
      list.push_back(std::move(inst));
    }
    if (list.size() < 2)
      throw DataError(strfmt("%s: relation %s has %zu usable instances (need >= 2)",
                             path.c_str(), rel.c_str(), list.size()));
    ds.relation_ids.push_back(rel);
    ds.instances[rel] = std::move(list);
  }
  if (ds.relation_ids.empty()) throw DataError(path + ": no relations");
  std::sort(ds.relation_ids.begin(), ds.relation_ids.end());

  if (relations_path) {
    auto table = load_relation_table(*relations_path);
    for (const std::string& rel : ds.relation_ids) {
      auto it = table.find(rel);
      if (it == table.end())
        throw DataError("relation table missing entry for relation " + rel);
      ds.relations[rel] = it->second;
    }
  }
  return ds;
}

void save_fewrel(const Dataset& ds, const std::string& path) {
  json root = json::object();
  for (const std::string& rel : ds.relation_ids) {
    json arr = json::array();
    for (const Instance& inst : ds.instances.at(rel)) {
      json rec;
      rec["tokens"] = inst.tokens;
      rec["h"] = entity_to_json(inst.head, inst.tokens, "h");
      rec["t"] = entity_to_json(inst.tail, inst.tokens, "t");
      arr.push_back(std::move(rec));
    }
    root[rel] = std::move(arr);
  }
  std::ofstream out(path);
  if (!out) throw DataError("save_fewrel: cannot write " + path);
  out << root.dump(1) << "\n";
}

void save_relation_info(const Dataset& ds, const std::string& path) {
  json root = json::object();
  for (const auto& [rel, info] : ds.relations) {
    std::string label, desc;
    for (const auto& w : info.label_words) {
      if (!label.empty()) label += ' ';
      label += w;
    }
    for (const auto& w : info.description) {
      if (!desc.empty()) desc += ' ';
      desc += w;
    }
    root[rel] = {{"label", label}, {"description", desc}};
  }
  std::ofstream out(path);
  if (!out) throw DataError("save_relation_info: cannot write " + path);
  out << root.dump(1) << "\n";
}

int relative_position_index(int token, const Span& span, int max_rel, EntityOffset mode) {
  int rel;
  if (mode == EntityOffset::kSpanStart) {
    rel = token - span.begin;
  } else {
    if (token < span.begin)
      rel = token - span.begin;
    else if (token > span.end)
      rel = token - span.end;
    else
      rel = 0;
  }
  rel = std::clamp(rel, -max_rel, max_rel);
  return rel + max_rel;
}

IndexedInstance index_instance(const Instance& inst, const Vocabulary& vocab, int max_len,
                               int max_rel, EntityOffset mode) {
  if (inst.tokens.empty()) throw DataError("index_instance: empty token list");
  if (inst.head.length() < 1 || inst.tail.length() < 1)
    throw DataError("index_instance: empty entity span");
  const int n = static_cast<int>(inst.tokens.size());
  if (inst.head.begin < 0 || inst.head.end >= n || inst.tail.begin < 0 || inst.tail.end >= n)
    throw DataError("index_instance: entity span outside token range");
  if (inst.head.end >= max_len || inst.tail.end >= max_len)
    throw DataError(strfmt("index_instance: truncation to %d tokens would drop an entity span",
                           max_len));

  IndexedInstance out;
  out.relation_id = inst.relation_id;
  out.true_len = std::min(n, max_len);
  out.token_ids.resize(max_len, Vocabulary::kPad);
  out.pos_head.resize(max_len);
  out.pos_tail.resize(max_len);
  for (int i = 0; i < out.true_len; ++i) out.token_ids[i] = vocab.lookup(inst.tokens[i]);
  for (int i = 0; i < max_len; ++i) {
    out.pos_head[i] = relative_position_index(i, inst.head, max_rel, mode);
    out.pos_tail[i] = relative_position_index(i, inst.tail, max_rel, mode);
  }
  return out;
}

IndexedDataset index_dataset(const Dataset& ds, const Vocabulary& vocab, int max_len,
                             int max_rel, EntityOffset mode) {
  IndexedDataset out;
  out.max_len = max_len;
  out.max_rel = max_rel;
  out.relations = ds.relations;
  for (const std::string& rel : ds.relation_ids) {
    std::vector<IndexedInstance> list;
    const auto& raw = ds.instances.at(rel);
    for (size_t i = 0; i < raw.size(); ++i) {
      try {
        IndexedInstance idx = index_instance(raw[i], vocab, max_len, max_rel, mode);
        idx.source_index = static_cast<int>(i);
        list.push_back(std::move(idx));
      } catch (const DataError&) {
        ++out.rejected;
      }
    }
    if (!list.empty()) {
      out.relation_ids.push_back(rel);
      out.instances[rel] = std::move(list);
    }
  }
  return out;
}

}  // namespace protoforge
