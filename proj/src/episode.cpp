#include "episode.hpp"

#include <algorithm>
#include <sstream>

namespace protoforge {

Episode sample_episode(const IndexedDataset& ds, int n_way, int k_shot, int n_query, Rng& rng,
                       const SamplerOptions& opts) {
  if (n_way < 1 || k_shot < 1 || n_query < 0)
    throw SamplingError(strfmt("sample_episode: bad (N,K,R) = (%d,%d,%d)", n_way, k_shot,
                               n_query));
  const int n_rel = ds.relation_count();
  if (n_rel < n_way)
    throw SamplingError(strfmt("sample_episode: %d relations available, %d required", n_rel,
                               n_way));

  Episode ep;
  ep.n_way = n_way;
  ep.k_shot = k_shot;
  std::vector<int> rel_pick = rng.sample_without_replacement(n_rel, n_way);
  for (int r : rel_pick) ep.relation_ids.push_back(ds.relation_ids[r]);

  // per-class remainder after support removal, in (class, index) order
  std::vector<std::pair<int, int>> remainder;
  for (int cls = 0; cls < n_way; ++cls) {
    const auto& pool = ds.instances.at(ep.relation_ids[cls]);
    const int avail = static_cast<int>(pool.size());
    if (avail < k_shot + 1)
      throw SamplingError(strfmt("sample_episode: relation %s has %d instances, need >= %d",
                                 ep.relation_ids[cls].c_str(), avail, k_shot + 1));
    std::vector<int> picks = rng.sample_without_replacement(avail, k_shot);
    std::vector<char> used(avail, 0);
    for (int p : picks) {
      used[p] = 1;
      ep.support.push_back(pool[p]);
    }
    for (int i = 0; i < avail; ++i)
      if (!used[i]) remainder.emplace_back(cls, i);
  }

  if (n_query > static_cast<int>(remainder.size()))
    throw SamplingError(strfmt("sample_episode: query size %d exceeds remainder %zu", n_query,
                               remainder.size()));

  std::vector<int> q_idx;
  if (opts.balanced_query) {
    // round-robin quota per class over a shuffled class order
    std::vector<int> order(n_way);
    for (int i = 0; i < n_way; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<int> quota(n_way, n_query / n_way);
    for (int i = 0; i < n_query % n_way; ++i) ++quota[order[i]];
    for (int cls = 0; cls < n_way; ++cls) {
      std::vector<int> members;
      for (size_t i = 0; i < remainder.size(); ++i)
        if (remainder[i].first == cls) members.push_back(static_cast<int>(i));
      if (quota[cls] > static_cast<int>(members.size()))
        throw SamplingError(strfmt("sample_episode: class %d cannot supply %d queries", cls,
                                   quota[cls]));
      for (int p : rng.sample_without_replacement(static_cast<int>(members.size()), quota[cls]))
        q_idx.push_back(members[p]);
    }
  } else {
    q_idx = rng.sample_without_replacement(static_cast<int>(remainder.size()), n_query);
  }

  for (int qi : q_idx) {
    auto [cls, idx] = remainder[qi];
    ep.query.push_back(ds.instances.at(ep.relation_ids[cls])[idx]);
    ep.query_class.push_back(cls);
  }
  return ep;
}

std::string format_episode(const Episode& ep, const Vocabulary& vocab) {
  std::ostringstream os;
  auto words = [&](const IndexedInstance& inst) {
    std::string s;
    for (int i = 0; i < inst.true_len; ++i) {
      if (!s.empty()) s += ' ';
      s += vocab.token(inst.token_ids[i]);
    }
    return s;
  };
  os << strfmt("%d-way %d-shot episode, %d queries\n", ep.n_way, ep.k_shot, ep.query_count());
  for (int cls = 0; cls < ep.n_way; ++cls) {
    os << strfmt("class %d  relation %s\n", cls, ep.relation_ids[cls].c_str());
    for (int k = 0; k < ep.k_shot; ++k)
      os << "  support: " << words(ep.support[cls * ep.k_shot + k]) << "\n";
  }
  for (int q = 0; q < ep.query_count(); ++q)
    os << strfmt("query -> class %d: %s\n", ep.query_class[q], words(ep.query[q]).c_str());
  return os.str();
}

}  // namespace protoforge
