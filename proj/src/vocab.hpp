#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "common.hpp"

namespace protoforge {

/// Token -> index map. PAD is always index 0 and UNK index 1; lookups are
/// total (unknown tokens map to UNK) and lowercased to match pretrained
/// embedding vocabularies.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary() {
    add_token("<pad>");
    add_token("<unk>");
  }

  /// Adds a (lowercased) token if new; returns its index either way.
  int add_token(const std::string& token) {
    std::string t = lowercase(token);
    auto it = index_.find(t);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(tokens_.size());
    index_[t] = id;
    tokens_.push_back(t);
    return id;
  }

  int lookup(const std::string& token) const {
    auto it = index_.find(lowercase(token));
    return it == index_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& token) const {
    return index_.count(lowercase(token)) != 0;
  }

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const { return tokens_.at(static_cast<size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::unordered_map<std::string, int> index_;
  std::vector<std::string> tokens_;  // insertion order; serialization follows it
};

}  // namespace protoforge
