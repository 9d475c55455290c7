#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace hybrid {

/// Trie over words in a dense alphabet {0..k-1}; each terminal node stores
/// a payload index. Lookup walks from a start position and reports the
/// first (shortest) key found.
class PrefixTree {
 public:
  explicit PrefixTree(int alphabet = 0) : alphabet_(alphabet) { nodes_.emplace_back(alphabet_); }

  int alphabet() const { return alphabet_; }

  void insert(std::span<const int> key, int payload) {
    std::size_t node = 0;
    for (int a : key) {
      int next = nodes_[node].child[a];
      if (next < 0) {
        next = static_cast<int>(nodes_.size());
        nodes_[node].child[a] = next;
        nodes_.emplace_back(alphabet_);
      }
      node = static_cast<std::size_t>(next);
    }
    if (nodes_[node].payload < 0) nodes_[node].payload = payload;
    max_depth_ = std::max(max_depth_, key.size());
  }

  /// Payload of the shortest key that is a prefix of w[pos..].
  std::optional<int> match_at(std::span<const int> w, std::size_t pos) const {
    std::size_t node = 0;
    for (std::size_t i = pos; i < w.size(); ++i) {
      int next = nodes_[node].child[w[i]];
      if (next < 0) return std::nullopt;
      node = static_cast<std::size_t>(next);
      if (nodes_[node].payload >= 0) return nodes_[node].payload;
    }
    return std::nullopt;
  }

  std::size_t max_depth() const { return max_depth_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    explicit Node(int k) : child(static_cast<std::size_t>(k), -1) {}
    std::vector<int> child;
    int payload = -1;
  };

  int alphabet_;
  std::vector<Node> nodes_;
  std::size_t max_depth_ = 0;
};

}  // namespace hybrid
