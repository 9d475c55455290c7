#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hybrid/error.hpp"
#include "hybrid/prefix_tree.hpp"

namespace hybrid {

/// Positive word over {0..k-1}.
using Letters = std::vector<int>;

/// Reduction ordering on positive words: shortlex under a generator
/// ranking, or the wreath product of shortlex orderings over levels.
class Ordering {
 public:
  enum class Kind { Shortlex, Wreath };

  Ordering() = default;

  static Ordering shortlex(int k) {
    Ordering o;
    o.kind_ = Kind::Shortlex;
    for (int i = 0; i < k; ++i) o.rank_.push_back(i);
    o.level_.assign(static_cast<std::size_t>(k), 0);
    return o;
  }

  /// rank[a] is the position of letter a in the generator ranking.
  static Ordering shortlex(std::vector<int> rank) {
    Ordering o;
    o.kind_ = Kind::Shortlex;
    o.level_.assign(rank.size(), 0);
    o.rank_ = std::move(rank);
    return o;
  }

  /// Letters on higher levels dominate; shortlex within a level.
  static Ordering wreath(std::vector<int> levels, std::vector<int> rank = {}) {
    Ordering o;
    o.kind_ = Kind::Wreath;
    if (rank.empty())
      for (std::size_t i = 0; i < levels.size(); ++i) rank.push_back(static_cast<int>(i));
    if (rank.size() != levels.size()) throw ArgumentError("ordering: level/rank size mismatch");
    o.rank_ = std::move(rank);
    o.level_ = std::move(levels);
    return o;
  }

  Kind kind() const { return kind_; }
  int alphabet_size() const { return static_cast<int>(rank_.size()); }
  const std::vector<int>& rank() const { return rank_; }
  const std::vector<int>& levels() const { return level_; }

  int compare(std::span<const int> a, std::span<const int> b) const {
    if (kind_ == Kind::Shortlex) return shortlex_cmp(a, b);
    int top = 0;
    for (int l : level_) top = std::max(top, l);
    int c = wreath_cmp(a, b, top);
    if (c) return c;
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end()) ? -1 : (std::equal(a.begin(), a.end(), b.begin(), b.end()) ? 0 : 1);
  }

  bool less(std::span<const int> a, std::span<const int> b) const { return compare(a, b) < 0; }

 private:
  int shortlex_cmp(std::span<const int> a, std::span<const int> b) const {
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] != b[i]) return rank_[a[i]] < rank_[b[i]] ? -1 : 1;
    return 0;
  }

  int wreath_cmp(std::span<const int> a, std::span<const int> b, int lvl) const {
    if (lvl <= 0) return shortlex_cmp(a, b);
    Letters pa, pb;
    for (int x : a)
      if (level_[x] == lvl) pa.push_back(x);
    for (int x : b)
      if (level_[x] == lvl) pb.push_back(x);
    if (int c = shortlex_cmp(pa, pb)) return c;
    auto segments = [&](std::span<const int> w) {
      std::vector<Letters> segs(1);
      for (int x : w) {
        if (level_[x] == lvl)
          segs.emplace_back();
        else
          segs.back().push_back(x);
      }
      return segs;
    };
    auto sa = segments(a), sb = segments(b);
    for (std::size_t i = 0; i < sa.size(); ++i)
      if (int c = wreath_cmp(sa[i], sb[i], lvl - 1)) return c;
    return 0;
  }

  Kind kind_ = Kind::Shortlex;
  std::vector<int> rank_;
  std::vector<int> level_;
};

struct Rule {
  Letters left;
  Letters right;
  friend bool operator==(const Rule&, const Rule&) = default;
};

/// Finite rewriting system over {0..k-1} with a prefix-tree matcher.
class RewritingSystem {
 public:
  RewritingSystem() = default;

  RewritingSystem(int alphabet_size, std::vector<Rule> rules, Ordering ordering)
      : k_(alphabet_size), rules_(std::move(rules)), ord_(std::move(ordering)), tree_(alphabet_size) {
    if (ord_.alphabet_size() != k_) throw ArgumentError("rws: ordering alphabet mismatch");
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      const Rule& r = rules_[i];
      if (r.left.empty()) throw ArgumentError("rws: empty left side");
      for (int a : r.left)
        if (a < 0 || a >= k_) throw ArgumentError("rws: letter out of range");
      for (int a : r.right)
        if (a < 0 || a >= k_) throw ArgumentError("rws: letter out of range");
      if (!ord_.less(r.right, r.left)) throw ArgumentError("rws: rule " + std::to_string(i + 1) + " is not decreasing");
      tree_.insert(r.left, static_cast<int>(i));
    }
  }

  int alphabet_size() const { return k_; }
  const std::vector<Rule>& rules() const { return rules_; }
  const Ordering& ordering() const { return ord_; }
  const PrefixTree& tree() const { return tree_; }
  std::size_t max_left() const { return tree_.max_depth(); }

  std::optional<int> match_at(std::span<const int> w, std::size_t pos) const { return tree_.match_at(w, pos); }

  /// (position, rule) of the match with leftmost start at or after `from`.
  std::optional<std::pair<std::size_t, int>> leftmost_match(std::span<const int> w, std::size_t from = 0) const {
    for (std::size_t p = from; p < w.size(); ++p)
      if (auto r = tree_.match_at(w, p)) return std::make_pair(p, *r);
    return std::nullopt;
  }

  bool is_irreducible(std::span<const int> w) const { return !leftmost_match(w).has_value(); }

  /// Leftmost reduction to the reduced form. `steps` counts rule applications.
  Letters reduce(Letters w, std::size_t* steps = nullptr) const {
    for (int a : w)
      if (a < 0 || a >= k_) throw ArgumentError("rws: letter out of range");
    const std::size_t reach = max_left() ? max_left() - 1 : 0;
    std::size_t pos = 0;
    while (pos < w.size()) {
      auto r = tree_.match_at(w, pos);
      if (!r) {
        ++pos;
        continue;
      }
      const Rule& rule = rules_[*r];
      w.erase(w.begin() + static_cast<std::ptrdiff_t>(pos), w.begin() + static_cast<std::ptrdiff_t>(pos + rule.left.size()));
      w.insert(w.begin() + static_cast<std::ptrdiff_t>(pos), rule.right.begin(), rule.right.end());
      if (steps) ++*steps;
      pos = pos > reach ? pos - reach : 0;
    }
    return w;
  }

 private:
  int k_ = 0;
  std::vector<Rule> rules_;
  Ordering ord_;
  PrefixTree tree_;
};

struct CriticalPair {
  Letters word;
  Letters first;
  Letters second;
};

struct ConfluenceReport {
  bool confluent = true;
  std::optional<CriticalPair> witness;
  std::size_t pairs_checked = 0;
};

namespace detail {

/// Calls f(word, first, second) for every overlap and inclusion of rule
/// left sides; first/second are the unreduced one-step results.
template <class F>
void for_each_critical_pair(const std::vector<Rule>& rules, F&& f) {
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const Letters& l1 = rules[i].left;
    for (std::size_t j = 0; j < rules.size(); ++j) {
      const Letters& l2 = rules[j].left;
      std::size_t maxov = std::min(l1.size(), l2.size());
      for (std::size_t ov = 1; ov < maxov; ++ov) {
        if (!std::equal(l1.end() - static_cast<std::ptrdiff_t>(ov), l1.end(), l2.begin())) continue;
        Letters word = l1;
        word.insert(word.end(), l2.begin() + static_cast<std::ptrdiff_t>(ov), l2.end());
        Letters a = rules[i].right;
        a.insert(a.end(), l2.begin() + static_cast<std::ptrdiff_t>(ov), l2.end());
        Letters b(l1.begin(), l1.end() - static_cast<std::ptrdiff_t>(ov));
        b.insert(b.end(), rules[j].right.begin(), rules[j].right.end());
        if (!f(word, a, b, ov)) return;
      }
      if (i != j && l2.size() <= l1.size()) {
        auto it = std::search(l1.begin(), l1.end(), l2.begin(), l2.end());
        if (it != l1.end()) {
          Letters b(l1.begin(), it);
          b.insert(b.end(), rules[j].right.begin(), rules[j].right.end());
          b.insert(b.end(), it + static_cast<std::ptrdiff_t>(l2.size()), l1.end());
          if (!f(l1, rules[i].right, b, l2.size())) return;
        }
      }
    }
  }
}

}  // namespace detail

inline ConfluenceReport is_confluent(const RewritingSystem& rws) {
  ConfluenceReport rep;
  detail::for_each_critical_pair(rws.rules(), [&](const Letters& w, const Letters& a, const Letters& b, std::size_t) {
    ++rep.pairs_checked;
    Letters ra = rws.reduce(a), rb = rws.reduce(b);
    if (ra != rb) {
      rep.confluent = false;
      rep.witness = CriticalPair{w, ra, rb};
      return false;
    }
    return true;
  });
  return rep;
}

/// Interreduces a confluent system: drops rules whose left side contains
/// another left side and reduces all right sides.
inline RewritingSystem reduce_system(const RewritingSystem& rws) {
  if (!is_confluent(rws).confluent) throw ArgumentError("reduce_system: input is not confluent");
  const auto& rules = rws.rules();
  std::vector<Rule> kept;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    bool redundant = false;
    for (std::size_t j = 0; j < rules.size() && !redundant; ++j) {
      if (i == j) continue;
      const Letters& li = rules[i].left;
      const Letters& lj = rules[j].left;
      if (lj.size() > li.size()) continue;
      if (lj.size() == li.size() && (lj != li || j > i)) continue;
      if (std::search(li.begin(), li.end(), lj.begin(), lj.end()) != li.end()) redundant = true;
    }
    if (!redundant) kept.push_back(rules[i]);
  }
  for (auto& r : kept) r.right = rws.reduce(r.right);
  return RewritingSystem(rws.alphabet_size(), std::move(kept), rws.ordering());
}

/// Monoid presentation; generator_orders[i] > 0 adds x_i^{o} = 1.
struct MonoidPresentation {
  int alphabet_size = 0;
  std::vector<std::pair<Letters, Letters>> relations;
  std::vector<std::uint64_t> generator_orders;
};

struct CompletionLimits {
  std::size_t max_rules = 10'000;
  std::size_t max_length = 64;
};

struct CompletionResult {
  RewritingSystem system;
  bool success = false;
  std::string message;
};

/// Knuth-Bendix completion. Critical pairs are processed FIFO with
/// shorter overlaps first; the system is kept interreduced throughout.
inline CompletionResult knuth_bendix(const MonoidPresentation& p, const Ordering& ord, CompletionLimits limits = {}) {
  const int k = p.alphabet_size;
  if (ord.alphabet_size() != k) throw ArgumentError("knuth_bendix: ordering alphabet mismatch");
  std::vector<Rule> rules;
  PrefixTree tree(k);
  std::size_t max_left = 0;

  auto rebuild = [&] {
    tree = PrefixTree(k);
    max_left = 0;
    for (std::size_t i = 0; i < rules.size(); ++i) {
      tree.insert(rules[i].left, static_cast<int>(i));
      max_left = std::max(max_left, rules[i].left.size());
    }
  };
  auto reduce = [&](Letters w) {
    const std::size_t reach = max_left ? max_left - 1 : 0;
    std::size_t pos = 0;
    while (pos < w.size()) {
      auto r = tree.match_at(w, pos);
      if (!r) {
        ++pos;
        continue;
      }
      const Rule& rule = rules[*r];
      w.erase(w.begin() + static_cast<std::ptrdiff_t>(pos), w.begin() + static_cast<std::ptrdiff_t>(pos + rule.left.size()));
      w.insert(w.begin() + static_cast<std::ptrdiff_t>(pos), rule.right.begin(), rule.right.end());
      pos = pos > reach ? pos - reach : 0;
    }
    return w;
  };

  std::deque<std::pair<Letters, Letters>> pending;
  for (const auto& rel : p.relations) {
    for (int a : rel.first)
      if (a < 0 || a >= k) throw ArgumentError("knuth_bendix: letter out of range");
    for (int a : rel.second)
      if (a < 0 || a >= k) throw ArgumentError("knuth_bendix: letter out of range");
    pending.push_back(rel);
  }
  for (std::size_t g = 0; g < p.generator_orders.size(); ++g)
    if (p.generator_orders[g] > 0) pending.emplace_back(Letters(p.generator_orders[g], static_cast<int>(g)), Letters{});

  auto fail = [&](std::string msg) {
    CompletionResult res;
    res.system = RewritingSystem(k, rules, ord);
    res.success = false;
    res.message = std::move(msg);
    return res;
  };

  for (;;) {
    while (!pending.empty()) {
      auto [u, v] = std::move(pending.front());
      pending.pop_front();
      u = reduce(std::move(u));
      v = reduce(std::move(v));
      if (u == v) continue;
      if (ord.less(u, v)) std::swap(u, v);
      if (u.size() > limits.max_length) return fail("left side exceeds length limit");
      std::vector<Rule> kept;
      for (auto& r : rules) {
        if (std::search(r.left.begin(), r.left.end(), u.begin(), u.end()) != r.left.end())
          pending.emplace_back(std::move(r.left), std::move(r.right));
        else
          kept.push_back(std::move(r));
      }
      rules = std::move(kept);
      rules.push_back({std::move(u), std::move(v)});
      rebuild();
      for (auto& r : rules) r.right = reduce(r.right);
      if (rules.size() > limits.max_rules) return fail("rule limit exceeded");
    }
    std::vector<std::pair<std::size_t, std::pair<Letters, Letters>>> fresh;
    detail::for_each_critical_pair(rules, [&](const Letters&, const Letters& a, const Letters& b, std::size_t ov) {
      Letters ra = reduce(a), rb = reduce(b);
      if (ra != rb) fresh.push_back({ov, {std::move(ra), std::move(rb)}});
      return true;
    });
    if (fresh.empty()) break;
    std::stable_sort(fresh.begin(), fresh.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (auto& f : fresh) pending.push_back(std::move(f.second));
  }
  CompletionResult res;
  res.system = RewritingSystem(k, std::move(rules), ord);
  res.success = true;
  res.message = "confluent";
  return res;
}

/// Irreducible words by length, then by generator rank.
inline std::vector<Letters> enumerate_normal_forms(const RewritingSystem& rws, std::size_t bound) {
  std::vector<int> letters_by_rank(static_cast<std::size_t>(rws.alphabet_size()));
  for (int a = 0; a < rws.alphabet_size(); ++a) letters_by_rank[rws.ordering().rank()[a]] = a;
  std::vector<Letters> out{Letters{}};
  std::vector<Letters> frontier{Letters{}};
  const std::size_t reach = rws.max_left();
  while (!frontier.empty()) {
    std::vector<Letters> next;
    for (const auto& w : frontier) {
      for (int a : letters_by_rank) {
        Letters x = w;
        x.push_back(a);
        bool reducible = false;
        std::size_t start = x.size() > reach ? x.size() - reach : 0;
        for (std::size_t p = start; p < x.size() && !reducible; ++p)
          if (rws.match_at(x, p)) reducible = true;
        if (reducible) continue;
        out.push_back(x);
        if (out.size() > bound) throw LimitError("enumerate_normal_forms: bound exceeded");
        next.push_back(std::move(x));
      }
    }
    frontier = std::move(next);
  }
  return out;
}

}  // namespace hybrid
