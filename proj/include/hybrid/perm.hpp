#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hybrid/error.hpp"
#include "hybrid/words.hpp"

namespace hybrid {

/// Permutation of {0..degree-1}; acts on the right, so (p * q) applies p
/// first. Text I/O uses 1-based points.
class Permutation {
 public:
  using Point = std::uint32_t;

  Permutation() = default;

  explicit Permutation(std::size_t degree) : images_(degree) {
    std::iota(images_.begin(), images_.end(), Point{0});
  }

  explicit Permutation(std::vector<Point> images) : images_(std::move(images)) {
    std::vector<bool> seen(images_.size(), false);
    for (Point p : images_) {
      if (p >= images_.size() || seen[p]) throw ArgumentError("permutation: images are not a bijection");
      seen[p] = true;
    }
  }

  /// Builds a permutation from 1-based cycles.
  static Permutation from_cycles(std::size_t degree, const std::vector<std::vector<Point>>& cycles) {
    std::vector<Point> img(degree);
    std::iota(img.begin(), img.end(), Point{0});
    std::vector<bool> used(degree, false);
    for (const auto& c : cycles) {
      for (std::size_t i = 0; i < c.size(); ++i) {
        Point a = c[i], b = c[(i + 1) % c.size()];
        if (a == 0 || a > degree || b == 0 || b > degree) throw ArgumentError("permutation: point out of range");
        if (used[a - 1]) throw ArgumentError("permutation: point repeated in cycles");
        used[a - 1] = true;
        img[a - 1] = b - 1;
      }
    }
    return Permutation(std::move(img));
  }

  std::size_t degree() const { return images_.size(); }
  Point operator[](Point p) const { return images_[p]; }
  const std::vector<Point>& images() const { return images_; }

  bool is_identity() const {
    for (Point i = 0; i < images_.size(); ++i)
      if (images_[i] != i) return false;
    return true;
  }

  friend Permutation operator*(const Permutation& p, const Permutation& q) {
    if (p.degree() != q.degree()) throw ArgumentError("permutation: degree mismatch");
    Permutation r;
    r.images_.resize(p.degree());
    for (std::size_t i = 0; i < p.degree(); ++i) r.images_[i] = q.images_[p.images_[i]];
    return r;
  }

  Permutation inverse() const {
    Permutation r;
    r.images_.resize(degree());
    for (Point i = 0; i < degree(); ++i) r.images_[images_[i]] = i;
    return r;
  }

  Permutation pow(long long k) const {
    Permutation base = k < 0 ? inverse() : *this;
    if (k < 0) k = -k;
    Permutation result(degree());
    while (k > 0) {
      if (k & 1) result = result * base;
      k >>= 1;
      if (k) base = base * base;
    }
    return result;
  }

  /// Least n >= 1 with p^n = 1, the lcm of the cycle lengths.
  std::uint64_t order() const {
    std::uint64_t ord = 1;
    std::vector<bool> seen(degree(), false);
    for (Point i = 0; i < degree(); ++i) {
      if (seen[i]) continue;
      std::uint64_t len = 0;
      for (Point j = i; !seen[j]; j = images_[j]) {
        seen[j] = true;
        ++len;
      }
      ord = std::lcm(ord, len);
    }
    return ord;
  }

  /// Disjoint-cycle text such as "(1,2,3)(4,5)"; identity is "()".
  std::string to_string() const {
    std::string s;
    std::vector<bool> seen(degree(), false);
    for (Point i = 0; i < degree(); ++i) {
      if (seen[i] || images_[i] == i) continue;
      s += '(';
      for (Point j = i; !seen[j]; j = images_[j]) {
        seen[j] = true;
        if (j != i) s += ',';
        s += std::to_string(j + 1);
      }
      s += ')';
    }
    return s.empty() ? "()" : s;
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;
  friend auto operator<=>(const Permutation&, const Permutation&) = default;

 private:
  std::vector<Point> images_;
};

struct PermutationHash {
  std::size_t operator()(const Permutation& p) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (auto x : p.images()) h = (h ^ x) * 1099511628211ull;
    return h;
  }
};

/// Parses disjoint-cycle text; commas or spaces separate points.
inline Permutation parse_permutation(std::string_view text, std::size_t degree) {
  std::vector<std::vector<Permutation::Point>> cycles;
  std::size_t i = 0;
  auto skip = [&] {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
  };
  skip();
  while (i < text.size()) {
    if (text[i] != '(') throw ParseError("permutation: expected '(' in \"" + std::string(text) + "\"");
    ++i;
    std::vector<Permutation::Point> cycle;
    for (;;) {
      skip();
      if (i >= text.size()) throw ParseError("permutation: unterminated cycle");
      if (text[i] == ')') {
        ++i;
        break;
      }
      if (text[i] == ',') {
        ++i;
        continue;
      }
      if (text[i] < '0' || text[i] > '9') throw ParseError("permutation: unexpected character");
      std::uint64_t v = 0;
      while (i < text.size() && text[i] >= '0' && text[i] <= '9') v = v * 10 + (text[i++] - '0');
      cycle.push_back(static_cast<Permutation::Point>(v));
    }
    if (!cycle.empty()) cycles.push_back(std::move(cycle));
    skip();
  }
  try {
    return Permutation::from_cycles(degree, cycles);
  } catch (const ArgumentError& e) {
    throw ParseError(std::string(e.what()) + " in \"" + std::string(text) + "\"");
  }
}

/// Largest point mentioned in a cycle string (the minimal degree).
inline std::size_t cycle_text_degree(std::string_view text) {
  std::size_t best = 0, v = 0;
  bool in = false;
  for (char c : text) {
    if (c >= '0' && c <= '9') {
      v = v * 10 + (c - '0');
      in = true;
    } else {
      if (in) best = std::max(best, v);
      v = 0;
      in = false;
    }
  }
  if (in) best = std::max(best, v);
  return best;
}

inline Permutation evaluate_perm_word(const Word& w, std::span<const Permutation> gens, std::size_t degree) {
  Permutation acc(degree);
  for (int l : w) {
    const Permutation& g = gens[letter_generator(l)];
    acc = acc * (l > 0 ? g : g.inverse());
  }
  return acc;
}

/// Base and strong generating set with explicit transversals. Every
/// transversal element and strong generator carries a value of a
/// straight-line program over the input generators.
class StabilizerChain {
 public:
  using Point = Permutation::Point;

  struct Level {
    Point base = 0;
    std::vector<int> gens;              // indices into strong generators
    std::vector<Point> orbit;           // orbit[0] == base
    std::vector<int> slot;              // point -> index into orbit, or -1
    std::vector<Permutation> reps;      // reps[i] maps base to orbit[i]
    std::vector<int> rep_values;        // slp value of reps[i]
  };

  StabilizerChain() = default;

  std::size_t degree() const { return degree_; }
  const std::vector<Permutation>& input_generators() const { return inputs_; }
  const std::vector<Permutation>& strong_generators() const { return strong_; }
  const std::vector<int>& strong_values() const { return strong_values_; }
  const std::vector<Level>& levels() const { return levels_; }
  const Slp& slp() const { return slp_; }

  std::vector<Point> base() const {
    std::vector<Point> b;
    for (const auto& l : levels_) b.push_back(l.base);
    return b;
  }

  std::uint64_t order() const {
    std::uint64_t o = 1;
    for (const auto& l : levels_) {
      if (__builtin_mul_overflow(o, static_cast<std::uint64_t>(l.orbit.size()), &o))
        throw LimitError("chain: group order exceeds 64 bits");
    }
    return o;
  }

  /// Sifts p through the chain; returns the residue and the level where
  /// sifting stopped (levels().size() when it ran through).
  std::pair<Permutation, std::size_t> sift(Permutation p, std::size_t from = 0,
                                           std::vector<int>* values = nullptr) const {
    for (std::size_t i = from; i < levels_.size(); ++i) {
      const Level& lv = levels_[i];
      int s = lv.slot[p[lv.base]];
      if (s < 0) return {std::move(p), i};
      if (s > 0) p = p * lv.reps[s].inverse();
      if (values) values->push_back(lv.rep_values[s]);
    }
    return {std::move(p), levels_.size()};
  }

  bool contains(const Permutation& p) const {
    check_degree(p);
    auto [res, lvl] = sift(p);
    return lvl == levels_.size() && res.is_identity();
  }

  /// Transversal values whose product (in order) equals p.
  std::vector<int> factor_values(const Permutation& p) const {
    check_degree(p);
    std::vector<int> vals;
    auto [res, lvl] = sift(p, 0, &vals);
    if (lvl != levels_.size() || !res.is_identity()) throw ArgumentError("chain: element is not a member");
    std::reverse(vals.begin(), vals.end());
    vals.erase(std::remove(vals.begin(), vals.end(), Slp::kIdentity), vals.end());
    return vals;
  }

  /// Word over the input generators (signed letters) evaluating to p.
  Word factor_word(const Permutation& p, std::size_t limit = Slp::kDefaultFlatLimit) const {
    Word w;
    for (int v : factor_values(p)) {
      Word part = slp_.flatten(v, limit);
      w.insert(w.end(), part.begin(), part.end());
    }
    return free_reduce(w);
  }

  /// Uniformly random element, as the transversal values of its factorization.
  template <class Rng>
  std::vector<int> random_values(Rng& rng, Permutation* out = nullptr) const {
    std::vector<int> vals;
    Permutation acc(degree_);
    for (auto it = levels_.rbegin(); it != levels_.rend(); ++it) {
      std::uniform_int_distribution<std::size_t> pick(0, it->orbit.size() - 1);
      std::size_t s = pick(rng);
      if (out) acc = acc * it->reps[s];
      if (it->rep_values[s] != Slp::kIdentity) vals.push_back(it->rep_values[s]);
    }
    if (out) *out = std::move(acc);
    return vals;
  }

  template <class Rng>
  Permutation random_element(Rng& rng) const {
    Permutation p;
    random_values(rng, &p);
    return p;
  }

  /// All elements, in mixed-radix order over the transversals (identity first).
  std::vector<Permutation> elements(std::uint64_t limit = 10'000'000) const {
    if (order() > limit) throw LimitError("chain: too many elements to enumerate");
    std::vector<Permutation> out{Permutation(degree_)};
    for (auto it = levels_.rbegin(); it != levels_.rend(); ++it) {
      std::vector<Permutation> next;
      next.reserve(out.size() * it->reps.size());
      for (const auto& r : it->reps)
        for (const auto& e : out) next.push_back(e * r);
      out = std::move(next);
    }
    return out;
  }

  friend StabilizerChain schreier_sims(std::span<const Permutation> gens, std::size_t degree);

 private:
  void check_degree(const Permutation& p) const {
    if (p.degree() != degree_) throw ArgumentError("chain: degree mismatch");
  }

  void rebuild_orbit(std::size_t i) {
    Level& lv = levels_[i];
    lv.orbit.assign(1, lv.base);
    lv.slot.assign(degree_, -1);
    lv.slot[lv.base] = 0;
    lv.reps.assign(1, Permutation(degree_));
    lv.rep_values.assign(1, Slp::kIdentity);
    for (std::size_t k = 0; k < lv.orbit.size(); ++k) {
      Point p = lv.orbit[k];
      for (int g : lv.gens) {
        Point q = strong_[g][p];
        if (lv.slot[q] >= 0) continue;
        lv.slot[q] = static_cast<int>(lv.orbit.size());
        lv.orbit.push_back(q);
        lv.reps.push_back(lv.reps[k] * strong_[g]);
        lv.rep_values.push_back(slp_.mul(lv.rep_values[k], strong_values_[g]));
      }
    }
  }

  void add_level(const Permutation& moved_by) {
    Point b = 0;
    while (moved_by[b] == b) ++b;
    Level lv;
    lv.base = b;
    levels_.push_back(std::move(lv));
  }

  std::size_t degree_ = 0;
  std::vector<Permutation> inputs_;
  std::vector<Permutation> strong_;
  std::vector<int> strong_values_;
  std::vector<Level> levels_;
  Slp slp_;
};

/// Deterministic Schreier-Sims. `degree` may be 0 when gens is non-empty.
inline StabilizerChain schreier_sims(std::span<const Permutation> gens, std::size_t degree = 0) {
  using Point = Permutation::Point;
  StabilizerChain c;
  if (degree == 0) {
    if (gens.empty()) throw ArgumentError("schreier_sims: degree required for empty generator list");
    degree = gens.front().degree();
  }
  for (const auto& g : gens)
    if (g.degree() != degree) throw ArgumentError("schreier_sims: degree mismatch");
  c.degree_ = degree;
  c.inputs_.assign(gens.begin(), gens.end());
  c.slp_ = Slp(static_cast<int>(gens.size()));

  for (std::size_t i = 0; i < gens.size(); ++i) {
    if (gens[i].is_identity()) continue;
    c.strong_.push_back(gens[i]);
    c.strong_values_.push_back(static_cast<int>(i));
  }
  if (c.strong_.empty()) return c;

  // Every strong generator must move some base point.
  for (std::size_t s = 0; s < c.strong_.size(); ++s) {
    bool fixes_all = true;
    for (const auto& lv : c.levels_)
      if (c.strong_[s][lv.base] != lv.base) fixes_all = false;
    if (fixes_all) c.add_level(c.strong_[s]);
  }
  auto assign_gens = [&](std::size_t i) {
    auto& lv = c.levels_[i];
    lv.gens.clear();
    for (std::size_t s = 0; s < c.strong_.size(); ++s) {
      bool fixes = true;
      for (std::size_t j = 0; j < i; ++j)
        if (c.strong_[s][c.levels_[j].base] != c.levels_[j].base) fixes = false;
      if (fixes) lv.gens.push_back(static_cast<int>(s));
    }
  };
  for (std::size_t i = 0; i < c.levels_.size(); ++i) {
    assign_gens(i);
    c.rebuild_orbit(i);
  }

  std::ptrdiff_t i = static_cast<std::ptrdiff_t>(c.levels_.size()) - 1;
  while (i >= 0) {
    bool stable = true;
    auto& lv = c.levels_[i];
    for (std::size_t k = 0; stable && k < lv.orbit.size(); ++k) {
      for (std::size_t gi = 0; stable && gi < lv.gens.size(); ++gi) {
        int g = lv.gens[gi];
        Point q = c.strong_[g][lv.orbit[k]];
        int sq = lv.slot[q];
        Permutation h = lv.reps[k] * c.strong_[g] * lv.reps[sq].inverse();
        if (h.is_identity()) continue;
        std::vector<int> used;
        auto [res, j] = c.sift(h, i + 1, &used);
        if (j == c.levels_.size() && res.is_identity()) continue;
        // residue becomes a new strong generator
        int hv = c.slp_.mul(c.slp_.mul(lv.rep_values[k], c.strong_values_[g]), c.slp_.inv(lv.rep_values[sq]));
        for (int u : used) hv = c.slp_.mul(hv, c.slp_.inv(u));
        c.strong_.push_back(res);
        c.strong_values_.push_back(hv);
        if (j == c.levels_.size()) c.add_level(res);
        int sidx = static_cast<int>(c.strong_.size()) - 1;
        for (std::size_t l = i + 1; l <= j; ++l) {
          c.levels_[l].gens.push_back(sidx);
          c.rebuild_orbit(l);
        }
        i = static_cast<std::ptrdiff_t>(j);
        stable = false;
      }
    }
    if (stable) --i;
  }
  return c;
}

inline StabilizerChain schreier_sims(const std::vector<Permutation>& gens, std::size_t degree = 0) {
  return schreier_sims(std::span<const Permutation>(gens), degree);
}

/// Finite presentation on positive words; relators evaluate to identity.
struct Presentation {
  int generator_count = 0;
  std::vector<std::vector<int>> relators;  // 0-based generator indices
};

/// Breadth-first Cayley graph of the group generated by the input
/// generators of a chain, with its spanning tree.
struct CayleyGraph {
  std::vector<Permutation> elements;       // elements[0] is the identity
  std::vector<int> parent;                 // tree parent, -1 at the root
  std::vector<int> parent_gen;             // generator labelling the tree edge
  std::vector<std::vector<int>> edges;     // edges[e][g] = index of e*g

  bool is_tree_edge(int e, int g) const {
    int f = edges[e][g];
    return f != 0 && parent[f] == e && parent_gen[f] == g;
  }

  Word tree_word(int e) const {
    Word w;
    for (; parent[e] >= 0; e = parent[e]) w.push_back(letter(parent_gen[e]));
    std::reverse(w.begin(), w.end());
    return w;
  }
};

inline CayleyGraph cayley_graph(const StabilizerChain& chain, std::uint64_t limit = 100'000) {
  if (chain.order() > limit) throw LimitError("presentation: group order exceeds presentation limit");
  const auto& gens = chain.input_generators();
  CayleyGraph cg;
  std::unordered_map<Permutation, int, PermutationHash> index;
  cg.elements.push_back(Permutation(chain.degree()));
  cg.parent.push_back(-1);
  cg.parent_gen.push_back(-1);
  index.emplace(cg.elements[0], 0);
  for (std::size_t e = 0; e < cg.elements.size(); ++e) {
    std::vector<int> row(gens.size());
    for (std::size_t g = 0; g < gens.size(); ++g) {
      Permutation f = cg.elements[e] * gens[g];
      auto [it, inserted] = index.emplace(f, static_cast<int>(cg.elements.size()));
      if (inserted) {
        cg.elements.push_back(std::move(f));
        cg.parent.push_back(static_cast<int>(e));
        cg.parent_gen.push_back(static_cast<int>(g));
      }
      row[g] = it->second;
    }
    cg.edges.push_back(std::move(row));
  }
  return cg;
}

/// Spanning-tree relators of the Cayley graph, made positive by writing
/// inverses as powers; the order relators x^o(x) are included.
inline Presentation presentation_from(const StabilizerChain& chain, std::uint64_t limit = 100'000) {
  CayleyGraph cg = cayley_graph(chain, limit);
  const auto& gens = chain.input_generators();
  Presentation pres;
  pres.generator_count = static_cast<int>(gens.size());
  std::vector<std::uint64_t> orders;
  for (const auto& g : gens) orders.push_back(g.order());
  auto positive = [&](const Word& w) {
    std::vector<int> out;
    for (int l : w) {
      int g = letter_generator(l);
      std::uint64_t reps = l > 0 ? 1 : orders[g] - 1;
      out.insert(out.end(), reps, g);
    }
    return out;
  };
  for (std::size_t g = 0; g < gens.size(); ++g) pres.relators.push_back(std::vector<int>(orders[g], static_cast<int>(g)));
  std::vector<Word> tree(cg.elements.size());
  for (std::size_t e = 1; e < cg.elements.size(); ++e) tree[e] = tree[cg.parent[e]], tree[e].push_back(letter(cg.parent_gen[e]));
  for (std::size_t e = 0; e < cg.elements.size(); ++e) {
    for (std::size_t g = 0; g < gens.size(); ++g) {
      if (cg.is_tree_edge(static_cast<int>(e), static_cast<int>(g))) continue;
      Word w = tree[e];
      w.push_back(letter(static_cast<int>(g)));
      Word back = inverse_word(tree[cg.edges[e][g]]);
      w.insert(w.end(), back.begin(), back.end());
      w = free_reduce(w);
      if (w.empty()) continue;
      pres.relators.push_back(positive(w));
    }
  }
  return pres;
}

/// Right transversal of U in S at the permutation level; representatives
/// are the first element of each coset in the enumeration order of S.
class RightTransversal {
 public:
  RightTransversal(const StabilizerChain& s, const StabilizerChain& u) : u_(u) {
    for (const auto& g : u.strong_generators())
      if (!s.contains(g)) throw ArgumentError("transversal: U is not a subgroup of S");
    std::uint64_t index = s.order() / u.order();
    std::vector<Permutation> u_elems = u.elements();
    std::unordered_set<Permutation, PermutationHash> seen;
    for (const auto& x : s.elements()) {
      if (seen.count(x)) continue;
      reps_.push_back(x);
      for (const auto& y : u_elems) seen.insert(y * x);
      if (reps_.size() == index) break;
    }
  }

  std::size_t size() const { return reps_.size(); }
  const std::vector<Permutation>& representatives() const { return reps_; }

  /// The j with U*p = U*reps[j].
  std::size_t coset_index(const Permutation& p) const {
    for (std::size_t j = 0; j < reps_.size(); ++j)
      if (u_.contains(p * reps_[j].inverse())) return j;
    throw ArgumentError("transversal: element is not in S");
  }

 private:
  StabilizerChain u_;
  std::vector<Permutation> reps_;
};

/// Closure of a permutation group by breadth-first multiplication.
inline std::vector<Permutation> brute_force_closure(std::span<const Permutation> gens, std::size_t degree,
                                                    std::size_t limit = 1'000'000) {
  std::vector<Permutation> elems{Permutation(degree)};
  std::unordered_set<Permutation, PermutationHash> seen{elems[0]};
  for (std::size_t i = 0; i < elems.size(); ++i) {
    for (const auto& g : gens) {
      Permutation p = elems[i] * g;
      if (seen.insert(p).second) {
        elems.push_back(std::move(p));
        if (elems.size() > limit) throw LimitError("closure: limit exceeded");
      }
    }
  }
  return elems;
}

}  // namespace hybrid
