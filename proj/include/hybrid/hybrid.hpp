#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "hybrid/error.hpp"
#include "hybrid/pc.hpp"
#include "hybrid/perm.hpp"
#include "hybrid/rws.hpp"

namespace hybrid {

/// Normal form w(X)*b of an element of a hybrid group.
struct HybridElement {
  std::uint64_t group = 0;
  Letters xword;
  PcElement bpart;

  bool is_identity() const { return xword.empty() && bpart.is_identity(); }
  friend bool operator==(const HybridElement&, const HybridElement&) = default;
};

struct HybridElementHash {
  std::size_t operator()(const HybridElement& g) const noexcept {
    std::size_t h = PcElementHash{}(g.bpart);
    for (int a : g.xword) h = (h ^ static_cast<std::size_t>(a + 17)) * 1099511628211ull;
    return h;
  }
};

/// One item of a mixed expression: an X-letter (0-based) or a B-element.
using ExprItem = std::variant<int, PcElement>;

inline std::uint64_t extension_order(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw LimitError("group order exceeds 64 bits");
  return r;
}

struct CacheConfig {
  bool inverses = false;
  std::size_t product_depth = 0;  // 0 or 1 disables; at most 4
  bool segments = false;
  bool bottom_matrices = false;
  std::size_t max_entries = std::size_t{1} << 22;
};

struct CacheReport {
  std::size_t inverse_entries = 0;
  std::size_t product_entries = 0;
  std::size_t segment_entries = 0;
  std::size_t bottom_layers = 0;
  bool budget_exceeded = false;
};

/// Extension of a permutation-represented factor group A = <perm_images>
/// by a polycyclic normal subgroup B. Factor rules l -> r carry tails m
/// (l = r*m in G) and each generator x acts on B by d*x = x*alpha_x(d).
class HybridGroup {
 public:
  HybridGroup() = default;

  HybridGroup(std::vector<Permutation> perm_images, RewritingSystem rules, PcPresentationPtr b_pres,
              std::vector<PcElement> tails, std::vector<PcAutomorphism> action,
              std::vector<std::size_t> segment_hints = {}, std::size_t degree = 0)
      : id_(next_id()), images_(std::move(perm_images)), rules_(std::move(rules)), b_(std::move(b_pres)),
        tails_(std::move(tails)), action_(std::move(action)), hints_(std::move(segment_hints)) {
    if (!b_) throw ArgumentError("hybrid: missing pc presentation");
    const std::size_t k = images_.size();
    if (static_cast<std::size_t>(rules_.alphabet_size()) != k)
      throw ArgumentError("hybrid: rules use " + std::to_string(rules_.alphabet_size()) + " letters but there are " +
                          std::to_string(k) + " generators");
    if (tails_.size() != rules_.rules().size()) throw ArgumentError("hybrid: one tail per rule is required");
    if (action_.size() != k) throw ArgumentError("hybrid: one automorphism per generator is required");
    degree_ = degree ? degree : (k ? images_[0].degree() : 1);
    for (const auto& p : images_)
      if (p.degree() != degree_) throw ArgumentError("hybrid: permutation degree mismatch");
    for (const auto& t : tails_) b_->check(t);
    for (const auto& a : action_)
      if (a.presentation().size() != b_->size()) throw ArgumentError("hybrid: automorphism over a different presentation");
    chain_ = schreier_sims(images_, degree_);
    identity_ = HybridElement{id_, {}, b_->identity()};
  }

  std::uint64_t id() const { return id_; }
  std::size_t rank() const { return images_.size(); }
  std::size_t degree() const { return degree_; }
  const std::vector<Permutation>& perm_images() const { return images_; }
  const StabilizerChain& factor_chain() const { return chain_; }
  const RewritingSystem& factor_rules() const { return rules_; }
  const PcPresentation& b_pres() const { return *b_; }
  const PcPresentationPtr& b_pres_ptr() const { return b_; }
  const std::vector<PcElement>& tails() const { return tails_; }
  const std::vector<PcAutomorphism>& action() const { return action_; }
  const std::vector<std::size_t>& segment_hints() const { return hints_; }

  std::uint64_t factor_order() const { return chain_.order(); }
  std::uint64_t group_order() const { return extension_order(chain_.order(), b_->order()); }

  const HybridElement& identity() const { return identity_; }
  HybridElement generator(std::size_t i) const {
    if (i >= rank()) throw ArgumentError("hybrid: generator index out of range");
    return collect(std::vector<ExprItem>{static_cast<int>(i)});
  }
  HybridElement b_element(const PcElement& b) const {
    b_->check(b);
    return HybridElement{id_, {}, b};
  }

  /// Normal form of w(X)*b for an arbitrary positive word.
  HybridElement make(const Letters& w, const PcElement& b) const {
    b_->check(b);
    Expr e;
    e.xs = w;
    e.ds.assign(w.size() + 1, PcElement{});
    e.ds.back() = b;
    check_letters(e.xs);
    return finish(collect_leftmost(std::move(e)));
  }

  /// Throws unless g is a valid normal form of this group.
  void check(const HybridElement& g) const {
    if (g.group != id_) throw ArgumentError("hybrid: element belongs to a different group");
    check_letters(g.xword);
    b_->check(g.bpart);
    if (!rules_.is_irreducible(g.xword)) throw ArgumentError("hybrid: x-word is not in normal form");
  }

  HybridElement collect(const std::vector<ExprItem>& expr) const { return finish(collect_leftmost(to_expr(expr))); }

  /// Collection applying rules at randomly chosen matches instead of the
  /// leftmost one; gives the same normal form.
  template <class Rng>
  HybridElement collect_randomized(const std::vector<ExprItem>& expr, Rng& rng) const {
    Expr e = to_expr(expr);
    for (;;) {
      std::vector<std::pair<std::size_t, int>> matches;
      for (std::size_t p = 0; p < e.xs.size(); ++p)
        if (auto r = rules_.match_at(e.xs, p)) matches.emplace_back(p, *r);
      if (matches.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, matches.size() - 1);
      auto [p, r] = matches[pick(rng)];
      apply_rule(e, p, r);
    }
    return finish(std::move(e));
  }

  HybridElement mul(const HybridElement& g, const HybridElement& h) const {
    same_group(g);
    same_group(h);
    if (h.xword.empty()) return HybridElement{id_, g.xword, b_->mul(g.bpart, h.bpart)};
    Expr e;
    e.xs = g.xword;
    e.xs.insert(e.xs.end(), h.xword.begin(), h.xword.end());
    e.ds.assign(e.xs.size() + 1, PcElement{});
    e.ds[g.xword.size()] = g.bpart;
    e.ds.back() = h.bpart;
    return finish(collect_leftmost(std::move(e)));
  }

  HybridElement inv(const HybridElement& g) const {
    same_group(g);
    if (g.xword.empty()) return HybridElement{id_, {}, b_->inv(g.bpart)};
    Expr e;
    e.ds.push_back(b_->inv(g.bpart));
    for (auto it = g.xword.rbegin(); it != g.xword.rend(); ++it) {
      HybridElement gi = generator_inverse(static_cast<std::size_t>(*it));
      for (int a : gi.xword) {
        e.xs.push_back(a);
        e.ds.emplace_back();
      }
      merge(e.ds.back(), gi.bpart);
    }
    return finish(collect_leftmost(std::move(e)));
  }

  HybridElement pow(const HybridElement& g, long long k) const {
    HybridElement base = k < 0 ? inv(g) : g;
    if (k < 0) k = -k;
    HybridElement result = identity_;
    while (k > 0) {
      if (k & 1) result = mul(result, base);
      k >>= 1;
      if (k) base = mul(base, base);
    }
    return result;
  }

  /// x_i^{-1} = x_i^{o-1} * c^{-1} where x_i^o = c lies in B.
  HybridElement generator_inverse(std::size_t i) const {
    if (i < inverse_cache_.size()) return inverse_cache_[i];
    return compute_generator_inverse(i);
  }

  Permutation nu(const HybridElement& g) const {
    same_group(g);
    Permutation p(degree_);
    for (int a : g.xword) p = p * images_[a];
    return p;
  }

  std::uint64_t order(const HybridElement& g) const {
    std::uint64_t o = nu(g).order();
    HybridElement h = pow(g, static_cast<long long>(o));
    if (!h.xword.empty()) throw ValidationError("hybrid: power of the permutation order has a nonempty x-word");
    return o * b_->element_order(h.bpart);
  }

  /// alpha_w(b): the element with b*w = w*alpha_w(b).
  PcElement act(const Letters& w, const PcElement& b) const {
    PcElement e = b;
    for (int a : w) e = action_[a].apply(e);
    return e;
  }

  template <class Rng>
  HybridElement random_element(Rng& rng) const {
    const auto& pre = preimages();
    HybridElement g = identity_;
    for (int v : chain_.random_values(rng)) g = mul(g, pre[v]);
    PcElement b(b_->size());
    for (std::size_t i = 0; i < b.size(); ++i) {
      std::uniform_int_distribution<Exponent> d(0, b_->relative_order(i) - 1);
      b.exps[i] = d(rng);
    }
    return mul(g, b_element(b));
  }

  /// Pre-image in G of a value of the factor chain's program.
  HybridElement chain_preimage(int value) const {
    if (value == Slp::kIdentity) return identity_;
    return preimages()[value];
  }

  /// Pre-image of a member of A.
  HybridElement preimage(const Permutation& p) const {
    HybridElement g = identity_;
    for (int v : chain_.factor_values(p)) g = mul(g, chain_preimage(v));
    return g;
  }

  CacheReport build_caches(const CacheConfig& cfg) {
    clear_caches();
    CacheReport rep;
    std::size_t budget = cfg.max_entries;
    auto spend = [&](std::size_t n) {
      if (n > budget) {
        rep.budget_exceeded = true;
        return false;
      }
      budget -= n;
      return true;
    };
    if (cfg.inverses) {
      for (std::size_t i = 0; i < rank() && spend(1); ++i) inverse_cache_.push_back(compute_generator_inverse(i));
      rep.inverse_entries = inverse_cache_.size();
    }
    auto cache_aut = [&](PcAutomorphism& a) {
      if (cfg.bottom_matrices) {
        for (std::size_t lo : b_->layer_starts()) {
          if (a.build_bottom_matrix(lo)) {
            ++rep.bottom_layers;
            break;
          }
        }
      }
      if (cfg.segments && !rep.budget_exceeded) {
        PcAutomorphism trial = a;
        std::size_t n = trial.build_segment_cache(hints_);
        if (spend(n)) {
          a = std::move(trial);
          rep.segment_entries += n;
        }
      }
    };
    for (auto& a : action_) cache_aut(a);
    std::size_t depth = std::min<std::size_t>(cfg.product_depth, 4);
    if (depth >= 2) {
      std::vector<Letters> layer;
      for (std::size_t i = 0; i < rank(); ++i) layer.push_back({static_cast<int>(i)});
      for (std::size_t len = 2; len <= depth && !rep.budget_exceeded; ++len) {
        std::vector<Letters> next;
        for (const auto& w : layer) {
          for (std::size_t i = 0; i < rank(); ++i) {
            if (!spend(b_->size())) break;
            Letters v = w;
            v.push_back(static_cast<int>(i));
            PcAutomorphism comp = composite(w).compose(action_[i]);
            comp.clear_caches();
            cache_aut(comp);
            products_.emplace(word_key(v), std::move(comp));
            next.push_back(std::move(v));
          }
        }
        layer = std::move(next);
      }
      product_depth_ = depth;
      rep.product_entries = products_.size();
    }
    return rep;
  }

  void clear_caches() {
    inverse_cache_.clear();
    products_.clear();
    product_depth_ = 0;
    for (auto& a : action_) a.clear_caches();
  }

  /// Composite automorphism cached for a word of length 2..s, if any.
  const PcAutomorphism* cached_product(const Letters& w) const {
    if (w.size() < 2 || w.size() > product_depth_) return nullptr;
    auto it = products_.find(word_key(w));
    return it == products_.end() ? nullptr : &it->second;
  }

 private:
  // d[0] x[0] d[1] x[1] ... x[n-1] d[n]; an empty PcElement is the identity.
  struct Expr {
    Letters xs;
    std::vector<PcElement> ds;
  };

  static std::uint64_t next_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
  }

  void same_group(const HybridElement& g) const {
    if (g.group != id_) throw ArgumentError("hybrid: element belongs to a different group");
  }

  void check_letters(const Letters& w) const {
    for (int a : w)
      if (a < 0 || static_cast<std::size_t>(a) >= rank()) throw ArgumentError("hybrid: letter out of range");
  }

  static bool trivial(const PcElement& d) { return d.exps.empty() || d.is_identity(); }

  void merge(PcElement& into, const PcElement& d) const {
    if (trivial(d)) return;
    if (into.exps.empty())
      into = d;
    else
      b_->mul_into(into, d);
  }

  Expr to_expr(const std::vector<ExprItem>& expr) const {
    Expr e;
    e.ds.emplace_back();
    for (const auto& item : expr) {
      if (const int* a = std::get_if<int>(&item)) {
        if (*a < 0 || static_cast<std::size_t>(*a) >= rank()) throw ArgumentError("hybrid: letter out of range");
        e.xs.push_back(*a);
        e.ds.emplace_back();
      } else {
        const PcElement& d = std::get<PcElement>(item);
        b_->check(d);
        merge(e.ds.back(), d);
      }
    }
    return e;
  }

  // Rewrites l -> r*m at position p of the x-projection.
  void apply_rule(Expr& e, std::size_t p, int r) const {
    const Rule& rule = rules_.rules()[r];
    const std::size_t L = rule.left.size();
    // Move the B-elements inside the match to its right end.
    PcElement acc;
    for (std::size_t t = p + 1; t < p + L; ++t) {
      merge(acc, e.ds[t]);
      if (!trivial(acc)) acc = action_[e.xs[t]].apply(acc);
    }
    PcElement tail;
    merge(tail, tails_[r]);
    merge(tail, acc);
    merge(tail, e.ds[p + L]);
    const std::size_t R = rule.right.size();
    auto xp = e.xs.begin() + static_cast<std::ptrdiff_t>(p);
    if (R <= L) {
      std::copy(rule.right.begin(), rule.right.end(), xp);
      e.xs.erase(xp + static_cast<std::ptrdiff_t>(R), xp + static_cast<std::ptrdiff_t>(L));
    } else {
      std::copy(rule.right.begin(), rule.right.begin() + static_cast<std::ptrdiff_t>(L), xp);
      e.xs.insert(xp + static_cast<std::ptrdiff_t>(L), rule.right.begin() + static_cast<std::ptrdiff_t>(L),
                  rule.right.end());
    }
    // ds[p+1..p+L] become ds[p+1..p+R]: identities and then the tail.
    auto dp = e.ds.begin() + static_cast<std::ptrdiff_t>(p + 1);
    if (R == 0) {
      e.ds.erase(dp, dp + static_cast<std::ptrdiff_t>(L));
      merge(e.ds[p], tail);
      return;
    }
    if (R <= L)
      e.ds.erase(dp, dp + static_cast<std::ptrdiff_t>(L - R));
    else
      e.ds.insert(dp, R - L, PcElement{});
    for (std::size_t t = p + 1; t < p + R; ++t) e.ds[t].exps.clear();
    e.ds[p + R] = std::move(tail);
  }

  Expr collect_leftmost(Expr e) const {
    const std::size_t back = rules_.max_left() ? rules_.max_left() - 1 : 0;
    std::size_t from = 0;
    while (auto m = rules_.leftmost_match(e.xs, from)) {
      apply_rule(e, m->first, m->second);
      from = m->first > back ? m->first - back : 0;
    }
    return e;
  }

  // Pushes every B-element to the right end.
  HybridElement finish(Expr e) const {
    PcElement acc;
    const std::size_t n = e.xs.size();
    for (std::size_t t = 0; t < n;) {
      merge(acc, e.ds[t]);
      if (trivial(acc)) {
        ++t;
        continue;
      }
      std::size_t step = 1;
      const PcAutomorphism* aut = &action_[e.xs[t]];
      for (std::size_t len = std::min(product_depth_, n - t); len >= 2; --len) {
        bool clear = true;
        for (std::size_t u = t + 1; u < t + len && clear; ++u) clear = trivial(e.ds[u]);
        if (!clear) continue;
        if (const PcAutomorphism* c = cached_product(Letters(e.xs.begin() + static_cast<std::ptrdiff_t>(t),
                                                            e.xs.begin() + static_cast<std::ptrdiff_t>(t + len)))) {
          aut = c;
          step = len;
          break;
        }
      }
      acc = aut->apply(acc);
      t += step;
    }
    merge(acc, e.ds[n]);
    if (acc.exps.empty()) acc = b_->identity();
    return HybridElement{id_, std::move(e.xs), std::move(acc)};
  }

  HybridElement compute_generator_inverse(std::size_t i) const {
    if (i >= rank()) throw ArgumentError("hybrid: generator index out of range");
    std::uint64_t o = images_[i].order();
    HybridElement c = make(Letters(o, static_cast<int>(i)), b_->identity());
    if (!c.xword.empty()) throw ValidationError("hybrid: generator power does not reduce into B");
    return make(Letters(o - 1, static_cast<int>(i)), b_->inv(c.bpart));
  }

  PcAutomorphism composite(const Letters& w) const {
    if (w.size() == 1) {
      PcAutomorphism a = action_[w[0]];
      return a;
    }
    return products_.at(word_key(w));
  }

  std::uint64_t word_key(const Letters& w) const {
    std::uint64_t key = 0;
    for (int a : w) key = key * (rank() + 1) + static_cast<std::uint64_t>(a + 1);
    return key;
  }

  // Filled once on first use; safe for concurrent readers.
  const std::vector<HybridElement>& preimages() const {
    std::call_once(lazy_->once, [&] {
      std::vector<HybridElement> gens;
      for (std::size_t i = 0; i < rank(); ++i) gens.push_back(generator(i));
      lazy_->preimages = chain_.slp().evaluate<HybridElement>(
          gens, [&](const HybridElement& a, const HybridElement& b) { return mul(a, b); },
          [&](const HybridElement& a) { return inv(a); });
    });
    return lazy_->preimages;
  }

  struct Lazy {
    std::once_flag once;
    std::vector<HybridElement> preimages;
  };

  std::uint64_t id_ = 0;
  std::vector<Permutation> images_;
  std::size_t degree_ = 1;
  StabilizerChain chain_;
  RewritingSystem rules_;
  PcPresentationPtr b_;
  std::vector<PcElement> tails_;
  std::vector<PcAutomorphism> action_;
  std::vector<std::size_t> hints_;
  HybridElement identity_;

  std::vector<HybridElement> inverse_cache_;
  std::unordered_map<std::uint64_t, PcAutomorphism> products_;
  std::size_t product_depth_ = 0;
  std::shared_ptr<Lazy> lazy_ = std::make_shared<Lazy>();
};

/// "x1*x2 | y3^1 y5^2"; an empty x-word prints as "1" and a trivial
/// B-part as "(empty)".
inline std::string element_to_string(const HybridElement& g) {
  std::string s;
  for (std::size_t i = 0; i < g.xword.size(); ++i) {
    if (i) s += '*';
    s += 'x' + std::to_string(g.xword[i] + 1);
  }
  if (s.empty()) s = "1";
  s += " | ";
  s += g.bpart.is_identity() ? std::string("(empty)") : pc_to_string(g.bpart);
  return s;
}

}  // namespace hybrid
