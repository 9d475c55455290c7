#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hybrid/error.hpp"
#include "hybrid/words.hpp"

namespace hybrid {

using Exponent = std::uint32_t;

/// Element of a finite polycyclic group as its normal-form exponent vector.
struct PcElement {
  std::vector<Exponent> exps;

  PcElement() = default;
  explicit PcElement(std::size_t n) : exps(n, 0) {}
  explicit PcElement(std::vector<Exponent> e) : exps(std::move(e)) {}
  PcElement(std::initializer_list<Exponent> e) : exps(e) {}

  std::size_t size() const { return exps.size(); }
  Exponent operator[](std::size_t i) const { return exps[i]; }

  bool is_identity() const {
    return std::all_of(exps.begin(), exps.end(), [](Exponent e) { return e == 0; });
  }

  /// Index of the first nonzero exponent; size() for the identity.
  std::size_t depth() const {
    std::size_t d = 0;
    while (d < exps.size() && exps[d] == 0) ++d;
    return d;
  }

  friend bool operator==(const PcElement&, const PcElement&) = default;
  friend auto operator<=>(const PcElement&, const PcElement&) = default;
};

struct PcElementHash {
  std::size_t operator()(const PcElement& e) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (auto x : e.exps) h = (h ^ x) * 1099511628211ull;
    return h;
  }
};

/// "y1^1 y3^2" style text; the identity prints as "1".
inline std::string pc_to_string(const PcElement& e, char symbol = 'y') {
  std::string s;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!e[i]) continue;
    if (!s.empty()) s += ' ';
    s += symbol + std::to_string(i + 1) + "^" + std::to_string(e[i]);
  }
  return s.empty() ? "1" : s;
}

/// Finite polycyclic presentation on generators y_0..y_{n-1}: powers
/// y_i^{o_i} and conjugates y_j^{y_i} (i < j) given as normal forms in
/// later generators. Multiplication is collection from the left.
class PcPresentation {
 public:
  PcPresentation() = default;

  /// Empty `powers` / `conjugates` denote trivial tails (direct product of cyclic groups).
  explicit PcPresentation(std::vector<Exponent> orders, std::vector<PcElement> powers = {},
                          std::vector<std::vector<PcElement>> conjugates = {},
                          std::vector<std::size_t> layer_starts = {})
      : orders_(std::move(orders)), powers_(std::move(powers)), conj_(std::move(conjugates)),
        layer_starts_(std::move(layer_starts)) {
    const std::size_t n = orders_.size();
    for (Exponent o : orders_)
      if (o < 2) throw ArgumentError("pc: relative orders must be at least 2");
    if (powers_.empty()) powers_.assign(n, PcElement(n));
    if (powers_.size() != n) throw ArgumentError("pc: power tail count mismatch");
    if (conj_.empty()) {
      conj_.resize(n);
      for (std::size_t j = 0; j < n; ++j) conj_[j].assign(j, unit(n, j));
    }
    if (conj_.size() != n) throw ArgumentError("pc: conjugate tail count mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      check_shape(powers_[i], i + 1, "power tail");
      if (conj_[i].size() != i) throw ArgumentError("pc: conjugate tail row size mismatch");
      for (std::size_t k = 0; k < i; ++k) check_shape(conj_[i][k], k + 1, "conjugate tail");
    }
    if (layer_starts_.empty()) layer_starts_.push_back(0);
    commutes_after_.assign(n, true);
    power_trivial_.assign(n, true);
    for (std::size_t g = 0; g < n; ++g) {
      power_trivial_[g] = powers_[g].is_identity();
      for (std::size_t k = g + 1; k < n; ++k)
        if (conj_[k][g] != unit(n, k)) commutes_after_[g] = false;
    }
    abelian_ = std::all_of(commutes_after_.begin(), commutes_after_.end(), [](bool b) { return b; });
    gen_inverses_.reserve(n);
    for (std::size_t g = 0; g < n; ++g) gen_inverses_.push_back(inv(unit(n, g)));
  }

  std::size_t size() const { return orders_.size(); }
  Exponent relative_order(std::size_t i) const { return orders_[i]; }
  const std::vector<Exponent>& relative_orders() const { return orders_; }
  const PcElement& power(std::size_t i) const { return powers_[i]; }
  /// y_j^{y_i} for i < j.
  const PcElement& conjugate(std::size_t j, std::size_t i) const { return conj_[j][i]; }
  const std::vector<std::size_t>& layer_starts() const { return layer_starts_; }

  std::uint64_t order() const {
    std::uint64_t o = 1;
    for (Exponent r : orders_)
      if (__builtin_mul_overflow(o, static_cast<std::uint64_t>(r), &o)) throw LimitError("pc: order exceeds 64 bits");
    return o;
  }

  PcElement identity() const { return PcElement(size()); }
  PcElement generator(std::size_t i) const { return unit(size(), i); }

  void check(const PcElement& a) const {
    if (a.size() != size()) throw ArgumentError("pc: element belongs to a different presentation");
    for (std::size_t i = 0; i < size(); ++i)
      if (a[i] >= orders_[i]) throw ArgumentError("pc: exponent out of range");
  }

  PcElement mul(const PcElement& a, const PcElement& b) const {
    if (a.size() != size() || b.size() != size()) throw ArgumentError("pc: presentation mismatch");
    PcElement r = a;
    mul_into(r, b);
    return r;
  }

  /// r <- r * b
  void mul_into(PcElement& r, const PcElement& b) const {
    if (abelian_) {
      for (std::size_t g = 0; g < size(); ++g) {
        if (!b[g]) continue;
        Exponent s = r.exps[g] + b[g];
        if (s >= orders_[g]) {
          s -= orders_[g];
          if (!power_trivial_[g]) {
            r.exps[g] = s;
            mul_into(r, powers_[g]);
            continue;
          }
        }
        r.exps[g] = s;
      }
      return;
    }
    auto& stack = scratch();
    for (std::size_t g = 0; g < size(); ++g) {
      if (!b[g]) continue;
      stack.push_back({static_cast<std::uint32_t>(g), b[g]});
      run(r.exps, stack);
    }
  }

  /// r <- r * y_g^e with 0 <= e < o_g
  void mul_generator(PcElement& r, std::size_t g, Exponent e) const {
    if (!e) return;
    auto& stack = scratch();
    stack.push_back({static_cast<std::uint32_t>(g), e});
    run(r.exps, stack);
  }

  PcElement inv(const PcElement& a) const {
    PcElement cur = a, result(size());
    for (std::size_t d = cur.depth(); d < size(); d = cur.depth()) {
      Exponent f = orders_[d] - cur[d];
      mul_generator(cur, d, f);
      mul_generator(result, d, f);
    }
    return result;
  }

  PcElement pow(const PcElement& a, long long k) const {
    PcElement base = k < 0 ? inv(a) : a;
    if (k < 0) k = -k;
    PcElement result(size());
    while (k > 0) {
      if (k & 1) mul_into(result, base);
      k >>= 1;
      if (k) base = mul(base, base);
    }
    return result;
  }

  /// b^-1 a b
  PcElement conjugate_by(const PcElement& a, const PcElement& b) const { return mul(mul(inv(b), a), b); }

  /// Normal form of a word over y_i^{+-1}.
  PcElement collect(const Word& w) const {
    PcElement r(size());
    for (int l : w) {
      std::size_t g = static_cast<std::size_t>(letter_generator(l));
      if (g >= size()) throw ArgumentError("pc: letter out of range");
      if (l > 0)
        mul_generator(r, g, 1);
      else
        mul_into(r, gen_inverses_[g]);
    }
    return r;
  }

  /// Element order, descending the series: each power by the leading
  /// relative order strictly increases depth.
  std::uint64_t element_order(const PcElement& a) const {
    std::uint64_t n = 1;
    PcElement cur = a;
    for (std::size_t d = cur.depth(); d < size(); d = cur.depth()) {
      Exponent step = orders_[d] / std::gcd(orders_[d], cur[d]);
      cur = pow(cur, step);
      n *= step;
    }
    return n;
  }

 private:
  struct Piece {
    std::uint32_t gen;
    Exponent exp;
  };

  // Collection stack reused across calls; always left empty by run().
  static std::vector<Piece>& scratch() {
    thread_local std::vector<Piece> stack;
    stack.clear();
    return stack;
  }

  static PcElement unit(std::size_t n, std::size_t i) {
    PcElement e(n);
    e.exps[i] = 1;
    return e;
  }

  void check_shape(const PcElement& t, std::size_t min_depth, const char* what) const {
    if (t.size() != size()) throw ArgumentError(std::string("pc: ") + what + " has wrong length");
    for (std::size_t k = 0; k < size(); ++k) {
      if (t[k] >= orders_[k]) throw ArgumentError(std::string("pc: ") + what + " exponent out of range");
      if (t[k] && k < min_depth) throw ArgumentError(std::string("pc: ") + what + " mentions an earlier generator");
    }
  }

  static void push_element(std::vector<Piece>& stack, const PcElement& e, Exponent times = 1) {
    for (Exponent t = 0; t < times; ++t)
      for (std::size_t k = e.size(); k-- > 0;)
        if (e[k]) stack.push_back({static_cast<std::uint32_t>(k), e[k]});
  }

  void run(std::vector<Exponent>& ev, std::vector<Piece>& stack) const {
    const std::size_t n = size();
    while (!stack.empty()) {
      auto [g, e] = stack.back();
      stack.pop_back();
      if (!e) continue;
      bool suffix = false;
      for (std::size_t k = g + 1; k < n; ++k)
        if (ev[k]) {
          suffix = true;
          break;
        }
      const Exponent o = orders_[g];
      if (!suffix || commutes_after_[g]) {
        Exponent s = ev[g] + e;
        bool overflow = s >= o;
        ev[g] = overflow ? s - o : s;
        if (overflow && !power_trivial_[g]) {
          if (suffix) {
            // P y^r S -> P y^r t S with S deeper: replay S after the tail.
            for (std::size_t k = n; k-- > g + 1;)
              if (ev[k]) stack.push_back({static_cast<std::uint32_t>(k), ev[k]}), ev[k] = 0;
          }
          push_element(stack, powers_[g]);
        }
        continue;
      }
      // P y^a S * y = P y^{a+1} S^y
      if (e > 1) stack.push_back({g, e - 1});
      for (std::size_t k = n; k-- > g + 1;) {
        if (!ev[k]) continue;
        push_element(stack, conj_[k][g], ev[k]);
        ev[k] = 0;
      }
      if (++ev[g] == o) {
        ev[g] = 0;
        push_element(stack, powers_[g]);
      }
    }
  }

  std::vector<Exponent> orders_;
  std::vector<PcElement> powers_;
  std::vector<std::vector<PcElement>> conj_;
  std::vector<std::size_t> layer_starts_;
  std::vector<bool> commutes_after_;
  std::vector<bool> power_trivial_;
  bool abelian_ = true;
  std::vector<PcElement> gen_inverses_;
};

using PcPresentationPtr = std::shared_ptr<const PcPresentation>;

namespace detail {

/// u with u*f = gcd(f, o) (mod o).
inline Exponent normalizing_unit(Exponent f, Exponent o) {
  Exponent g = std::gcd(f, o);
  for (Exponent u = 1; u < o; ++u)
    if (static_cast<std::uint64_t>(u) * f % o == g && std::gcd(u, o) == 1) return u;
  return 1;
}

inline long long ext_gcd(long long a, long long b, long long& x, long long& y) {
  if (b == 0) {
    x = 1;
    y = 0;
    return a;
  }
  long long x1, y1;
  long long g = ext_gcd(b, a % b, x1, y1);
  x = y1;
  y = x1 - (a / b) * y1;
  return g;
}

}  // namespace detail

/// Induced generating sequence of a subgroup of a pc group: at most one
/// member per depth, leading exponents normalized to divisors of the
/// relative order. Optionally tracks each member as a straight-line
/// program over an external generating set.
class Igs {
 public:
  struct Member {
    PcElement elem;
    std::size_t depth;
    Exponent lead;
    Exponent relative_index;
    int value;
  };

  Igs() = default;

  /// word_inputs < 0 disables word tracking.
  explicit Igs(PcPresentationPtr pres, int word_inputs = -1)
      : pres_(std::move(pres)), table_(pres_->size()), slp_(std::max(word_inputs, 0)), words_(word_inputs >= 0) {}

  const PcPresentation& presentation() const { return *pres_; }
  const PcPresentationPtr& presentation_ptr() const { return pres_; }
  bool tracks_words() const { return words_; }
  const Slp& slp() const { return slp_; }
  Slp& slp() { return slp_; }

  /// Adds x (with slp value v when tracking words); returns true if the
  /// subgroup grew.
  bool add(const PcElement& x, int v = Slp::kIdentity) {
    pres_->check(x);
    std::uint64_t before = order();
    std::deque<std::pair<PcElement, int>> queue{{x, v}};
    bool replaced = false;
    for (;;) {
      while (!queue.empty()) {
        auto [y, yv] = std::move(queue.front());
        queue.pop_front();
        sift_insert(std::move(y), yv, queue, replaced);
      }
      if (!replaced) break;
      replaced = false;
      verify_closure(queue);
      if (queue.empty()) break;
    }
    return order() != before;
  }

  bool contains(const PcElement& a) const { return decompose(a).has_value(); }

  /// a = prod members[i]^{c_i} in depth order; empty optional if a is not a member.
  std::optional<std::vector<std::pair<std::size_t, Exponent>>> decompose(const PcElement& a) const {
    pres_->check(a);
    std::vector<std::pair<std::size_t, Exponent>> out;
    PcElement y = a;
    for (std::size_t d = y.depth(); d < y.size(); d = y.depth()) {
      const auto& entry = table_[d];
      if (!entry || y[d] % entry->lead) return std::nullopt;
      Exponent c = y[d] / entry->lead;
      y = pres_->mul(pres_->pow(entry->elem, -static_cast<long long>(c)), y);
      out.emplace_back(member_index(d), c);
    }
    return out;
  }

  std::uint64_t order() const {
    std::uint64_t o = 1;
    for (const auto& e : table_)
      if (e) o *= pres_->relative_order(e->depth) / e->lead;
    return o;
  }

  std::vector<Member> members() const {
    std::vector<Member> out;
    for (const auto& e : table_)
      if (e) out.push_back({e->elem, e->depth, e->lead, pres_->relative_order(e->depth) / e->lead, e->value});
    return out;
  }

  std::size_t size() const {
    return static_cast<std::size_t>(std::count_if(table_.begin(), table_.end(), [](const auto& e) { return e.has_value(); }));
  }

  /// Member at a depth, if any.
  const PcElement* at_depth(std::size_t d) const { return table_[d] ? &table_[d]->elem : nullptr; }

  Word member_word(std::size_t i) const {
    if (!words_) throw ArgumentError("igs: words are not tracked");
    return slp_.flatten(members().at(i).value);
  }

  /// slp value for the product given by decompose().
  int expression_value(const std::vector<std::pair<std::size_t, Exponent>>& dec) {
    auto ms = members();
    int v = Slp::kIdentity;
    for (auto [i, c] : dec) v = slp_.mul(v, slp_.pow(ms[i].value, c));
    return v;
  }

 private:
  struct Entry {
    PcElement elem;
    std::size_t depth;
    Exponent lead;
    int value;
  };

  std::size_t member_index(std::size_t d) const {
    std::size_t i = 0;
    for (std::size_t k = 0; k < d; ++k)
      if (table_[k]) ++i;
    return i;
  }

  int vmul(int a, int b) { return words_ ? slp_.mul(a, b) : Slp::kIdentity; }
  int vinv(int a) { return words_ ? slp_.inv(a) : Slp::kIdentity; }
  int vpow(int a, long long k) { return words_ ? slp_.pow(a, k) : Slp::kIdentity; }

  void enqueue_consequences(const Entry& m, std::deque<std::pair<PcElement, int>>& queue) {
    const PcPresentation& P = *pres_;
    Exponent rel = P.relative_order(m.depth) / m.lead;
    queue.emplace_back(P.pow(m.elem, rel), vpow(m.value, rel));
    for (const auto& other : table_) {
      if (!other || other->depth == m.depth) continue;
      queue.emplace_back(P.conjugate_by(other->elem, m.elem), vmul(vmul(vinv(m.value), other->value), m.value));
      queue.emplace_back(P.conjugate_by(m.elem, other->elem), vmul(vmul(vinv(other->value), m.value), other->value));
    }
  }

  void sift_insert(PcElement y, int yv, std::deque<std::pair<PcElement, int>>& queue, bool& replaced) {
    const PcPresentation& P = *pres_;
    for (std::size_t d = y.depth(); d < y.size(); d = y.depth()) {
      Exponent o = P.relative_order(d);
      Exponent f = y[d];
      auto& slot = table_[d];
      if (!slot) {
        Exponent u = detail::normalizing_unit(f, o);
        Entry m{P.pow(y, u), d, std::gcd(f, o), vpow(yv, u)};
        slot = m;
        enqueue_consequences(m, queue);
        return;
      }
      if (f % slot->lead == 0) {
        long long c = f / slot->lead;
        y = P.mul(P.pow(slot->elem, -c), y);
        yv = vmul(vinv(vpow(slot->value, c)), yv);
        continue;
      }
      // Combine into a member with smaller leading exponent.
      long long a, b;
      detail::ext_gcd(slot->lead, f, a, b);
      a = ((a % o) + o) % o;
      b = ((b % o) + o) % o;
      PcElement z = P.mul(P.pow(slot->elem, a), P.pow(y, b));
      int zv = vmul(vpow(slot->value, a), vpow(yv, b));
      Entry old = *slot;
      Exponent g = std::gcd(z[d], o);
      Exponent u = detail::normalizing_unit(z[d], o);
      Entry m{P.pow(z, u), d, g, vpow(zv, u)};
      slot = m;
      replaced = true;
      queue.emplace_back(old.elem, old.value);
      queue.emplace_back(std::move(y), yv);
      enqueue_consequences(m, queue);
      return;
    }
  }

  void verify_closure(std::deque<std::pair<PcElement, int>>& queue) {
    std::vector<Entry> entries;
    for (const auto& e : table_)
      if (e) entries.push_back(*e);
    std::deque<std::pair<PcElement, int>> cand;
    for (const auto& m : entries) enqueue_consequences(m, cand);
    for (auto& [x, xv] : cand)
      if (!contains(x)) queue.emplace_back(std::move(x), xv);
  }

  PcPresentationPtr pres_;
  std::vector<std::optional<Entry>> table_;
  Slp slp_;
  bool words_ = false;
};

inline Igs igs_from(PcPresentationPtr pres, const std::vector<PcElement>& gens, bool track_words = false) {
  Igs igs(std::move(pres), track_words ? static_cast<int>(gens.size()) : -1);
  for (std::size_t i = 0; i < gens.size(); ++i) igs.add(gens[i], track_words ? static_cast<int>(i) : Slp::kIdentity);
  return igs;
}

/// Canonical representative of the left coset x*U. Right multiplication by
/// a member of depth d leaves the exponents above d unchanged, so sifting
/// depth by depth is well defined.
inline PcElement canonical_left_coset_rep(const Igs& u, PcElement x) {
  const PcPresentation& P = u.presentation();
  for (std::size_t d = 0; d < P.size(); ++d) {
    const PcElement* m = u.at_depth(d);
    if (!m || !x[d]) continue;
    PcElement best = x, cur = x;
    for (Exponent c = 1; c < P.relative_order(d); ++c) {
      cur = P.mul(cur, *m);
      if (cur[d] < best[d]) best = cur;
      if (!best[d]) break;
    }
    x = std::move(best);
  }
  return x;
}

/// Canonical representative of the right coset U*y, via U*y = (y^-1*U)^-1.
inline PcElement canonical_right_coset_rep(const Igs& u, const PcElement& y) {
  const PcPresentation& P = u.presentation();
  return P.inv(canonical_left_coset_rep(u, P.inv(y)));
}

/// Automorphism of a pc group given by the images of the generators.
/// Optional caches: per-segment image tables and a matrix for an
/// elementary abelian bottom layer.
class PcAutomorphism {
 public:
  PcAutomorphism() = default;

  PcAutomorphism(PcPresentationPtr pres, std::vector<PcElement> images)
      : pres_(std::move(pres)), images_(std::move(images)) {
    if (images_.size() != pres_->size()) throw ArgumentError("automorphism: image count mismatch");
    for (const auto& im : images_) pres_->check(im);
  }

  static PcAutomorphism identity(PcPresentationPtr pres) {
    std::vector<PcElement> im;
    for (std::size_t i = 0; i < pres->size(); ++i) im.push_back(pres->generator(i));
    return PcAutomorphism(std::move(pres), std::move(im));
  }

  const PcPresentation& presentation() const { return *pres_; }
  const PcPresentationPtr& presentation_ptr() const { return pres_; }
  const std::vector<PcElement>& images() const { return images_; }

  PcElement apply_uncached(const PcElement& a) const {
    const PcPresentation& P = *pres_;
    PcElement r(P.size());
    for (std::size_t g = 0; g < a.size(); ++g)
      for (Exponent t = 0; t < a[g]; ++t) P.mul_into(r, images_[g]);
    return r;
  }

  PcElement apply(const PcElement& a) const {
    if (segments_.empty() && !bottom_) return apply_uncached(a);
    const PcPresentation& P = *pres_;
    PcElement r(P.size());
    std::size_t top_end = bottom_ ? bottom_->lo : P.size();
    std::size_t g = 0;
    for (const auto& seg : segments_) {
      for (; g < seg.lo; ++g)
        for (Exponent t = 0; t < a[g]; ++t) P.mul_into(r, images_[g]);
      std::size_t idx = 0;
      bool any = false;
      for (std::size_t k = seg.hi; k-- > seg.lo;) {
        idx = idx * P.relative_order(k) + a[k];
        any = any || a[k];
      }
      if (any) P.mul_into(r, seg.table[idx]);
      g = seg.hi;
    }
    for (; g < top_end; ++g)
      for (Exponent t = 0; t < a[g]; ++t) P.mul_into(r, images_[g]);
    if (bottom_) {
      const std::size_t lo = bottom_->lo, n = P.size();
      const Exponent p = bottom_->p;
      for (std::size_t i = lo; i < n; ++i) {
        if (!a[i]) continue;
        const auto& row = bottom_->rows[i - lo];
        for (std::size_t j = lo; j < n; ++j) r.exps[j] = static_cast<Exponent>((r.exps[j] + a[i] * row[j - lo]) % p);
      }
    }
    return r;
  }

  /// Applies this, then `next`.
  PcAutomorphism compose(const PcAutomorphism& next) const {
    std::vector<PcElement> im;
    im.reserve(images_.size());
    for (const auto& x : images_) im.push_back(next.apply(x));
    return PcAutomorphism(pres_, std::move(im));
  }

  bool is_identity() const {
    for (std::size_t i = 0; i < images_.size(); ++i)
      if (images_[i] != pres_->generator(i)) return false;
    return true;
  }

  /// Checks that the images satisfy every defining relation.
  bool preserves_relations(std::string* witness = nullptr) const {
    const PcPresentation& P = *pres_;
    for (std::size_t i = 0; i < P.size(); ++i) {
      if (P.pow(images_[i], P.relative_order(i)) != apply_uncached(P.power(i))) {
        if (witness) *witness = "power relation of y" + std::to_string(i + 1);
        return false;
      }
      for (std::size_t j = i + 1; j < P.size(); ++j) {
        if (P.conjugate_by(images_[j], images_[i]) != apply_uncached(P.conjugate(j, i))) {
          if (witness) *witness = "conjugate relation y" + std::to_string(j + 1) + "^y" + std::to_string(i + 1);
          return false;
        }
      }
    }
    return true;
  }

  bool is_bijective() const { return igs_from(pres_, images_).order() == pres_->order(); }

  PcAutomorphism inverse() const {
    Igs igs(pres_, static_cast<int>(images_.size()));
    for (std::size_t i = 0; i < images_.size(); ++i) igs.add(images_[i], static_cast<int>(i));
    if (igs.order() != pres_->order()) throw ArgumentError("automorphism: map is not bijective");
    std::vector<int> values;
    for (std::size_t j = 0; j < pres_->size(); ++j) {
      auto dec = igs.decompose(pres_->generator(j));
      values.push_back(igs.expression_value(*dec));
    }
    std::vector<PcElement> gens;
    for (std::size_t i = 0; i < pres_->size(); ++i) gens.push_back(pres_->generator(i));
    const PcPresentation& P = *pres_;
    auto vals = igs.slp().evaluate<PcElement>(
        gens, [&](const PcElement& a, const PcElement& b) { return P.mul(a, b); },
        [&](const PcElement& a) { return P.inv(a); });
    std::vector<PcElement> im;
    for (int v : values) im.push_back(v == Slp::kIdentity ? P.identity() : vals[v]);
    return PcAutomorphism(pres_, std::move(im));
  }

  /// Builds image tables over contiguous segments; boundaries are split to
  /// at most `max_gens` generators and `max_entries` table entries each.
  /// Returns the number of cached entries.
  std::size_t build_segment_cache(const std::vector<std::size_t>& boundaries, std::size_t max_gens = 12,
                                  std::size_t max_entries = 4096) {
    const PcPresentation& P = *pres_;
    segments_.clear();
    std::size_t end = bottom_ ? bottom_->lo : P.size();
    std::vector<std::size_t> cuts = boundaries;
    cuts.push_back(0);
    cuts.push_back(end);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::size_t total = 0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      std::size_t lo = cuts[c], stop = std::min(cuts[c + 1], end);
      while (lo < stop) {
        std::size_t hi = lo, entries = 1;
        while (hi < stop && hi - lo < max_gens && entries * P.relative_order(hi) <= max_entries)
          entries *= P.relative_order(hi++);
        if (hi == lo) ++hi, entries = P.relative_order(lo);
        Segment seg{lo, hi, {}};
        seg.table.reserve(entries);
        std::vector<Exponent> digits(hi - lo, 0);
        for (std::size_t idx = 0; idx < entries; ++idx) {
          PcElement e(P.size());
          for (std::size_t k = lo; k < hi; ++k) e.exps[k] = digits[k - lo];
          seg.table.push_back(apply_uncached(e));
          for (std::size_t k = 0; k < digits.size(); ++k) {
            if (++digits[k] < P.relative_order(lo + k)) break;
            digits[k] = 0;
          }
        }
        total += entries;
        segments_.push_back(std::move(seg));
        lo = hi;
      }
    }
    return total;
  }

  /// Matrix action on the layer y_lo..y_{n-1} when it is elementary
  /// abelian of exponent p with trivial tails and invariant under this
  /// automorphism. Returns false (and builds nothing) otherwise.
  bool build_bottom_matrix(std::size_t lo) {
    const PcPresentation& P = *pres_;
    const std::size_t n = P.size();
    if (lo >= n) return false;
    Exponent p = P.relative_order(lo);
    for (std::size_t i = lo; i < n; ++i) {
      if (P.relative_order(i) != p || !P.power(i).is_identity()) return false;
      for (std::size_t j = i + 1; j < n; ++j)
        if (P.conjugate(j, i) != P.generator(j)) return false;
    }
    Bottom b{lo, p, {}};
    for (std::size_t i = lo; i < n; ++i) {
      const PcElement& im = images_[i];
      for (std::size_t k = 0; k < lo; ++k)
        if (im[k]) return false;
      b.rows.emplace_back(im.exps.begin() + static_cast<std::ptrdiff_t>(lo), im.exps.end());
    }
    bottom_ = std::move(b);
    // segments must not overlap the matrix layer
    std::vector<Segment> kept;
    for (auto& s : segments_)
      if (s.hi <= lo) kept.push_back(std::move(s));
    segments_ = std::move(kept);
    return true;
  }

  void clear_caches() {
    segments_.clear();
    bottom_.reset();
  }

  bool has_caches() const { return !segments_.empty() || bottom_.has_value(); }

 private:
  struct Segment {
    std::size_t lo, hi;
    std::vector<PcElement> table;
  };
  struct Bottom {
    std::size_t lo;
    Exponent p;
    std::vector<std::vector<Exponent>> rows;
  };

  PcPresentationPtr pres_;
  std::vector<PcElement> images_;
  std::vector<Segment> segments_;
  std::optional<Bottom> bottom_;
};

/// B/N for a normal subgroup N given by an IGS, with the projection.
class PcQuotient {
 public:
  PcQuotient(PcPresentationPtr pres, Igs n) : source_(std::move(pres)), kernel_(std::move(n)) {
    const PcPresentation& P = *source_;
    for (const auto& m : kernel_.members())
      for (std::size_t g = 0; g < P.size(); ++g)
        if (!kernel_.contains(P.conjugate_by(m.elem, P.generator(g))))
          throw ArgumentError("pc_quotient: subgroup is not normal");
    std::vector<Exponent> q_orders;
    for (std::size_t d = 0; d < P.size(); ++d) {
      const PcElement* m = kernel_.at_depth(d);
      Exponent g = m ? (*m)[d] : P.relative_order(d);
      if (g > 1) {
        kept_.push_back(d);
        q_orders.push_back(g);
      }
    }
    std::size_t qn = kept_.size();
    std::vector<PcElement> powers;
    std::vector<std::vector<PcElement>> conj(qn);
    for (std::size_t a = 0; a < qn; ++a) {
      powers.push_back(project(P.pow(P.generator(kept_[a]), q_orders[a])));
      for (std::size_t b = 0; b < a; ++b)
        conj[a].push_back(project(P.conjugate_by(P.generator(kept_[a]), P.generator(kept_[b]))));
    }
    std::vector<std::size_t> layers;
    for (std::size_t ls : P.layer_starts()) {
      std::size_t pos = static_cast<std::size_t>(std::lower_bound(kept_.begin(), kept_.end(), ls) - kept_.begin());
      if (layers.empty() || layers.back() != pos) layers.push_back(pos);
    }
    if (!layers.empty() && layers.back() == qn && qn > 0) layers.pop_back();
    if (layers.empty()) layers.push_back(0);
    quotient_ = std::make_shared<PcPresentation>(std::move(q_orders), std::move(powers), std::move(conj), std::move(layers));
  }

  const PcPresentationPtr& source() const { return source_; }
  const PcPresentationPtr& quotient() const { return quotient_; }
  const Igs& kernel() const { return kernel_; }
  const std::vector<std::size_t>& kept_depths() const { return kept_; }

  /// Image of a source element in the quotient.
  PcElement project(const PcElement& x) const {
    PcElement r = reduce(x);
    PcElement q(kept_.size());
    for (std::size_t a = 0; a < kept_.size(); ++a) q.exps[a] = r[kept_[a]];
    return q;
  }

  /// Canonical source preimage of a quotient element.
  PcElement lift(const PcElement& q) const {
    PcElement x(source_->size());
    for (std::size_t a = 0; a < kept_.size(); ++a) x.exps[kept_[a]] = q[a];
    return x;
  }

 private:
  // Canonical representative of N*x (N normal).
  PcElement reduce(PcElement x) const {
    const PcPresentation& P = *source_;
    for (std::size_t d = 0; d < P.size(); ++d) {
      const PcElement* m = kernel_.at_depth(d);
      if (!m || !x[d]) continue;
      Exponent g = (*m)[d];
      long long c = x[d] / g;
      if (c) x = P.mul(P.pow(*m, -c), x);
    }
    return x;
  }

  PcPresentationPtr source_;
  Igs kernel_;
  std::vector<std::size_t> kept_;
  PcPresentationPtr quotient_;
};

inline PcQuotient pc_quotient(PcPresentationPtr pres, Igs n) { return PcQuotient(std::move(pres), std::move(n)); }

/// Bit-packed exponent vector: ceil(log2 o_i) bits per generator.
class PackedPcElement {
 public:
  PackedPcElement(const PcPresentation& pres, const PcElement& e) {
    pres.check(e);
    std::size_t bit = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      unsigned w = width(pres.relative_order(i));
      for (unsigned b = 0; b < w; ++b, ++bit) {
        if (bit / 8 >= bytes_.size()) bytes_.push_back(0);
        if ((e[i] >> b) & 1u) bytes_[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
      }
    }
    bits_ = bit;
  }

  PcElement unpack(const PcPresentation& pres) const {
    PcElement e(pres.size());
    std::size_t bit = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      unsigned w = width(pres.relative_order(i));
      for (unsigned b = 0; b < w; ++b, ++bit)
        if ((bytes_[bit / 8] >> (bit % 8)) & 1u) e.exps[i] |= (1u << b);
    }
    return e;
  }

  std::size_t bits() const { return bits_; }
  std::size_t byte_size() const { return bytes_.size(); }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  static unsigned width(Exponent o) {
    unsigned w = 0;
    while ((Exponent{1} << w) < o) ++w;
    return w;
  }

  std::vector<std::uint8_t> bytes_;
  std::size_t bits_ = 0;
};

}  // namespace hybrid
