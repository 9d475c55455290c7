#pragma once

#include <cstdint>
#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hybrid/error.hpp"
#include "hybrid/hybrid.hpp"
#include "hybrid/pc.hpp"
#include "hybrid/perm.hpp"
#include "hybrid/words.hpp"

namespace hybrid {

/// All products of at most `bound` generators whose permutation image is
/// trivial.
inline std::vector<HybridElement> kernel_short_words(const HybridGroup& G, const std::vector<HybridElement>& gens,
                                                     std::size_t bound) {
  std::vector<HybridElement> out;
  std::unordered_set<HybridElement, HybridElementHash> seen;
  std::vector<HybridElement> layer{G.identity()};
  for (std::size_t len = 1; len <= bound; ++len) {
    std::vector<HybridElement> next;
    for (const auto& w : layer)
      for (const auto& g : gens) {
        HybridElement h = G.mul(w, g);
        if (h.xword.empty() && seen.insert(h).second) out.push_back(h);
        next.push_back(std::move(h));
      }
    layer = std::move(next);
  }
  return out;
}

struct BitsOptions {
  std::size_t short_word_bound = 0;  // 0 disables seeding with short kernel words
  std::uint64_t presentation_limit = 100'000;
};

/// Subgroup data for S = <gens>: a stabilizer chain of nu(S), pre-images of
/// its transversal elements, and an IGS of S∩B whose members carry
/// straight-line programs over gens.
class HybridBits {
 public:
  HybridBits(const HybridGroup& G, std::vector<HybridElement> gens, BitsOptions opt = {})
      : G_(&G), gens_(std::move(gens)), igs_(G.b_pres_ptr(), static_cast<int>(gens_.size())) {
    for (const auto& g : gens_) G.check(g);
    std::vector<Permutation> images;
    for (const auto& g : gens_) images.push_back(G.nu(g));
    chain_ = schreier_sims(images, G.degree());
    Slp& slp = igs_.slp();
    slp = chain_.slp();
    pre_ = slp.evaluate<HybridElement>(
        gens_, [&](const HybridElement& a, const HybridElement& b) { return G.mul(a, b); },
        [&](const HybridElement& a) { return G.inv(a); });

    // L0: the relators of nu(S) evaluated in the generators.
    if (!gens_.empty()) {
      Presentation pres = presentation_from(chain_, opt.presentation_limit);
      for (const auto& rel : pres.relators) {
        HybridElement e = G.identity();
        int v = Slp::kIdentity;
        for (int a : rel) {
          e = G.mul(e, gens_[a]);
          v = slp.mul(v, a);
        }
        if (!e.xword.empty()) throw ValidationError("subgroup: relator does not evaluate into B");
        l0_.push_back(e.bpart);
        l0_values_.push_back(v);
      }
    }
    if (opt.short_word_bound > 0) {
      for (const auto& h : kernel_short_words(G, gens_, opt.short_word_bound)) {
        // words are recorded by re-expressing through the chain below
        l0_.push_back(h.bpart);
        l0_values_.push_back(short_word_value(h, opt.short_word_bound));
      }
    }

    // Normal closure of L0 under conjugation by the generators.
    const PcPresentation& B = G.b_pres();
    std::deque<std::pair<PcElement, int>> queue;
    for (std::size_t i = 0; i < l0_.size(); ++i) queue.emplace_back(l0_[i], l0_values_[i]);
    while (!queue.empty()) {
      auto [l, v] = std::move(queue.front());
      queue.pop_front();
      if (igs_.contains(l)) continue;
      igs_.add(l, v);
      for (std::size_t s = 0; s < gens_.size(); ++s) {
        const HybridElement& g = gens_[s];
        PcElement c = B.conjugate_by(G.act(g.xword, l), g.bpart);
        queue.emplace_back(std::move(c), slp.mul(slp.mul(slp.inv(static_cast<int>(s)), v), static_cast<int>(s)));
      }
    }
    members_ = igs_.members();
  }

  const HybridGroup& group() const { return *G_; }
  const std::vector<HybridElement>& generators() const { return gens_; }
  const StabilizerChain& image_chain() const { return chain_; }
  const Igs& kernel_igs() const { return igs_; }
  const std::vector<PcElement>& l0() const { return l0_; }
  /// Elements of S with the permutation image of each chain value.
  const std::vector<HybridElement>& chain_preimages() const { return pre_; }

  std::uint64_t order() const { return extension_order(chain_.order(), igs_.order()); }

  bool contains(const HybridElement& g) const { return locate(g).has_value(); }

  /// g as a product of program values raised to exponents, or nothing when
  /// g is not in S.
  std::optional<std::vector<std::pair<int, Exponent>>> express_pieces(const HybridElement& g) const {
    auto loc = locate(g);
    if (!loc) return std::nullopt;
    std::vector<std::pair<int, Exponent>> out;
    for (int c : loc->chain_values) out.emplace_back(c, 1);
    for (auto [i, e] : loc->kernel) out.emplace_back(members_[i].value, e);
    return out;
  }

  /// Word over the generators (signed letters) evaluating to g.
  Word express(const HybridElement& g, std::size_t limit = Slp::kDefaultFlatLimit) const {
    auto pieces = express_pieces(g);
    if (!pieces) throw ArgumentError("subgroup: element is not in S");
    const Slp& slp = igs_.slp();
    std::size_t total = 0;
    for (auto [v, e] : *pieces) total += slp.length(v) * e;
    if (total > limit) throw LimitError("subgroup: word exceeds length limit");
    Word w;
    for (auto [v, e] : *pieces) {
      Word f = slp.flatten(v, limit);
      for (Exponent k = 0; k < e; ++k) w.insert(w.end(), f.begin(), f.end());
    }
    return free_reduce(w);
  }

  /// Image of g under the homomorphism sending generator i to images[i].
  template <class T, class Mul, class Inv>
  T evaluate_hom(std::span<const T> images, const HybridElement& g, const T& identity, Mul&& mul, Inv&& inv) const {
    if (images.size() != gens_.size()) throw ArgumentError("evaluate_hom: one image per generator is required");
    auto pieces = express_pieces(g);
    if (!pieces) throw ArgumentError("evaluate_hom: element is not in the domain");
    std::vector<int> wanted;
    for (auto [v, e] : *pieces) wanted.push_back(v);
    auto vals = igs_.slp().evaluate_values<T>(wanted, images, identity, mul, inv);
    T acc = identity;
    for (std::size_t k = 0; k < vals.size(); ++k) {
      T base = vals[k];
      for (Exponent e = (*pieces)[k].second; e > 0; e >>= 1) {
        if (e & 1) acc = mul(acc, base);
        if (e > 1) base = mul(base, base);
      }
    }
    return acc;
  }

  /// Checks that the images satisfy every relation of S, read off the
  /// Cayley graph of S; returns false on the first violated relator.
  template <class T, class Mul, class Eq>
  bool images_define_homomorphism(std::span<const T> images, const T& identity, Mul&& mul, Eq&& eq,
                                  std::uint64_t limit = 100'000) const {
    if (images.size() != gens_.size()) throw ArgumentError("evaluate_hom: one image per generator is required");
    if (order() > limit) throw LimitError("evaluate_hom: subgroup too large for the relator check");
    std::unordered_map<HybridElement, std::size_t, HybridElementHash> index{{G_->identity(), 0}};
    std::vector<HybridElement> elems{G_->identity()};
    std::vector<T> im{identity};
    for (std::size_t e = 0; e < elems.size(); ++e) {
      for (std::size_t s = 0; s < gens_.size(); ++s) {
        HybridElement f = G_->mul(elems[e], gens_[s]);
        T fi = mul(im[e], images[s]);
        auto [it, fresh] = index.emplace(f, elems.size());
        if (fresh) {
          elems.push_back(std::move(f));
          im.push_back(std::move(fi));
        } else if (!eq(im[it->second], fi)) {
          return false;
        }
      }
    }
    return true;
  }

 private:
  struct Location {
    std::vector<int> chain_values;
    std::vector<std::pair<std::size_t, Exponent>> kernel;
  };

  std::optional<Location> locate(const HybridElement& g) const {
    if (g.group != G_->id()) throw ArgumentError("subgroup: element belongs to a different group");
    Permutation p = G_->nu(g);
    if (!chain_.contains(p)) return std::nullopt;
    Location loc;
    loc.chain_values = chain_.factor_values(p);
    HybridElement h = G_->identity();
    for (int v : loc.chain_values) h = G_->mul(h, pre_[v]);
    HybridElement r = G_->mul(G_->inv(h), g);
    if (!r.xword.empty()) throw ValidationError("subgroup: kernel element has a nonempty x-word");
    auto dec = igs_.decompose(r.bpart);
    if (!dec) return std::nullopt;
    loc.kernel = std::move(*dec);
    return loc;
  }

  // Value for a short kernel word found by enumeration: redo the search
  // with program values alongside.
  int short_word_value(const HybridElement& target, std::size_t bound) {
    Slp& slp = igs_.slp();
    std::vector<std::pair<HybridElement, int>> layer{{G_->identity(), Slp::kIdentity}};
    for (std::size_t len = 1; len <= bound; ++len) {
      std::vector<std::pair<HybridElement, int>> next;
      for (const auto& [w, wv] : layer)
        for (std::size_t s = 0; s < gens_.size(); ++s) {
          HybridElement h = G_->mul(w, gens_[s]);
          int hv = slp.mul(wv, static_cast<int>(s));
          if (h == target) return hv;
          next.emplace_back(std::move(h), hv);
        }
      layer = std::move(next);
    }
    throw ArgumentError("subgroup: short word not found");
  }

  const HybridGroup* G_;
  std::vector<HybridElement> gens_;
  StabilizerChain chain_;
  Igs igs_;
  std::vector<HybridElement> pre_;
  std::vector<PcElement> l0_;
  std::vector<int> l0_values_;
  std::vector<Igs::Member> members_;
};

/// Right transversal of U in S: representatives V_i * T_j where T_j runs
/// over pre-images of a transversal of nu(U) in nu(S) and V_i over one of
/// U∩B in S∩B. Coset numbers are j*q + i.
class HybridTransversal {
 public:
  HybridTransversal(const HybridBits& S, const HybridBits& U)
      : S_(&S), U_(&U), nu_(S.image_chain(), U.image_chain()) {
    const HybridGroup& G = S.group();
    if (&U.group() != &G && U.group().id() != G.id()) throw ArgumentError("transversal: subgroups of different groups");
    for (const auto& u : U.generators())
      if (!S.contains(u)) throw ArgumentError("transversal: U is not a subgroup of S");
    for (const auto& t : nu_.representatives()) t_.push_back(preimage_in(S, t));
    const Igs& sb = S.kernel_igs();
    const Igs& ub = U.kernel_igs();
    const PcPresentation& B = G.b_pres();
    PcElement start = canonical_right_coset_rep(ub, B.identity());
    v_.push_back(start);
    v_index_.emplace(start, 0);
    for (std::size_t i = 0; i < v_.size(); ++i)
      for (const auto& m : sb.members()) {
        PcElement c = canonical_right_coset_rep(ub, B.mul(v_[i], m.elem));
        if (v_index_.emplace(c, v_.size()).second) v_.push_back(std::move(c));
      }
  }

  std::size_t index() const { return t_.size() * v_.size(); }
  std::size_t q() const { return v_.size(); }
  const std::vector<HybridElement>& t() const { return t_; }
  const std::vector<PcElement>& v() const { return v_; }

  HybridElement representative(std::size_t idx) const {
    const HybridGroup& G = S_->group();
    std::size_t j = idx / v_.size(), i = idx % v_.size();
    return G.mul(G.b_element(v_.at(i)), t_.at(j));
  }

  std::size_t coset_id(const HybridElement& s) const {
    const HybridGroup& G = S_->group();
    Permutation p = G.nu(s);
    std::size_t j = nu_.coset_index(p);
    HybridElement u = preimage_in(*U_, p * nu_.representatives()[j].inverse());
    HybridElement b = G.mul(G.mul(G.inv(u), s), G.inv(t_[j]));
    if (!b.xword.empty()) throw ValidationError("transversal: residue has a nonempty x-word");
    auto it = v_index_.find(canonical_right_coset_rep(U_->kernel_igs(), b.bpart));
    if (it == v_index_.end()) throw ArgumentError("transversal: element is not in S");
    return j * v_.size() + it->second;
  }

 private:
  // An element of the subgroup with permutation image p.
  static HybridElement preimage_in(const HybridBits& X, const Permutation& p) {
    const HybridGroup& G = X.group();
    HybridElement h = G.identity();
    for (int v : X.image_chain().factor_values(p)) h = G.mul(h, X.chain_preimages()[v]);
    return h;
  }

  const HybridBits* S_;
  const HybridBits* U_;
  RightTransversal nu_;
  std::vector<HybridElement> t_;
  std::vector<PcElement> v_;
  std::unordered_map<PcElement, std::size_t, PcElementHash> v_index_;
};

/// G/N for N ≤ B normal in G, with the natural epimorphism.
class FactorGroup {
 public:
  FactorGroup(const HybridGroup& G, const HybridBits& N) : source_(&G), quotient_(make_quotient(G, N)) {
    const PcPresentationPtr& Q = quotient_.quotient();
    std::vector<PcElement> tails;
    for (const auto& m : G.tails()) tails.push_back(quotient_.project(m));
    std::vector<PcAutomorphism> action;
    for (const auto& a : G.action()) {
      std::vector<PcElement> im;
      for (std::size_t d : quotient_.kept_depths()) im.push_back(quotient_.project(a.apply_uncached(G.b_pres().generator(d))));
      action.emplace_back(Q, std::move(im));
    }
    std::vector<std::size_t> hints;
    for (std::size_t h : G.segment_hints()) {
      const auto& kept = quotient_.kept_depths();
      std::size_t pos = static_cast<std::size_t>(std::lower_bound(kept.begin(), kept.end(), h) - kept.begin());
      if (pos < kept.size() && (hints.empty() || hints.back() != pos)) hints.push_back(pos);
    }
    target_ = HybridGroup(G.perm_images(), G.factor_rules(), Q, std::move(tails), std::move(action), std::move(hints),
                          G.degree());
  }

  const HybridGroup& group() const { return target_; }
  const PcQuotient& pc_quotient() const { return quotient_; }

  HybridElement image(const HybridElement& g) const {
    if (g.group != source_->id()) throw ArgumentError("factor group: element belongs to a different group");
    return HybridElement{target_.id(), g.xword, quotient_.project(g.bpart)};
  }

 private:
  static PcQuotient make_quotient(const HybridGroup& G, const HybridBits& N) {
    if (N.image_chain().order() != 1) throw ArgumentError("factor group: N is not contained in B");
    const PcPresentation& B = G.b_pres();
    const Igs& igs = N.kernel_igs();
    for (const auto& m : igs.members()) {
      for (const auto& a : G.action())
        if (!igs.contains(a.apply_uncached(m.elem))) throw ArgumentError("factor group: N is not normal in G");
      for (std::size_t j = 0; j < B.size(); ++j)
        if (!igs.contains(B.conjugate_by(m.elem, B.generator(j)))) throw ArgumentError("factor group: N is not normal in G");
    }
    Igs plain(G.b_pres_ptr());
    for (const auto& m : igs.members()) plain.add(m.elem);
    return PcQuotient(G.b_pres_ptr(), std::move(plain));
  }

  const HybridGroup* source_;
  PcQuotient quotient_;
  HybridGroup target_;
};

inline FactorGroup factor_group(const HybridGroup& G, const HybridBits& N) { return FactorGroup(G, N); }

}  // namespace hybrid
