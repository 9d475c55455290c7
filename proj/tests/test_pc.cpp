#include <gtest/gtest.h>

#include <map>
#include <random>

#include "hybrid/pc.hpp"
#include "oracle.hpp"

using namespace hybrid;

namespace {

// A pc presentation read off a concrete permutation pcgs: tails are found
// by searching all exponent vectors for the matching product.
struct PermPc {
  std::size_t degree;
  std::vector<oracle::Perm> gens;
  std::vector<Exponent> orders;
  std::vector<PcElement> all_vectors;

  oracle::Perm eval(const PcElement& e) const {
    oracle::Perm acc = oracle::identity(degree);
    for (std::size_t i = 0; i < gens.size(); ++i)
      for (Exponent k = 0; k < e[i]; ++k) acc = oracle::compose(acc, gens[i]);
    return acc;
  }

  PcElement find(const oracle::Perm& p) const {
    for (const auto& v : all_vectors)
      if (eval(v) == p) return v;
    ADD_FAILURE() << "no exponent vector found";
    return PcElement(gens.size());
  }

  PermPc(std::size_t n, std::vector<const char*> cyc, std::vector<Exponent> o)
      : PermPc(n, parse_all(cyc, n), std::move(o)) {}

  static std::vector<oracle::Perm> parse_all(const std::vector<const char*>& cyc, std::size_t n) {
    std::vector<oracle::Perm> out;
    for (const char* c : cyc) out.push_back(oracle::parse_cycles(c, n));
    return out;
  }

  PermPc(std::size_t n, std::vector<oracle::Perm> g, std::vector<Exponent> o)
      : degree(n), gens(std::move(g)), orders(std::move(o)) {
    all_vectors.push_back(PcElement(gens.size()));
    for (std::size_t i = 0; i < gens.size(); ++i) {
      std::vector<PcElement> next;
      for (const auto& v : all_vectors)
        for (Exponent e = 0; e < orders[i]; ++e) {
          PcElement w = v;
          w.exps[i] = e;
          next.push_back(w);
        }
      all_vectors = std::move(next);
    }
  }

  PcPresentationPtr presentation() const {
    const std::size_t n = gens.size();
    std::vector<PcElement> powers;
    std::vector<std::vector<PcElement>> conj(n);
    for (std::size_t i = 0; i < n; ++i) {
      oracle::Perm p = oracle::identity(degree);
      for (Exponent k = 0; k < orders[i]; ++k) p = oracle::compose(p, gens[i]);
      powers.push_back(find(p));
      for (std::size_t j = 0; j < i; ++j) {
        oracle::Perm c = oracle::compose(oracle::compose(oracle::invert(gens[j]), gens[i]), gens[j]);
        conj[i].push_back(find(c));
      }
    }
    return std::make_shared<PcPresentation>(orders, powers, conj);
  }
};

PermPc s4() { return PermPc(4, {"(1,2)", "(1,2,3)", "(1,2)(3,4)", "(1,3)(2,4)"}, {2, 3, 2, 2}); }
PermPc d8() { return PermPc(4, {"(1,3)", "(1,2,3,4)", "(1,3)(2,4)"}, {2, 2, 2}); }
// Q8 acting on itself by right multiplication; unit b + 4*negative with
// b = 0, 1, 2, 3 for 1, i, j, k.
PermPc q8() {
  auto mul = [](int x, int y) {
    static const int basis[4][4] = {{0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}};
    static const int negate[4][4] = {{0, 0, 0, 0}, {0, 1, 0, 1}, {0, 1, 1, 0}, {0, 0, 1, 1}};
    int bx = x % 4, by = y % 4;
    int neg = (x / 4) ^ (y / 4) ^ negate[bx][by];
    return basis[bx][by] + 4 * neg;
  };
  auto right = [&](int g) {
    oracle::Perm p(8);
    for (int x = 0; x < 8; ++x) p[x] = mul(x, g);
    return p;
  };
  return PermPc(8, std::vector<oracle::Perm>{right(1), right(2), right(4)}, {2, 2, 2});
}

}  // namespace

TEST(PcPresentation, CyclicGroupArithmetic) {
  auto c3 = std::make_shared<PcPresentation>(std::vector<Exponent>{3});
  PcElement y = c3->generator(0);
  EXPECT_EQ(c3->mul(y, y), PcElement({2}));
  EXPECT_EQ(c3->inv(y), PcElement({2}));
  EXPECT_EQ(c3->pow(y, 3), c3->identity());
  EXPECT_EQ(c3->element_order(y), 3u);
  EXPECT_EQ(c3->order(), 3u);
}

TEST(PcPresentation, MultiplicationMatchesPermutations) {
  for (const auto& pc : {s4(), d8(), q8()}) {
    auto P = pc.presentation();
    ASSERT_EQ(P->order(), pc.all_vectors.size());
    for (const auto& a : pc.all_vectors)
      for (const auto& b : pc.all_vectors) ASSERT_EQ(pc.eval(P->mul(a, b)), oracle::compose(pc.eval(a), pc.eval(b)));
  }
}

TEST(PcPresentation, InversePowerAndOrder) {
  for (const auto& pc : {s4(), d8(), q8()}) {
    auto P = pc.presentation();
    for (const auto& a : pc.all_vectors) {
      EXPECT_EQ(pc.eval(P->inv(a)), oracle::invert(pc.eval(a)));
      EXPECT_TRUE(P->mul(a, P->inv(a)).is_identity());
      EXPECT_EQ(P->element_order(a), oracle::perm_order(pc.eval(a)));
      oracle::Perm cube = oracle::compose(oracle::compose(pc.eval(a), pc.eval(a)), pc.eval(a));
      EXPECT_EQ(pc.eval(P->pow(a, 3)), cube);
      EXPECT_EQ(P->pow(a, -1), P->inv(a));
    }
  }
}

TEST(PcPresentation, CollectsWordsWithInverseLetters) {
  auto pc = s4();
  auto P = pc.presentation();
  std::mt19937_64 rng(17);
  for (int t = 0; t < 200; ++t) {
    Word w;
    oracle::Perm acc = oracle::identity(4);
    for (int k = 0; k < 12; ++k) {
      int g = static_cast<int>(rng() % 4);
      bool inv = rng() & 1;
      w.push_back(inv ? inverse_letter(g) : letter(g));
      acc = oracle::compose(acc, inv ? oracle::invert(pc.gens[g]) : pc.gens[g]);
    }
    EXPECT_EQ(pc.eval(P->collect(w)), acc);
  }
}

TEST(PcPresentation, RejectsMalformedTails) {
  // power tail of y1 must lie in <y2,...>
  std::vector<PcElement> powers{PcElement({1, 0}), PcElement({0, 0})};
  EXPECT_THROW(PcPresentation({2, 2}, powers), ArgumentError);
  EXPECT_THROW(PcPresentation({1}), ArgumentError);
}

TEST(PcPresentation, TextForm) {
  EXPECT_EQ(pc_to_string(PcElement({0, 2, 1})), "y2^2 y3^1");
  EXPECT_EQ(pc_to_string(PcElement({0, 0})), "1");
}

TEST(Igs, SubgroupOrdersAndMembershipMatchClosure) {
  auto pc = s4();
  auto P = pc.presentation();
  std::mt19937_64 rng(23);
  for (int t = 0; t < 40; ++t) {
    std::vector<PcElement> gens;
    std::vector<oracle::Perm> perms;
    std::size_t k = 1 + rng() % 2;
    for (std::size_t i = 0; i < k; ++i) {
      gens.push_back(pc.all_vectors[rng() % pc.all_vectors.size()]);
      perms.push_back(pc.eval(gens.back()));
    }
    Igs igs = igs_from(P, gens);
    auto elems = oracle::closure(perms, 4);
    EXPECT_EQ(igs.order(), elems.size());
    for (const auto& v : pc.all_vectors) EXPECT_EQ(igs.contains(v), elems.count(pc.eval(v)) == 1);
  }
}

TEST(Igs, DecompositionMultipliesBack) {
  auto pc = s4();
  auto P = pc.presentation();
  Igs igs = igs_from(P, {PcElement({0, 1, 0, 0}), PcElement({0, 0, 1, 0})});
  ASSERT_EQ(igs.order(), 12u);
  auto members = igs.members();
  for (const auto& v : pc.all_vectors) {
    auto dec = igs.decompose(v);
    if (!dec) continue;
    PcElement acc = P->identity();
    for (auto [i, e] : *dec) acc = P->mul(acc, P->pow(members[i].elem, e));
    EXPECT_EQ(acc, v);
  }
}

TEST(Igs, TrackedWordsEvaluateToMembers) {
  auto pc = d8();
  auto P = pc.presentation();
  std::vector<PcElement> gens{PcElement({1, 1, 0}), PcElement({0, 1, 0})};
  Igs igs = igs_from(P, gens, true);
  auto members = igs.members();
  for (std::size_t i = 0; i < members.size(); ++i) {
    Word w = igs.member_word(i);
    PcElement acc = P->identity();
    for (int l : w) acc = P->mul(acc, l > 0 ? gens[letter_generator(l)] : P->inv(gens[letter_generator(l)]));
    EXPECT_EQ(acc, members[i].elem);
  }
}

TEST(Igs, CanonicalCosetRepresentatives) {
  auto pc = s4();
  auto P = pc.presentation();
  Igs u = igs_from(P, {PcElement({1, 0, 0, 0}), PcElement({0, 0, 1, 0})});  // order 4
  ASSERT_EQ(u.order(), 4u);
  auto u_elems = oracle::closure({pc.gens[0], pc.gens[2]}, 4);
  std::set<PcElement> reps;
  for (const auto& v : pc.all_vectors) {
    PcElement r = canonical_right_coset_rep(u, v);
    reps.insert(r);
    // r lies in U*v
    oracle::Perm q = oracle::compose(pc.eval(r), oracle::invert(pc.eval(v)));
    EXPECT_EQ(u_elems.count(q), 1u);
  }
  EXPECT_EQ(reps.size(), 6u);
}

TEST(PcAutomorphism, InverseAutomorphismOfC3) {
  auto c3 = std::make_shared<PcPresentation>(std::vector<Exponent>{3});
  PcAutomorphism a(c3, {PcElement({2})});
  EXPECT_EQ(a.apply(PcElement({2})), PcElement({1}));
  EXPECT_TRUE(a.preserves_relations());
  EXPECT_TRUE(a.is_bijective());
  EXPECT_TRUE(a.compose(a).is_identity());
}

TEST(PcAutomorphism, ConjugationMatchesPermutations) {
  auto pc = s4();
  auto P = pc.presentation();
  for (const auto& g : pc.all_vectors) {
    std::vector<PcElement> im;
    for (std::size_t i = 0; i < P->size(); ++i) im.push_back(P->conjugate_by(P->generator(i), g));
    PcAutomorphism a(P, im);
    ASSERT_TRUE(a.preserves_relations());
    PcAutomorphism ai = a.inverse();
    a.build_segment_cache({0, 2});
    for (const auto& v : pc.all_vectors) {
      oracle::Perm gp = pc.eval(g);
      EXPECT_EQ(pc.eval(a.apply(v)), oracle::compose(oracle::compose(oracle::invert(gp), pc.eval(v)), gp));
      EXPECT_EQ(a.apply(v), a.apply_uncached(v));
      EXPECT_EQ(ai.apply(a.apply(v)), v);
    }
  }
}

TEST(PcAutomorphism, DetectsNonAutomorphisms) {
  auto pc = s4();
  auto P = pc.presentation();
  std::vector<PcElement> im(P->size(), P->identity());
  PcAutomorphism zero(P, im);
  EXPECT_FALSE(zero.is_bijective());
  // swapping a 2-cycle and a double transposition breaks the relations
  std::vector<PcElement> bad{P->generator(2), P->generator(1), P->generator(0), P->generator(3)};
  std::string why;
  EXPECT_FALSE(PcAutomorphism(P, bad).preserves_relations(&why));
  EXPECT_FALSE(why.empty());
}

TEST(PcAutomorphism, BottomMatrixAgreesWithCollection) {
  auto P = std::make_shared<PcPresentation>(std::vector<Exponent>{2, 2, 2, 2});
  // a linear map of F_2^4 given by a unipotent matrix
  std::vector<PcElement> im{PcElement({1, 1, 0, 0}), PcElement({0, 1, 1, 0}), PcElement({0, 0, 1, 1}), PcElement({0, 0, 0, 1})};
  PcAutomorphism a(P, im);
  PcAutomorphism plain = a;
  ASSERT_TRUE(a.build_bottom_matrix(0));
  for (unsigned m = 0; m < 16; ++m) {
    PcElement v({m & 1u, m >> 1 & 1u, m >> 2 & 1u, m >> 3 & 1u});
    EXPECT_EQ(a.apply(v), plain.apply_uncached(v));
  }
}

TEST(PcQuotient, S4ModKleinFour) {
  auto pc = s4();
  auto P = pc.presentation();
  Igs v4 = igs_from(P, {P->generator(2), P->generator(3)});
  PcQuotient q = pc_quotient(P, v4);
  EXPECT_EQ(q.quotient()->order(), 6u);
  const PcPresentation& Q = *q.quotient();
  for (const auto& a : pc.all_vectors)
    for (const auto& b : pc.all_vectors) ASSERT_EQ(q.project(P->mul(a, b)), Q.mul(q.project(a), q.project(b)));
  for (const auto& a : pc.all_vectors) EXPECT_EQ(q.project(a).is_identity(), v4.contains(a));
  for (const auto& a : pc.all_vectors) EXPECT_EQ(q.project(q.lift(q.project(a))), q.project(a));
}

TEST(PackedPcElement, RoundTripAndSize) {
  auto P = std::make_shared<PcPresentation>(std::vector<Exponent>(20, 2));
  std::mt19937_64 rng(29);
  for (int t = 0; t < 100; ++t) {
    PcElement e(20);
    for (auto& x : e.exps) x = rng() & 1;
    PackedPcElement p(*P, e);
    EXPECT_EQ(p.unpack(*P), e);
    EXPECT_EQ(p.bits(), 20u);
    EXPECT_LE(p.byte_size(), 3u);
  }
  auto mixed = std::make_shared<PcPresentation>(std::vector<Exponent>{2, 3, 5, 7});
  PcElement e({1, 2, 4, 6});
  EXPECT_EQ(PackedPcElement(*mixed, e).unpack(*mixed), e);
}
