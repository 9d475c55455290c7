#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <random>
#include <set>

#include "hybrid/fixtures.hpp"
#include "hybrid/subgrp.hpp"
#include "oracle.hpp"

using namespace hybrid;

namespace {

const Fixture& cached_fixture(const std::string& name) {
  static std::map<std::string, Fixture> all;
  auto it = all.find(name);
  if (it == all.end()) it = all.emplace(name, fixture(name)).first;
  return it->second;
}

HybridElement el(const HybridGroup& G, Letters w, std::vector<Exponent> b) { return G.make(w, PcElement(std::move(b))); }

oracle::Perm to_oracle(const Permutation& p) {
  oracle::Perm r(p.degree());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = static_cast<int>(p[static_cast<Permutation::Point>(i)]);
  return r;
}

std::set<oracle::Perm> reference_closure(const Fixture& f, const std::vector<HybridElement>& gens) {
  std::vector<oracle::Perm> perms;
  for (const auto& g : gens) perms.push_back(to_oracle(f.reference->to_perm(g)));
  return oracle::closure(perms, f.reference->degree);
}

HybridElement random_word(const HybridGroup& G, const std::vector<HybridElement>& gens, std::mt19937_64& rng) {
  HybridElement acc = G.identity();
  for (int k = 0; k < 20; ++k) acc = G.mul(acc, gens[rng() % gens.size()]);
  return acc;
}

std::vector<HybridElement> whole_group(const HybridGroup& G) {
  std::vector<HybridElement> out;
  for (std::size_t i = 0; i < G.rank(); ++i) out.push_back(G.generator(i));
  for (std::size_t i = 0; i < G.b_pres().size(); ++i) out.push_back(G.b_element(G.b_pres().generator(i)));
  return out;
}

std::vector<HybridElement> enumerate(const HybridGroup& G, const std::vector<HybridElement>& gens) {
  std::vector<HybridElement> elems{G.identity()};
  std::unordered_set<HybridElement, HybridElementHash> seen{G.identity()};
  for (std::size_t i = 0; i < elems.size(); ++i)
    for (const auto& g : gens) {
      HybridElement h = G.mul(elems[i], g);
      if (seen.insert(h).second) elems.push_back(h);
    }
  return elems;
}

}  // namespace

TEST(HybridBits, SmallExamples) {
  const HybridGroup& G = cached_fixture("F1").group;
  EXPECT_EQ(HybridBits(G, {el(G, {0}, {1})}).order(), 2u);
  HybridBits y(G, {el(G, {}, {1})});
  EXPECT_EQ(y.order(), 3u);
  EXPECT_FALSE(y.contains(el(G, {0}, {0})));
  EXPECT_TRUE(y.contains(el(G, {}, {2})));
  EXPECT_EQ(HybridBits(G, {}).order(), 1u);
  EXPECT_EQ(HybridBits(G, whole_group(G)).order(), 6u);
}

TEST(HybridBits, OrdersOfRandomSubgroupsMatchTheReference) {
  std::mt19937_64 rng(31);
  for (const char* name : {"F1", "F2", "F3", "F4", "F5", "F5split"}) {
    const auto& f = cached_fixture(name);
    for (int t = 0; t < 20; ++t) {
      std::vector<HybridElement> gens;
      for (std::size_t k = 0, n = 1 + rng() % 3; k < n; ++k) gens.push_back(f.group.random_element(rng));
      HybridBits S(f.group, gens);
      EXPECT_EQ(S.order(), reference_closure(f, gens).size()) << name;
    }
  }
}

TEST(HybridBits, MembershipMatchesTheReference) {
  std::mt19937_64 rng(32);
  for (const char* name : {"F2", "F3", "F4"}) {
    const auto& f = cached_fixture(name);
    for (int t = 0; t < 5; ++t) {
      std::vector<HybridElement> gens{f.group.random_element(rng)};
      auto elems = reference_closure(f, gens);
      HybridBits S(f.group, gens);
      for (int p = 0; p < 100; ++p) {
        HybridElement g = f.group.random_element(rng);
        EXPECT_EQ(S.contains(g), elems.count(to_oracle(f.reference->to_perm(g))) == 1) << name;
      }
    }
  }
}

TEST(HybridBits, ShortWordSeedingGivesTheSameSubgroup) {
  std::mt19937_64 rng(33);
  const auto& f = cached_fixture("F4");
  for (int t = 0; t < 5; ++t) {
    std::vector<HybridElement> gens{f.group.random_element(rng), f.group.random_element(rng)};
    BitsOptions opt;
    opt.short_word_bound = 3;
    EXPECT_EQ(HybridBits(f.group, gens, opt).order(), HybridBits(f.group, gens).order());
  }
}

TEST(Express, WordsEvaluateBack) {
  std::mt19937_64 rng(34);
  for (const char* name : {"F1", "F3", "F4"}) {
    const HybridGroup& G = cached_fixture(name).group;
    std::vector<HybridElement> gens{G.random_element(rng), G.random_element(rng)};
    HybridBits S(G, gens);
    std::vector<HybridElement> invs;
    for (const auto& g : gens) invs.push_back(G.inv(g));
    for (int t = 0; t < 50; ++t) {
      HybridElement g = random_word(G, gens, rng);
      Word w = S.express(g);
      HybridElement back = evaluate_word<HybridElement>(
          w, gens, invs, G.identity(), [&](const HybridElement& a, const HybridElement& b) { return G.mul(a, b); });
      EXPECT_EQ(back, g) << name;
    }
  }
}

TEST(Express, RejectsNonMembers) {
  const HybridGroup& G = cached_fixture("F1").group;
  HybridBits y(G, {el(G, {}, {1})});
  EXPECT_THROW(y.express(G.generator(0)), ArgumentError);
  EXPECT_TRUE(y.express(G.identity()).empty());
}

TEST(EvaluateHom, ReferenceMapIsReproduced) {
  std::mt19937_64 rng(35);
  for (const char* name : {"F2", "F3", "F4"}) {
    const auto& f = cached_fixture(name);
    const HybridGroup& G = f.group;
    std::vector<HybridElement> gens = whole_group(G);
    HybridBits S(G, gens);
    std::vector<Permutation> images;
    for (const auto& g : gens) images.push_back(f.reference->to_perm(g));
    auto mul = [](const Permutation& a, const Permutation& b) { return a * b; };
    auto inv = [](const Permutation& a) { return a.inverse(); };
    Permutation id(f.reference->degree);
    EXPECT_TRUE(S.images_define_homomorphism<Permutation>(images, id, mul, std::equal_to<>{}));
    for (int t = 0; t < 100; ++t) {
      HybridElement g = G.random_element(rng);
      EXPECT_EQ(S.evaluate_hom<Permutation>(images, g, id, mul, inv), f.reference->to_perm(g)) << name;
    }
  }
}

TEST(EvaluateHom, StrictCheckRejectsBadImages) {
  const auto& f = cached_fixture("F1");
  const HybridGroup& G = f.group;
  HybridBits S(G, whole_group(G));
  std::vector<Permutation> images{parse_permutation("(1,2,3)", 3), Permutation(3)};
  auto mul = [](const Permutation& a, const Permutation& b) { return a * b; };
  EXPECT_FALSE(S.images_define_homomorphism<Permutation>(images, Permutation(3), mul, std::equal_to<>{}));
  // a genuine map onto C2 = S3/C3
  std::vector<Permutation> sign{parse_permutation("(1,2)", 2), Permutation(2)};
  EXPECT_TRUE(S.images_define_homomorphism<Permutation>(sign, Permutation(2), mul, std::equal_to<>{}));
}

TEST(Transversal, F1AgainstTheNormalC3) {
  const HybridGroup& G = cached_fixture("F1").group;
  HybridBits S(G, whole_group(G)), U(G, {el(G, {}, {1})});
  HybridTransversal T(S, U);
  EXPECT_EQ(T.index(), 2u);
}

TEST(Transversal, RepresentativesTimesUEnumerateS) {
  std::mt19937_64 rng(36);
  for (const char* name : {"F1", "F2", "F3", "F4", "F5"}) {
    const HybridGroup& G = cached_fixture(name).group;
    for (int t = 0; t < 6; ++t) {
      std::vector<HybridElement> sg = t == 0 ? whole_group(G) : std::vector<HybridElement>{G.random_element(rng), G.random_element(rng)};
      HybridBits S(G, sg);
      if (S.order() > 1000) continue;
      std::vector<HybridElement> ug{random_word(G, sg, rng)};
      HybridBits U(G, ug);
      HybridTransversal T(S, U);
      ASSERT_EQ(T.index() * U.order(), S.order()) << name;
      auto u_elems = enumerate(G, ug);
      std::unordered_set<HybridElement, HybridElementHash> seen;
      for (std::size_t i = 0; i < T.index(); ++i) {
        HybridElement r = T.representative(i);
        EXPECT_EQ(T.coset_id(r), i) << name;
        for (const auto& u : u_elems) EXPECT_TRUE(seen.insert(G.mul(u, r)).second) << name;
      }
      EXPECT_EQ(seen.size(), S.order()) << name;
      for (int p = 0; p < 100; ++p) {
        HybridElement s = random_word(G, sg, rng);
        HybridElement u = u_elems[rng() % u_elems.size()];
        EXPECT_EQ(T.coset_id(G.mul(u, s)), T.coset_id(s)) << name;
      }
    }
  }
}

TEST(FactorGroup, S4ModKleinFour) {
  const auto& f = cached_fixture("F2");
  const HybridGroup& G = f.group;
  std::vector<HybridElement> v4;
  for (std::size_t i = 0; i < G.b_pres().size(); ++i) v4.push_back(G.b_element(G.b_pres().generator(i)));
  HybridBits N(G, v4);
  FactorGroup Q(G, N);
  EXPECT_EQ(Q.group().group_order(), 6u);
  std::uint64_t exponent = 1;
  for (const auto& q : enumerate(Q.group(), whole_group(Q.group()))) exponent = std::lcm(exponent, Q.group().order(q));
  EXPECT_EQ(exponent, 6u);
  std::mt19937_64 rng(37);
  for (int t = 0; t < 1000; ++t) {
    HybridElement g = G.random_element(rng), h = G.random_element(rng);
    ASSERT_EQ(Q.image(G.mul(g, h)), Q.group().mul(Q.image(g), Q.image(h)));
  }
}

TEST(FactorGroup, C4ModItsCentre) {
  const HybridGroup& G = cached_fixture("F5").group;
  FactorGroup Q(G, HybridBits(G, {el(G, {}, {1})}));
  EXPECT_EQ(Q.group().group_order(), 2u);
  EXPECT_TRUE(Q.image(el(G, {}, {1})).is_identity());
}

TEST(FactorGroup, TrivialKernelGivesACopy) {
  const HybridGroup& G = cached_fixture("F3").group;
  FactorGroup Q(G, HybridBits(G, {}));
  EXPECT_EQ(Q.group().group_order(), G.group_order());
  std::mt19937_64 rng(38);
  for (int t = 0; t < 200; ++t) {
    HybridElement g = G.random_element(rng), h = G.random_element(rng);
    HybridElement p = Q.group().mul(Q.image(g), Q.image(h));
    EXPECT_EQ(p.xword, G.mul(g, h).xword);
    EXPECT_EQ(p.bpart, G.mul(g, h).bpart);
  }
}

TEST(FactorGroup, RejectsBadKernels) {
  const HybridGroup& F1 = cached_fixture("F1").group;
  EXPECT_THROW(FactorGroup(F1, HybridBits(F1, {F1.generator(0)})), ArgumentError);
  // <y4> in S4's pc group is not normal
  const HybridGroup& F2 = cached_fixture("F2").group;
  EXPECT_THROW(FactorGroup(F2, HybridBits(F2, {F2.b_element(F2.b_pres().generator(1))})), ArgumentError);
}

TEST(KernelShortWords, FindsTheNonsplitSquare) {
  const HybridGroup& G = cached_fixture("F5").group;
  auto words = kernel_short_words(G, {G.generator(0)}, 2);
  ASSERT_EQ(words.size(), 1u);
  EXPECT_EQ(words[0], el(G, {}, {1}));
  EXPECT_TRUE(kernel_short_words(G, {G.generator(0)}, 0).empty());
}
