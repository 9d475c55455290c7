#include <gtest/gtest.h>

#include <random>
#include <set>

#include "hybrid/prefix_tree.hpp"
#include "hybrid/rws.hpp"
#include "oracle.hpp"

using namespace hybrid;

namespace {

struct SmallGroup {
  const char* name;
  std::uint64_t order;
  MonoidPresentation pres;
  // permutation images of the generators, for checking words
  std::size_t degree;
  std::vector<const char*> perms;
};

MonoidPresentation mp(int k, std::vector<std::uint64_t> orders, std::vector<Letters> rels) {
  MonoidPresentation p;
  p.alphabet_size = k;
  p.generator_orders = std::move(orders);
  for (auto& r : rels) p.relations.emplace_back(std::move(r), Letters{});
  return p;
}

// the groups used for the completion criterion; relators are positive
const std::vector<SmallGroup>& small_groups() {
  static const std::vector<SmallGroup> g{
      {"C2", 2, mp(1, {2}, {}), 2, {"(1,2)"}},
      {"C3", 3, mp(1, {3}, {}), 3, {"(1,2,3)"}},
      {"V4", 4, mp(2, {2, 2}, {{0, 1, 0, 1}}), 4, {"(1,2)", "(3,4)"}},
      {"S3", 6, mp(2, {2, 3}, {{0, 1, 0, 1}}), 3, {"(1,2)", "(1,2,3)"}},
      {"D8", 8, mp(2, {2, 4}, {{0, 1, 0, 1}}), 4, {"(1,3)", "(1,2,3,4)"}},
      // Q8 = <i, j | i^4, j^4, i^2 = j^2, j^-1 i j = i^-1>, written positively
      {"Q8", 8, mp(2, {4, 4}, {{0, 0, 1, 1}, {1, 1, 1, 0, 1, 0}}), 8,
       {"(1,2,4,7)(3,8,6,5)", "(1,3,4,6)(2,5,7,8)"}},
      {"A4", 12, mp(2, {2, 3}, {{0, 1, 0, 1, 0, 1}}), 4, {"(1,2)(3,4)", "(1,2,3)"}},
      {"S4", 24, mp(2, {2, 4}, {{0, 1, 0, 1, 0, 1}}), 4, {"(1,2)", "(1,2,3,4)"}},
  };
  return g;
}

std::vector<std::vector<int>> relators_of(const MonoidPresentation& p) {
  std::vector<std::vector<int>> out;
  for (const auto& [l, r] : p.relations) {
    std::vector<int> w = l;
    // r^-1 with inverse letters encoded as g + k
    for (auto it = r.rbegin(); it != r.rend(); ++it) w.push_back(*it + p.alphabet_size);
    out.push_back(w);
  }
  for (std::size_t g = 0; g < p.generator_orders.size(); ++g) out.emplace_back(p.generator_orders[g], static_cast<int>(g));
  return out;
}

oracle::Perm eval(const Letters& w, const SmallGroup& g) {
  oracle::Perm acc = oracle::identity(g.degree);
  for (int a : w) acc = oracle::compose(acc, oracle::parse_cycles(g.perms[a], g.degree));
  return acc;
}

RewritingSystem s3_wreath() {
  // a = x1 on the higher level
  return RewritingSystem(2, {Rule{{1, 0}, {0, 1, 1}}, Rule{{0, 0}, {}}, Rule{{1, 1, 1}, {}}}, Ordering::wreath({1, 0}));
}

}  // namespace

TEST(PrefixTree, ShortestPrefixMatch) {
  PrefixTree t(2);
  t.insert(Letters{0, 1}, 7);
  t.insert(Letters{0, 1, 1}, 8);
  t.insert(Letters{1}, 9);
  Letters w{0, 0, 1, 1};
  EXPECT_FALSE(t.match_at(w, 0));
  EXPECT_EQ(t.match_at(w, 1), 7);
  EXPECT_EQ(t.match_at(w, 2), 9);
  EXPECT_EQ(t.max_depth(), 3u);
}

TEST(Ordering, Shortlex) {
  Ordering o = Ordering::shortlex(2);
  EXPECT_TRUE(o.less(Letters{1}, Letters{0, 0}));
  EXPECT_TRUE(o.less(Letters{0, 1}, Letters{1, 0}));
  Ordering r = Ordering::shortlex(std::vector<int>{1, 0});
  EXPECT_TRUE(r.less(Letters{1, 0}, Letters{0, 1}));
}

TEST(Ordering, WreathPutsHigherLevelLettersFirst) {
  Ordering o = Ordering::wreath({1, 0});
  // fewer level-1 letters wins regardless of length
  EXPECT_TRUE(o.less(Letters{1, 1, 1, 1}, Letters{0}));
  // same level-1 letters: compare the level-0 segments left to right
  EXPECT_TRUE(o.less(Letters{0, 1, 1}, Letters{1, 0}));
  EXPECT_EQ(o.compare(Letters{1, 0}, Letters{1, 0}), 0);
}

TEST(RewritingSystem, RejectsNonDecreasingRules) {
  EXPECT_THROW(RewritingSystem(2, {Rule{{0}, {0, 0}}}, Ordering::shortlex(2)), ArgumentError);
  EXPECT_THROW(RewritingSystem(2, {Rule{{1, 0}, {0, 1, 1}}}, Ordering::shortlex(2)), ArgumentError);
}

TEST(RewritingSystem, S3WreathSystemIsConfluentAndReducesCorrectly) {
  RewritingSystem rws = s3_wreath();
  EXPECT_TRUE(is_confluent(rws).confluent);
  const SmallGroup& s3 = small_groups()[3];
  std::mt19937_64 rng(41);
  std::set<Letters> forms;
  for (int t = 0; t < 300; ++t) {
    Letters w;
    for (std::size_t i = 0, n = rng() % 10; i < n; ++i) w.push_back(static_cast<int>(rng() % 2));
    Letters r = rws.reduce(w);
    EXPECT_EQ(eval(r, s3), eval(w, s3));
    EXPECT_TRUE(rws.is_irreducible(r));
    forms.insert(r);
  }
  EXPECT_EQ(enumerate_normal_forms(rws, 100).size(), 6u);
  EXPECT_LE(forms.size(), 6u);
}

TEST(RewritingSystem, ReportsACriticalPairWhenNotConfluent) {
  RewritingSystem rws(2, {Rule{{0, 0}, {}}, Rule{{1, 1, 1}, {}}, Rule{{0, 1, 0}, {1, 1}}}, Ordering::shortlex(2));
  ConfluenceReport rep = is_confluent(rws);
  ASSERT_FALSE(rep.confluent);
  ASSERT_TRUE(rep.witness);
  const SmallGroup& s3 = small_groups()[3];
  // both sides are equal in the group, differ as irreducible words
  EXPECT_EQ(eval(rep.witness->first, s3), eval(rep.witness->second, s3));
  EXPECT_NE(rws.reduce(rep.witness->first), rws.reduce(rep.witness->second));
}

TEST(KnuthBendix, CompletesSmallGroupsToTheRightSize) {
  for (const auto& g : small_groups()) {
    std::uint64_t expected = oracle::todd_coxeter(g.pres.alphabet_size, relators_of(g.pres));
    ASSERT_EQ(expected, g.order) << g.name;
    auto res = knuth_bendix(g.pres, Ordering::shortlex(g.pres.alphabet_size));
    ASSERT_TRUE(res.success) << g.name << ": " << res.message;
    EXPECT_TRUE(is_confluent(res.system).confluent) << g.name;
    auto nf = enumerate_normal_forms(res.system, 1000);
    EXPECT_EQ(nf.size(), g.order) << g.name;
    // distinct normal forms are distinct group elements
    std::set<oracle::Perm> images;
    for (const auto& w : nf) images.insert(eval(w, g));
    EXPECT_EQ(images.size(), g.order) << g.name;
  }
}

TEST(KnuthBendix, WreathOrderingGivesTheSemidirectForm) {
  auto res = knuth_bendix(small_groups()[3].pres, Ordering::wreath({1, 0}));
  ASSERT_TRUE(res.success);
  RewritingSystem r = reduce_system(res.system);
  std::set<std::pair<Letters, Letters>> got;
  for (const auto& rule : r.rules()) got.emplace(rule.left, rule.right);
  std::set<std::pair<Letters, Letters>> want{{{1, 0}, {0, 1, 1}}, {{0, 0}, {}}, {{1, 1, 1}, {}}};
  EXPECT_EQ(got, want);
}

TEST(KnuthBendix, RespectsTheRuleLimit) {
  CompletionLimits lim;
  lim.max_rules = 2;
  auto res = knuth_bendix(small_groups()[7].pres, Ordering::shortlex(2), lim);
  EXPECT_FALSE(res.success);
  EXPECT_FALSE(res.message.empty());
}

TEST(ReduceSystem, KeepsTheMonoidAndIsInterreduced) {
  for (const auto& g : small_groups()) {
    auto res = knuth_bendix(g.pres, Ordering::shortlex(g.pres.alphabet_size));
    ASSERT_TRUE(res.success);
    RewritingSystem r = reduce_system(res.system);
    EXPECT_TRUE(is_confluent(r).confluent) << g.name;
    EXPECT_EQ(enumerate_normal_forms(r, 1000).size(), g.order) << g.name;
    for (std::size_t i = 0; i < r.rules().size(); ++i) {
      EXPECT_TRUE(r.is_irreducible(r.rules()[i].right)) << g.name;
      std::vector<Rule> others = r.rules();
      others.erase(others.begin() + static_cast<std::ptrdiff_t>(i));
      RewritingSystem rest(r.alphabet_size(), others, r.ordering());
      EXPECT_TRUE(rest.is_irreducible(r.rules()[i].left)) << g.name;
    }
  }
}

TEST(NormalForms, CountMatchesIrreducibleWordOracle) {
  RewritingSystem rws = s3_wreath();
  std::vector<std::vector<int>> lefts;
  for (const auto& r : rws.rules()) lefts.push_back(r.left);
  EXPECT_EQ(oracle::count_irreducible(2, lefts, 8), enumerate_normal_forms(rws, 100).size());
  EXPECT_THROW(enumerate_normal_forms(rws, 3), LimitError);
}
