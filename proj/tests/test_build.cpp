#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <random>

#include "hybrid/fixtures.hpp"
#include "hybrid/io.hpp"
#include "oracle.hpp"

using namespace hybrid;

namespace {

const Fixture& cached_fixture(const std::string& name) {
  static std::map<std::string, Fixture> all;
  auto it = all.find(name);
  if (it == all.end()) it = all.emplace(name, fixture(name)).first;
  return it->second;
}

oracle::Perm to_oracle(const Permutation& p) {
  oracle::Perm r(p.degree());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = static_cast<int>(p[static_cast<Permutation::Point>(i)]);
  return r;
}

std::vector<HybridElement> all_elements(const HybridGroup& G) {
  std::vector<HybridElement> gens;
  for (std::size_t i = 0; i < G.rank(); ++i) gens.push_back(G.generator(i));
  for (std::size_t i = 0; i < G.b_pres().size(); ++i) gens.push_back(G.b_element(G.b_pres().generator(i)));
  std::vector<HybridElement> elems{G.identity()};
  std::unordered_set<HybridElement, HybridElementHash> seen{G.identity()};
  for (std::size_t i = 0; i < elems.size(); ++i)
    for (const auto& g : gens) {
      HybridElement h = G.mul(elems[i], g);
      if (seen.insert(h).second) elems.push_back(h);
    }
  return elems;
}

std::uint64_t exponent_of(const HybridGroup& G) {
  std::uint64_t e = 1;
  for (const auto& g : all_elements(G)) e = std::lcm(e, G.order(g));
  return e;
}

const ValidationCheck* find_check(const ValidationReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}

// S3 data with a chosen action on y and a chosen tail for x*x.
ExtensionData f1_data(Exponent image_of_y, std::vector<Exponent> tail = {0}) {
  return detail::c2_top("F1", {3}, PcElement(std::move(tail)), {PcElement({image_of_y})});
}

ReferenceRep f1_reference() { return {3, {detail::cycles(3, "(1,2)")}, {detail::cycles(3, "(1,2,3)")}, {}}; }

}  // namespace

TEST(Fixtures, OrdersAreAsDocumented) {
  const std::map<std::string, std::uint64_t> expected{{"F1", 6},  {"F2", 24}, {"F3", 24},      {"F4", 960},
                                                      {"F5", 4},  {"F5split", 4}, {"F6", 62914560}};
  for (const auto& [name, order] : expected) EXPECT_EQ(cached_fixture(name).group.group_order(), order) << name;
}

TEST(Fixtures, AllValidate) {
  for (const auto& name : fixture_names()) {
    const auto& f = cached_fixture(name);
    auto rep = validate(f.group, f.reference ? &*f.reference : nullptr);
    EXPECT_TRUE(rep.overall) << name << ": " << (rep.first_failure() ? rep.first_failure()->name : "");
  }
}

TEST(Fixtures, StrictValidationOnSmallGroups) {
  ValidateOptions opt;
  opt.strict = true;
  for (const char* name : {"F1", "F2", "F3", "F5", "F5split"}) {
    const auto& f = cached_fixture(name);
    EXPECT_TRUE(validate(f.group, &*f.reference, opt).overall) << name;
  }
}

TEST(Fixtures, ReferenceIsABijectionOntoThePermutationGroup) {
  for (const char* name : {"F1", "F2", "F3", "F4", "F5"}) {
    const auto& f = cached_fixture(name);
    std::vector<oracle::Perm> gens;
    for (const auto& p : f.reference->generators()) gens.push_back(to_oracle(p));
    auto target = oracle::closure(gens, f.reference->degree);
    std::set<oracle::Perm> hit;
    for (const auto& g : all_elements(f.group)) {
      Permutation p = f.reference->to_perm(g);
      hit.insert(to_oracle(p));
      EXPECT_EQ(f.reference->from_perm(p), g) << name;
    }
    EXPECT_EQ(hit, target) << name;
  }
}

TEST(Fixtures, SplitAndNonsplitC2ByC2AreDistinguishedByOrders) {
  EXPECT_EQ(exponent_of(cached_fixture("F5").group), 4u);
  EXPECT_EQ(exponent_of(cached_fixture("F5split").group), 2u);
}

TEST(Validate, NonBijectiveActionIsNamed) {
  auto rep = validate(f1_data(0));
  EXPECT_FALSE(rep.overall);
  ASSERT_NE(rep.first_failure(), nullptr);
  EXPECT_EQ(rep.first_failure()->name, "automorphisms");
  EXPECT_NE(rep.first_failure()->witness.find("alpha_x1"), std::string::npos);
}

TEST(Validate, IdentityActionIsCaughtOnlyByTheReference) {
  // with y^x = y the data describe C6, a genuine group
  EXPECT_TRUE(validate(f1_data(1)).overall);
  ReferenceRep ref = f1_reference();
  auto rep = validate(f1_data(1), &ref);
  ASSERT_NE(rep.first_failure(), nullptr);
  EXPECT_EQ(rep.first_failure()->name, "reference");
  EXPECT_NE(rep.first_failure()->witness.find("g = "), std::string::npos);
}

TEST(Validate, TailNotFixedByTheActionBreaksAssociativity) {
  // x*x = y while y^x = y^2 cannot hold in a group
  auto rep = validate(f1_data(2, {1}));
  ASSERT_NE(rep.first_failure(), nullptr);
  EXPECT_EQ(rep.first_failure()->name, "associativity");
  EXPECT_NE(rep.first_failure()->witness.find("(g*h)*k != g*(h*k)"), std::string::npos);
}

TEST(Validate, TailOutsideBIsStructural) {
  auto rep = validate(f1_data(2, {0, 1}));
  EXPECT_FALSE(rep.overall);
  ASSERT_NE(rep.first_failure(), nullptr);
  EXPECT_TRUE(rep.first_failure()->name == "structure" || rep.first_failure()->name == "tails")
      << rep.first_failure()->name;
}

TEST(Validate, NonConfluentRulesAreWitnessed) {
  ExtensionData d = f1_data(2);
  // x*x*x -> 1 alone leaves x*x irreducible while nu(x*x) is trivial
  d.rules = RewritingSystem(1, {Rule{{0, 0, 0}, {}}}, Ordering::shortlex(1));
  auto rep = validate(d);
  EXPECT_FALSE(rep.overall);
  EXPECT_FALSE(find_check(rep, "factor rules")->pass);
}

TEST(Validate, ConstructorRefusesBadData) {
  EXPECT_THROW(from_extension_data(f1_data(0)), ValidationError);
  EXPECT_NO_THROW(from_extension_data(f1_data(2)));
}

TEST(FromPermutationGroup, IsDeterministic) {
  auto gens = std::vector<Permutation>{detail::cycles(4, "(1,2,3,4)"), detail::cycles(4, "(1,2)")};
  auto b = std::vector<Permutation>{detail::cycles(4, "(1,2)(3,4)"), detail::cycles(4, "(1,3)(2,4)")};
  BuiltGroup one = from_permutation_group(gens, b), two = from_permutation_group(gens, b);
  EXPECT_EQ(group_to_json(one.group, "S4").dump(), group_to_json(two.group, "S4").dump());
  EXPECT_EQ(one.reference.y_images, two.reference.y_images);
}

TEST(FromPermutationGroup, GeneratorsInsideBAreDropped) {
  auto gens = std::vector<Permutation>{detail::cycles(4, "(1,2)(3,4)"), detail::cycles(4, "(1,2,3)")};
  auto b = std::vector<Permutation>{detail::cycles(4, "(1,2)(3,4)"), detail::cycles(4, "(1,3)(2,4)")};
  BuiltGroup a4 = from_permutation_group(gens, b);
  EXPECT_EQ(a4.group.rank(), 1u);
  EXPECT_EQ(a4.group.group_order(), 12u);
  EXPECT_TRUE(validate(a4.group, &a4.reference).overall);
}

TEST(FromPermutationGroup, SolvableGroupWithDeepSeries) {
  // S4 with B = S4 itself and an empty factor
  auto gens = std::vector<Permutation>{detail::cycles(4, "(1,2,3,4)"), detail::cycles(4, "(1,2)")};
  BuiltGroup s4 = from_permutation_group(gens, gens);
  EXPECT_EQ(s4.group.rank(), 0u);
  EXPECT_EQ(s4.group.b_pres().order(), 24u);
  EXPECT_TRUE(validate(s4.group, &s4.reference).overall);
}

TEST(FromPermutationGroup, RejectsBadB) {
  auto gens = std::vector<Permutation>{detail::cycles(4, "(1,2,3,4)"), detail::cycles(4, "(1,2)")};
  EXPECT_THROW(from_permutation_group(gens, {detail::cycles(4, "(1,2)")}), ValidationError);
  EXPECT_THROW(from_permutation_group({detail::cycles(4, "(1,2,3)")}, {detail::cycles(4, "(1,2)")}), ValidationError);
  auto a5 = std::vector<Permutation>{detail::cycles(5, "(1,2)(3,4)"), detail::cycles(5, "(1,3,5)")};
  EXPECT_THROW(from_permutation_group(a5, a5), ValidationError);
}
