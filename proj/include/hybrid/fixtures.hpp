#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hybrid/build.hpp"

namespace hybrid {

struct Fixture {
  std::string name;
  HybridGroup group;
  std::optional<ReferenceRep> reference;
};

namespace detail {

inline Permutation cycles(std::size_t degree, std::string_view text) { return parse_permutation(text, degree); }

/// Inverse of the reference map for small explicit fixtures, by enumeration.
inline void attach_enumerated_inverse(const HybridGroup& G, ReferenceRep& ref) {
  auto table = std::make_shared<std::unordered_map<Permutation, HybridElement, PermutationHash>>();
  const PcPresentation& B = G.b_pres();
  std::vector<PcElement> b_elems{B.identity()};
  for (std::size_t i = 0; i < B.size(); ++i) {
    std::vector<PcElement> next;
    for (const auto& e : b_elems)
      for (Exponent c = 0; c < B.relative_order(i); ++c) {
        PcElement f = e;
        f.exps[i] = c;
        next.push_back(std::move(f));
      }
    b_elems = std::move(next);
  }
  for (const auto& p : G.factor_chain().elements()) {
    HybridElement a = G.preimage(p);
    for (const auto& b : b_elems) {
      HybridElement g = G.mul(a, G.b_element(b));
      table->emplace(ref.to_perm(g), g);
    }
  }
  ref.from_perm = [table](const Permutation& p) {
    auto it = table->find(p);
    if (it == table->end()) throw ArgumentError("reference: permutation is not in the group");
    return it->second;
  };
}

inline Fixture explicit_fixture(ExtensionData d, ReferenceRep ref) {
  std::string name = d.name;
  HybridGroup G = from_extension_data(d);
  attach_enumerated_inverse(G, ref);
  return {std::move(name), std::move(G), std::move(ref)};
}

inline Fixture built_fixture(std::string name, const std::vector<Permutation>& g, const std::vector<Permutation>& b) {
  BuiltGroup built = from_permutation_group(g, b);
  return {std::move(name), std::move(built.group), std::move(built.reference)};
}

/// A = C2 = <x> acting as (1,2), with the single rule x*x -> tail.
inline ExtensionData c2_top(std::string name, std::vector<Exponent> b_orders, PcElement tail, std::vector<PcElement> alpha) {
  ExtensionData d;
  d.name = std::move(name);
  d.perm_images = {cycles(2, "(1,2)")};
  d.rules = RewritingSystem(1, {Rule{{0, 0}, {}}}, Ordering::shortlex(1));
  d.b_pres = std::make_shared<PcPresentation>(std::move(b_orders));
  d.tails = {std::move(tail)};
  d.action = {std::move(alpha)};
  return d;
}

/// Permutation of the 8 nonzero row vectors of F_3^2 under v -> v*[[a,b],[c,d]].
inline Permutation f3_matrix(int a, int b, int c, int d) {
  auto index = [](int u, int v) { return static_cast<Permutation::Point>(u * 3 + v - 1); };
  std::vector<Permutation::Point> img(8);
  for (int u = 0; u < 3; ++u)
    for (int v = 0; v < 3; ++v) {
      if (!u && !v) continue;
      int nu = ((u * a + v * c) % 3 + 3) % 3, nv = ((u * b + v * d) % 3 + 3) % 3;
      img[index(u, v)] = index(nu, nv);
    }
  return Permutation(std::move(img));
}

/// Affine map v -> v^pi + t on the 16 even-weight vectors of F_2^5.
inline Permutation f4_affine(const std::vector<int>& pi, unsigned t) {
  std::vector<unsigned> pts;
  for (unsigned v = 0; v < 32; ++v)
    if (__builtin_popcount(v) % 2 == 0) pts.push_back(v);
  auto index = [&](unsigned v) {
    return static_cast<Permutation::Point>(std::find(pts.begin(), pts.end(), v) - pts.begin());
  };
  std::vector<Permutation::Point> img;
  for (unsigned v : pts) {
    unsigned w = 0;
    for (int i = 0; i < 5; ++i)
      if (v >> i & 1u) w |= 1u << pi[i];
    img.push_back(index(w ^ t));
  }
  return Permutation(std::move(img));
}

}  // namespace detail

/// S3 as C3 by C2: x*x -> 1, y^x = y^2.
inline Fixture fixture_f1() {
  auto d = detail::c2_top("F1", {3}, PcElement({0}), {PcElement({2})});
  ReferenceRep ref{3, {detail::cycles(3, "(1,2)")}, {detail::cycles(3, "(1,2,3)")}, {}};
  return detail::explicit_fixture(std::move(d), std::move(ref));
}

/// S4 over the Klein four group.
inline Fixture fixture_f2() {
  return detail::built_fixture("F2", {detail::cycles(4, "(1,2,3,4)"), detail::cycles(4, "(1,2)")},
                               {detail::cycles(4, "(1,2)(3,4)"), detail::cycles(4, "(1,3)(2,4)")});
}

/// SL(2,3) over Q8, acting on the nonzero vectors of F_3^2.
inline Fixture fixture_f3() {
  using detail::f3_matrix;
  return detail::built_fixture("F3", {f3_matrix(1, 1, 0, 1), f3_matrix(1, 0, 1, 1)},
                               {f3_matrix(0, -1, 1, 0), f3_matrix(1, 1, 1, -1)});
}

/// 2^4:A5 as affine maps of the even-weight vectors of F_2^5.
inline Fixture fixture_f4() {
  using detail::f4_affine;
  std::vector<int> id{0, 1, 2, 3, 4}, five{1, 2, 3, 4, 0}, three{1, 2, 0, 3, 4};
  std::vector<Permutation> b;
  for (int i = 0; i < 4; ++i) b.push_back(f4_affine(id, (1u << i) | (1u << (i + 1))));
  return detail::built_fixture("F4", {f4_affine(five, 0), f4_affine(three, 0), f4_affine(id, 3u)}, b);
}

/// C4 as the nonsplit extension of C2 by C2: x*x -> y.
inline Fixture fixture_f5() {
  auto d = detail::c2_top("F5", {2}, PcElement({1}), {PcElement({1})});
  ReferenceRep ref{4, {detail::cycles(4, "(1,2,3,4)")}, {detail::cycles(4, "(1,3)(2,4)")}, {}};
  return detail::explicit_fixture(std::move(d), std::move(ref));
}

/// The split counterpart of F5, C2 x C2.
inline Fixture fixture_f5_split() {
  auto d = detail::c2_top("F5split", {2}, PcElement({0}), {PcElement({1})});
  ReferenceRep ref{4, {detail::cycles(4, "(1,2)")}, {detail::cycles(4, "(3,4)")}, {}};
  return detail::explicit_fixture(std::move(d), std::move(ref));
}

/// 2^(4c):A5 with c copies of the natural module, basis v_i = e_i + e_5.
/// Validation is left to the caller since closure checks do not apply.
inline HybridGroup split_a5_module(std::size_t copies) {
  ExtensionData d;
  d.name = "F6";
  d.perm_images = {detail::cycles(5, "(1,2)(3,4)"), detail::cycles(5, "(1,3,5)")};
  Presentation pres = presentation_from(schreier_sims(d.perm_images, 5));
  MonoidPresentation mp;
  mp.alphabet_size = 2;
  for (auto& r : pres.relators) mp.relations.emplace_back(std::move(r), Letters{});
  mp.generator_orders = {2, 3};
  auto res = knuth_bendix(mp, Ordering::shortlex(2));
  if (!res.success) throw LimitError("F6: completion failed");
  d.rules = reduce_system(res.system);
  const std::size_t n = 4 * copies;
  std::vector<std::size_t> layers;
  for (std::size_t c = 0; c < copies; ++c) layers.push_back(4 * c);
  d.b_pres = std::make_shared<PcPresentation>(std::vector<Exponent>(n, 2), std::vector<PcElement>{},
                                              std::vector<std::vector<PcElement>>{}, layers);
  for (const auto& p : d.perm_images) {
    std::vector<PcElement> im;
    for (std::size_t c = 0; c < copies; ++c)
      for (std::size_t i = 0; i < 4; ++i) {
        // e_i + e_5 -> e_{i^p} + e_{5^p} = v_{i^p} + v_{5^p}, where v_5 = 0
        PcElement e(n);
        for (std::size_t pt : {i, std::size_t{4}}) {
          std::size_t q = p[static_cast<Permutation::Point>(pt)];
          if (q < 4) e.exps[4 * c + q] ^= 1u;
        }
        im.push_back(std::move(e));
      }
    d.action.push_back(std::move(im));
  }
  d.segments = layers;
  auto [g, rep] = assemble(d);
  if (!g) throw ValidationError("F6: " + rep.first_failure()->witness);
  return std::move(*g);
}

inline Fixture fixture_f6() { return {"F6", split_a5_module(5), std::nullopt}; }

inline Fixture fixture(std::string_view name) {
  if (name == "F1") return fixture_f1();
  if (name == "F2") return fixture_f2();
  if (name == "F3") return fixture_f3();
  if (name == "F4") return fixture_f4();
  if (name == "F5") return fixture_f5();
  if (name == "F5split") return fixture_f5_split();
  if (name == "F6") return fixture_f6();
  throw ArgumentError("unknown fixture \"" + std::string(name) + "\"");
}

inline const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names{"F1", "F2", "F3", "F4", "F5", "F5split", "F6"};
  return names;
}

}  // namespace hybrid
