#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hybrid/error.hpp"
#include "hybrid/hybrid.hpp"
#include "hybrid/pc.hpp"
#include "hybrid/perm.hpp"
#include "hybrid/rws.hpp"

namespace hybrid {

/// A faithful permutation image of a hybrid group: x_i and y_j go to the
/// given permutations, and w*b maps to w(x_images) * prod y_j^{e_j}.
struct ReferenceRep {
  std::size_t degree = 0;
  std::vector<Permutation> x_images;
  std::vector<Permutation> y_images;
  std::function<HybridElement(const Permutation&)> from_perm;

  Permutation to_perm(const HybridElement& g) const {
    Permutation p(degree);
    for (int a : g.xword) p = p * x_images[a];
    for (std::size_t j = 0; j < g.bpart.size(); ++j)
      if (g.bpart[j]) p = p * y_images[j].pow(g.bpart[j]);
    return p;
  }

  std::vector<Permutation> generators() const {
    std::vector<Permutation> g = x_images;
    g.insert(g.end(), y_images.begin(), y_images.end());
    return g;
  }
};

/// Raw extension data. When `rules` is empty and a presentation is given
/// the factor rules come from Knuth-Bendix completion; empty tails mean
/// trivial tails.
struct ExtensionData {
  std::string name;
  std::vector<Permutation> perm_images;
  std::size_t degree = 0;
  std::optional<RewritingSystem> rules;
  std::optional<MonoidPresentation> presentation;
  std::optional<Ordering> ordering;
  PcPresentationPtr b_pres;
  std::vector<PcElement> tails;
  std::vector<std::vector<PcElement>> action;  // action[i][j] = alpha_i(y_j)
  std::vector<std::size_t> segments;
};

struct ValidationCheck {
  std::string name;
  bool pass = true;
  std::string witness;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool overall = true;

  void add(std::string name, bool pass, std::string witness = {}) {
    overall = overall && pass;
    checks.push_back({std::move(name), pass, std::move(witness)});
  }
  const ValidationCheck* first_failure() const {
    for (const auto& c : checks)
      if (!c.pass) return &c;
    return nullptr;
  }
};

struct ValidateOptions {
  bool strict = false;
  std::uint64_t seed = 20240531;
  std::size_t random_triples = 10'000;
  std::uint64_t exhaustive_limit = 2000;
  std::uint64_t closure_limit = 10'000;
};

namespace detail {

inline bool within_b(const PcPresentation& B, const PcElement& e) {
  if (e.size() != B.size()) return false;
  for (std::size_t i = 0; i < e.size(); ++i)
    if (e[i] >= B.relative_order(i)) return false;
  return true;
}

inline std::string letters_text(const Letters& w) {
  if (w.empty()) return "1";
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "*x" : "x") + std::to_string(w[i] + 1);
  return s;
}

}  // namespace detail

/// Checks a constructed group: (a) confluent factor rules, (b) automorphisms,
/// (c) rules hold in A and the normal forms count |A|, (d) tails in B,
/// compatibility alpha_l = alpha_r * conj(m), (e) associativity, and (f) the
/// order against closures.
inline ValidationReport validate(const HybridGroup& G, const ReferenceRep* ref = nullptr, ValidateOptions opt = {}) {
  ValidationReport rep;
  const PcPresentation& B = G.b_pres();
  const auto& rules = G.factor_rules().rules();

  auto conf = is_confluent(G.factor_rules());
  rep.add("confluence", conf.confluent,
          conf.witness ? "critical word " + detail::letters_text(conf.witness->word) + " reduces to " +
                             detail::letters_text(conf.witness->first) + " and " +
                             detail::letters_text(conf.witness->second)
                       : "");

  bool auts_ok = true;
  std::string aut_witness;
  for (std::size_t i = 0; i < G.rank() && auts_ok; ++i) {
    std::string w;
    if (!G.action()[i].preserves_relations(&w)) {
      auts_ok = false;
      aut_witness = "alpha_x" + std::to_string(i + 1) + " breaks the " + w;
    } else if (!G.action()[i].is_bijective()) {
      auts_ok = false;
      aut_witness = "alpha_x" + std::to_string(i + 1) + " is not bijective";
    }
  }
  rep.add("automorphisms", auts_ok, aut_witness);

  bool nu_ok = true;
  std::string nu_witness;
  auto perm_of = [&](const Letters& w) {
    Permutation p(G.degree());
    for (int a : w) p = p * G.perm_images()[a];
    return p;
  };
  for (std::size_t r = 0; r < rules.size() && nu_ok; ++r) {
    if (perm_of(rules[r].left) != perm_of(rules[r].right)) {
      nu_ok = false;
      nu_witness = "rule " + detail::letters_text(rules[r].left) + " -> " + detail::letters_text(rules[r].right) +
                   " fails on the permutation images";
    }
  }
  if (nu_ok && conf.confluent) {
    std::uint64_t a = G.factor_order();
    try {
      auto nf = enumerate_normal_forms(G.factor_rules(), a);
      if (nf.size() != a) {
        nu_ok = false;
        nu_witness = std::to_string(nf.size()) + " normal forms but |A| = " + std::to_string(a);
      }
    } catch (const LimitError&) {
      nu_ok = false;
      nu_witness = "more normal forms than |A| = " + std::to_string(a);
    }
  }
  rep.add("factor rules", nu_ok, nu_witness);

  bool tails_ok = true;
  std::string tail_witness;
  for (std::size_t r = 0; r < G.tails().size() && tails_ok; ++r)
    if (!detail::within_b(B, G.tails()[r])) tails_ok = false, tail_witness = "tail of rule " + std::to_string(r + 1);
  rep.add("tails", tails_ok, tail_witness);

  // d*l = l*alpha_l(d) and d*r*m = r*m*(m^-1 alpha_r(d) m)
  bool compat_ok = auts_ok;
  std::string compat_witness = auts_ok ? "" : "skipped: automorphism check failed";
  for (std::size_t r = 0; r < rules.size() && compat_ok; ++r) {
    const PcElement& m = G.tails()[r];
    for (std::size_t j = 0; j < B.size() && compat_ok; ++j) {
      PcElement y = B.generator(j);
      PcElement lhs = G.act(rules[r].left, y);
      PcElement rhs = B.conjugate_by(G.act(rules[r].right, y), m);
      if (lhs != rhs) {
        compat_ok = false;
        compat_witness = "rule " + detail::letters_text(rules[r].left) + " -> " + detail::letters_text(rules[r].right) +
                         " on y" + std::to_string(j + 1);
      }
    }
  }
  rep.add("action compatibility", compat_ok, compat_witness);

  if (!(conf.confluent && nu_ok && tails_ok && auts_ok)) {
    rep.add("associativity", false, "skipped: structural checks failed");
    rep.add("order", false, "skipped: structural checks failed");
    return rep;
  }

  const std::uint64_t order = G.group_order();
  std::vector<HybridElement> gens;
  for (std::size_t i = 0; i < G.rank(); ++i) gens.push_back(G.generator(i));

  // Closure under right multiplication by generators; pc generators are
  // added only while the closure falls short of the group order.
  std::vector<HybridElement> elems;
  bool closure_ok = true;
  std::string closure_witness;
  if (order <= std::max(opt.closure_limit, opt.exhaustive_limit)) {
    std::size_t next_y = 0;
    for (;;) {
      std::unordered_set<HybridElement, HybridElementHash> seen{G.identity()};
      elems.assign(1, G.identity());
      for (std::size_t i = 0; i < elems.size() && elems.size() <= order; ++i) {
        for (const auto& t : gens) {
          HybridElement h = G.mul(elems[i], t);
          if (seen.insert(h).second) elems.push_back(std::move(h));
        }
      }
      if (elems.size() >= order || next_y == B.size()) break;
      gens.push_back(G.b_element(B.generator(next_y++)));
    }
    if (elems.size() != order) {
      closure_ok = false;
      closure_witness = "closure has " + std::to_string(elems.size()) + " elements, expected " + std::to_string(order);
    }
  }

  bool assoc_ok = true;
  std::string assoc_witness;
  auto triple = [&](const HybridElement& g, const HybridElement& h, const HybridElement& k) {
    HybridElement a = G.mul(G.mul(g, h), k), b = G.mul(g, G.mul(h, k));
    if (a == b) return;
    assoc_ok = false;
    assoc_witness = "(g*h)*k != g*(h*k) for g = " + element_to_string(g) + ", h = " + element_to_string(h) +
                    ", k = " + element_to_string(k);
  };
  if (closure_ok && !elems.empty() && (opt.strict || order <= opt.exhaustive_limit)) {
    // Every element is a product of generators, so checking k over the
    // generators implies associativity for all k by induction on length.
    const auto& third = opt.strict ? elems : gens;
    for (std::size_t a = 0; a < elems.size() && assoc_ok; ++a)
      for (std::size_t b = 0; b < elems.size() && assoc_ok; ++b)
        for (std::size_t c = 0; c < third.size() && assoc_ok; ++c) triple(elems[a], elems[b], third[c]);
  } else {
    std::mt19937_64 rng(opt.seed);
    for (std::size_t s = 0; s < opt.random_triples && assoc_ok; ++s) {
      HybridElement g = G.random_element(rng), h = G.random_element(rng), k = G.random_element(rng);
      triple(g, h, k);
    }
  }
  rep.add("associativity", assoc_ok, assoc_witness);

  bool order_ok = closure_ok;
  std::string order_witness = closure_witness;
  if (order_ok && ref && order <= opt.closure_limit) {
    auto closure = brute_force_closure(ref->generators(), ref->degree, opt.closure_limit + 1);
    if (closure.size() != order) {
      order_ok = false;
      order_witness = "reference closure has " + std::to_string(closure.size()) + " elements, expected " +
                      std::to_string(order);
    }
  }
  rep.add("order", order_ok, order_witness);

  if (ref) {
    bool hom_ok = true;
    std::string hom_witness;
    auto pair = [&](const HybridElement& g, const HybridElement& h) {
      if (ref->to_perm(G.mul(g, h)) == ref->to_perm(g) * ref->to_perm(h)) return;
      hom_ok = false;
      hom_witness = "image of g*h differs for g = " + element_to_string(g) + ", h = " + element_to_string(h);
    };
    if (!elems.empty()) {
      for (std::size_t a = 0; a < elems.size() && hom_ok; ++a)
        for (std::size_t c = 0; c < gens.size() && hom_ok; ++c) pair(elems[a], gens[c]);
    } else {
      std::mt19937_64 rng(opt.seed + 1);
      for (std::size_t s = 0; s < opt.random_triples && hom_ok; ++s) pair(G.random_element(rng), G.random_element(rng));
    }
    rep.add("reference", hom_ok, hom_witness);
  }
  return rep;
}

/// Assembles the group, or reports the structural problem.
inline std::pair<std::optional<HybridGroup>, ValidationReport> assemble(const ExtensionData& d) {
  ValidationReport rep;
  auto fail = [&](std::string why) {
    rep.add("structure", false, std::move(why));
    return std::make_pair(std::optional<HybridGroup>{}, rep);
  };
  if (!d.b_pres) return fail("missing pc presentation");
  const PcPresentation& B = *d.b_pres;
  const std::size_t k = d.perm_images.size();
  std::size_t degree = d.degree ? d.degree : (k ? d.perm_images[0].degree() : 1);
  for (const auto& p : d.perm_images)
    if (p.degree() != degree) return fail("permutation degree mismatch");
  RewritingSystem rules;
  if (d.rules) {
    rules = *d.rules;
  } else if (d.presentation) {
    Ordering ord = d.ordering ? *d.ordering : Ordering::shortlex(d.presentation->alphabet_size);
    auto res = knuth_bendix(*d.presentation, ord);
    if (!res.success) return fail("completion failed: " + res.message);
    rules = std::move(res.system);
  } else {
    rules = RewritingSystem(static_cast<int>(k), {}, Ordering::shortlex(static_cast<int>(k)));
  }
  if (static_cast<std::size_t>(rules.alphabet_size()) != k)
    return fail("rules are over " + std::to_string(rules.alphabet_size()) + " letters, expected " + std::to_string(k));
  std::vector<PcElement> tails = d.tails;
  if (tails.empty()) tails.assign(rules.rules().size(), B.identity());
  if (tails.size() != rules.rules().size())
    return fail(std::to_string(tails.size()) + " tails for " + std::to_string(rules.rules().size()) + " rules");
  for (std::size_t r = 0; r < tails.size(); ++r)
    if (!detail::within_b(B, tails[r])) return fail("tail of rule " + std::to_string(r + 1) + " is not an element of B");
  if (d.action.size() != k)
    return fail("action given for " + std::to_string(d.action.size()) + " of " + std::to_string(k) + " generators");
  std::vector<PcAutomorphism> action;
  for (std::size_t i = 0; i < k; ++i) {
    if (d.action[i].size() != B.size()) return fail("alpha_x" + std::to_string(i + 1) + " has the wrong number of images");
    for (std::size_t j = 0; j < B.size(); ++j)
      if (!detail::within_b(B, d.action[i][j]))
        return fail("alpha_x" + std::to_string(i + 1) + "(y" + std::to_string(j + 1) + ") is not an element of B");
    action.emplace_back(d.b_pres, d.action[i]);
  }
  rep.add("structure", true);
  return {HybridGroup(d.perm_images, std::move(rules), d.b_pres, std::move(tails), std::move(action), d.segments, degree),
          rep};
}

inline ValidationReport validate(const ExtensionData& d, const ReferenceRep* ref = nullptr, ValidateOptions opt = {}) {
  auto [g, rep] = assemble(d);
  if (!g) return rep;
  ValidationReport full = validate(*g, ref, opt);
  full.checks.insert(full.checks.begin(), rep.checks.begin(), rep.checks.end());
  return full;
}

inline HybridGroup from_extension_data(const ExtensionData& d, ValidateOptions opt = {}) {
  auto [g, rep] = assemble(d);
  if (g) {
    ValidationReport full = validate(*g, nullptr, opt);
    if (full.overall) return std::move(*g);
    rep = full;
  }
  const ValidationCheck* f = rep.first_failure();
  throw ValidationError("validation failed: " + f->name + (f->witness.empty() ? "" : " (" + f->witness + ")"));
}

namespace detail {

/// Generators of the normal closure of `gens` under conjugation by `by`.
inline std::vector<Permutation> normal_closure(std::vector<Permutation> gens, const std::vector<Permutation>& by,
                                               std::size_t degree) {
  std::vector<Permutation> out;
  StabilizerChain c = schreier_sims(out, degree);
  std::vector<Permutation> queue = std::move(gens);
  for (std::size_t i = 0; i < queue.size(); ++i) {
    if (c.contains(queue[i])) continue;
    out.push_back(queue[i]);
    c = schreier_sims(out, degree);
    for (const auto& t : by) queue.push_back(t.inverse() * queue[i] * t);
  }
  return out;
}

inline std::vector<Permutation> derived_subgroup(const std::vector<Permutation>& gens, std::size_t degree) {
  std::vector<Permutation> comms;
  for (std::size_t a = 0; a < gens.size(); ++a)
    for (std::size_t b = a + 1; b < gens.size(); ++b) {
      Permutation c = gens[a].inverse() * gens[b].inverse() * gens[a] * gens[b];
      if (!c.is_identity()) comms.push_back(std::move(c));
    }
  return normal_closure(std::move(comms), gens, degree);
}

inline std::vector<std::uint32_t> prime_factors(std::uint64_t m) {
  std::vector<std::uint32_t> out;
  for (std::uint64_t p = 2; p * p <= m; ++p)
    while (m % p == 0) out.push_back(static_cast<std::uint32_t>(p)), m /= p;
  if (m > 1) out.push_back(static_cast<std::uint32_t>(m));
  return out;
}

/// Prime-step pcgs of a solvable permutation group refining its derived
/// series, with exponent extraction.
struct PermPcgs {
  std::size_t degree = 0;
  std::vector<Permutation> elems;
  std::vector<Exponent> orders;
  std::vector<std::size_t> layer_starts;
  std::vector<StabilizerChain> tails;  // tails[i] = <elems[i..]>

  PcElement exponents(Permutation x) const {
    PcElement e(elems.size());
    for (std::size_t i = 0; i < elems.size(); ++i) {
      Permutation step = elems[i].inverse();
      Exponent c = 0;
      while (!tails[i + 1].contains(x)) {
        if (++c >= orders[i]) throw ArgumentError("pcgs: element is not in the group");
        x = step * x;
      }
      e.exps[i] = c;
    }
    return e;
  }
};

inline PermPcgs perm_pcgs(const std::vector<Permutation>& b_gens, std::size_t degree) {
  std::vector<std::vector<Permutation>> series;
  std::vector<Permutation> cur;
  for (const auto& g : b_gens)
    if (!g.is_identity()) cur.push_back(g);
  while (!cur.empty()) {
    std::vector<Permutation> next = derived_subgroup(cur, degree);
    if (schreier_sims(next, degree).order() == schreier_sims(cur, degree).order())
      throw ValidationError("B is not solvable");
    series.push_back(cur);
    cur = std::move(next);
  }
  PermPcgs pc;
  pc.degree = degree;
  std::vector<Permutation> k_gens;  // bottom-up
  std::vector<Exponent> k_orders;
  std::vector<std::size_t> layer_sizes;
  for (auto layer = series.rbegin(); layer != series.rend(); ++layer) {
    std::size_t before = k_gens.size();
    for (const auto& g : *layer) {
      StabilizerChain kc = schreier_sims(k_gens, degree);
      if (kc.contains(g)) continue;
      std::uint64_t m = 1;
      for (Permutation x = g; !kc.contains(x); x = x * g) ++m;
      auto primes = prime_factors(m);
      // h_0 = g, h_{s+1} = h_s^{p_s}; h_s has prime relative order p_s
      std::vector<Permutation> hs{g};
      for (std::size_t s = 0; s + 1 < primes.size(); ++s) hs.push_back(hs.back().pow(primes[s]));
      for (std::size_t s = primes.size(); s-- > 0;) {
        k_gens.push_back(hs[s]);
        k_orders.push_back(primes[s]);
      }
    }
    layer_sizes.push_back(k_gens.size() - before);
  }
  pc.elems.assign(k_gens.rbegin(), k_gens.rend());
  pc.orders.assign(k_orders.rbegin(), k_orders.rend());
  std::size_t pos = 0;
  for (auto it = layer_sizes.rbegin(); it != layer_sizes.rend(); ++it) {
    if (*it) pc.layer_starts.push_back(pos);
    pos += *it;
  }
  for (std::size_t i = 0; i <= pc.elems.size(); ++i)
    pc.tails.push_back(
        schreier_sims(std::vector<Permutation>(pc.elems.begin() + static_cast<std::ptrdiff_t>(i), pc.elems.end()), degree));
  return pc;
}

inline PcPresentationPtr presentation_of(const PermPcgs& pc) {
  const std::size_t n = pc.elems.size();
  std::vector<PcElement> powers;
  std::vector<std::vector<PcElement>> conj(n);
  for (std::size_t i = 0; i < n; ++i) {
    powers.push_back(pc.exponents(pc.elems[i].pow(pc.orders[i])));
    for (std::size_t j = 0; j < i; ++j) conj[i].push_back(pc.exponents(pc.elems[j].inverse() * pc.elems[i] * pc.elems[j]));
  }
  return std::make_shared<PcPresentation>(pc.orders, std::move(powers), std::move(conj), pc.layer_starts);
}

/// Right cosets of B in G, identified by membership tests.
struct CosetTable {
  StabilizerChain b;
  std::vector<Permutation> reps;

  std::size_t find(const Permutation& p) const {
    for (std::size_t j = 0; j < reps.size(); ++j)
      if (b.contains(p * reps[j].inverse())) return j;
    return reps.size();
  }
  Permutation image(const Permutation& p) const {
    std::vector<Permutation::Point> img;
    for (const auto& r : reps) img.push_back(static_cast<Permutation::Point>(find(r * p)));
    return Permutation(std::move(img));
  }
};

}  // namespace detail

struct BuiltGroup {
  HybridGroup group;
  ReferenceRep reference;
};

/// Hybrid structure of G = <g_gens> over the solvable normal subgroup
/// B = <b_gens>. Generators of G lying in B are dropped from the X-letters.
inline BuiltGroup from_permutation_group(const std::vector<Permutation>& g_gens, const std::vector<Permutation>& b_gens,
                                         std::uint64_t presentation_limit = 100'000) {
  if (g_gens.empty()) throw ArgumentError("from_permutation_group: no generators");
  const std::size_t degree = g_gens[0].degree();
  for (const auto& p : g_gens)
    if (p.degree() != degree) throw ArgumentError("from_permutation_group: degree mismatch");
  for (const auto& p : b_gens)
    if (p.degree() != degree) throw ArgumentError("from_permutation_group: degree mismatch");
  StabilizerChain gc = schreier_sims(g_gens, degree);
  StabilizerChain bc = schreier_sims(b_gens, degree);
  for (const auto& b : b_gens)
    if (!gc.contains(b)) throw ValidationError("B is not a subgroup of G");
  for (const auto& b : b_gens)
    for (const auto& g : g_gens)
      if (!bc.contains(g.inverse() * b * g)) throw ValidationError("B is not normal in G");

  auto pcgs = std::make_shared<detail::PermPcgs>(detail::perm_pcgs(b_gens, degree));
  PcPresentationPtr B = detail::presentation_of(*pcgs);

  std::vector<Permutation> xs;
  for (const auto& g : g_gens)
    if (!bc.contains(g)) xs.push_back(g);
  const int k = static_cast<int>(xs.size());

  // A is the action of G on the right cosets of B.
  auto cosets = std::make_shared<detail::CosetTable>(detail::CosetTable{bc, {Permutation(degree)}});
  for (std::size_t i = 0; i < cosets->reps.size(); ++i) {
    for (const auto& t : xs) {
      Permutation c = cosets->reps[i] * t;
      if (cosets->find(c) == cosets->reps.size()) {
        cosets->reps.push_back(std::move(c));
        if (cosets->reps.size() > presentation_limit) throw LimitError("from_permutation_group: index exceeds limit");
      }
    }
  }
  std::vector<Permutation> a_images;
  for (const auto& t : xs) a_images.push_back(cosets->image(t));
  const std::size_t a_degree = k ? cosets->reps.size() : 1;

  MonoidPresentation mp;
  mp.alphabet_size = k;
  if (k > 0) {
    StabilizerChain ac = schreier_sims(a_images, a_degree);
    Presentation pres = presentation_from(ac, presentation_limit);
    for (auto& r : pres.relators) mp.relations.emplace_back(std::move(r), Letters{});
    for (const auto& a : a_images) mp.generator_orders.push_back(a.order());
  }
  auto completed = knuth_bendix(mp, Ordering::shortlex(k));
  if (!completed.success) throw LimitError("from_permutation_group: completion failed: " + completed.message);
  RewritingSystem rules = reduce_system(completed.system);

  auto word_perm = [&](const Letters& w) {
    Permutation p(degree);
    for (int a : w) p = p * xs[a];
    return p;
  };
  std::vector<PcElement> tails;
  for (const auto& r : rules.rules()) tails.push_back(pcgs->exponents(word_perm(r.right).inverse() * word_perm(r.left)));
  std::vector<PcAutomorphism> action;
  for (const auto& t : xs) {
    std::vector<PcElement> im;
    for (const auto& y : pcgs->elems) im.push_back(pcgs->exponents(t.inverse() * y * t));
    action.emplace_back(B, std::move(im));
  }
  HybridGroup G(a_images, std::move(rules), B, std::move(tails), std::move(action), pcgs->layer_starts, a_degree);

  ReferenceRep ref;
  ref.degree = degree;
  ref.x_images = xs;
  ref.y_images = pcgs->elems;
  auto group = std::make_shared<HybridGroup>(G);
  auto plain = std::make_shared<ReferenceRep>(ref);
  ref.from_perm = [group, cosets, pcgs, plain](const Permutation& p) {
    HybridElement h = group->rank() ? group->preimage(cosets->image(p)) : group->identity();
    Permutation rest = plain->to_perm(h).inverse() * p;
    return group->mul(h, group->b_element(pcgs->exponents(rest)));
  };
  return {std::move(G), std::move(ref)};
}

}  // namespace hybrid
