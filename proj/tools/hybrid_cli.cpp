#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hybrid/bench.hpp"
#include "hybrid/build.hpp"
#include "hybrid/error.hpp"
#include "hybrid/fixtures.hpp"
#include "hybrid/io.hpp"
#include "hybrid/rws.hpp"
#include "hybrid/subgrp.hpp"

using namespace hybrid;

namespace {

struct Loaded {
  std::string name;
  HybridGroup group;
};

struct Source {
  std::string group_file;
  std::string fixture;
  bool strict = false;
};

ValidateOptions validate_options(const Source& src, std::uint64_t seed) {
  ValidateOptions opt;
  opt.strict = src.strict;
  opt.seed = seed;
  return opt;
}

Loaded load_group(const Source& src, std::uint64_t seed) {
  if (!src.fixture.empty()) {
    Fixture f = fixture(src.fixture);
    return {f.name, std::move(f.group)};
  }
  if (src.group_file.empty()) throw ArgumentError("either --group <file> or --fixture <name> is required");
  nlohmann::json j = parse_json_text(read_text_file(src.group_file), src.group_file);
  ExtensionData d = extension_data_from_json(j);
  // artifacts written by `build` were validated when they were written
  bool trusted = j.value("validated", false);
  HybridGroup G;
  if (trusted) {
    auto [g, rep] = assemble(d);
    if (!g) throw ValidationError("validation failed: " + rep.first_failure()->name + " (" + rep.first_failure()->witness + ")");
    G = std::move(*g);
  } else {
    G = from_extension_data(d, validate_options(src, seed));
  }
  if (j.contains("caches")) {
    const auto& c = j.at("caches");
    CacheConfig cfg;
    cfg.inverses = c.value("inverses", false);
    cfg.product_depth = c.value("product_depth", std::size_t{0});
    cfg.segments = c.value("segments", false);
    cfg.bottom_matrices = c.value("bottom_matrices", false);
    G.build_caches(cfg);
  }
  return {d.name, std::move(G)};
}

std::vector<HybridElement> parse_gens(const HybridGroup& G, const std::vector<std::string>& texts) {
  std::vector<HybridElement> out;
  for (const auto& t : texts) out.push_back(parse_expression(G, t));
  return out;
}

// The full group: A-generators and pc generators.
std::vector<HybridElement> all_generators(const HybridGroup& G) {
  std::vector<HybridElement> out;
  for (std::size_t i = 0; i < G.rank(); ++i) out.push_back(G.generator(i));
  for (std::size_t i = 0; i < G.b_pres().size(); ++i) out.push_back(G.b_element(G.b_pres().generator(i)));
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write \"" + path + "\"");
  out << text;
}

std::vector<std::string> split_commas(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& s : items) {
    std::stringstream ss(s);
    for (std::string part; std::getline(ss, part, ',');)
      if (!part.empty()) out.push_back(part);
  }
  return out;
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case Error::Kind::Argument:
    case Error::Kind::Parse: return 1;
    case Error::Kind::Validation: return 2;
    case Error::Kind::Limit: return 3;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arithmetic in hybrid groups: permutation factor groups over polycyclic normal subgroups"};
  app.require_subcommand(1);

  Source src;
  std::uint64_t seed = 20240531;
  auto add_source = [&](CLI::App* c) {
    c->add_option("--group", src.group_file, "Group definition or artifact (JSON)");
    c->add_option("--fixture", src.fixture, "Built-in fixture (F1..F6, F5split)");
    c->add_flag("--strict", src.strict, "Exhaustive validation when loading a definition");
    c->add_option("--seed", seed, "Random seed");
  };

  // build
  std::string build_in, build_out;
  auto* build = app.add_subcommand("build", "Validate a group definition and write an artifact");
  build->add_option("definition", build_in, "Definition file")->required();
  build->add_option("--out", build_out, "Artifact path (default: <definition>.group.json)");
  build->add_flag("--strict", src.strict, "Exhaustive validation");
  build->add_option("--seed", seed, "Validation seed");
  bool build_caches_flag = false;
  build->add_flag("--caches", build_caches_flag, "Record inverse and segment caches in the artifact");

  // eval
  std::string expr;
  bool want_order = false, want_image = false;
  auto* eval = app.add_subcommand("eval", "Normal form of a product of element literals");
  add_source(eval);
  eval->add_option("expression", expr, "e.g. \"x1|1 * x1|y1^1\", \"(x1|1)^2\"")->required();
  eval->add_flag("--order", want_order, "Also print the element order");
  eval->add_flag("--image", want_image, "Also print the image in the factor group");

  auto* order = app.add_subcommand("order", "Order of an element");
  add_source(order);
  order->add_option("expression", expr, "Element expression")->required();

  // subgroup
  std::vector<std::string> gen_texts, sub_texts;
  std::string query = "order", probe;
  auto* subgroup = app.add_subcommand("subgroup", "Subgroup queries: order, contains, transversal");
  add_source(subgroup);
  subgroup->add_option("query", query, "order | contains | transversal")->check(CLI::IsMember({"order", "contains", "transversal"}));
  subgroup->add_option("element", probe, "Element for contains");
  subgroup->add_option("--gen", gen_texts, "Generator literal (repeatable; default: the whole group)");
  subgroup->add_option("--sub", sub_texts, "Generators of the smaller subgroup for transversal");

  bool list_reps = false;
  auto* transversal = app.add_subcommand("transversal", "Right transversal of <--sub> in <--gen>");
  add_source(transversal);
  transversal->add_option("--gen", gen_texts, "Generators of S (default: the whole group)");
  transversal->add_option("--sub", sub_texts, "Generators of U")->required();
  transversal->add_flag("--list", list_reps, "Print the representatives");

  // factor
  std::string factor_out;
  auto* factor = app.add_subcommand("factor", "Factor group by a normal subgroup of B");
  add_source(factor);
  factor->add_option("--gen", gen_texts, "Generators of N")->required();
  factor->add_option("--out", factor_out, "Write the factor group definition here");

  auto* validate_cmd = app.add_subcommand("validate", "Run every consistency check");
  add_source(validate_cmd);

  // bench
  std::vector<std::string> ops{"mul", "inv"};
  std::size_t samples = 10'000;
  std::string bench_out, log_out;
  bool mask = false;
  auto* bench = app.add_subcommand("bench", "Timing table for group arithmetic");
  add_source(bench);
  bench->add_option("--ops", ops, "Comma-separated ops: mul, inv, order, suborder");
  bench->add_option("--samples", samples, "Samples per op");
  bench->add_option("--out", bench_out, "Write key=value records here");
  bench->add_option("--log", log_out, "Write the operation log here");
  bench->add_flag("--mask-times", mask, "Print \"*\" instead of timings");

  // rewriting
  std::string pres_file, rules_file, out_file;
  std::size_t limit_rules = CompletionLimits{}.max_rules;
  auto* complete = app.add_subcommand("complete", "Knuth-Bendix completion of a presentation file");
  complete->add_option("presentation", pres_file, "Presentation file (gens / orders / l = r)")->required();
  complete->add_option("--limit-rules", limit_rules, "Rule limit");
  complete->add_option("--out", out_file, "Write the rules here");
  std::vector<int> levels;
  complete->add_option("--levels", levels, "Wreath levels per generator (default: shortlex)")->delimiter(',');

  std::size_t alphabet = 0;
  auto* confl = app.add_subcommand("check-confluence", "Check a rules file for local confluence");
  confl->add_option("rules", rules_file, "Rules file: one \"l -> r\" per line")->required();
  confl->add_option("--gens", alphabet, "Alphabet size (default: largest letter)");
  confl->add_option("--levels", levels, "Wreath levels per generator (default: shortlex)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    auto& out = std::cout;
    if (*build) {
      src.group_file.clear();
      nlohmann::json j = parse_json_text(read_text_file(build_in), build_in);
      ExtensionData d = extension_data_from_json(j);
      HybridGroup G = from_extension_data(d, validate_options(src, seed));
      nlohmann::json art = group_to_json(G, d.name);
      art["validated"] = true;
      if (build_caches_flag) {
        CacheConfig cfg;
        cfg.inverses = true;
        cfg.segments = true;
        CacheReport r = G.build_caches(cfg);
        art["caches"] = {{"inverses", true}, {"segments", true}, {"inverse_entries", r.inverse_entries},
                         {"segment_entries", r.segment_entries}};
      }
      if (build_out.empty()) {
        build_out = build_in;
        if (build_out.size() > 5 && build_out.ends_with(".json")) build_out.resize(build_out.size() - 5);
        build_out += ".group.json";
      }
      write_text(build_out, art.dump(2) + "\n");
      out << "order " << G.group_order() << ", |B| " << G.b_pres().order() << ", |A| " << G.factor_order()
          << ", factor degree " << G.degree() << "\n";
      out << "wrote " << build_out << "\n";
      return 0;
    }
    if (*complete) {
      MonoidPresentation p = parse_presentation(read_text_file(pres_file));
      CompletionLimits lim;
      lim.max_rules = limit_rules;
      if (!levels.empty() && levels.size() != static_cast<std::size_t>(p.alphabet_size))
        throw ArgumentError("--levels needs one entry per generator");
      Ordering ord = levels.empty() ? Ordering::shortlex(p.alphabet_size) : Ordering::wreath(levels);
      CompletionResult res = knuth_bendix(p, ord, lim);
      if (!res.success) throw LimitError("completion: " + res.message);
      RewritingSystem rws = reduce_system(res.system);
      std::string text = format_rules(rws);
      if (!out_file.empty()) write_text(out_file, text);
      out << text;
      auto nf = enumerate_normal_forms(rws, 1'000'000);
      out << "rules " << rws.rules().size() << ", normal forms " << nf.size() << "\n";
      return 0;
    }
    if (*confl) {
      std::optional<Ordering> ord;
      if (!levels.empty()) ord = Ordering::wreath(levels);
      if (ord && alphabet == 0) alphabet = levels.size();
      RewritingSystem rws = parse_rules_text(read_text_file(rules_file), static_cast<int>(alphabet), ord);
      ConfluenceReport rep = is_confluent(rws);
      if (rep.confluent) {
        out << "confluent (" << rws.rules().size() << " rules)\n";
        return 0;
      }
      const CriticalPair& cp = *rep.witness;
      out << "not confluent: overlap " << letters_to_string(cp.word) << " reduces to "
          << letters_to_string(cp.first) << " and " << letters_to_string(cp.second) << "\n";
      return 2;
    }

    if (*validate_cmd) {
      // the report is printed even for data that fails to validate
      ValidationReport rep;
      if (!src.fixture.empty()) {
        Fixture f = fixture(src.fixture);
        rep = validate(f.group, f.reference ? &*f.reference : nullptr, validate_options(src, seed));
      } else {
        if (src.group_file.empty()) throw ArgumentError("either --group <file> or --fixture <name> is required");
        rep = validate(load_extension_data(src.group_file), nullptr, validate_options(src, seed));
      }
      for (const auto& c : rep.checks)
        out << (c.pass ? "pass " : "FAIL ") << c.name << (c.witness.empty() ? "" : ": " + c.witness) << "\n";
      out << (rep.overall ? "overall: pass" : "overall: FAIL") << "\n";
      return rep.overall ? 0 : 2;
    }

    Loaded L = load_group(src, seed);
    const HybridGroup& G = L.group;
    if (*eval || *order) {
      HybridElement g = parse_expression(G, expr);
      if (*order) {
        out << G.order(g) << "\n";
        return 0;
      }
      out << element_to_string(g) << "\n";
      if (want_order) out << "order " << G.order(g) << "\n";
      if (want_image) out << "image " << G.nu(g).to_string() << "\n";
      return 0;
    }
    if (*subgroup || *transversal) {
      std::vector<HybridElement> gens = gen_texts.empty() ? all_generators(G) : parse_gens(G, gen_texts);
      HybridBits S(G, gens);
      if (*subgroup && query == "order") {
        out << S.order() << "\n";
        return 0;
      }
      if (*subgroup && query == "contains") {
        if (probe.empty()) throw ArgumentError("contains: element literal required");
        out << (S.contains(parse_expression(G, probe)) ? "true" : "false") << "\n";
        return 0;
      }
      if (sub_texts.empty()) throw ArgumentError("transversal: --sub generators required");
      HybridBits U(G, parse_gens(G, sub_texts));
      HybridTransversal T(S, U);
      out << "index " << T.index() << "\n";
      if (list_reps)
        for (std::size_t i = 0; i < T.index(); ++i) out << i << ": " << element_to_string(T.representative(i)) << "\n";
      return 0;
    }
    if (*factor) {
      HybridBits N(G, parse_gens(G, gen_texts));
      FactorGroup Q(G, N);
      out << "order " << Q.group().group_order() << ", |B/N| " << Q.group().b_pres().order() << "\n";
      if (!factor_out.empty()) write_text(factor_out, group_to_json(Q.group(), L.name + "/N").dump(2) + "\n");
      return 0;
    }
    if (*bench) {
      BenchOptions opt;
      opt.ops.clear();
      for (const auto& o : split_commas(ops)) opt.ops.push_back(parse_bench_op(o));
      opt.samples = samples;
      opt.seed = seed;
      opt.log_ops = !log_out.empty();
      BenchReport rep = run_bench(G, L.name, opt);
      out << render_bench_table({rep}, mask);
      std::string records = render_bench_records(rep, mask);
      out << records;
      if (!bench_out.empty()) write_text(bench_out, records);
      if (!log_out.empty()) {
        std::string log;
        for (const auto& l : rep.op_log) log += l + "\n";
        write_text(log_out, log);
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
