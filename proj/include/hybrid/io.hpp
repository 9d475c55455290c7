#pragma once

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hybrid/build.hpp"
#include "hybrid/error.hpp"
#include "hybrid/hybrid.hpp"
#include "hybrid/pc.hpp"
#include "hybrid/rws.hpp"

namespace hybrid {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_tokens(std::string_view s, std::string_view seps) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && seps.find(s[i]) != std::string_view::npos) ++i;
    std::size_t j = i;
    while (j < s.size() && seps.find(s[j]) == std::string_view::npos) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline long long parse_int(std::string_view s, const std::string& what) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ParseError(what + ": bad integer \"" + std::string(s) + "\"");
  return v;
}

/// "g<i>" or "g<i>^<e>" with the given symbol; returns 0-based index and exponent.
inline std::pair<std::size_t, long long> parse_power_token(std::string_view tok, char symbol, std::size_t count,
                                                           const std::string& what) {
  if (tok.size() < 2 || tok[0] != symbol) throw ParseError(what + ": bad token \"" + std::string(tok) + "\"");
  std::size_t caret = tok.find('^');
  long long idx = parse_int(tok.substr(1, caret == std::string_view::npos ? std::string_view::npos : caret - 1), what);
  long long e = caret == std::string_view::npos ? 1 : parse_int(tok.substr(caret + 1), what);
  if (idx < 1 || static_cast<std::size_t>(idx) > count)
    throw ParseError(what + ": generator \"" + std::string(tok) + "\" out of range");
  return {static_cast<std::size_t>(idx - 1), e};
}

inline std::string with_line(std::size_t line, const std::string& msg) {
  return "line " + std::to_string(line) + ": " + msg;
}

}  // namespace detail

/// Positive word over x1..xk; tokens separated by '*' or spaces, "1" is the
/// empty word and "x<i>^<e>" repeats a letter.
inline Letters parse_letters(std::string_view text, int k, char symbol = 'x') {
  Letters w;
  for (auto tok : detail::split_tokens(text, "* \t")) {
    if (tok == "1") continue;
    auto [g, e] = detail::parse_power_token(tok, symbol, static_cast<std::size_t>(k), "word");
    if (e < 0) throw ParseError("word: negative exponent in \"" + std::string(tok) + "\"");
    w.insert(w.end(), static_cast<std::size_t>(e), static_cast<int>(g));
  }
  return w;
}

inline std::string letters_to_string(const Letters& w, char symbol = 'x') {
  if (w.empty()) return "1";
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += '*';
    s += symbol + std::to_string(w[i] + 1);
  }
  return s;
}

/// Word of "y<i>^<e>" tokens collected in the presentation; "1", "(empty)"
/// and the empty string denote the identity.
inline PcElement parse_pc_word(std::string_view text, const PcPresentation& B) {
  text = detail::trim(text);
  PcElement acc = B.identity();
  if (text.empty() || text == "1" || text == "(empty)") return acc;
  for (auto tok : detail::split_tokens(text, " \t*")) {
    auto [g, e] = detail::parse_power_token(tok, 'y', B.size(), "pc word");
    acc = B.mul(acc, B.pow(B.generator(g), e));
  }
  return acc;
}

/// Normal-form word given as exponent tokens, without a presentation (used
/// while reading one).
inline PcElement parse_pc_normal_form(std::string_view text, const std::vector<Exponent>& orders) {
  PcElement e(orders.size());
  text = detail::trim(text);
  if (text.empty() || text == "1" || text == "(empty)") return e;
  std::size_t last = 0;
  bool first = true;
  for (auto tok : detail::split_tokens(text, " \t*")) {
    auto [g, x] = detail::parse_power_token(tok, 'y', orders.size(), "pc word");
    if (!first && g <= last) throw ParseError("pc word: generators must appear in increasing order");
    if (x < 0 || x >= static_cast<long long>(orders[g])) throw ParseError("pc word: exponent out of range in \"" + std::string(tok) + "\"");
    e.exps[g] = static_cast<Exponent>(x);
    last = g;
    first = false;
  }
  return e;
}

inline std::string format_pc_presentation(const PcPresentation& B) {
  std::ostringstream os;
  const std::size_t n = B.size();
  os << "pc " << n << "\norders";
  for (std::size_t i = 0; i < n; ++i) os << ' ' << B.relative_order(i);
  os << '\n';
  if (B.layer_starts().size() > 1) {
    os << "layers";
    for (std::size_t s : B.layer_starts()) os << ' ' << s + 1;
    os << '\n';
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!B.power(i).is_identity()) os << "pow " << i + 1 << ": " << pc_to_string(B.power(i)) << '\n';
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < j; ++i) {
      const PcElement& c = B.conjugate(j, i);
      PcElement unit = B.generator(j);
      if (c != unit) os << "conj " << i + 1 << ' ' << j + 1 << ": " << pc_to_string(c) << '\n';
    }
  return os.str();
}

/// Reads "pc n", "orders ...", optional "layers ..." (1-based starts), and
/// "pow i: w" / "conj i j: w" lines, where "conj i j" (i < j) is y_j^{y_i}.
inline PcPresentationPtr parse_pc_presentation(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string raw;
  std::size_t lineno = 0, n = 0;
  bool have_n = false, have_orders = false;
  std::vector<Exponent> orders;
  std::vector<std::size_t> layers;
  std::vector<std::pair<std::size_t, std::string>> pows;
  std::vector<std::tuple<std::size_t, std::size_t, std::string>> conjs;
  std::vector<std::size_t> pow_lines, conj_lines;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string_view line = detail::trim(raw);
    if (auto h = line.find('#'); h != std::string_view::npos) line = detail::trim(line.substr(0, h));
    if (line.empty()) continue;
    try {
      std::string_view head = line, rest;
      if (auto c = line.find(':'); c != std::string_view::npos) {
        head = detail::trim(line.substr(0, c));
        rest = detail::trim(line.substr(c + 1));
      }
      auto toks = detail::split_tokens(head, " \t");
      if (toks[0] == "pc") {
        if (toks.size() != 2) throw ParseError("expected \"pc n\"");
        n = static_cast<std::size_t>(detail::parse_int(toks[1], "pc"));
        have_n = true;
      } else if (toks[0] == "orders") {
        if (!have_n) throw ParseError("\"orders\" before \"pc n\"");
        if (toks.size() != n + 1) throw ParseError("expected " + std::to_string(n) + " relative orders");
        for (std::size_t i = 1; i < toks.size(); ++i) {
          long long o = detail::parse_int(toks[i], "orders");
          if (o < 2) throw ParseError("relative orders must be at least 2");
          orders.push_back(static_cast<Exponent>(o));
        }
        have_orders = true;
      } else if (toks[0] == "layers") {
        for (std::size_t i = 1; i < toks.size(); ++i) {
          long long s = detail::parse_int(toks[i], "layers");
          if (s < 1 || static_cast<std::size_t>(s) > std::max<std::size_t>(n, 1)) throw ParseError("layer start out of range");
          layers.push_back(static_cast<std::size_t>(s - 1));
        }
      } else if (toks[0] == "pow") {
        if (toks.size() != 2) throw ParseError("expected \"pow i: <word>\"");
        long long i = detail::parse_int(toks[1], "pow");
        if (i < 1 || static_cast<std::size_t>(i) > n) throw ParseError("pow index out of range");
        pows.emplace_back(static_cast<std::size_t>(i - 1), std::string(rest));
        pow_lines.push_back(lineno);
      } else if (toks[0] == "conj") {
        if (toks.size() != 3) throw ParseError("expected \"conj i j: <word>\"");
        long long i = detail::parse_int(toks[1], "conj"), j = detail::parse_int(toks[2], "conj");
        if (i < 1 || j <= i || static_cast<std::size_t>(j) > n) throw ParseError("conj indices must satisfy 1 <= i < j <= n");
        conjs.emplace_back(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1), std::string(rest));
        conj_lines.push_back(lineno);
      } else {
        throw ParseError("unknown directive \"" + std::string(toks[0]) + "\"");
      }
    } catch (const ParseError& e) {
      throw ParseError(detail::with_line(lineno, e.what()));
    }
  }
  if (!have_n) throw ParseError("pc text: missing \"pc n\" header");
  if (!have_orders && n > 0) throw ParseError("pc text: missing \"orders\" line");
  std::vector<PcElement> powers(n, PcElement(n));
  std::vector<std::vector<PcElement>> conj(n);
  for (std::size_t j = 0; j < n; ++j) {
    PcElement u(n);
    u.exps[j] = 1;
    conj[j].assign(j, u);
  }
  for (std::size_t k = 0; k < pows.size(); ++k) {
    try {
      powers[pows[k].first] = parse_pc_normal_form(pows[k].second, orders);
    } catch (const ParseError& e) {
      throw ParseError(detail::with_line(pow_lines[k], e.what()));
    }
  }
  for (std::size_t k = 0; k < conjs.size(); ++k) {
    auto& [i, j, w] = conjs[k];
    try {
      conj[j][i] = parse_pc_normal_form(w, orders);
    } catch (const ParseError& e) {
      throw ParseError(detail::with_line(conj_lines[k], e.what()));
    }
  }
  try {
    return std::make_shared<PcPresentation>(std::move(orders), std::move(powers), std::move(conj), std::move(layers));
  } catch (const ArgumentError& e) {
    throw ParseError(std::string("pc text: ") + e.what());
  }
}

/// "l -> r" with x-letters; "1" is the empty word.
inline Rule parse_rule(std::string_view line, int k) {
  auto arrow = line.find("->");
  if (arrow == std::string_view::npos) throw ParseError("rule: expected \"l -> r\" in \"" + std::string(line) + "\"");
  Rule r{parse_letters(line.substr(0, arrow), k), parse_letters(line.substr(arrow + 2), k)};
  if (r.left.empty()) throw ParseError("rule: empty left-hand side");
  return r;
}

inline std::string rule_to_string(const Rule& r) { return letters_to_string(r.left) + " -> " + letters_to_string(r.right); }

inline std::string format_rules(const RewritingSystem& rws) {
  std::string s;
  for (const auto& r : rws.rules()) s += rule_to_string(r) + '\n';
  return s;
}

/// Element literal "<xword> | <bword>"; a missing "|" means a trivial b-part.
inline HybridElement parse_element(const HybridGroup& G, std::string_view text) {
  auto bar = text.find('|');
  std::string_view xs = bar == std::string_view::npos ? text : text.substr(0, bar);
  std::string_view bs = bar == std::string_view::npos ? std::string_view{} : text.substr(bar + 1);
  Letters w = parse_letters(xs, static_cast<int>(G.rank()));
  return G.make(w, parse_pc_word(bs, G.b_pres()));
}

namespace detail {

// Recursive-descent parser for products of literals:
//   expr := term ('*' term)* ; term := atom ('^' int)* ; atom := '(' expr ')' | literal
// A literal runs up to its b-word; '*' and ')' end the b-word.
class ExpressionParser {
 public:
  ExpressionParser(const HybridGroup& G, std::string_view s) : G_(G), s_(s) {}

  HybridElement parse() {
    HybridElement e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("expression, column " + std::to_string(pos_ + 1) + ": " + msg);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  HybridElement expr() {
    HybridElement acc = term();
    while (peek('*')) {
      ++pos_;
      acc = G_.mul(acc, term());
    }
    return acc;
  }

  HybridElement term() {
    HybridElement a = atom();
    while (peek('^')) {
      ++pos_;
      skip();
      std::size_t start = pos_;
      if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) fail("expected exponent");
      a = G_.pow(a, parse_int(s_.substr(start, pos_ - start), "exponent"));
    }
    return a;
  }

  HybridElement atom() {
    if (peek('(')) {
      ++pos_;
      HybridElement e = expr();
      if (!peek(')')) fail("expected ')'");
      ++pos_;
      return e;
    }
    return literal();
  }

  HybridElement literal() {
    skip();
    std::size_t start = pos_;
    // x-word: tokens joined by '*' up to the bar
    std::size_t bar = s_.find('|', pos_);
    if (bar == std::string_view::npos) fail("expected an element literal \"<xword> | <bword>\"");
    std::string_view xs = s_.substr(pos_, bar - pos_);
    for (char c : xs)
      if (c == '(' || c == ')' || c == '^' || c == '|') fail("malformed x-word");
    pos_ = bar + 1;
    skip();
    std::size_t bstart = pos_;
    if (s_.substr(pos_).starts_with("(empty)")) {
      pos_ += 7;
    } else {
      while (pos_ < s_.size() && s_[pos_] != '*' && s_[pos_] != ')' && s_[pos_] != '(') {
        // exponent operator after a plain "1" literal is not part of the b-word
        if (s_[pos_] == '^' && (pos_ == bstart || !std::isdigit(static_cast<unsigned char>(s_[pos_ - 1])) ||
                                s_.substr(bstart, pos_ - bstart) == "1"))
          break;
        ++pos_;
      }
    }
    std::string_view bs = s_.substr(bstart, pos_ - bstart);
    if (auto t = trim(bs); !t.empty() && t.back() == '^') fail("dangling '^'");
    try {
      Letters w = parse_letters(xs, static_cast<int>(G_.rank()));
      return G_.make(w, parse_pc_word(bs, G_.b_pres()));
    } catch (const ParseError& e) {
      pos_ = start;
      fail(e.what());
    }
  }

  const HybridGroup& G_;
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline HybridElement parse_expression(const HybridGroup& G, std::string_view text) {
  return detail::ExpressionParser(G, text).parse();
}

// ---- group definition files ----

inline nlohmann::json ordering_to_json(const Ordering& o) {
  if (o.kind() == Ordering::Kind::Shortlex) return {{"shortlex", o.rank()}};
  return {{"wreath", o.levels()}, {"rank", o.rank()}};
}

inline Ordering ordering_from_json(const nlohmann::json& j, int k) {
  if (j.is_string() && j.get<std::string>() == "shortlex") return Ordering::shortlex(k);
  if (!j.is_object()) throw ParseError("ordering: expected \"shortlex\" or an object");
  if (j.contains("shortlex")) return Ordering::shortlex(j.at("shortlex").get<std::vector<int>>());
  if (j.contains("wreath"))
    return Ordering::wreath(j.at("wreath").get<std::vector<int>>(), j.value("rank", std::vector<int>{}));
  throw ParseError("ordering: unknown kind");
}

/// Fields: name, degree (optional), a_perm_images, rules [{rule, tail}],
/// ordering (optional), pc (text or list of lines), action (per A-generator
/// the b-words of the images of y_1..y_n), segments (optional, 1-based).
inline ExtensionData extension_data_from_json(const nlohmann::json& j) {
  try {
    ExtensionData d;
    d.name = j.value("name", std::string("group"));
    for (const auto& c : j.at("a_perm_images")) {
      std::string s = c.get<std::string>();
      d.degree = std::max(d.degree, cycle_text_degree(s));
    }
    d.degree = std::max<std::size_t>(d.degree, j.value("degree", std::size_t{0}));
    for (const auto& c : j.at("a_perm_images")) d.perm_images.push_back(parse_permutation(c.get<std::string>(), d.degree));
    const int k = static_cast<int>(d.perm_images.size());

    std::string pc_text;
    const auto& pc = j.at("pc");
    if (pc.is_array())
      for (const auto& l : pc) pc_text += l.get<std::string>() + '\n';
    else
      pc_text = pc.get<std::string>();
    d.b_pres = parse_pc_presentation(pc_text);
    const PcPresentation& B = *d.b_pres;

    std::vector<Rule> rules;
    std::size_t idx = 0;
    for (const auto& r : j.at("rules")) {
      ++idx;
      try {
        std::string text = r.is_string() ? r.get<std::string>() : r.at("rule").get<std::string>();
        rules.push_back(parse_rule(text, k));
        std::string tail = r.is_object() ? r.value("tail", std::string()) : std::string();
        d.tails.push_back(parse_pc_word(tail, B));
      } catch (const ParseError& e) {
        throw ParseError("rules[" + std::to_string(idx) + "]: " + e.what());
      }
    }
    Ordering ord = j.contains("ordering") ? ordering_from_json(j.at("ordering"), k) : Ordering::shortlex(k);
    d.ordering = ord;
    d.rules = RewritingSystem(k, std::move(rules), ord);

    const auto& act = j.at("action");
    if (act.size() != static_cast<std::size_t>(k)) throw ParseError("action: one entry per A-generator is required");
    for (std::size_t a = 0; a < act.size(); ++a) {
      if (act[a].size() != B.size()) throw ParseError("action[" + std::to_string(a + 1) + "]: one image per pc generator is required");
      std::vector<PcElement> im;
      for (const auto& w : act[a]) im.push_back(parse_pc_word(w.get<std::string>(), B));
      d.action.push_back(std::move(im));
    }
    if (j.contains("segments"))
      for (std::size_t s : j.at("segments").get<std::vector<std::size_t>>()) {
        if (s < 1) throw ParseError("segments are 1-based");
        d.segments.push_back(s - 1);
      }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("group definition: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ParseError(std::string("group definition: ") + e.what());
  }
}

inline nlohmann::json group_to_json(const HybridGroup& G, const std::string& name) {
  nlohmann::json j;
  j["name"] = name;
  j["degree"] = G.degree();
  for (const auto& p : G.perm_images()) j["a_perm_images"].push_back(p.to_string());
  j["ordering"] = ordering_to_json(G.factor_rules().ordering());
  j["rules"] = nlohmann::json::array();
  const auto& rules = G.factor_rules().rules();
  for (std::size_t i = 0; i < rules.size(); ++i) {
    nlohmann::json r{{"rule", rule_to_string(rules[i])}};
    if (!G.tails()[i].is_identity()) r["tail"] = pc_to_string(G.tails()[i]);
    j["rules"].push_back(r);
  }
  j["pc"] = nlohmann::json::array();
  std::istringstream pc(format_pc_presentation(G.b_pres()));
  for (std::string l; std::getline(pc, l);) j["pc"].push_back(l);
  j["action"] = nlohmann::json::array();
  for (const auto& a : G.action()) {
    nlohmann::json im = nlohmann::json::array();
    for (const auto& e : a.images()) im.push_back(pc_to_string(e));
    j["action"].push_back(im);
  }
  if (!G.segment_hints().empty()) {
    std::vector<std::size_t> s;
    for (std::size_t h : G.segment_hints()) s.push_back(h + 1);
    j["segments"] = s;
  }
  return j;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open \"" + path + "\"");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline nlohmann::json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(origin + ": line " + std::to_string(line) + ", column " + std::to_string(col) + ": malformed JSON");
  }
}

inline ExtensionData load_extension_data(const std::string& path) {
  return extension_data_from_json(parse_json_text(read_text_file(path), path));
}

// ---- presentation files (for completion) ----

/// "gens k", optional "orders o1 .. ok", and relation lines "l = r". The
/// orders become rules x^o -> 1 during completion.
inline MonoidPresentation parse_presentation(std::string_view text) {
  MonoidPresentation p;
  std::istringstream is{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  bool have_gens = false;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string_view line = detail::trim(raw);
    if (auto h = line.find('#'); h != std::string_view::npos) line = detail::trim(line.substr(0, h));
    if (line.empty()) continue;
    try {
      auto toks = detail::split_tokens(line, " \t");
      if (toks[0] == "gens") {
        if (toks.size() != 2) throw ParseError("expected \"gens k\"");
        p.alphabet_size = static_cast<int>(detail::parse_int(toks[1], "gens"));
        if (p.alphabet_size < 1) throw ParseError("need at least one generator");
        have_gens = true;
      } else if (toks[0] == "orders") {
        if (!have_gens) throw ParseError("\"orders\" before \"gens k\"");
        if (toks.size() != static_cast<std::size_t>(p.alphabet_size) + 1) throw ParseError("expected one order per generator");
        for (std::size_t i = 1; i < toks.size(); ++i) {
          long long o = detail::parse_int(toks[i], "orders");
          if (o < 1) throw ParseError("orders must be positive");
          p.generator_orders.push_back(static_cast<std::uint64_t>(o));
        }
      } else {
        if (!have_gens) throw ParseError("relation before \"gens k\"");
        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected \"l = r\"");
        p.relations.emplace_back(parse_letters(line.substr(0, eq), p.alphabet_size),
                                 parse_letters(line.substr(eq + 1), p.alphabet_size));
      }
    } catch (const ParseError& e) {
      throw ParseError(detail::with_line(lineno, e.what()));
    }
  }
  if (!have_gens) throw ParseError("presentation: missing \"gens k\"");
  return p;
}

/// Rules file: one "l -> r" per line; the alphabet size is the largest
/// letter seen unless given.
inline RewritingSystem parse_rules_text(std::string_view text, int k = 0, std::optional<Ordering> ord = std::nullopt) {
  std::vector<std::string> lines;
  std::istringstream is{std::string(text)};
  int seen = 0;
  for (std::string raw; std::getline(is, raw);) {
    std::string_view line = detail::trim(raw);
    if (auto h = line.find('#'); h != std::string_view::npos) line = detail::trim(line.substr(0, h));
    lines.emplace_back(line);
    for (auto tok : detail::split_tokens(line, " \t*->=")) {
      if (tok.size() > 1 && tok[0] == 'x') {
        auto caret = tok.find('^');
        long long i = detail::parse_int(tok.substr(1, caret == std::string_view::npos ? std::string_view::npos : caret - 1), "rule");
        seen = std::max(seen, static_cast<int>(i));
      }
    }
  }
  if (k == 0) k = seen;
  std::vector<Rule> rules;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      rules.push_back(parse_rule(lines[i], k));
    } catch (const ParseError& e) {
      throw ParseError(detail::with_line(i + 1, e.what()));
    }
  }
  return RewritingSystem(k, std::move(rules), ord ? *ord : Ordering::shortlex(k));
}

}  // namespace hybrid
