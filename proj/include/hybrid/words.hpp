#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hybrid/error.hpp"

namespace hybrid {

/// A word over a finite generating set and its inverses. Letter +(i+1)
/// denotes generator i, letter -(i+1) its inverse.
using Word = std::vector<int>;

constexpr int letter(int gen) { return gen + 1; }
constexpr int inverse_letter(int gen) { return -(gen + 1); }
constexpr int letter_generator(int l) { return l > 0 ? l - 1 : -l - 1; }

inline Word free_reduce(const Word& w) {
  Word out;
  out.reserve(w.size());
  for (int l : w) {
    if (!out.empty() && out.back() == -l)
      out.pop_back();
    else
      out.push_back(l);
  }
  return out;
}

inline Word inverse_word(const Word& w) {
  Word out(w.rbegin(), w.rend());
  for (int& l : out) l = -l;
  return out;
}

inline std::string word_to_string(const Word& w, char symbol = 'g') {
  if (w.empty()) return "1";
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += '*';
    s += symbol + std::to_string(letter_generator(w[i]) + 1);
    if (w[i] < 0) s += "^-1";
  }
  return s;
}

/// Evaluates a signed word given generator values and their inverses.
template <class T, class Mul>
T evaluate_word(const Word& w, std::span<const T> gens, std::span<const T> gen_inverses,
                const T& identity, Mul&& mul) {
  T acc = identity;
  for (int l : w) {
    int g = letter_generator(l);
    acc = mul(acc, l > 0 ? gens[g] : gen_inverses[g]);
  }
  return acc;
}

/// Straight-line program over a fixed number of inputs. Values are
/// referenced by integer ids: 0..inputs()-1 are the inputs, each line adds
/// one more value, and kIdentity denotes the empty product.
class Slp {
 public:
  static constexpr int kIdentity = -1;
  static constexpr std::size_t kDefaultFlatLimit = std::size_t{1} << 24;

  enum class Op : std::uint8_t { Mul, Inv };
  struct Line {
    Op op;
    int lhs;
    int rhs;
  };

  explicit Slp(int inputs = 0)
      : inputs_(inputs), inverse_of_(inputs, kIdentity), lengths_(inputs, 1) {}

  int inputs() const { return inputs_; }
  int size() const { return inputs_ + static_cast<int>(lines_.size()); }
  const std::vector<Line>& lines() const { return lines_; }

  int mul(int a, int b) {
    if (a == kIdentity) return b;
    if (b == kIdentity) return a;
    if (inverse_of_[a] == b) return kIdentity;
    return push({Op::Mul, a, b});
  }

  int inv(int a) {
    if (a == kIdentity) return kIdentity;
    if (inverse_of_[a] != kIdentity) return inverse_of_[a];
    int v = push({Op::Inv, a, kIdentity});
    inverse_of_[a] = v;
    inverse_of_[v] = a;
    return v;
  }

  int pow(int a, long long k) {
    if (k < 0) return pow(inv(a), -k);
    int result = kIdentity;
    int base = a;
    while (k > 0) {
      if (k & 1) result = mul(result, base);
      k >>= 1;
      if (k) base = mul(base, base);
    }
    return result;
  }

  /// Evaluates every value of the program.
  template <class T, class Mul, class Inv>
  std::vector<T> evaluate(std::span<const T> in, Mul&& m, Inv&& i) const {
    if (static_cast<int>(in.size()) != inputs_) throw ArgumentError("slp: input count mismatch");
    std::vector<T> values(in.begin(), in.end());
    values.reserve(size());
    for (const Line& line : lines_) {
      if (line.op == Op::Mul)
        values.push_back(m(values[line.lhs], values[line.rhs]));
      else
        values.push_back(i(values[line.lhs]));
    }
    return values;
  }

  /// Evaluates the given values only, visiting just the lines they depend on.
  template <class T, class Mul, class Inv>
  std::vector<T> evaluate_values(std::span<const int> wanted, std::span<const T> in, const T& identity, Mul&& m,
                                 Inv&& i) const {
    if (static_cast<int>(in.size()) != inputs_) throw ArgumentError("slp: input count mismatch");
    std::vector<char> need(lines_.size(), 0);
    std::vector<int> stack;
    for (int v : wanted)
      if (v >= inputs_) stack.push_back(v);
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      if (v < inputs_ || need[v - inputs_]) continue;
      need[v - inputs_] = 1;
      const Line& line = lines_[v - inputs_];
      stack.push_back(line.lhs);
      if (line.op == Op::Mul) stack.push_back(line.rhs);
    }
    std::vector<T> values(in.begin(), in.end());
    values.resize(static_cast<std::size_t>(size()), identity);
    for (std::size_t l = 0; l < lines_.size(); ++l) {
      if (!need[l]) continue;
      const Line& line = lines_[l];
      values[inputs_ + l] = line.op == Op::Mul ? m(values[line.lhs], values[line.rhs]) : i(values[line.lhs]);
    }
    std::vector<T> out;
    for (int v : wanted) out.push_back(v == kIdentity ? identity : values[v]);
    return out;
  }

  /// Length of the flattened word for a value (saturating).
  std::size_t length(int value) const {
    if (value == kIdentity) return 0;
    return lengths_[value];
  }

  /// Expands a value into a flat free-reduced word; throws LimitError when
  /// the unreduced expansion exceeds `limit` letters.
  Word flatten(int value, std::size_t limit = kDefaultFlatLimit) const {
    Word out;
    if (value == kIdentity) return out;
    if (length(value) > limit) throw LimitError("slp: flat word exceeds length limit");
    struct Frame {
      int value;
      bool inverted;
    };
    std::vector<Frame> stack{{value, false}};
    while (!stack.empty()) {
      Frame f = stack.back();
      stack.pop_back();
      if (f.value < inputs_) {
        int l = f.inverted ? inverse_letter(f.value) : letter(f.value);
        if (!out.empty() && out.back() == -l)
          out.pop_back();
        else
          out.push_back(l);
        continue;
      }
      const Line& line = lines_[f.value - inputs_];
      if (line.op == Op::Inv) {
        stack.push_back({line.lhs, !f.inverted});
      } else if (!f.inverted) {
        stack.push_back({line.rhs, false});
        stack.push_back({line.lhs, false});
      } else {
        stack.push_back({line.lhs, true});
        stack.push_back({line.rhs, true});
      }
    }
    return out;
  }

 private:
  int push(Line line) {
    constexpr std::size_t cap = std::numeric_limits<std::size_t>::max() / 4;
    std::size_t len = lengths_[line.lhs];
    if (line.op == Op::Mul) len += lengths_[line.rhs];
    lines_.push_back(line);
    inverse_of_.push_back(kIdentity);
    lengths_.push_back(len > cap ? cap : len);
    return size() - 1;
  }

  int inputs_;
  std::vector<Line> lines_;
  std::vector<int> inverse_of_;
  std::vector<std::size_t> lengths_;
};

}  // namespace hybrid
