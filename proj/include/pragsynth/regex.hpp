#pragma once

// The regex sub-language used as the concept space: a non-empty concatenation
// of quantified atoms over the alphabet {0, 1}.
//
//   S    -> RP | S RP
//   RP   -> CHAR OP
//   OP   -> '*' | '+' | '{1}' | '{2}'
//   CHAR -> '0' | '1' | '[01]'
//
// Matching is always anchored at both ends of the input.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pragsynth/error.hpp"
#include "pragsynth/rng.hpp"

namespace pragsynth {

enum class CharClass : std::uint8_t { Zero, One, ZeroOrOne };
enum class Quantifier : std::uint8_t { Star, Plus, Exactly1, Exactly2 };

inline constexpr std::size_t kNumCharClasses = 3;
inline constexpr std::size_t kNumQuantifiers = 4;
inline constexpr std::size_t kNumAtomKinds = kNumCharClasses * kNumQuantifiers;

struct Atom {
  CharClass char_class = CharClass::Zero;
  Quantifier op = Quantifier::Star;

  friend auto operator<=>(const Atom&, const Atom&) = default;

  bool accepts(char c) const {
    switch (char_class) {
      case CharClass::Zero: return c == '0';
      case CharClass::One: return c == '1';
      case CharClass::ZeroOrOne: return c == '0' || c == '1';
    }
    return false;
  }
};

class RegexAst {
 public:
  explicit RegexAst(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) {
      throw Error(ErrorCode::InvalidArgument, "a regex needs at least one atom");
    }
  }

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  friend bool operator==(const RegexAst&, const RegexAst&) = default;
  friend auto operator<=>(const RegexAst& a, const RegexAst& b) {
    return std::lexicographical_compare_three_way(
        a.atoms_.begin(), a.atoms_.end(), b.atoms_.begin(), b.atoms_.end());
  }

 private:
  std::vector<Atom> atoms_;
};

inline constexpr std::size_t kDefaultMaxLen = 10;

// A string over {0, 1} no longer than a configured maximum length.
class BinaryString {
 public:
  BinaryString() = default;

  static BinaryString parse(std::string_view text,
                            std::size_t max_len = kDefaultMaxLen) {
    if (text.size() > max_len) {
      throw Error(ErrorCode::InvalidString,
                  "example '" + std::string(text) + "' is longer than " +
                      std::to_string(max_len) + " characters");
    }
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] != '0' && text[i] != '1') {
        throw Error(ErrorCode::InvalidString,
                    "example may only contain '0' and '1' (offset " +
                        std::to_string(i) + ")");
      }
    }
    BinaryString s;
    s.bits_ = std::string(text);
    return s;
  }

  const std::string& str() const noexcept { return bits_; }
  std::size_t size() const noexcept { return bits_.size(); }
  bool empty() const noexcept { return bits_.empty(); }
  char operator[](std::size_t i) const { return bits_[i]; }

  friend auto operator<=>(const BinaryString&, const BinaryString&) = default;

 private:
  std::string bits_;
};

inline std::string render(const RegexAst& ast) {
  std::string out;
  for (const Atom& a : ast.atoms()) {
    switch (a.char_class) {
      case CharClass::Zero: out += '0'; break;
      case CharClass::One: out += '1'; break;
      case CharClass::ZeroOrOne: out += "[01]"; break;
    }
    switch (a.op) {
      case Quantifier::Star: out += '*'; break;
      case Quantifier::Plus: out += '+'; break;
      case Quantifier::Exactly1: out += "{1}"; break;
      case Quantifier::Exactly2: out += "{2}"; break;
    }
  }
  return out;
}

inline RegexAst parse(std::string_view text) {
  std::vector<Atom> atoms;
  std::size_t pos = 0;
  auto starts = [&](std::string_view tok) {
    return text.substr(pos, tok.size()) == tok;
  };
  if (text.empty()) throw SyntaxError(0, "empty regex");
  while (pos < text.size()) {
    Atom atom;
    if (starts("[01]")) {
      atom.char_class = CharClass::ZeroOrOne;
      pos += 4;
    } else if (text[pos] == '0') {
      atom.char_class = CharClass::Zero;
      ++pos;
    } else if (text[pos] == '1') {
      atom.char_class = CharClass::One;
      ++pos;
    } else {
      throw SyntaxError(pos, "expected '0', '1' or '[01]'");
    }

    if (pos >= text.size()) {
      throw SyntaxError(pos, "missing quantifier");
    }
    if (text[pos] == '*') {
      atom.op = Quantifier::Star;
      ++pos;
    } else if (text[pos] == '+') {
      atom.op = Quantifier::Plus;
      ++pos;
    } else if (starts("{1}")) {
      atom.op = Quantifier::Exactly1;
      pos += 3;
    } else if (starts("{2}")) {
      atom.op = Quantifier::Exactly2;
      pos += 3;
    } else {
      throw SyntaxError(pos, "expected '*', '+', '{1}' or '{2}'");
    }
    atoms.push_back(atom);
  }
  return RegexAst(std::move(atoms));
}

// Anchored match by forward simulation over the set of string positions
// reachable after each atom.
inline bool matches(const RegexAst& ast, std::string_view s) {
  const std::size_t n = s.size();
  std::vector<char> reach(n + 1, 0), next(n + 1, 0);
  reach[0] = 1;
  for (const Atom& atom : ast.atoms()) {
    std::fill(next.begin(), next.end(), 0);
    bool any = false;
    for (std::size_t p = 0; p <= n; ++p) {
      if (!reach[p]) continue;
      switch (atom.op) {
        case Quantifier::Star:
        case Quantifier::Plus: {
          if (atom.op == Quantifier::Star) next[p] = 1;
          for (std::size_t q = p; q < n && atom.accepts(s[q]); ++q) {
            next[q + 1] = 1;
          }
          break;
        }
        case Quantifier::Exactly1:
          if (p < n && atom.accepts(s[p])) next[p + 1] = 1;
          break;
        case Quantifier::Exactly2:
          if (p + 1 < n && atom.accepts(s[p]) && atom.accepts(s[p + 1])) {
            next[p + 2] = 1;
          }
          break;
      }
    }
    for (char c : next) any = any || c;
    if (!any) return false;
    reach.swap(next);
  }
  return reach[n] != 0;
}

inline bool matches(const RegexAst& ast, const BinaryString& s) {
  return matches(ast, std::string_view(s.str()));
}

// All regexes with 1..max_atoms atoms in a fixed order: by atom count, then
// lexicographically per atom (Zero < One < ZeroOrOne; Star < Plus < {1} < {2}).
inline std::vector<RegexAst> enumerate_grammar(std::size_t max_atoms,
                                               std::size_t limit = 0) {
  if (max_atoms == 0) {
    throw Error(ErrorCode::InvalidArgument, "max_atoms must be at least 1");
  }
  std::vector<RegexAst> out;
  auto full = [&] { return limit != 0 && out.size() >= limit; };
  for (std::size_t len = 1; len <= max_atoms && !full(); ++len) {
    std::vector<std::size_t> digits(len, 0);
    while (!full()) {
      std::vector<Atom> atoms(len);
      for (std::size_t i = 0; i < len; ++i) {
        atoms[i].char_class = static_cast<CharClass>(digits[i] / kNumQuantifiers);
        atoms[i].op = static_cast<Quantifier>(digits[i] % kNumQuantifiers);
      }
      out.emplace_back(std::move(atoms));

      std::size_t i = len;
      while (i > 0 && ++digits[i - 1] == kNumAtomKinds) {
        digits[i - 1] = 0;
        --i;
      }
      if (i == 0) break;
    }
  }
  return out;
}

// k distinct elements of pool via a seeded partial Fisher-Yates shuffle.
inline std::vector<RegexAst> sample_concepts(const std::vector<RegexAst>& pool,
                                             std::size_t k, std::uint64_t seed) {
  if (k > pool.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "cannot sample " + std::to_string(k) + " concepts from a pool of " +
                    std::to_string(pool.size()));
  }
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  std::vector<RegexAst> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_index(rng, idx.size() - i);
    std::swap(idx[i], idx[j]);
    out.push_back(pool[idx[i]]);
  }
  return out;
}

inline std::string explain(const Atom& atom) {
  std::string quant;
  switch (atom.op) {
    case Quantifier::Star: quant = "zero or more"; break;
    case Quantifier::Plus: quant = "one or more"; break;
    case Quantifier::Exactly1: quant = "exactly one"; break;
    case Quantifier::Exactly2: quant = "exactly two"; break;
  }
  const bool plural = atom.op != Quantifier::Exactly1;
  switch (atom.char_class) {
    case CharClass::Zero: return quant + (plural ? " '0's" : " '0'");
    case CharClass::One: return quant + (plural ? " '1's" : " '1'");
    case CharClass::ZeroOrOne:
      return quant + (plural ? " characters, each '0' or '1'"
                             : " character, '0' or '1'");
  }
  return quant;
}

inline std::string explain(const RegexAst& ast) {
  std::string out;
  for (const Atom& a : ast.atoms()) {
    if (!out.empty()) out += ", followed by ";
    out += explain(a);
  }
  return out;
}

}  // namespace pragsynth
