#pragma once

// Test-only reference implementations. They share no code with the library's
// matcher or inference path.

#include <cstddef>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace oracle {

// Atom as (class, quantifier) codes: class 0='0', 1='1', 2='[01]';
// quantifier 0='*', 1='+', 2='{1}', 3='{2}'.
struct Atom {
  int cls;
  int quant;
};

inline bool in_class(int cls, char c) {
  return cls == 2 ? (c == '0' || c == '1') : c == (cls == 0 ? '0' : '1');
}

// Whether a single atom matches exactly s[i, j).
inline bool atom_matches_segment(const Atom& a, const std::string& s, std::size_t i,
                                 std::size_t j) {
  const std::size_t len = j - i;
  switch (a.quant) {
    case 0: break;
    case 1: if (len < 1) return false; break;
    case 2: if (len != 1) return false; break;
    case 3: if (len != 2) return false; break;
  }
  for (std::size_t k = i; k < j; ++k) {
    if (!in_class(a.cls, s[k])) return false;
  }
  return true;
}

// Interval DP: ok[k][i] = atoms[k..] match s[i..n) exactly.
inline bool matches(const std::vector<Atom>& atoms, const std::string& s) {
  const std::size_t n = s.size();
  const std::size_t m = atoms.size();
  std::vector<std::vector<char>> ok(m + 1, std::vector<char>(n + 1, 0));
  ok[m][n] = 1;
  for (std::size_t k = m; k-- > 0;) {
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t j = i; j <= n; ++j) {
        if (ok[k + 1][j] && atom_matches_segment(atoms[k], s, i, j)) {
          ok[k][i] = 1;
          break;
        }
      }
    }
  }
  return ok[0][0] != 0;
}

inline std::vector<Atom> parse(const std::string& text) {
  std::vector<Atom> out;
  std::size_t p = 0;
  while (p < text.size()) {
    Atom a{};
    if (text.compare(p, 4, "[01]") == 0) {
      a.cls = 2;
      p += 4;
    } else {
      a.cls = text[p] == '0' ? 0 : 1;
      p += 1;
    }
    if (text[p] == '*') {
      a.quant = 0;
      p += 1;
    } else if (text[p] == '+') {
      a.quant = 1;
      p += 1;
    } else {
      a.quant = text[p + 1] == '1' ? 2 : 3;
      p += 3;
    }
    out.push_back(a);
  }
  return out;
}

using Rational = boost::multiprecision::cpp_rational;

// Exact-rational RSA chain straight from the defining formulas. table[u][w]
// is 1 iff concept w is consistent with utterance u.
class ExactRsa {
 public:
  explicit ExactRsa(std::vector<std::vector<int>> table) : t_(std::move(table)) {}

  std::size_t num_utterances() const { return t_.size(); }
  std::size_t num_concepts() const { return t_.empty() ? 0 : t_[0].size(); }

  bool consistent(std::size_t w, const std::vector<std::size_t>& d) const {
    for (std::size_t u : d) {
      if (!t_[u][w]) return false;
    }
    return true;
  }

  Rational l0(std::size_t w, const std::vector<std::size_t>& d) const {
    int total = 0;
    for (std::size_t v = 0; v < num_concepts(); ++v) total += consistent(v, d) ? 1 : 0;
    if (total == 0 || !consistent(w, d)) return 0;
    return Rational(1, total);
  }

  Rational speaker_step(std::size_t w, const std::vector<std::size_t>& prefix,
                        std::size_t u) const {
    Rational denom = 0;
    for (std::size_t v = 0; v < num_utterances(); ++v) {
      auto d = prefix;
      d.push_back(v);
      denom += l0(w, d);
    }
    auto d = prefix;
    d.push_back(u);
    return l0(w, d) / denom;
  }

  Rational speaker_sequence(std::size_t w, const std::vector<std::size_t>& d) const {
    Rational p = 1;
    std::vector<std::size_t> prefix;
    for (std::size_t u : d) {
      if (!consistent(w, prefix)) return 0;
      p *= speaker_step(w, prefix, u);
      prefix.push_back(u);
    }
    return p;
  }

  std::vector<Rational> l1(const std::vector<std::size_t>& d) const {
    std::vector<Rational> s(num_concepts());
    Rational total = 0;
    for (std::size_t w = 0; w < num_concepts(); ++w) {
      s[w] = speaker_sequence(w, d);
      total += s[w];
    }
    for (auto& x : s) x /= total;
    return s;
  }

 private:
  std::vector<std::vector<int>> t_;
};

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace oracle
