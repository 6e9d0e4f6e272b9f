#pragma once

// Reference-game domains: the utterance universe, the boolean meaning matrix
// over (utterance, concept) pairs, and its signed positive/negative extension.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pragsynth/bitset.hpp"
#include "pragsynth/error.hpp"
#include "pragsynth/regex.hpp"

namespace pragsynth {

enum class Sign : std::uint8_t { Unsigned, Positive, Negative };

constexpr std::string_view to_string(Sign s) {
  switch (s) {
    case Sign::Unsigned: return "unsigned";
    case Sign::Positive: return "positive";
    case Sign::Negative: return "negative";
  }
  return "unsigned";
}

constexpr char sign_char(Sign s) {
  switch (s) {
    case Sign::Unsigned: return '.';
    case Sign::Positive: return '+';
    case Sign::Negative: return '-';
  }
  return '.';
}

inline std::optional<Sign> sign_from_string(std::string_view text) {
  if (text == "positive" || text == "+") return Sign::Positive;
  if (text == "negative" || text == "-") return Sign::Negative;
  if (text == "unsigned" || text == ".") return Sign::Unsigned;
  return std::nullopt;
}

// An utterance is the text of an example plus its sign. Regex domains use
// binary strings; generic reference games (e.g. the faces game) use any label.
struct Utterance {
  std::string text;
  Sign sign = Sign::Unsigned;

  friend auto operator<=>(const Utterance&, const Utterance&) = default;
};

inline std::string display(const Utterance& u) {
  if (u.sign == Sign::Unsigned) return u.text;
  return "(" + u.text + "," + sign_char(u.sign) + ")";
}

// Ordered example sequence as row indices into a MeaningMatrix.
using ExampleSequence = std::vector<std::size_t>;

class MeaningMatrix {
 public:
  MeaningMatrix() = default;

  // rows[i] is the set of concepts consistent with utterances[i].
  MeaningMatrix(std::vector<std::string> concepts, std::vector<Utterance> utterances,
                std::vector<ConceptSet> rows, std::size_t max_len = 0)
      : concepts_(std::move(concepts)),
        utterances_(std::move(utterances)),
        rows_(std::move(rows)),
        max_len_(max_len) {
    if (concepts_.empty()) {
      throw Error(ErrorCode::InvalidArgument, "meaning matrix needs concepts");
    }
    if (rows_.size() != utterances_.size()) {
      throw Error(ErrorCode::InvalidArgument, "one row per utterance required");
    }
    for (const ConceptSet& r : rows_) {
      if (r.width() != concepts_.size()) {
        throw Error(ErrorCode::InvalidArgument, "row width differs from concept count");
      }
    }
    signed_ = !utterances_.empty() && utterances_.front().sign != Sign::Unsigned;
    for (std::size_t i = 0; i < utterances_.size(); ++i) {
      const bool s = utterances_[i].sign != Sign::Unsigned;
      if (s != signed_) {
        throw Error(ErrorCode::InvalidArgument, "mixed signed and unsigned utterances");
      }
      if (!index_.emplace(utterances_[i], i).second) {
        throw Error(ErrorCode::InvalidArgument,
                    "duplicate utterance " + display(utterances_[i]));
      }
    }
    for (std::size_t j = 0; j < concepts_.size(); ++j) {
      concept_index_.emplace(concepts_[j], j);
    }
  }

  std::size_t num_concepts() const noexcept { return concepts_.size(); }
  std::size_t num_utterances() const noexcept { return utterances_.size(); }
  bool is_signed() const noexcept { return signed_; }
  std::size_t max_len() const noexcept { return max_len_; }

  const std::vector<std::string>& concepts() const noexcept { return concepts_; }
  const std::string& concept_label(std::size_t j) const { return concepts_.at(j); }
  const std::vector<Utterance>& utterances() const noexcept { return utterances_; }
  const Utterance& utterance(std::size_t i) const { return utterances_.at(i); }
  const std::vector<ConceptSet>& rows() const noexcept { return rows_; }
  const ConceptSet& row(std::size_t i) const { return rows_.at(i); }

  bool consistent(std::size_t utterance, std::size_t concept_idx) const {
    return rows_[utterance].test(concept_idx);
  }

  std::optional<std::size_t> find(const Utterance& u) const {
    auto it = index_.find(u);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::size_t> find_concept(std::string_view label) const {
    auto it = concept_index_.find(std::string(label));
    if (it == concept_index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(const Utterance& u) const {
    if (auto i = find(u)) return *i;
    throw Error(ErrorCode::UnknownUtterance,
                "utterance " + display(u) + " is not in the domain");
  }

 private:
  std::vector<std::string> concepts_;
  std::vector<Utterance> utterances_;
  std::vector<ConceptSet> rows_;
  std::size_t max_len_ = 0;
  bool signed_ = false;
  std::map<Utterance, std::size_t> index_;
  std::map<std::string, std::size_t, std::less<>> concept_index_;
};

// All binary strings of length 0..max_len, by length then lexicographically.
inline std::vector<BinaryString> utterance_universe(std::size_t max_len) {
  if (max_len >= 31) {
    throw Error(ErrorCode::InvalidArgument, "max_len too large for enumeration");
  }
  std::vector<BinaryString> out;
  out.reserve((std::size_t{1} << (max_len + 1)) - 1);
  for (std::size_t len = 0; len <= max_len; ++len) {
    for (std::size_t v = 0; v < (std::size_t{1} << len); ++v) {
      std::string s(len, '0');
      for (std::size_t k = 0; k < len; ++k) {
        if ((v >> (len - 1 - k)) & 1U) s[k] = '1';
      }
      out.push_back(BinaryString::parse(s, max_len));
    }
  }
  return out;
}

inline MeaningMatrix build_matrix(const std::vector<RegexAst>& concepts,
                                  const std::vector<BinaryString>& strings) {
  if (concepts.empty() || strings.empty()) {
    throw Error(ErrorCode::InvalidArgument, "concepts and strings must be non-empty");
  }
  std::vector<std::string> labels;
  labels.reserve(concepts.size());
  for (const RegexAst& c : concepts) labels.push_back(render(c));

  std::vector<Utterance> utterances;
  std::vector<ConceptSet> rows;
  utterances.reserve(strings.size());
  rows.reserve(strings.size());
  std::size_t max_len = 0;
  for (const BinaryString& s : strings) {
    ConceptSet row(concepts.size());
    for (std::size_t j = 0; j < concepts.size(); ++j) {
      if (matches(concepts[j], s)) row.set(j);
    }
    utterances.push_back({s.str(), Sign::Unsigned});
    rows.push_back(std::move(row));
    max_len = std::max(max_len, s.size());
  }
  return MeaningMatrix(std::move(labels), std::move(utterances), std::move(rows),
                       max_len);
}

// Doubles the rows: (u,+) copies u's row and (u,-) holds its complement,
// interleaved as (u0,+),(u0,-),(u1,+),(u1,-),...
inline MeaningMatrix sign_extend(const MeaningMatrix& m) {
  if (m.is_signed()) {
    throw Error(ErrorCode::InvalidArgument, "matrix is already signed");
  }
  std::vector<Utterance> utterances;
  std::vector<ConceptSet> rows;
  utterances.reserve(2 * m.num_utterances());
  rows.reserve(2 * m.num_utterances());
  for (std::size_t i = 0; i < m.num_utterances(); ++i) {
    utterances.push_back({m.utterance(i).text, Sign::Positive});
    rows.push_back(m.row(i));
    utterances.push_back({m.utterance(i).text, Sign::Negative});
    rows.push_back(~m.row(i));
  }
  return MeaningMatrix(m.concepts(), std::move(utterances), std::move(rows),
                       m.max_len());
}

inline ConceptSet consistent_set(const MeaningMatrix& m, const ExampleSequence& examples) {
  ConceptSet out(m.num_concepts(), true);
  for (std::size_t i : examples) {
    if (i >= m.num_utterances()) {
      throw Error(ErrorCode::UnknownUtterance,
                  "utterance index " + std::to_string(i) + " is not in the domain");
    }
    out &= m.row(i);
  }
  return out;
}

inline ExampleSequence resolve(const MeaningMatrix& m,
                               const std::vector<Utterance>& examples) {
  ExampleSequence out;
  out.reserve(examples.size());
  for (const Utterance& u : examples) out.push_back(m.index_of(u));
  return out;
}

inline ConceptSet consistent_set(const MeaningMatrix& m,
                                 const std::vector<Utterance>& examples) {
  return consistent_set(m, resolve(m, examples));
}

// ---------------------------------------------------------------------------
// Default full-scale domain.

inline constexpr std::uint64_t kDefaultConceptSeed = 2023;

struct DomainConfig {
  std::size_t pool_max_atoms = 4;
  std::size_t pool_size = 10000;
  std::size_t sample_size = 350;
  std::uint64_t seed = kDefaultConceptSeed;
  std::size_t max_len = kDefaultMaxLen;
};

struct Domain {
  DomainConfig config;
  std::vector<RegexAst> concepts;
  MeaningMatrix unsigned_matrix;
  MeaningMatrix signed_matrix;
};

inline Domain build_domain(const DomainConfig& cfg) {
  Domain d;
  d.config = cfg;
  const auto pool = enumerate_grammar(cfg.pool_max_atoms, cfg.pool_size);
  d.concepts = sample_concepts(pool, cfg.sample_size, cfg.seed);
  d.unsigned_matrix = build_matrix(d.concepts, utterance_universe(cfg.max_len));
  d.signed_matrix = sign_extend(d.unsigned_matrix);
  return d;
}

// Domain over an explicit concept list (used for the demo domain).
inline Domain build_domain(const std::vector<RegexAst>& concepts,
                           const std::vector<BinaryString>& strings) {
  Domain d;
  d.config.sample_size = concepts.size();
  d.config.max_len = 0;
  for (const auto& s : strings) d.config.max_len = std::max(d.config.max_len, s.size());
  d.concepts = concepts;
  d.unsigned_matrix = build_matrix(concepts, strings);
  d.signed_matrix = sign_extend(d.unsigned_matrix);
  return d;
}

// ---------------------------------------------------------------------------
// Serialization.
//
// Text artifact, one record per line:
//   pragsynth-matrix 1
//   max_len <n>
//   signed <0|1>
//   concepts <count>
//   <concept label>            (count lines)
//   utterances <count>
//   <sign char> <row hex> <text>   (count lines; text may be empty)

inline constexpr int kMatrixFormatVersion = 1;

inline void write_matrix(std::ostream& os, const MeaningMatrix& m) {
  os << "pragsynth-matrix " << kMatrixFormatVersion << '\n';
  os << "max_len " << m.max_len() << '\n';
  os << "signed " << (m.is_signed() ? 1 : 0) << '\n';
  os << "concepts " << m.num_concepts() << '\n';
  for (const auto& c : m.concepts()) os << c << '\n';
  os << "utterances " << m.num_utterances() << '\n';
  for (std::size_t i = 0; i < m.num_utterances(); ++i) {
    const Utterance& u = m.utterance(i);
    os << sign_char(u.sign) << ' ' << m.row(i).to_hex() << ' ' << u.text << '\n';
  }
}

inline MeaningMatrix read_matrix(std::istream& is) {
  auto fail = [](const std::string& what) {
    return Error(ErrorCode::CorruptData, "matrix artifact: " + what);
  };
  std::string line;
  auto expect_header = [&](std::string_view key) -> std::size_t {
    if (!std::getline(is, line)) throw fail("truncated before '" + std::string(key) + "'");
    std::istringstream ls(line);
    std::string k;
    long long v = -1;
    if (!(ls >> k >> v) || k != key || v < 0) {
      throw fail("expected '" + std::string(key) + " <n>', got '" + line + "'");
    }
    return static_cast<std::size_t>(v);
  };
  if (expect_header("pragsynth-matrix") != kMatrixFormatVersion) {
    throw fail("unsupported format version");
  }
  const std::size_t max_len = expect_header("max_len");
  const bool is_signed = expect_header("signed") != 0;
  const std::size_t nc = expect_header("concepts");
  std::vector<std::string> concepts;
  for (std::size_t j = 0; j < nc; ++j) {
    if (!std::getline(is, line)) throw fail("truncated concept list");
    concepts.push_back(line);
  }
  const std::size_t nu = expect_header("utterances");
  std::vector<Utterance> utterances;
  std::vector<ConceptSet> rows;
  for (std::size_t i = 0; i < nu; ++i) {
    if (!std::getline(is, line)) throw fail("truncated utterance list");
    const auto sp1 = line.find(' ');
    const auto sp2 = sp1 == std::string::npos ? sp1 : line.find(' ', sp1 + 1);
    if (sp1 != 1 || sp2 == std::string::npos) throw fail("bad row '" + line + "'");
    Utterance u;
    switch (line[0]) {
      case '.': u.sign = Sign::Unsigned; break;
      case '+': u.sign = Sign::Positive; break;
      case '-': u.sign = Sign::Negative; break;
      default: throw fail("bad sign in row '" + line + "'");
    }
    if ((u.sign != Sign::Unsigned) != is_signed) throw fail("sign disagrees with header");
    ConceptSet row;
    if (!ConceptSet::from_hex(nc, line.substr(2, sp2 - 2), row)) {
      throw fail("bad bitset in row '" + line + "'");
    }
    u.text = line.substr(sp2 + 1);
    utterances.push_back(std::move(u));
    rows.push_back(std::move(row));
  }
  return MeaningMatrix(std::move(concepts), std::move(utterances), std::move(rows),
                       max_len);
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.empty() || s.find_first_of(",\"\n") != std::string::npos) {
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + "\"";
  }
  return s;
}

}  // namespace detail

// Header row of concept labels after a leading "utterance" column; cells 0/1.
inline void write_csv(std::ostream& os, const MeaningMatrix& m) {
  os << "utterance";
  for (const auto& c : m.concepts()) os << ',' << detail::csv_field(c);
  os << '\n';
  for (std::size_t i = 0; i < m.num_utterances(); ++i) {
    os << detail::csv_field(display(m.utterance(i)));
    for (std::size_t j = 0; j < m.num_concepts(); ++j) {
      os << ',' << (m.consistent(i, j) ? '1' : '0');
    }
    os << '\n';
  }
}

}  // namespace pragsynth
