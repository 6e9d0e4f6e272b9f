#pragma once

// Rational Speech Acts inference over a MeaningMatrix with a uniform prior:
//
//   L0(w | D)        = 1[w |- D] / sum_w' 1[w' |- D]
//   S1(u_i | w, D<i) = L0(w | D<i, u_i) / sum_u' L0(w | D<i, u')
//   S1(D | w)        = prod_i S1(u_i | w, D<i)
//   L1(w | D)        = S1(D | w) / sum_w' S1(D | w')
//
// The speaker's normalizer ranges over every utterance in the matrix,
// including ones already present in the prefix.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pragsynth/bitset.hpp"
#include "pragsynth/domain.hpp"
#include "pragsynth/error.hpp"
#include "pragsynth/rng.hpp"

namespace pragsynth {

enum class ListenerKind { Literal, Pragmatic };

constexpr std::string_view to_string(ListenerKind k) {
  return k == ListenerKind::Literal ? "literal" : "pragmatic";
}

struct Posterior {
  std::vector<double> probs;
  ExampleSequence examples;

  std::size_t support_size() const {
    return static_cast<std::size_t>(
        std::count_if(probs.begin(), probs.end(), [](double p) { return p > 0.0; }));
  }
};

namespace detail {

inline void check_examples(const MeaningMatrix& m, const ExampleSequence& d) {
  for (std::size_t i : d) {
    if (i >= m.num_utterances()) {
      throw Error(ErrorCode::UnknownUtterance,
                  "utterance index " + std::to_string(i) + " is not in the domain");
    }
  }
}

// sum_u 1[w |- u] / |consistent(prefix) & row(u)| for every w in `prefix_set`.
// Entries for concepts outside prefix_set are left at zero.
inline std::vector<double> speaker_normalizers(const MeaningMatrix& m,
                                               const ConceptSet& prefix_set) {
  std::vector<double> denom(m.num_concepts(), 0.0);
  for (const ConceptSet& row : m.rows()) {
    const ConceptSet both = prefix_set & row;
    const std::size_t c = both.count();
    if (c == 0) continue;
    const double inv = 1.0 / static_cast<double>(c);
    both.for_each([&](std::size_t w) { denom[w] += inv; });
  }
  return denom;
}

}  // namespace detail

inline Posterior literal_listener(const MeaningMatrix& m, const ExampleSequence& d) {
  detail::check_examples(m, d);
  const ConceptSet cs = consistent_set(m, d);
  const std::size_t n = cs.count();
  if (n == 0) {
    throw Error(ErrorCode::InconsistentSpec, "no concept is consistent with the examples");
  }
  Posterior p{std::vector<double>(m.num_concepts(), 0.0), d};
  const double v = 1.0 / static_cast<double>(n);
  cs.for_each([&](std::size_t w) { p.probs[w] = v; });
  return p;
}

// Distribution of the next utterance the incremental speaker S1 would give
// for concept w after `prefix`, over every row of m.
inline std::vector<double> speaker_distribution(const MeaningMatrix& m, std::size_t w,
                                                const ExampleSequence& prefix) {
  detail::check_examples(m, prefix);
  if (w >= m.num_concepts()) {
    throw Error(ErrorCode::InvalidArgument, "concept index out of range");
  }
  const ConceptSet cs = consistent_set(m, prefix);
  if (!cs.test(w)) {
    throw Error(ErrorCode::InconsistentSpec,
                "concept " + m.concept_label(w) + " is inconsistent with the prefix");
  }
  std::vector<double> out(m.num_utterances(), 0.0);
  double total = 0.0;
  for (std::size_t u = 0; u < m.num_utterances(); ++u) {
    if (!m.consistent(u, w)) continue;
    out[u] = 1.0 / static_cast<double>(cs.count_and(m.row(u)));
    total += out[u];
  }
  if (total == 0.0) {
    throw Error(ErrorCode::InconsistentSpec,
                "no utterance is consistent with concept " + m.concept_label(w));
  }
  for (double& v : out) v /= total;
  return out;
}

inline double speaker_step(const MeaningMatrix& m, std::size_t w,
                           const ExampleSequence& prefix, std::size_t u) {
  if (u >= m.num_utterances()) {
    throw Error(ErrorCode::UnknownUtterance, "utterance index out of range");
  }
  detail::check_examples(m, prefix);
  if (w >= m.num_concepts()) {
    throw Error(ErrorCode::InvalidArgument, "concept index out of range");
  }
  const ConceptSet cs = consistent_set(m, prefix);
  if (!cs.test(w)) {
    throw Error(ErrorCode::InconsistentSpec,
                "concept " + m.concept_label(w) + " is inconsistent with the prefix");
  }
  double denom = 0.0;
  for (std::size_t v = 0; v < m.num_utterances(); ++v) {
    if (m.consistent(v, w)) denom += 1.0 / static_cast<double>(cs.count_and(m.row(v)));
  }
  if (denom == 0.0) {
    throw Error(ErrorCode::InconsistentSpec,
                "no utterance is consistent with concept " + m.concept_label(w));
  }
  if (!m.consistent(u, w)) return 0.0;
  return (1.0 / static_cast<double>(cs.count_and(m.row(u)))) / denom;
}

// S1(D | w) for every concept at once; a concept dropped by some prefix of D
// scores zero. Shares one normalizer pass per step across all concepts.
inline std::vector<double> speaker_sequence_probs(const MeaningMatrix& m,
                                                  const ExampleSequence& d) {
  detail::check_examples(m, d);
  std::vector<double> score(m.num_concepts(), 1.0);
  ConceptSet prefix_set(m.num_concepts(), true);
  for (std::size_t u : d) {
    const std::vector<double> denom = detail::speaker_normalizers(m, prefix_set);
    const ConceptSet next = prefix_set & m.row(u);
    const std::size_t c = next.count();
    prefix_set.for_each([&](std::size_t w) {
      if (next.test(w)) {
        score[w] *= (1.0 / static_cast<double>(c)) / denom[w];
      }
    });
    prefix_set = next;
    if (prefix_set.none()) break;
  }
  const ConceptSet dropped = ~prefix_set;
  dropped.for_each([&](std::size_t w) { score[w] = 0.0; });
  return score;
}

inline double speaker_sequence_prob(const MeaningMatrix& m, std::size_t w,
                                    const ExampleSequence& d) {
  if (w >= m.num_concepts()) {
    throw Error(ErrorCode::InvalidArgument, "concept index out of range");
  }
  detail::check_examples(m, d);
  double prob = 1.0;
  ExampleSequence prefix;
  prefix.reserve(d.size());
  for (std::size_t u : d) {
    if (!m.consistent(u, w)) return 0.0;
    prob *= speaker_step(m, w, prefix, u);
    prefix.push_back(u);
  }
  return prob;
}

inline Posterior pragmatic_listener(const MeaningMatrix& m, const ExampleSequence& d) {
  Posterior p{speaker_sequence_probs(m, d), d};
  const double total = std::accumulate(p.probs.begin(), p.probs.end(), 0.0);
  if (!(total > 0.0)) {
    throw Error(ErrorCode::InconsistentSpec, "no concept is consistent with the examples");
  }
  for (double& v : p.probs) v /= total;
  return p;
}

inline Posterior listen(ListenerKind kind, const MeaningMatrix& m,
                        const ExampleSequence& d) {
  return kind == ListenerKind::Literal ? literal_listener(m, d)
                                       : pragmatic_listener(m, d);
}

enum class TiePolicy { RandomUniform, LowestIndex };

inline constexpr double kTieTolerance = 1e-9;

inline bool ties(double a, double b) {
  return std::abs(a - b) <= kTieTolerance * std::max(a, b);
}

// Indices whose probability ties the maximum, ascending.
inline std::vector<std::size_t> argmax_set(const std::vector<double>& probs) {
  std::vector<std::size_t> out;
  if (probs.empty()) return out;
  const double best = *std::max_element(probs.begin(), probs.end());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (ties(probs[i], best)) out.push_back(i);
  }
  return out;
}

inline std::size_t best_guess(const Posterior& p, TiePolicy policy, Rng& rng) {
  const auto best = argmax_set(p.probs);
  if (best.empty()) throw Error(ErrorCode::InvalidArgument, "empty posterior");
  if (policy == TiePolicy::LowestIndex || best.size() == 1) return best.front();
  return best[uniform_index(rng, best.size())];
}

// [{concept, prob}, ...] over the support, descending by probability.
inline nlohmann::json posterior_to_json(const MeaningMatrix& m, const Posterior& p) {
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < p.probs.size(); ++j) {
    if (p.probs[j] > 0.0) order.push_back(j);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p.probs[a] > p.probs[b]; });
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t j : order) {
    out.push_back({{"concept", m.concept_label(j)}, {"prob", p.probs[j]}});
  }
  return out;
}

}  // namespace pragsynth
