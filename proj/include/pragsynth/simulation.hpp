#pragma once

// Closed-loop communication games with simulated speakers. The speaker adds
// one example at a time; after each addition the listener makes a best guess,
// and the game ends on a correct guess, when the example budget is spent, or
// when the speaker has nothing left to say.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pragsynth/domain.hpp"
#include "pragsynth/error.hpp"
#include "pragsynth/rng.hpp"
#include "pragsynth/rsa.hpp"

namespace pragsynth {

enum class SpeakerKind { RandomConsistent, PragmaticArgmax, PragmaticSample };

constexpr std::string_view to_string(SpeakerKind k) {
  switch (k) {
    case SpeakerKind::RandomConsistent: return "random-consistent";
    case SpeakerKind::PragmaticArgmax: return "pragmatic-argmax";
    case SpeakerKind::PragmaticSample: return "pragmatic-sample";
  }
  return "random-consistent";
}

enum class GameOutcome { Success, Budget, Exhausted };

constexpr std::string_view to_string(GameOutcome o) {
  switch (o) {
    case GameOutcome::Success: return "success";
    case GameOutcome::Budget: return "budget";
    case GameOutcome::Exhausted: return "exhausted";
  }
  return "success";
}

struct GameConfig {
  std::size_t target = 0;
  ListenerKind listener = ListenerKind::Pragmatic;
  SpeakerKind speaker = SpeakerKind::RandomConsistent;
  std::size_t example_budget = 10;
  bool allow_negative = false;
  std::uint64_t seed = 0;
  TiePolicy tie_policy = TiePolicy::RandomUniform;

  void validate(const MeaningMatrix& m) const {
    if (example_budget < 1) {
      throw Error(ErrorCode::InvalidArgument, "example_budget must be at least 1");
    }
    if (target >= m.num_concepts()) {
      throw Error(ErrorCode::InvalidArgument, "target is not a concept of the domain");
    }
  }
};

struct TraceStep {
  std::size_t utterance = 0;
  std::size_t guess = 0;
};

struct GameResult {
  std::size_t target = 0;
  bool success = false;
  GameOutcome outcome = GameOutcome::Budget;
  std::size_t examples_used = 0;
  std::vector<TraceStep> trace;
};

// Utterances the speaker may still give: consistent with the target, unused,
// and positive unless negatives are allowed.
inline std::vector<std::size_t> eligible_utterances(const MeaningMatrix& m,
                                                    std::size_t target,
                                                    const ExampleSequence& prefix,
                                                    bool allow_negative) {
  std::vector<char> used(m.num_utterances(), 0);
  for (std::size_t u : prefix) used.at(u) = 1;
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < m.num_utterances(); ++u) {
    if (used[u] || !m.consistent(u, target)) continue;
    if (!allow_negative && m.utterance(u).sign == Sign::Negative) continue;
    out.push_back(u);
  }
  return out;
}

inline std::size_t random_consistent_speaker(const MeaningMatrix& m, std::size_t target,
                                             const ExampleSequence& prefix,
                                             bool allow_negative, Rng& rng) {
  const auto pool = eligible_utterances(m, target, prefix, allow_negative);
  if (pool.empty()) {
    throw Error(ErrorCode::Exhausted, "no unused example is consistent with the target");
  }
  return pool[uniform_index(rng, pool.size())];
}

enum class SpeakerMode { Argmax, Sample };

inline std::size_t pragmatic_speaker_choose(const MeaningMatrix& m, std::size_t target,
                                            const ExampleSequence& prefix,
                                            SpeakerMode mode, bool allow_negative,
                                            Rng& rng) {
  const std::vector<double> dist = speaker_distribution(m, target, prefix);
  const auto pool = eligible_utterances(m, target, prefix, allow_negative);
  if (pool.empty()) {
    throw Error(ErrorCode::Exhausted, "no unused example is consistent with the target");
  }
  if (mode == SpeakerMode::Argmax) {
    double best = 0.0;
    for (std::size_t u : pool) best = std::max(best, dist[u]);
    for (std::size_t u : pool) {
      if (ties(dist[u], best)) return u;
    }
    return pool.front();
  }
  double total = 0.0;
  for (std::size_t u : pool) total += dist[u];
  double r = uniform_real(rng) * total;
  for (std::size_t u : pool) {
    r -= dist[u];
    if (r < 0.0) return u;
  }
  return pool.back();
}

inline GameResult run_game(const MeaningMatrix& m, const GameConfig& cfg) {
  cfg.validate(m);
  Rng speaker_rng(mix_seed(cfg.seed, 1));
  Rng listener_rng(mix_seed(cfg.seed, 2));

  GameResult result;
  result.target = cfg.target;
  ExampleSequence examples;
  while (examples.size() < cfg.example_budget) {
    std::size_t u;
    try {
      switch (cfg.speaker) {
        case SpeakerKind::RandomConsistent:
          u = random_consistent_speaker(m, cfg.target, examples, cfg.allow_negative,
                                        speaker_rng);
          break;
        case SpeakerKind::PragmaticArgmax:
          u = pragmatic_speaker_choose(m, cfg.target, examples, SpeakerMode::Argmax,
                                       cfg.allow_negative, speaker_rng);
          break;
        case SpeakerKind::PragmaticSample:
        default:
          u = pragmatic_speaker_choose(m, cfg.target, examples, SpeakerMode::Sample,
                                       cfg.allow_negative, speaker_rng);
          break;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Exhausted) throw;
      result.outcome = GameOutcome::Exhausted;
      result.examples_used = examples.size();
      return result;
    }
    examples.push_back(u);
    const Posterior p = listen(cfg.listener, m, examples);
    const std::size_t guess = best_guess(p, cfg.tie_policy, listener_rng);
    result.trace.push_back({u, guess});
    if (guess == cfg.target) {
      result.success = true;
      result.outcome = GameOutcome::Success;
      result.examples_used = examples.size();
      return result;
    }
  }
  result.outcome = GameOutcome::Budget;
  result.examples_used = examples.size();
  return result;
}

// ---------------------------------------------------------------------------
// Experiments.

struct ExperimentConfig {
  std::size_t games = 200;
  ListenerKind listener = ListenerKind::Pragmatic;
  SpeakerKind speaker = SpeakerKind::RandomConsistent;
  bool allow_negative = false;
  std::size_t budget = 10;
  std::uint64_t seed = 0;
  TiePolicy tie_policy = TiePolicy::RandomUniform;
};

struct Aggregate {
  double success_rate = 0.0;
  std::optional<double> mean_examples;
  std::optional<double> median_examples;
};

struct Report {
  ExperimentConfig config;
  std::vector<GameResult> games;
  Aggregate aggregate;
};

inline std::optional<double> mean_of(const std::vector<std::size_t>& xs) {
  if (xs.empty()) return std::nullopt;
  double s = 0.0;
  for (std::size_t x : xs) s += static_cast<double>(x);
  return s / static_cast<double>(xs.size());
}

inline std::optional<double> median_of(std::vector<std::size_t> xs) {
  if (xs.empty()) return std::nullopt;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  if (n % 2 == 1) return static_cast<double>(xs[n / 2]);
  return (static_cast<double>(xs[n / 2 - 1]) + static_cast<double>(xs[n / 2])) / 2.0;
}

inline Aggregate aggregate(const std::vector<GameResult>& games) {
  Aggregate a;
  std::vector<std::size_t> used;
  for (const auto& g : games) {
    if (g.success) used.push_back(g.examples_used);
  }
  if (!games.empty()) {
    a.success_rate = static_cast<double>(used.size()) / static_cast<double>(games.size());
  }
  a.mean_examples = mean_of(used);
  a.median_examples = median_of(used);
  return a;
}

// Targets depend only on (seed, game index), so two experiments that differ
// only in the listener see the same targets and, for listener-independent
// speakers, the same example sequences.
inline std::vector<std::size_t> experiment_targets(std::size_t num_concepts,
                                                   std::size_t games,
                                                   std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x7a7));
  std::vector<std::size_t> out(games);
  for (auto& t : out) t = uniform_index(rng, num_concepts);
  return out;
}

inline const MeaningMatrix& experiment_matrix(const Domain& d, bool allow_negative) {
  return allow_negative ? d.signed_matrix : d.unsigned_matrix;
}

inline Report run_experiment(const MeaningMatrix& m, const ExperimentConfig& cfg) {
  if (cfg.games < 1) throw Error(ErrorCode::InvalidArgument, "games must be at least 1");
  Report r;
  r.config = cfg;
  const auto targets = experiment_targets(m.num_concepts(), cfg.games, cfg.seed);
  r.games.reserve(cfg.games);
  for (std::size_t i = 0; i < cfg.games; ++i) {
    GameConfig g;
    g.target = targets[i];
    g.listener = cfg.listener;
    g.speaker = cfg.speaker;
    g.example_budget = cfg.budget;
    g.allow_negative = cfg.allow_negative;
    g.seed = mix_seed(cfg.seed, i);
    g.tie_policy = cfg.tie_policy;
    r.games.push_back(run_game(m, g));
  }
  r.aggregate = aggregate(r.games);
  return r;
}

inline Report run_experiment(const Domain& d, const ExperimentConfig& cfg) {
  return run_experiment(experiment_matrix(d, cfg.allow_negative), cfg);
}

struct PairedReport {
  Report literal;
  Report pragmatic;
  std::size_t shared_successes = 0;
  std::optional<double> literal_mean_shared;
  std::optional<double> pragmatic_mean_shared;
};

inline PairedReport run_paired_experiment(const MeaningMatrix& m, ExperimentConfig cfg) {
  PairedReport p;
  cfg.listener = ListenerKind::Literal;
  p.literal = run_experiment(m, cfg);
  cfg.listener = ListenerKind::Pragmatic;
  p.pragmatic = run_experiment(m, cfg);
  std::vector<std::size_t> lit, prag;
  for (std::size_t i = 0; i < cfg.games; ++i) {
    const auto& a = p.literal.games[i];
    const auto& b = p.pragmatic.games[i];
    if (a.success && b.success) {
      lit.push_back(a.examples_used);
      prag.push_back(b.examples_used);
    }
  }
  p.shared_successes = lit.size();
  p.literal_mean_shared = mean_of(lit);
  p.pragmatic_mean_shared = mean_of(prag);
  return p;
}

// ---------------------------------------------------------------------------
// Export.

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const MeaningMatrix& m, const Report& r) {
  nlohmann::json games = nlohmann::json::array();
  for (const auto& g : r.games) {
    games.push_back({{"target", m.concept_label(g.target)},
                     {"success", g.success},
                     {"reason", to_string(g.outcome)},
                     {"examples_used", g.examples_used}});
  }
  return {
      {"config",
       {{"games", r.config.games},
        {"listener", to_string(r.config.listener)},
        {"speaker", to_string(r.config.speaker)},
        {"allow_negative", r.config.allow_negative},
        {"budget", r.config.budget},
        {"seed", r.config.seed},
        {"concepts", m.num_concepts()},
        {"utterances", m.num_utterances()}}},
      {"per_game", games},
      {"aggregate",
       {{"success_rate", r.aggregate.success_rate},
        {"mean_examples", optional_json(r.aggregate.mean_examples)},
        {"median_examples", optional_json(r.aggregate.median_examples)}}},
  };
}

inline nlohmann::json to_json(const MeaningMatrix& m, const PairedReport& p) {
  return {{"literal", to_json(m, p.literal)},
          {"pragmatic", to_json(m, p.pragmatic)},
          {"shared",
           {{"successes", p.shared_successes},
            {"literal_mean_examples", optional_json(p.literal_mean_shared)},
            {"pragmatic_mean_examples", optional_json(p.pragmatic_mean_shared)}}}};
}

inline void write_csv(std::ostream& os, const MeaningMatrix& m, const Report& r) {
  os << "game,listener,target,success,reason,examples_used\n";
  for (std::size_t i = 0; i < r.games.size(); ++i) {
    const auto& g = r.games[i];
    os << i << ',' << to_string(r.config.listener) << ','
       << detail::csv_field(m.concept_label(g.target)) << ','
       << (g.success ? "true" : "false") << ',' << to_string(g.outcome) << ','
       << g.examples_used << '\n';
  }
}

}  // namespace pragsynth
