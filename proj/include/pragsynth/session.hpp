#pragma once

// Live communication sessions: one human speaker, one blinded robot listener,
// one target concept. Every mutation is appended to a per-session event log;
// replaying the log rebuilds the session exactly.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pragsynth/domain.hpp"
#include "pragsynth/error.hpp"
#include "pragsynth/regex.hpp"
#include "pragsynth/rng.hpp"
#include "pragsynth/rsa.hpp"

namespace pragsynth {

enum class UiMode { PositiveOnly, PositiveNegative };
enum class Robot { Green, Blue };
enum class SessionStatus { Active, Solved, Abandoned };

constexpr std::string_view to_string(UiMode m) {
  return m == UiMode::PositiveOnly ? "positive_only" : "positive_negative";
}
constexpr std::string_view to_string(Robot r) {
  return r == Robot::Green ? "green" : "blue";
}
constexpr std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::Active: return "active";
    case SessionStatus::Solved: return "solved";
    case SessionStatus::Abandoned: return "abandoned";
  }
  return "active";
}

inline std::optional<UiMode> ui_mode_from_string(std::string_view s) {
  if (s == "positive_only" || s == "PositiveOnly" || s == "+") return UiMode::PositiveOnly;
  if (s == "positive_negative" || s == "PositiveNegative" || s == "+/-") {
    return UiMode::PositiveNegative;
  }
  return std::nullopt;
}
inline std::optional<Robot> robot_from_string(std::string_view s) {
  if (s == "green" || s == "Green") return Robot::Green;
  if (s == "blue" || s == "Blue") return Robot::Blue;
  return std::nullopt;
}
inline std::optional<SessionStatus> status_from_string(std::string_view s) {
  if (s == "active") return SessionStatus::Active;
  if (s == "solved") return SessionStatus::Solved;
  if (s == "abandoned") return SessionStatus::Abandoned;
  return std::nullopt;
}
inline std::optional<ListenerKind> listener_from_string(std::string_view s) {
  if (s == "literal") return ListenerKind::Literal;
  if (s == "pragmatic") return ListenerKind::Pragmatic;
  return std::nullopt;
}

struct ServiceConfig {
  DomainConfig domain;
  // Serve the four-concept demo domain instead of the sampled one.
  bool demo_domain = false;
  ListenerKind green = ListenerKind::Pragmatic;
  ListenerKind blue = ListenerKind::Literal;
  bool allow_empty_example = false;
  bool resample_ties_per_update = false;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir;    // empty: in-memory only
  std::string static_dir;  // optional web client assets
  int snapshot_interval_s = 30;

  ListenerKind listener_for(Robot r) const { return r == Robot::Green ? green : blue; }
};

inline ServiceConfig service_config_from_json(const nlohmann::json& j) {
  ServiceConfig c;
  if (j.contains("domain")) {
    const auto& d = j.at("domain");
    c.domain.pool_max_atoms = d.value("pool_max_atoms", c.domain.pool_max_atoms);
    c.domain.pool_size = d.value("pool_size", c.domain.pool_size);
    c.domain.sample_size = d.value("sample_size", c.domain.sample_size);
    c.domain.seed = d.value("seed", c.domain.seed);
    c.domain.max_len = d.value("max_len", c.domain.max_len);
    c.demo_domain = d.value("demo", false);
  }
  if (j.contains("robots")) {
    const auto& r = j.at("robots");
    auto kind = [&](const char* key, ListenerKind fallback) {
      if (!r.contains(key)) return fallback;
      auto k = listener_from_string(r.at(key).get<std::string>());
      if (!k) throw Error(ErrorCode::InvalidArgument, std::string("bad listener for ") + key);
      return *k;
    };
    c.green = kind("green", c.green);
    c.blue = kind("blue", c.blue);
  }
  c.allow_empty_example = j.value("allow_empty_example", c.allow_empty_example);
  c.resample_ties_per_update = j.value("resample_ties_per_update", c.resample_ties_per_update);
  c.host = j.value("host", c.host);
  c.port = j.value("port", c.port);
  c.data_dir = j.value("data_dir", c.data_dir);
  c.static_dir = j.value("static_dir", c.static_dir);
  c.snapshot_interval_s = j.value("snapshot_interval_s", c.snapshot_interval_s);
  return c;
}

// The four-concept, four-string demo game.
inline Domain demo_domain() {
  return build_domain({parse("[01]+0+"), parse("1*0+1*"), parse("0*1+0*"), parse("[01]*")},
                      {BinaryString::parse("1100"), BinaryString::parse("0000"),
                       BinaryString::parse("0010"), BinaryString::parse("0111")});
}

struct Example {
  std::string text;
  Sign sign = Sign::Positive;  // Positive or Negative

  friend auto operator<=>(const Example&, const Example&) = default;
};

struct Session {
  std::string id;
  UiMode ui_mode = UiMode::PositiveOnly;
  Robot robot = Robot::Green;
  ListenerKind listener = ListenerKind::Pragmatic;
  std::uint64_t seed = 0;
  std::size_t target = 0;
  std::vector<Example> examples;
  SessionStatus status = SessionStatus::Active;
  std::size_t guess = 0;
  std::size_t posterior_size = 0;
  std::uint64_t mutations = 0;
  std::int64_t created_at = 0;
  std::int64_t updated_at = 0;
};

enum class EventKind {
  Created,
  ExampleAdded,
  ExampleRemoved,
  GuessRequested,
  GuessChanged,
  Solved,
  Abandoned,
};

constexpr std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Created: return "Created";
    case EventKind::ExampleAdded: return "ExampleAdded";
    case EventKind::ExampleRemoved: return "ExampleRemoved";
    case EventKind::GuessRequested: return "GuessRequested";
    case EventKind::GuessChanged: return "GuessChanged";
    case EventKind::Solved: return "Solved";
    case EventKind::Abandoned: return "Abandoned";
  }
  return "Created";
}

inline std::optional<EventKind> event_kind_from_string(std::string_view s) {
  for (auto k : {EventKind::Created, EventKind::ExampleAdded, EventKind::ExampleRemoved,
                 EventKind::GuessRequested, EventKind::GuessChanged, EventKind::Solved,
                 EventKind::Abandoned}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct EventRecord {
  std::string session_id;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::Created;
  nlohmann::json payload = nlohmann::json::object();
  std::int64_t timestamp = 0;
};

inline nlohmann::json to_json(const EventRecord& e) {
  return {{"session", e.session_id},
          {"seq", e.seq},
          {"kind", to_string(e.kind)},
          {"payload", e.payload},
          {"ts", e.timestamp}};
}

inline EventRecord event_from_json(const nlohmann::json& j) {
  EventRecord e;
  e.session_id = j.at("session").get<std::string>();
  e.seq = j.at("seq").get<std::uint64_t>();
  auto kind = event_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::CorruptData, "unknown event kind");
  e.kind = *kind;
  e.payload = j.value("payload", nlohmann::json::object());
  e.timestamp = j.value("ts", std::int64_t{0});
  return e;
}

struct GuessUpdate {
  std::string guess;
  bool solved = false;
  std::size_t posterior_size = 0;
  SessionStatus status = SessionStatus::Active;
};

inline nlohmann::json to_json(const GuessUpdate& g) {
  return {{"guess", g.guess},
          {"solved", g.solved},
          {"posterior_size", g.posterior_size},
          {"status", to_string(g.status)}};
}

// Pure session logic shared by live mutation and replay.
class SessionEngine {
 public:
  SessionEngine(std::shared_ptr<const Domain> domain, bool resample_ties_per_update)
      : domain_(std::move(domain)), resample_(resample_ties_per_update) {}

  const Domain& domain() const { return *domain_; }

  const MeaningMatrix& matrix(UiMode mode) const {
    return mode == UiMode::PositiveOnly ? domain_->unsigned_matrix : domain_->signed_matrix;
  }

  std::size_t max_len() const { return domain_->unsigned_matrix.max_len(); }

  ExampleSequence example_rows(const Session& s) const {
    const MeaningMatrix& m = matrix(s.ui_mode);
    ExampleSequence d;
    d.reserve(s.examples.size());
    for (const Example& e : s.examples) {
      const Sign sign = s.ui_mode == UiMode::PositiveOnly ? Sign::Unsigned : e.sign;
      d.push_back(m.index_of({e.text, sign}));
    }
    return d;
  }

  // Order-insensitive digest of the example set.
  static std::uint64_t example_set_hash(const std::vector<Example>& examples) {
    std::vector<Example> sorted = examples;
    std::sort(sorted.begin(), sorted.end());
    std::uint64_t h = fnv1a("examples");
    for (const Example& e : sorted) {
      h = fnv1a(e.text, h);
      const char tag[2] = {sign_char(e.sign), '\n'};
      h = fnv1a(std::string_view(tag, 2), h);
    }
    return h;
  }

  std::uint64_t tie_seed(const Session& s) const {
    std::uint64_t seed = mix_seed(s.seed, example_set_hash(s.examples));
    if (resample_) seed = mix_seed(seed, s.mutations);
    return seed;
  }

  // Recomputes the listener from scratch; throws InconsistentSpec when no
  // concept fits the examples.
  void recompute(Session& s) const {
    const MeaningMatrix& m = matrix(s.ui_mode);
    const Posterior p = listen(s.listener, m, example_rows(s));
    Rng rng(tie_seed(s));
    s.guess = best_guess(p, TiePolicy::RandomUniform, rng);
    s.posterior_size = p.support_size();
  }

  std::string label(std::size_t concept_idx) const {
    return domain_->unsigned_matrix.concept_label(concept_idx);
  }

  GuessUpdate update_of(const Session& s) const {
    return {label(s.guess), s.status == SessionStatus::Solved, s.posterior_size, s.status};
  }

 private:
  std::shared_ptr<const Domain> domain_;
  bool resample_;
};

using Clock = std::function<std::int64_t()>;

inline std::int64_t system_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// Rebuilds a session from its event stream. Guess events are checked against
// the recomputed guess, so a log that disagrees with the engine is rejected.
inline Session replay(const SessionEngine& engine, const std::vector<EventRecord>& events) {
  if (events.empty() || events.front().kind != EventKind::Created) {
    throw Error(ErrorCode::CorruptData, "event stream must start with Created");
  }
  Session s;
  std::uint64_t last_seq = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const EventRecord& e = events[i];
    if (i > 0 && e.seq <= last_seq) {
      throw Error(ErrorCode::CorruptData, "event sequence numbers must increase");
    }
    last_seq = e.seq;
    const auto& p = e.payload;
    switch (e.kind) {
      case EventKind::Created: {
        if (i != 0) throw Error(ErrorCode::CorruptData, "duplicate Created event");
        s.id = e.session_id;
        auto mode = ui_mode_from_string(p.at("ui_mode").get<std::string>());
        auto robot = robot_from_string(p.at("robot").get<std::string>());
        auto listener = listener_from_string(p.at("listener").get<std::string>());
        if (!mode || !robot || !listener) {
          throw Error(ErrorCode::CorruptData, "bad Created payload");
        }
        s.ui_mode = *mode;
        s.robot = *robot;
        s.listener = *listener;
        s.seed = p.at("seed").get<std::uint64_t>();
        auto target = engine.domain().unsigned_matrix.find_concept(
            p.at("target").get<std::string>());
        if (!target) throw Error(ErrorCode::CorruptData, "target outside the domain");
        s.target = *target;
        s.created_at = e.timestamp;
        engine.recompute(s);
        break;
      }
      case EventKind::ExampleAdded:
      case EventKind::ExampleRemoved: {
        Example ex{p.at("string").get<std::string>(), Sign::Positive};
        auto sign = sign_from_string(p.at("sign").get<std::string>());
        if (!sign || *sign == Sign::Unsigned) {
          throw Error(ErrorCode::CorruptData, "bad example sign");
        }
        ex.sign = *sign;
        if (s.ui_mode == UiMode::PositiveOnly && ex.sign == Sign::Negative) {
          throw Error(ErrorCode::CorruptData,
                      "positive-only session " + s.id + " contains a negative example");
        }
        auto it = std::find(s.examples.begin(), s.examples.end(), ex);
        if (e.kind == EventKind::ExampleAdded) {
          if (it != s.examples.end()) throw Error(ErrorCode::CorruptData, "duplicate example");
          s.examples.push_back(ex);
        } else {
          if (it == s.examples.end()) throw Error(ErrorCode::CorruptData, "removing absent example");
          s.examples.erase(it);
        }
        ++s.mutations;
        engine.recompute(s);
        break;
      }
      case EventKind::GuessChanged:
      case EventKind::GuessRequested:
        if (p.at("guess").get<std::string>() != engine.label(s.guess)) {
          throw Error(ErrorCode::CorruptData, "logged guess disagrees with replay");
        }
        break;
      case EventKind::Solved:
        if (s.guess != s.target) throw Error(ErrorCode::CorruptData, "Solved without a correct guess");
        s.status = SessionStatus::Solved;
        break;
      case EventKind::Abandoned:
        s.status = SessionStatus::Abandoned;
        break;
    }
    s.updated_at = e.timestamp;
  }
  return s;
}

// Thread-safe registry of live sessions. Sessions are independent; each one
// is mutated under its own lock.
class SessionService {
 public:
  SessionService(std::shared_ptr<const Domain> domain, ServiceConfig config,
                 Clock clock = system_clock_ms,
                 std::optional<std::uint64_t> id_seed = std::nullopt)
      : engine_(domain, config.resample_ties_per_update),
        config_(std::move(config)),
        clock_(std::move(clock)),
        id_rng_(id_seed ? *id_seed : std::random_device{}()) {
    if (!config_.data_dir.empty()) load();
  }

  const ServiceConfig& config() const { return config_; }
  const SessionEngine& engine() const { return engine_; }

  Session create_session(UiMode mode, Robot robot, std::optional<std::uint64_t> seed = {},
                         std::optional<std::string> target = {}) {
    const MeaningMatrix& concepts = engine_.domain().unsigned_matrix;
    std::optional<std::size_t> pinned;
    if (target) {
      try {
        pinned = concepts.find_concept(render(parse(*target)));
      } catch (const SyntaxError&) {
        pinned.reset();
      }
      if (!pinned) {
        throw Error(ErrorCode::UnknownConcept, "'" + *target + "' is not a concept of this domain");
      }
    }

    auto entry = std::make_shared<Entry>();
    Session& s = entry->session;
    {
      std::lock_guard lock(id_mu_);
      do {
        s.id = make_id();
      } while (contains(s.id));
      s.seed = seed ? *seed : id_rng_();
    }
    s.ui_mode = mode;
    s.robot = robot;
    s.listener = config_.listener_for(robot);
    if (pinned) {
      s.target = *pinned;
    } else {
      Rng target_rng(mix_seed(s.seed, 0x7a26e7));
      s.target = uniform_index(target_rng, concepts.num_concepts());
    }
    s.created_at = s.updated_at = clock_();
    engine_.recompute(s);

    std::lock_guard lock(entry->mu);
    append(*entry, EventKind::Created,
           {{"ui_mode", to_string(mode)},
            {"robot", to_string(robot)},
            {"listener", to_string(s.listener)},
            {"seed", s.seed},
            {"target", engine_.label(s.target)}});
    {
      std::unique_lock map_lock(map_mu_);
      sessions_.emplace(s.id, entry);
    }
    return s;
  }

  bool contains(const std::string& id) const {
    std::shared_lock lock(map_mu_);
    return sessions_.count(id) != 0;
  }

  Session get(const std::string& id) const {
    auto entry = find(id);
    std::lock_guard lock(entry->mu);
    return entry->session;
  }

  std::vector<EventRecord> events(const std::string& id) const {
    auto entry = find(id);
    std::lock_guard lock(entry->mu);
    return entry->events;
  }

  std::vector<std::string> session_ids() const {
    std::shared_lock lock(map_mu_);
    std::vector<std::string> out;
    for (const auto& [id, _] : sessions_) out.push_back(id);
    std::sort(out.begin(), out.end());
    return out;
  }

  GuessUpdate add_example(const std::string& id, std::string_view text, Sign sign) {
    auto entry = find(id);
    std::lock_guard lock(entry->mu);
    Session& s = entry->session;
    require_active(s);
    const Example ex = validate(s, text, sign);
    if (std::find(s.examples.begin(), s.examples.end(), ex) != s.examples.end()) {
      throw Error(ErrorCode::DuplicateExample,
                  "example " + display({ex.text, ex.sign}) + " was already given");
    }
    Session next = s;
    next.examples.push_back(ex);
    ++next.mutations;
    engine_.recompute(next);  // throws InconsistentSpec, leaving s untouched
    return commit(*entry, std::move(next), EventKind::ExampleAdded, ex);
  }

  GuessUpdate remove_example(const std::string& id, std::string_view text, Sign sign) {
    auto entry = find(id);
    std::lock_guard lock(entry->mu);
    Session& s = entry->session;
    require_active(s);
    const Example ex{std::string(text), sign == Sign::Unsigned ? Sign::Positive : sign};
    auto it = std::find(s.examples.begin(), s.examples.end(), ex);
    if (it == s.examples.end()) {
      throw Error(ErrorCode::NotFound,
                  "example " + display({ex.text, ex.sign}) + " is not in the list");
    }
    Session next = s;
    next.examples.erase(next.examples.begin() + (it - s.examples.begin()));
    ++next.mutations;
    engine_.recompute(next);
    return commit(*entry, std::move(next), EventKind::ExampleRemoved, ex);
  }

  GuessUpdate request_guess(const std::string& id) {
    auto entry = find(id);
    std::lock_guard lock(entry->mu);
    const GuessUpdate g = engine_.update_of(entry->session);
    append(*entry, EventKind::GuessRequested, {{"guess", g.guess}});
    return g;
  }

  Session abandon_session(const std::string& id) {
    auto entry = find(id);
    std::lock_guard lock(entry->mu);
    Session& s = entry->session;
    if (s.status != SessionStatus::Active) {
      throw Error(ErrorCode::InvalidState,
                  "session is already " + std::string(to_string(s.status)));
    }
    s.status = SessionStatus::Abandoned;
    append(*entry, EventKind::Abandoned, nlohmann::json::object());
    return s;
  }

  // Writes <data_dir>/index.json summarising every session.
  void snapshot_index() const {
    if (config_.data_dir.empty()) return;
    nlohmann::json sessions = nlohmann::json::array();
    for (const auto& id : session_ids()) {
      const Session s = get(id);
      sessions.push_back({{"id", s.id},
                          {"status", to_string(s.status)},
                          {"ui_mode", to_string(s.ui_mode)},
                          {"robot", to_string(s.robot)},
                          {"examples", s.examples.size()},
                          {"updated_at", s.updated_at}});
    }
    const auto dir = std::filesystem::path(config_.data_dir);
    std::filesystem::create_directories(dir);
    const auto tmp = dir / "index.json.tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << nlohmann::json{{"sessions", sessions}}.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, dir / "index.json");
  }

 private:
  struct Entry {
    mutable std::mutex mu;
    Session session;
    std::vector<EventRecord> events;
  };

  std::shared_ptr<Entry> find(const std::string& id) const {
    std::shared_lock lock(map_mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) {
      throw Error(ErrorCode::NotFound, "unknown session '" + id + "'");
    }
    return it->second;
  }

  std::string make_id() {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string id;
    std::uint64_t v = id_rng_();
    for (int i = 0; i < 16; ++i, v >>= 4) id += kHex[v & 0xF];
    return id;
  }

  static void require_active(const Session& s) {
    if (s.status != SessionStatus::Active) {
      throw Error(ErrorCode::InvalidState,
                  "session is " + std::string(to_string(s.status)));
    }
  }

  Example validate(const Session& s, std::string_view text, Sign sign) const {
    if (text.empty() && !config_.allow_empty_example) {
      throw Error(ErrorCode::InvalidString, "empty examples are not accepted");
    }
    BinaryString::parse(text, engine_.max_len());
    if (sign == Sign::Unsigned) sign = Sign::Positive;
    if (s.ui_mode == UiMode::PositiveOnly && sign == Sign::Negative) {
      throw Error(ErrorCode::SignNotAllowed, "this task accepts positive examples only");
    }
    return {std::string(text), sign};
  }

  GuessUpdate commit(Entry& entry, Session next, EventKind kind, const Example& ex) {
    const std::size_t previous_guess = entry.session.guess;
    entry.session = std::move(next);
    Session& s = entry.session;
    append(entry, kind, {{"string", ex.text}, {"sign", to_string(ex.sign)}});
    if (s.guess != previous_guess) {
      append(entry, EventKind::GuessChanged, {{"guess", engine_.label(s.guess)}});
    }
    if (s.guess == s.target && !s.examples.empty()) {
      s.status = SessionStatus::Solved;
      append(entry, EventKind::Solved, nlohmann::json::object());
    }
    return engine_.update_of(s);
  }

  void append(Entry& entry, EventKind kind, nlohmann::json payload) {
    EventRecord e;
    e.session_id = entry.session.id;
    e.seq = entry.events.empty() ? 1 : entry.events.back().seq + 1;
    e.kind = kind;
    e.payload = std::move(payload);
    e.timestamp = clock_();
    entry.session.updated_at = e.timestamp;
    if (!config_.data_dir.empty()) {
      const auto dir = std::filesystem::path(config_.data_dir) / "sessions";
      std::filesystem::create_directories(dir);
      std::ofstream out(dir / (e.session_id + ".jsonl"), std::ios::app);
      out << to_json(e).dump() << '\n';
    }
    entry.events.push_back(std::move(e));
  }

  void load() {
    const auto dir = std::filesystem::path(config_.data_dir) / "sessions";
    if (!std::filesystem::exists(dir)) return;
    for (const auto& file : std::filesystem::directory_iterator(dir)) {
      if (file.path().extension() != ".jsonl") continue;
      std::ifstream in(file.path());
      std::vector<EventRecord> events;
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
          events.push_back(event_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& ex) {
          throw Error(ErrorCode::CorruptData,
                      file.path().string() + ": " + std::string(ex.what()));
        }
      }
      if (events.empty()) continue;
      auto entry = std::make_shared<Entry>();
      entry->session = replay(engine_, events);
      entry->events = std::move(events);
      sessions_.emplace(entry->session.id, entry);
    }
  }

  SessionEngine engine_;
  ServiceConfig config_;
  Clock clock_;
  std::mutex id_mu_;
  Rng id_rng_;
  mutable std::shared_mutex map_mu_;
  std::unordered_map<std::string, std::shared_ptr<Entry>> sessions_;
};

// Public view of a session. Only the robot color is exposed, never the
// listener kind behind it.
inline nlohmann::json session_view(const SessionEngine& engine, const Session& s) {
  nlohmann::json examples = nlohmann::json::array();
  for (const auto& e : s.examples) {
    examples.push_back({{"string", e.text}, {"sign", to_string(e.sign)}});
  }
  const std::string target = engine.label(s.target);
  return {{"id", s.id},
          {"ui_mode", to_string(s.ui_mode)},
          {"robot", to_string(s.robot)},
          {"target", target},
          {"explanation", explain(parse(target))},
          {"examples", examples},
          {"guess", engine.label(s.guess)},
          {"posterior_size", s.posterior_size},
          {"status", to_string(s.status)},
          {"created_at", s.created_at},
          {"updated_at", s.updated_at}};
}

}  // namespace pragsynth
