#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include <gtest/gtest.h>

#include "pragsynth/session.hpp"

namespace pragsynth {
namespace {

Clock counter_clock() {
  auto t = std::make_shared<std::int64_t>(1000);
  return [t] { return ++*t; };
}

// "0000" leaves [01]+0+ tied with 1*0+1*; returns a session on [01]+0+ whose
// tie draw went the other way, so "0010" is needed to solve it.
std::string unsolved_after_0000(SessionService& svc) {
  for (std::uint64_t seed = 1;; ++seed) {
    const Session s = svc.create_session(UiMode::PositiveOnly, Robot::Green, seed, "[01]+0+");
    if (!svc.add_example(s.id, "0000", Sign::Positive).solved) return s.id;
  }
}

class SessionTest : public ::testing::Test {
 protected:
  std::shared_ptr<const Domain> demo = std::make_shared<const Domain>(demo_domain());

  SessionService make(ServiceConfig cfg = {}) {
    return SessionService(demo, std::move(cfg), counter_clock(), 1);
  }

  static ErrorCode code_of(const std::function<void()>& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    ADD_FAILURE() << "expected an error";
    return ErrorCode::CorruptData;
  }
};

TEST_F(SessionTest, GreenRobotIsPragmaticByDefault) {
  auto svc = make();
  const Session s = svc.create_session(UiMode::PositiveOnly, Robot::Green, 5);
  EXPECT_EQ(s.listener, ListenerKind::Pragmatic);
  EXPECT_EQ(s.status, SessionStatus::Active);
  EXPECT_EQ(svc.create_session(UiMode::PositiveOnly, Robot::Blue).listener,
            ListenerKind::Literal);

  ServiceConfig swapped;
  swapped.green = ListenerKind::Literal;
  swapped.blue = ListenerKind::Pragmatic;
  auto svc2 = make(swapped);
  EXPECT_EQ(svc2.create_session(UiMode::PositiveOnly, Robot::Green).listener,
            ListenerKind::Literal);
}

TEST_F(SessionTest, ViewNeverRevealsListenerKind) {
  auto svc = make();
  for (Robot r : {Robot::Green, Robot::Blue}) {
    const Session s = svc.create_session(UiMode::PositiveNegative, r);
    const std::string view = session_view(svc.engine(), s).dump();
    EXPECT_EQ(view.find("pragmatic"), std::string::npos);
    EXPECT_EQ(view.find("literal"), std::string::npos);
    EXPECT_EQ(view.find("listener"), std::string::npos);
  }
}

TEST_F(SessionTest, PinnedTargets) {
  auto svc = make();
  const Session s = svc.create_session(UiMode::PositiveNegative, Robot::Blue, {}, "[01]+0+");
  EXPECT_EQ(svc.engine().label(s.target), "[01]+0+");
  EXPECT_EQ(code_of([&] { svc.create_session(UiMode::PositiveOnly, Robot::Blue, {}, "0{3}"); }),
            ErrorCode::UnknownConcept);
  EXPECT_EQ(code_of([&] { svc.create_session(UiMode::PositiveOnly, Robot::Blue, {}, "0{2}"); }),
            ErrorCode::UnknownConcept);
}

TEST_F(SessionTest, PinnedTargetInDefaultDomain) {
  DomainConfig cfg;
  cfg.max_len = 4;
  auto d = std::make_shared<const Domain>(build_domain(cfg));
  SessionService svc(d, {}, counter_clock(), 3);
  const std::string label = d->unsigned_matrix.concept_label(17);
  const Session s = svc.create_session(UiMode::PositiveNegative, Robot::Blue, {}, label);
  EXPECT_EQ(s.target, 17u);
  const auto view = session_view(svc.engine(), s);
  EXPECT_EQ(view["explanation"], explain(parse(label)));
}

TEST_F(SessionTest, PragmaticRobotSolvesDemoTask) {
  auto svc = make();
  const Session s = svc.get(unsolved_after_0000(svc));
  EXPECT_EQ(svc.engine().label(s.guess), "1*0+1*");
  auto g = svc.add_example(s.id, "0010", Sign::Positive);
  EXPECT_EQ(g.guess, "[01]+0+");
  EXPECT_TRUE(g.solved);
  EXPECT_EQ(g.posterior_size, 2u);
  EXPECT_EQ(svc.get(s.id).status, SessionStatus::Solved);
  EXPECT_EQ(code_of([&] { svc.add_example(s.id, "1100", Sign::Positive); }),
            ErrorCode::InvalidState);
  EXPECT_EQ(code_of([&] { svc.abandon_session(s.id); }), ErrorCode::InvalidState);
}

TEST_F(SessionTest, ValidationErrors) {
  auto svc = make();
  const Session po = svc.create_session(UiMode::PositiveOnly, Robot::Blue, 2, "[01]*");
  EXPECT_EQ(code_of([&] { svc.add_example(po.id, "0012", Sign::Positive); }),
            ErrorCode::InvalidString);
  EXPECT_EQ(code_of([&] { svc.add_example(po.id, "00000000000", Sign::Positive); }),
            ErrorCode::InvalidString);
  EXPECT_EQ(code_of([&] { svc.add_example(po.id, "", Sign::Positive); }),
            ErrorCode::InvalidString);
  EXPECT_EQ(code_of([&] { svc.add_example(po.id, "1100", Sign::Negative); }),
            ErrorCode::SignNotAllowed);
  EXPECT_EQ(code_of([&] { svc.add_example(po.id, "1", Sign::Positive); }),
            ErrorCode::UnknownUtterance);  // outside the demo's four strings

  const Session pn = svc.create_session(UiMode::PositiveNegative, Robot::Blue, 2, "0*1+0*");
  svc.add_example(pn.id, "0111", Sign::Positive);
  EXPECT_EQ(code_of([&] { svc.add_example(pn.id, "0111", Sign::Positive); }),
            ErrorCode::DuplicateExample);
  EXPECT_EQ(code_of([&] { svc.add_example(pn.id, "1100", Sign::Negative); }),
            ErrorCode::InconsistentSpec);
  EXPECT_EQ(svc.get(pn.id).examples.size(), 1u);
  EXPECT_EQ(code_of([&] { svc.get("nope"); }), ErrorCode::NotFound);
}

TEST_F(SessionTest, EmptyExamplePolicy) {
  auto d = std::make_shared<const Domain>(
      build_domain({parse("[01]*"), parse("[01]+")}, utterance_universe(2)));
  ServiceConfig cfg;
  cfg.allow_empty_example = true;
  SessionService permissive(d, cfg, counter_clock(), 1);
  const Session s = permissive.create_session(UiMode::PositiveOnly, Robot::Blue, 1, "[01]*");
  EXPECT_TRUE(permissive.add_example(s.id, "", Sign::Positive).solved);

  SessionService strict(d, {}, counter_clock(), 1);
  const Session t = strict.create_session(UiMode::PositiveOnly, Robot::Blue, 1, "[01]*");
  EXPECT_EQ(code_of([&] { strict.add_example(t.id, "", Sign::Positive); }),
            ErrorCode::InvalidString);
}

TEST_F(SessionTest, RemoveRecomputesFromScratch) {
  auto svc = make();
  const Session s = svc.create_session(UiMode::PositiveOnly, Robot::Green, 4, "[01]*");
  svc.add_example(s.id, "0000", Sign::Positive);
  const auto after_first = svc.request_guess(s.id);
  const auto two = svc.add_example(s.id, "0010", Sign::Positive);
  EXPECT_EQ(two.guess, "[01]+0+");
  EXPECT_FALSE(two.solved);
  const auto back = svc.remove_example(s.id, "0010", Sign::Positive);
  EXPECT_EQ(back.guess, after_first.guess);
  EXPECT_EQ(back.posterior_size, after_first.posterior_size);
  EXPECT_EQ(code_of([&] { svc.remove_example(s.id, "0010", Sign::Positive); }),
            ErrorCode::NotFound);
  const auto empty = svc.remove_example(s.id, "0000", Sign::Positive);
  EXPECT_EQ(empty.posterior_size, 4u);
  EXPECT_TRUE(svc.get(s.id).examples.empty());
}

TEST_F(SessionTest, RemovalKeepsOrder) {
  // Several concepts accept every string, so the literal robot keeps guessing.
  std::vector<RegexAst> concepts;
  for (const char* c : {"[01]*", "[01]*0*", "[01]*1*", "0*[01]*", "1*[01]*", "[01]*[01]*"}) {
    concepts.push_back(parse(c));
  }
  auto d = std::make_shared<const Domain>(build_domain(concepts, utterance_universe(2)));
  SessionService svc(d, {}, counter_clock(), 2);
  std::string id;
  for (std::uint64_t seed = 0; id.empty(); ++seed) {
    const Session s = svc.create_session(UiMode::PositiveOnly, Robot::Blue, seed, "[01]*");
    bool solved = false;
    for (const char* x : {"0", "1", "01", "10"}) {
      if (!solved) solved = svc.add_example(s.id, x, Sign::Positive).solved;
    }
    if (!solved) id = s.id;
  }
  const Session s = svc.get(id);
  svc.remove_example(s.id, "1", Sign::Positive);
  const auto ex = svc.get(s.id).examples;
  ASSERT_EQ(ex.size(), 3u);
  EXPECT_EQ(ex[0].text, "0");
  EXPECT_EQ(ex[1].text, "01");
  EXPECT_EQ(ex[2].text, "10");
}

TEST_F(SessionTest, GuessIsStickyPerExampleSet) {
  auto svc = make();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Session s = svc.create_session(UiMode::PositiveOnly, Robot::Blue, seed, "0*1+0*");
    const auto first = svc.request_guess(s.id);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(svc.request_guess(s.id).guess, first.guess);
    const auto added = svc.add_example(s.id, "1100", Sign::Positive);
    EXPECT_EQ(svc.request_guess(s.id).guess, added.guess);
    if (added.solved) continue;
    svc.add_example(s.id, "0000", Sign::Positive);
    // Back to the same example set, so the same tie draw.
    EXPECT_EQ(svc.remove_example(s.id, "0000", Sign::Positive).guess, added.guess);
  }
}

TEST_F(SessionTest, ResampleTiesPerUpdate) {
  ServiceConfig cfg;
  cfg.resample_ties_per_update = true;
  auto svc = make(cfg);
  std::set<std::string> guesses;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Session s = svc.create_session(UiMode::PositiveOnly, Robot::Blue, seed, "0*1+0*");
    const auto g = svc.request_guess(s.id);
    EXPECT_EQ(svc.request_guess(s.id).guess, g.guess);
  }
}

TEST_F(SessionTest, AbandonLifecycle) {
  auto svc = make();
  const Session s = svc.create_session(UiMode::PositiveOnly, Robot::Blue, 8, "0*1+0*");
  EXPECT_EQ(svc.abandon_session(s.id).status, SessionStatus::Abandoned);
  EXPECT_EQ(code_of([&] { svc.abandon_session(s.id); }), ErrorCode::InvalidState);
  const auto g = svc.request_guess(s.id);
  EXPECT_EQ(g.status, SessionStatus::Abandoned);
  EXPECT_EQ(svc.get(s.id).status, SessionStatus::Abandoned);
}

TEST_F(SessionTest, EventsAreOrderedAndTyped) {
  auto svc = make();
  const Session s = svc.get(unsolved_after_0000(svc));
  svc.add_example(s.id, "0010", Sign::Positive);
  svc.request_guess(s.id);
  const auto ev = svc.events(s.id);
  ASSERT_GE(ev.size(), 4u);
  EXPECT_EQ(ev.front().kind, EventKind::Created);
  for (std::size_t i = 1; i < ev.size(); ++i) EXPECT_GT(ev[i].seq, ev[i - 1].seq);
  bool solved = false;
  for (const auto& e : ev) solved = solved || e.kind == EventKind::Solved;
  EXPECT_TRUE(solved);
  EXPECT_EQ(ev.back().kind, EventKind::GuessRequested);
}

// Random operation sequences; replaying each log must rebuild the session.
TEST(SessionReplay, RebuildsStateFromEvents) {
  DomainConfig dc;
  dc.sample_size = 25;
  dc.max_len = 3;
  auto d = std::make_shared<const Domain>(build_domain(dc));
  SessionService svc(d, {}, counter_clock(), 9);
  const auto strings = utterance_universe(3);
  Rng rng(123);
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const UiMode mode = trial % 2 ? UiMode::PositiveNegative : UiMode::PositiveOnly;
    const Robot robot = (trial / 2) % 2 ? Robot::Green : Robot::Blue;
    const Session s = svc.create_session(mode, robot, rng());
    const int ops = 1 + static_cast<int>(uniform_index(rng, 8));
    for (int k = 0; k < ops; ++k) {
      const auto& str = strings[1 + uniform_index(rng, strings.size() - 1)].str();
      const Sign sign = uniform_index(rng, 3) == 0 ? Sign::Negative : Sign::Positive;
      try {
        switch (uniform_index(rng, 4)) {
          case 0:
          case 1: svc.add_example(s.id, str, sign); break;
          case 2: {
            const auto cur = svc.get(s.id).examples;
            if (!cur.empty()) {
              const auto& e = cur[uniform_index(rng, cur.size())];
              svc.remove_example(s.id, e.text, e.sign);
            }
            break;
          }
          default: svc.request_guess(s.id); break;
        }
      } catch (const Error&) {
      }
    }
    if (uniform_index(rng, 5) == 0) {
      try {
        svc.abandon_session(s.id);
      } catch (const Error&) {
      }
    }
    const Session live = svc.get(s.id);
    const Session again = replay(svc.engine(), svc.events(s.id));
    ASSERT_EQ(again.examples, live.examples);
    ASSERT_EQ(again.status, live.status);
    ASSERT_EQ(again.guess, live.guess);
    ASSERT_EQ(again.target, live.target);
    ASSERT_EQ(again.updated_at, live.updated_at);
    if (live.status == SessionStatus::Solved) {
      ASSERT_EQ(live.guess, live.target);
    }
    if (live.status == SessionStatus::Active) {
      ASSERT_FALSE(live.guess == live.target && !live.examples.empty());
    }
    if (mode == UiMode::PositiveOnly) {
      for (const auto& e : live.examples) ASSERT_EQ(e.sign, Sign::Positive);
    }
    ++checked;
  }
  EXPECT_EQ(checked, 500);
}

TEST(SessionReplay, RejectsTamperedLogs) {
  auto d = std::make_shared<const Domain>(demo_domain());
  SessionService svc(d, {}, counter_clock(), 1);
  const Session s = svc.create_session(UiMode::PositiveOnly, Robot::Green, 1, "[01]*");
  svc.add_example(s.id, "0000", Sign::Positive);
  auto ev = svc.events(s.id);

  auto bad_guess = ev;
  for (auto& e : bad_guess) {
    if (e.kind == EventKind::GuessChanged) e.payload["guess"] = "0*1+0*";
  }
  bool has_guess_event = false;
  for (const auto& e : ev) has_guess_event = has_guess_event || e.kind == EventKind::GuessChanged;
  if (has_guess_event) {
    EXPECT_THROW(replay(svc.engine(), bad_guess), Error);
  }

  auto negative = ev;
  negative[1].payload["sign"] = "negative";
  EXPECT_THROW(replay(svc.engine(), negative), Error);

  auto reordered = ev;
  std::swap(reordered[0].seq, reordered[1].seq);
  EXPECT_THROW(replay(svc.engine(), reordered), Error);
  EXPECT_THROW(replay(svc.engine(), {}), Error);
}

class PersistenceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = std::filesystem::temp_directory_path() /
          ("pragsynth_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
           "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(dir);
  }
  void TearDown() override { std::filesystem::remove_all(dir); }
  std::filesystem::path dir;
};

TEST_F(PersistenceTest, ReloadsSessionsFromEventLogs) {
  auto d = std::make_shared<const Domain>(demo_domain());
  ServiceConfig cfg;
  cfg.data_dir = dir.string();
  std::string solved_id, open_id;
  {
    SessionService svc(d, cfg, counter_clock(), 1);
    solved_id = unsolved_after_0000(svc);
    svc.add_example(solved_id, "0010", Sign::Positive);
    open_id = svc.create_session(UiMode::PositiveNegative, Robot::Blue, 2, "0*1+0*").id;
    svc.add_example(open_id, "0000", Sign::Negative);
    svc.snapshot_index();
  }
  ASSERT_TRUE(std::filesystem::exists(dir / "index.json"));
  SessionService reloaded(d, cfg, counter_clock(), 2);
  EXPECT_EQ(reloaded.get(solved_id).status, SessionStatus::Solved);
  const Session open = reloaded.get(open_id);
  ASSERT_EQ(open.examples.size(), 1u);
  EXPECT_EQ(open.examples[0].sign, Sign::Negative);
  // The reloaded session keeps accepting events with increasing sequence numbers.
  reloaded.request_guess(open_id);
  const auto ev = reloaded.events(open_id);
  EXPECT_GT(ev.back().seq, ev[ev.size() - 2].seq);
}

TEST_F(PersistenceTest, LoadRejectsNegativeInPositiveOnlySession) {
  std::filesystem::create_directories(dir / "sessions");
  std::ofstream(dir / "sessions" / "abc.jsonl")
      << R"({"session":"abc","seq":1,"kind":"Created","payload":{"ui_mode":"positive_only","robot":"green","listener":"pragmatic","seed":1,"target":"[01]*"},"ts":1})"
      << "\n"
      << R"({"session":"abc","seq":2,"kind":"ExampleAdded","payload":{"string":"0000","sign":"negative"},"ts":2})"
      << "\n";
  auto d = std::make_shared<const Domain>(demo_domain());
  ServiceConfig cfg;
  cfg.data_dir = dir.string();
  try {
    SessionService svc(d, cfg, counter_clock(), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CorruptData);
  }
}

TEST(SessionConcurrency, ParallelMutationsStayConsistent) {
  DomainConfig dc;
  dc.sample_size = 40;
  dc.max_len = 4;
  auto d = std::make_shared<const Domain>(build_domain(dc));
  SessionService svc(d, {}, system_clock_ms, 5);
  const Session shared = svc.create_session(UiMode::PositiveNegative, Robot::Green, 1);
  const auto strings = utterance_universe(4);
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      const Session mine = svc.create_session(UiMode::PositiveOnly, Robot::Blue, t);
      for (std::size_t i = 1; i < strings.size(); ++i) {
        for (const auto* id : {&shared.id, &mine.id}) {
          try {
            svc.add_example(*id, strings[(i * (t + 1)) % strings.size()].str(), Sign::Positive);
            ++ok;
          } catch (const Error&) {
          }
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_GT(ok.load(), 0);
  for (const auto& id : svc.session_ids()) {
    const Session live = svc.get(id);
    std::set<Example> unique(live.examples.begin(), live.examples.end());
    EXPECT_EQ(unique.size(), live.examples.size());
    const Session again = replay(svc.engine(), svc.events(id));
    EXPECT_EQ(again.examples, live.examples);
    EXPECT_EQ(again.guess, live.guess);
  }
}

}  // namespace
}  // namespace pragsynth
