// pragsynth: command-line front end for the pragmatic regex synthesizer.
//
//   pragsynth build-domain   -o domain.matrix
//   pragsynth infer          --listener pragmatic --examples 0000 0010
//   pragsynth simulate       --games 200 --listener both
//   pragsynth serve          --config service.json
//   pragsynth export-matrix  --format csv --demo

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <csignal>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "pragsynth/api.hpp"
#include "pragsynth/domain.hpp"
#include "pragsynth/rsa.hpp"
#include "pragsynth/session.hpp"
#include "pragsynth/simulation.hpp"

namespace {

using namespace pragsynth;

struct DomainOptions {
  DomainConfig cfg;
  bool demo = false;
  std::string matrix_file;

  void add_to(CLI::App& app) {
    app.add_option("--max-atoms", cfg.pool_max_atoms, "Longest regex in the grammar pool");
    app.add_option("--pool-size", cfg.pool_size, "Number of regexes enumerated");
    app.add_option("--concepts", cfg.sample_size, "Number of concepts sampled from the pool");
    app.add_option("--seed", cfg.seed, "Concept sampling seed");
    app.add_option("--max-len", cfg.max_len, "Longest example string");
    app.add_flag("--demo", demo, "Use the four-concept demo domain");
    app.add_option("--matrix", matrix_file, "Load a matrix artifact written by build-domain");
  }

  // Returns the unsigned matrix (and its signed extension) for this domain.
  Domain build() const {
    if (demo) return demo_domain();
    if (!matrix_file.empty()) {
      std::ifstream in(matrix_file);
      if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + matrix_file);
      MeaningMatrix m = read_matrix(in);
      Domain d;
      if (m.is_signed()) {
        throw Error(ErrorCode::InvalidArgument,
                    "load the unsigned artifact; the signed one is derived from it");
      }
      d.config.sample_size = m.num_concepts();
      d.config.max_len = m.max_len();
      for (const auto& c : m.concepts()) d.concepts.push_back(parse(c));
      d.signed_matrix = sign_extend(m);
      d.unsigned_matrix = std::move(m);
      return d;
    }
    return build_domain(cfg);
  }
};

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out << text;
}

int cmd_build_domain(const DomainOptions& opts, bool signed_out, const std::string& out) {
  const Domain d = opts.build();
  std::ostringstream os;
  write_matrix(os, signed_out ? d.signed_matrix : d.unsigned_matrix);
  write_output(out, os.str());
  std::cerr << "domain: " << d.unsigned_matrix.num_concepts() << " concepts, "
            << d.unsigned_matrix.num_utterances() << " strings ("
            << d.signed_matrix.num_utterances() << " signed utterances)\n";
  return 0;
}

int cmd_export_matrix(const DomainOptions& opts, bool signed_out, const std::string& format,
                      const std::string& out) {
  const Domain d = opts.build();
  const MeaningMatrix& m = signed_out ? d.signed_matrix : d.unsigned_matrix;
  std::ostringstream os;
  if (format == "csv") {
    write_csv(os, m);
  } else {
    write_matrix(os, m);
  }
  write_output(out, os.str());
  return 0;
}

// Examples are "0010" (positive), "0010:+" or "0111:-".
std::vector<Utterance> parse_examples(const std::vector<std::string>& raw, bool& any_signed) {
  std::vector<Utterance> out;
  any_signed = false;
  for (const auto& r : raw) {
    Utterance u;
    const auto colon = r.find(':');
    u.text = r.substr(0, colon);
    if (colon != std::string::npos) {
      auto sign = sign_from_string(r.substr(colon + 1));
      if (!sign) throw Error(ErrorCode::InvalidArgument, "bad sign in '" + r + "'");
      u.sign = *sign;
      any_signed = any_signed || u.sign == Sign::Negative;
    } else {
      u.sign = Sign::Positive;
    }
    if (u.text == "\"\"") u.text.clear();
    out.push_back(std::move(u));
  }
  return out;
}

int cmd_infer(const DomainOptions& opts, const std::string& listener_name,
              const std::vector<std::string>& raw_examples, bool force_signed,
              std::size_t top, std::uint64_t tie_seed) {
  auto listener = listener_from_string(listener_name);
  if (!listener) throw Error(ErrorCode::InvalidArgument, "listener must be literal or pragmatic");
  bool any_signed = false;
  std::vector<Utterance> examples = parse_examples(raw_examples, any_signed);
  const bool use_signed = force_signed || any_signed;
  const Domain d = opts.build();
  const MeaningMatrix& m = use_signed ? d.signed_matrix : d.unsigned_matrix;
  if (!use_signed) {
    for (auto& u : examples) u.sign = Sign::Unsigned;
  }
  const Posterior p = listen(*listener, m, resolve(m, examples));
  Rng rng(tie_seed);
  const std::size_t guess = best_guess(p, TiePolicy::RandomUniform, rng);
  nlohmann::json post = posterior_to_json(m, p);
  const std::size_t support = post.size();
  if (top > 0 && post.size() > top) post.erase(post.begin() + static_cast<long>(top), post.end());
  nlohmann::json out = {{"listener", to_string(*listener)},
                        {"guess", m.concept_label(guess)},
                        {"explanation", explain(parse(m.concept_label(guess)))},
                        {"support", support},
                        {"posterior", post}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_simulate(DomainOptions opts, bool full, std::size_t games, const std::string& listener_name,
                 const std::string& speaker_name, bool allow_negative, std::size_t budget,
                 std::uint64_t seed, const std::string& format, const std::string& out) {
  if (!full && !opts.demo && opts.matrix_file.empty()) {
    // Desk-scale default; --full keeps the full-scale domain options.
    if (opts.cfg.sample_size == DomainConfig{}.sample_size) opts.cfg.sample_size = 50;
    if (opts.cfg.max_len == DomainConfig{}.max_len) opts.cfg.max_len = 6;
  }
  ExperimentConfig cfg;
  cfg.games = games;
  cfg.allow_negative = allow_negative;
  cfg.budget = budget;
  cfg.seed = seed;
  if (speaker_name == "random") {
    cfg.speaker = SpeakerKind::RandomConsistent;
  } else if (speaker_name == "pragmatic-argmax") {
    cfg.speaker = SpeakerKind::PragmaticArgmax;
  } else if (speaker_name == "pragmatic-sample") {
    cfg.speaker = SpeakerKind::PragmaticSample;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown speaker '" + speaker_name + "'");
  }
  const Domain d = opts.build();
  const MeaningMatrix& m = experiment_matrix(d, allow_negative);
  std::ostringstream os;
  if (listener_name == "both") {
    const PairedReport p = run_paired_experiment(m, cfg);
    if (format == "csv") {
      write_csv(os, m, p.literal);
      std::ostringstream tail;
      write_csv(tail, m, p.pragmatic);
      const std::string t = tail.str();
      os << t.substr(t.find('\n') + 1);
    } else {
      os << to_json(m, p).dump(2) << '\n';
    }
  } else {
    auto listener = listener_from_string(listener_name);
    if (!listener) throw Error(ErrorCode::InvalidArgument, "listener must be literal, pragmatic or both");
    cfg.listener = *listener;
    const Report r = run_experiment(m, cfg);
    if (format == "csv") {
      write_csv(os, m, r);
    } else {
      os << to_json(m, r).dump(2) << '\n';
    }
  }
  write_output(out, os.str());
  return 0;
}

std::atomic<httplib::Server*> g_server{nullptr};

void on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

int cmd_serve(const std::string& config_path) {
  ServiceConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + config_path);
    cfg = service_config_from_json(nlohmann::json::parse(in));
  }
  auto domain = std::make_shared<const Domain>(cfg.demo_domain ? demo_domain()
                                                                : build_domain(cfg.domain));
  SessionService service(domain, cfg);

  httplib::Server server;
  auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    const ApiResponse r = handle_request(service, req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get("/healthz", forward);
  server.Post("/sessions", forward);
  server.Get(R"(/sessions/([0-9a-f]+))", forward);
  server.Post(R"(/sessions/([0-9a-f]+)/(examples|guess|abandon))", forward);
  server.Delete(R"(/sessions/([0-9a-f]+)/examples)", forward);
  if (!cfg.static_dir.empty()) server.set_mount_point("/", cfg.static_dir);

  std::mutex mu;
  std::condition_variable cv;
  bool stopping = false;
  std::thread snapshots([&] {
    std::unique_lock lock(mu);
    while (!cv.wait_for(lock, std::chrono::seconds(std::max(1, cfg.snapshot_interval_s)),
                        [&] { return stopping; })) {
      service.snapshot_index();
    }
  });

  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "serving " << domain->unsigned_matrix.num_concepts() << " concepts on "
            << cfg.host << ':' << cfg.port << '\n';
  const bool ok = server.listen(cfg.host, cfg.port);
  g_server = nullptr;
  {
    std::lock_guard lock(mu);
    stopping = true;
  }
  cv.notify_all();
  snapshots.join();
  service.snapshot_index();
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pragmatic programming-by-example synthesizer for binary regexes"};
  app.require_subcommand(1);

  DomainOptions build_opts;
  bool build_signed = false;
  std::string build_out;
  auto* build = app.add_subcommand("build-domain", "Build the meaning matrix artifact");
  build_opts.add_to(*build);
  build->add_flag("--signed", build_signed, "Write the positive/negative matrix");
  build->add_option("-o,--output", build_out, "Output file (default stdout)");

  DomainOptions infer_opts;
  std::string listener = "pragmatic";
  std::vector<std::string> examples;
  bool infer_signed = false;
  std::size_t top = 10;
  std::uint64_t tie_seed = 0;
  auto* infer = app.add_subcommand("infer", "Rank concepts for a list of examples");
  infer_opts.add_to(*infer);
  infer->add_option("--listener", listener, "literal or pragmatic")
      ->check(CLI::IsMember({"literal", "pragmatic"}));
  infer->add_option("--examples", examples, "Examples: 0010, 0010:+ or 0111:-");
  infer->add_flag("--signed", infer_signed, "Use the positive/negative matrix");
  infer->add_option("--top", top, "Posterior entries to print (0 = all)");
  infer->add_option("--tie-seed", tie_seed, "Seed for random tie-breaking");

  DomainOptions sim_opts;
  bool full = false;
  std::size_t games = 200;
  std::string sim_listener = "both";
  std::string speaker = "random";
  bool negative = false;
  std::size_t budget = 10;
  std::uint64_t sim_seed = 1;
  std::string sim_format = "json";
  std::string sim_out;
  auto* sim = app.add_subcommand("simulate", "Run simulated communication games");
  sim_opts.add_to(*sim);
  sim->add_flag("--full", full, "Use the full-scale domain (350 concepts, length 10)");
  sim->add_option("--games", games, "Number of games")->check(CLI::PositiveNumber);
  sim->add_option("--listener", sim_listener, "literal, pragmatic or both")
      ->check(CLI::IsMember({"literal", "pragmatic", "both"}));
  sim->add_option("--speaker", speaker, "random, pragmatic-argmax or pragmatic-sample");
  sim->add_flag("--negative", negative, "Allow negative examples");
  sim->add_option("--budget", budget, "Examples per game")->check(CLI::PositiveNumber);
  sim->add_option("--game-seed", sim_seed, "Experiment seed");
  sim->add_option("--format", sim_format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  sim->add_option("-o,--output", sim_out, "Output file (default stdout)");

  std::string config_path;
  auto* serve = app.add_subcommand("serve", "Run the interactive session service");
  serve->add_option("--config", config_path, "Service configuration (JSON)");

  DomainOptions export_opts;
  bool export_signed = false;
  std::string export_format = "csv";
  std::string export_out;
  auto* exp = app.add_subcommand("export-matrix", "Export a meaning matrix");
  export_opts.add_to(*exp);
  exp->add_flag("--signed", export_signed, "Export the positive/negative matrix");
  exp->add_option("--format", export_format, "csv or text")->check(CLI::IsMember({"csv", "text"}));
  exp->add_option("-o,--output", export_out, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) return cmd_build_domain(build_opts, build_signed, build_out);
    if (*infer) return cmd_infer(infer_opts, listener, examples, infer_signed, top, tie_seed);
    if (*sim) {
      return cmd_simulate(sim_opts, full, games, sim_listener, speaker, negative, budget,
                          sim_seed, sim_format, sim_out);
    }
    if (*serve) return cmd_serve(config_path);
    if (*exp) return cmd_export_matrix(export_opts, export_signed, export_format, export_out);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
