#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "persuade/service.hpp"
#include "persuade/session_log.hpp"
#include "persuade/simulation.hpp"
#include "persuade/store.hpp"
#include "test_support.hpp"

using namespace persuade;
using persuade::testing::data_path;
using persuade::testing::full_kb;
using persuade::testing::run_script;
using persuade::testing::Script;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("persuade-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ServiceConfig service_config(const std::string& store_dir = {}) {
  ServiceConfig c;
  c.kb_paths = {{"default", data_path("kb/meat_consumption.jsonl")},
                {"baseline-only", data_path("kb/baseline_only.jsonl")}};
  c.seed = 3;
  c.store_dir = store_dir;
  return c;
}

// Picks an answer for whatever the prompt asks.
std::string answer(const Json& prompt, bool agree = false) {
  if (prompt.at("input") == "text") return "because it is what I grew up with";
  const auto& options = prompt.at("options");
  for (const auto& o : options)
    if (o.at("value") == (agree ? "agree" : "disagree")) return o.at("value");
  if (prompt.at("state") == "AwaitConcern") return "health";
  if (prompt.at("state") == "AwaitInitialIntention") return "probably wouldn't";
  if (prompt.at("state") == "AwaitFinalIntention") return "probably would";
  return options.at(0).at("value");
}

// Runs a session to completion through the service; returns the final body.
Json drive(ChatService& svc, const std::string& id, Json body) {
  while (!body.contains("done_summary")) {
    const auto r = svc.post_input(id, {{"seq", body.at("next_seq")}, {"value", answer(body.at("prompt"))}});
    REQUIRE(r.status == 200);
    body = r.body;
  }
  return body;
}

std::string log_text(const Session& s) {
  std::ostringstream out;
  write_session_log(s, "default", out);
  return out.str();
}

SessionLog parse_log(const std::string& text) {
  std::istringstream in(text);
  return read_session_log(in);
}

}  // namespace

TEST_CASE("session logs round trip") {
  const DialogueEngine engine(full_kb(), [n = std::int64_t{0}]() mutable { return n += 10; });
  Script script;
  script.stances = {true, false, true, true, false, false, true, false, true, true, false, true};
  DialogueConfig config;
  config.variant = Variant::II;
  const auto s = run_script(engine, config, script, "log-1");
  const auto log = parse_log(log_text(s));
  CHECK(log.session_id == "log-1");
  CHECK(log.kb_id == "default");
  CHECK(log.config == s.config);
  REQUIRE(log.events.size() == s.events.size());
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    CHECK(log.events[i].same_move(s.events[i]));
    CHECK(log.events[i].timestamp_ms == s.events[i].timestamp_ms);
  }
  REQUIRE(log.summary);
  CHECK(*log.summary == session_summary(s));
  CHECK(log_text(s) == log_text(replay(engine, log)));
}

TEST_CASE("replay reproduces bot events and detects tampering") {
  const DialogueEngine engine(full_kb());
  Script script;
  const auto s = run_script(engine, DialogueConfig{}, script, "tamper");
  const auto log = parse_log(log_text(s));
  const auto rebuilt = replay(engine, log);
  CHECK(rebuilt.events.size() == s.events.size());
  CHECK(rebuilt.harvested == s.harvested);

  SUBCASE("bot payload") {
    auto bad = log;
    std::int64_t tampered = -1;
    for (auto& e : bad.events)
      if (e.actor == Actor::Bot && e.kind == EventKind::CounterArgument && e.seq > 20) {
        e.payload = "ppc-6";
        tampered = e.seq;
        break;
      }
    REQUIRE(tampered > 0);
    try {
      replay(engine, bad);
      FAIL("expected divergence");
    } catch (const ReplayDivergence& d) {
      CHECK(d.seq() == tampered);
    }
  }
  SUBCASE("summary") {
    auto bad = log;
    (*bad.summary)["intention_points"] = 3;
    try {
      replay(engine, bad);
      FAIL("expected divergence");
    } catch (const ReplayDivergence& d) {
      CHECK(d.seq() == -1);
    }
  }
  SUBCASE("sequence gap") {
    auto text = log_text(s);
    const auto cut = text.find("\"seq\":5,");
    REQUIRE(cut != std::string::npos);
    const auto begin = text.rfind('\n', cut) + 1;
    const auto end = text.find('\n', cut) + 1;
    text.erase(begin, end - begin);
    CHECK_THROWS_AS(parse_log(text), MalformedLog);
  }
  SUBCASE("mixed sessions") {
    auto text = log_text(s);
    const auto other = log_text(run_script(engine, DialogueConfig{}, script, "other"));
    text += other.substr(other.find('\n') + 1);
    CHECK_THROWS_AS(parse_log(text), MalformedLog);
  }
}

TEST_CASE("simulated sessions replay to identical bot events and summaries") {
  const DialogueEngine engine(full_kb());
  ModelTemplate t;
  t.reply_bank = terse_reply_bank();
  const ModelSampler sampler = [&](Rng& r) { return t.sample(r); };
  const auto arms = all_arms();
  for (const auto& arm : run_experiment(10, sampler, arms, engine, 31))
    for (const auto& s : arm.sessions) {
      const auto text = log_text(s);
      const auto rebuilt = replay(engine, parse_log(text));
      CHECK(log_text(rebuilt) == text);
    }
}

TEST_CASE("store appends, indexes, and refuses gaps and edits to finished sessions") {
  TempDir dir;
  SessionStore store(dir.path);
  const DialogueEngine engine(full_kb());
  Session s = engine.new_session("st-1", DialogueConfig{});
  store.create(s, "default");
  CHECK(store.contains("st-1"));
  CHECK_THROWS(store.create(s, "default"));

  std::size_t stored = s.events.size();
  engine.apply(s, "might");
  engine.apply(s, "health");
  CHECK_THROWS(store.append(s, stored + 1));  // would leave a gap
  store.append(s, stored);
  stored = s.events.size();
  CHECK(store.index().at("st-1").n_events == static_cast<std::int64_t>(stored));
  CHECK_FALSE(store.index().at("st-1").done);

  Script script;
  while (!s.done()) {
    const auto p = engine.current_prompt(s);
    engine.apply(s, p.free_text ? "it is simply part of my life" :
                    p.state.phase == Phase::AwaitStance ? "agree" : p.options.at(0).value);
  }
  store.append(s, stored);
  CHECK(store.index().at("st-1").done);
  CHECK_THROWS(store.append(s, s.events.size()));

  const auto logs = SessionStore(dir.path).load_all();
  REQUIRE(logs.size() == 1);
  CHECK(logs[0].events.size() == s.events.size());
  CHECK(logs[0].summary);
  CHECK(log_text(replay(engine, logs[0])) == log_text(s));

  SessionStore memory;
  CHECK_FALSE(memory.persistent());
  memory.create(s, "default");
  CHECK(memory.contains("st-1"));
  CHECK(memory.load_all().empty());
}

TEST_CASE("create_session") {
  ChatService svc(service_config());
  const auto ok = svc.create_session({{"variant", "I"}, {"policy", "strategic"}});
  REQUIRE(ok.status == 201);
  const auto& prompt = ok.body.at("prompt");
  CHECK(prompt.at("state") == "AwaitInitialIntention");
  REQUIRE(prompt.at("options").size() == 5);
  CHECK(prompt.at("options")[0].at("value") == "definitely wouldn't");
  CHECK(prompt.at("options")[4].at("value") == "definitely would");
  CHECK(ok.body.at("next_seq") == 1);

  const auto missing = svc.create_session({{"variant", "I"}, {"policy", "strategic"}, {"kb_id", "x"}});
  CHECK(missing.status == 404);
  CHECK(missing.body.at("error") == "kb_not_found");

  const auto unavailable =
      svc.create_session({{"variant", "II"}, {"policy", "strategic"}, {"kb_id", "baseline-only"}});
  CHECK(unavailable.status == 422);
  CHECK(unavailable.body.at("error") == "policy_unavailable");
  CHECK(unavailable.body.at("message").get<std::string>().find("strategic policy unavailable") !=
        std::string::npos);

  CHECK(svc.create_session({{"variant", "III"}, {"policy", "strategic"}}).status == 400);
  CHECK(svc.create_session({{"policy", "strategic"}}).status == 400);
  CHECK(svc.create_session({{"variant", "I"}, {"policy", "baseline"}, {"kb_id", "baseline-only"}})
            .status == 201);
  CHECK(svc.session_count() == 2);
  CHECK_THROWS_AS(svc.add_kb("default", full_kb()), std::invalid_argument);
}

TEST_CASE("post_input walks the protocol and reports the done summary") {
  ChatService svc(service_config());
  const auto created = svc.create_session({{"variant", "II"}, {"policy", "strategic"}});
  const std::string id = created.body.at("session_id");
  std::int64_t seq = created.body.at("next_seq");

  auto post = [&](const std::string& value) {
    auto r = svc.post_input(id, {{"seq", seq}, {"value", value}});
    if (r.body.contains("next_seq")) seq = r.body.at("next_seq");
    return r;
  };
  CHECK(post("probably wouldn't").status == 200);
  CHECK(post("health").status == 200);
  auto r = post("pa-taste");
  REQUIRE(r.status == 200);
  CHECK(r.body.at("prompt").at("state") == "AwaitStance(1)");
  CHECK(r.body.at("prompt").at("counter_id") == "ppc-1");

  const auto bad = post("maybe");
  CHECK(bad.status == 409);
  CHECK(bad.body.at("error") == "invalid_for_state");
  CHECK(bad.body.at("allowed") == Json::array({"agree", "disagree"}));
  CHECK(bad.body.at("prompt").at("state") == "AwaitStance(1)");

  r = post("agree");
  CHECK(r.body.at("prompt").at("text") == "Why do you eat meat then?");
  r = post("It is what my family cooks");
  CHECK(r.body.at("prompt").at("state") == "AwaitStance(2)");
  CHECK(svc.summary(id).status == 409);

  while (!r.body.contains("done_summary")) {
    const auto& p = r.body.at("prompt");
    r = post(p.at("state") == "AwaitFinalIntention" ? "might" : answer(p));
    REQUIRE(r.status == 200);
  }
  // probably wouldn't (1) -> might (2)
  CHECK(r.body.at("done_summary").at("intention_points") == 1);
  CHECK(r.body.at("done_summary").at("n_harvested") == 12);
  const auto summary = svc.summary(id);
  CHECK(summary.status == 200);
  CHECK(summary.body == r.body.at("done_summary"));

  const auto after = post("might");
  CHECK(after.status == 409);
  CHECK(after.body.at("error") == "session_done");

  CHECK(svc.post_input("nope", {{"value", "x"}}).status == 404);
  CHECK(svc.post_input(id, {{"seq", 3}}).status == 400);
  CHECK(svc.transcript(id).body.at("events").size() == svc.session(id)->events.size());
  CHECK(svc.transcript("nope").status == 404);
}

TEST_CASE("retries with the same seq append nothing") {
  ChatService svc(service_config());
  const auto created = svc.create_session({{"variant", "I"}, {"policy", "baseline"}});
  const std::string id = created.body.at("session_id");
  const auto first = svc.post_input(id, {{"seq", 1}, {"value", "might"}});
  REQUIRE(first.status == 200);
  const auto events = svc.session(id)->events.size();

  const auto retry = svc.post_input(id, {{"seq", 1}, {"value", "might"}});
  CHECK(retry.status == 200);
  CHECK(retry.body == first.body);
  CHECK(svc.session(id)->events.size() == events);

  const auto different = svc.post_input(id, {{"seq", 1}, {"value", "definitely would"}});
  CHECK(different.status == 409);
  CHECK(different.body.at("reason") == "seq_conflict");
  const auto ahead = svc.post_input(id, {{"seq", 99}, {"value", "health"}});
  CHECK(ahead.status == 409);
  CHECK(ahead.body.at("reason") == "seq_mismatch");
  CHECK(svc.session(id)->events.size() == events);
}

TEST_CASE("concurrent inputs to one session: exactly one wins") {
  ChatService svc(service_config());
  for (int round = 0; round < 20; ++round) {
    const auto created = svc.create_session({{"variant", "I"}, {"policy", "strategic"}});
    const std::string id = created.body.at("session_id");
    const auto seq = created.body.at("next_seq").get<std::int64_t>();
    const std::vector<std::string> values = {"might", "definitely would", "probably would",
                                             "definitely wouldn't"};
    std::vector<int> status(values.size());
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < values.size(); ++i)
      threads.emplace_back([&, i] {
        status[i] = svc.post_input(id, {{"seq", seq}, {"value", values[i]}}).status;
      });
    for (auto& th : threads) th.join();
    CHECK(std::count(status.begin(), status.end(), 200) == 1);
    CHECK(std::count(status.begin(), status.end(), 409) == 3);
    CHECK(svc.session(id)->events.size() == 3);
  }
}

TEST_CASE("many sessions in parallel persist consistently and survive a restart") {
  TempDir dir;
  std::vector<std::string> ids;
  std::map<std::string, Session> before;
  {
    ChatService svc(service_config(dir.path.string()));
    std::mutex ids_mutex;
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t)
      threads.emplace_back([&, t] {
        for (int k = 0; k < 5; ++k) {
          const auto created = svc.create_session(
              {{"variant", t % 2 ? "I" : "II"}, {"policy", t % 4 < 2 ? "baseline" : "strategic"}});
          const std::string id = created.body.at("session_id");
          {
            std::lock_guard lock(ids_mutex);
            ids.push_back(id);
          }
          if (k == 4) {
            // leave one session per thread half-way through
            svc.post_input(id, {{"seq", 1}, {"value", "might"}});
            continue;
          }
          drive(svc, id, created.body);
        }
      });
    for (auto& th : threads) th.join();
    CHECK(svc.session_count() == 40);
    for (const auto& id : ids) before[id] = *svc.session(id);
  }

  ChatService restarted(service_config(dir.path.string()));
  CHECK(restarted.session_count() == 40);
  for (const auto& [id, s] : before) {
    const auto again = restarted.session(id);
    REQUIRE(again);
    CHECK(again->state == s.state);
    CHECK(again->schedule == s.schedule);
    CHECK(again->harvested == s.harvested);
    REQUIRE(again->events.size() == s.events.size());
    for (std::size_t i = 0; i < s.events.size(); ++i) {
      CHECK(again->events[i].same_move(s.events[i]));
      CHECK(again->events[i].timestamp_ms == s.events[i].timestamp_ms);
    }
  }

  // unfinished sessions continue; a retry from before the restart is still idempotent
  for (const auto& [id, s] : before) {
    if (s.done()) continue;
    const auto retry = restarted.post_input(id, {{"seq", 1}, {"value", "might"}});
    CHECK(retry.status == 200);
    CHECK(restarted.session(id)->events.size() == s.events.size());
    const auto body = drive(restarted, id, retry.body);
    CHECK(body.at("done_summary").at("intention_points").is_number_integer());
  }
  const auto fresh = restarted.create_session({{"variant", "I"}, {"policy", "strategic"}});
  CHECK(fresh.status == 201);
  CHECK_FALSE(before.count(fresh.body.at("session_id")));
}

TEST_CASE("chi-square and health endpoints") {
  ChatService svc(service_config());
  const auto r = svc.chi_square({{"table", "5,22;17,9"}});
  CHECK(r.status == 200);
  CHECK(r.body.at("df") == 1);
  CHECK(r.body.at("p_display") == "<0.001");
  const auto arr = svc.chi_square({{"table", {{7, 16}, {11, 13}}}});
  CHECK(arr.body.at("p_display") == "0.278");
  CHECK(svc.chi_square({{"table", "0,5;0,7"}}).status == 400);
  CHECK(svc.chi_square(Json::object()).status == 400);
  const auto h = svc.health();
  CHECK(h.body.at("status") == "ok");
  CHECK(h.body.at("kbs").size() == 2);
}

TEST_CASE("config file and environment overrides") {
  TempDir dir;
  const auto path = dir.path / "service.json";
  std::ofstream(path) << R"({"kb": "a.jsonl", "kbs": {"b": "b.jsonl"}, "seed": 5,
                            "expand_min_words": 3, "listen": "0.0.0.0:9000"})";
  ::unsetenv("PERSUADE_SEED");
  ::unsetenv("PERSUADE_LISTEN");
  auto c = ServiceConfig::load(path.string());
  CHECK(c.kb_paths.at("default") == "a.jsonl");
  CHECK(c.kb_paths.at("b") == "b.jsonl");
  CHECK(c.seed == 5);
  CHECK(c.expand_min_words == 3);
  CHECK(c.host == "0.0.0.0");
  CHECK(c.port == 9000);

  ::setenv("PERSUADE_SEED", "11", 1);
  ::setenv("PERSUADE_LISTEN", "127.0.0.1:9100", 1);
  c = ServiceConfig::load(path.string());
  CHECK(c.seed == 11);
  CHECK(c.port == 9100);
  ::unsetenv("PERSUADE_SEED");
  ::unsetenv("PERSUADE_LISTEN");
  CHECK_THROWS(ServiceConfig::load((dir.path / "missing.json").string()));
}

TEST_CASE("wire API over HTTP on localhost") {
  ChatService svc(service_config());
  httplib::Server server;
  install_routes(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);

  auto created = client.Post("/sessions", R"({"variant":"I","policy":"strategic"})",
                             "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  Json body = Json::parse(created->body);
  const std::string id = body.at("session_id");

  auto bad = client.Post("/sessions/" + id + "/input", R"({"value":"agree"})", "application/json");
  CHECK(bad->status == 409);
  CHECK(Json::parse(bad->body).at("allowed").size() == 5);

  while (!body.contains("done_summary")) {
    const Json req = {{"seq", body.at("next_seq")}, {"value", answer(body.at("prompt"), true)}};
    auto r = client.Post("/sessions/" + id + "/input", req.dump(), "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 200);
    body = Json::parse(r->body);
  }
  CHECK(body.at("done_summary").at("intention_points") == 2);

  auto summary = client.Get("/sessions/" + id + "/summary");
  CHECK(summary->status == 200);
  CHECK(Json::parse(summary->body) == body.at("done_summary"));
  auto transcript = client.Get("/sessions/" + id);
  CHECK(Json::parse(transcript->body).at("state") == "Done");
  CHECK(client.Get("/sessions/unknown")->status == 404);
  CHECK(client.Post("/sessions", "{not json", "application/json")->status == 400);

  auto chi = client.Post("/analysis/chi-square", R"({"table":"12,38;28,22"})", "application/json");
  CHECK(chi->status == 200);
  CHECK(Json::parse(chi->body).at("p_display") == "0.001");

  server.stop();
  listener.join();
}
