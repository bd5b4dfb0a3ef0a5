#include "persuade/session_log.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace persuade {

Json to_json(const DialogueConfig& config) {
  return {{"variant", std::string(to_string(config.variant))},
          {"policy", std::string(to_string(config.policy))},
          {"expand_min_words", config.expand_min_words},
          {"max_expand_prompts", config.max_expand_prompts},
          {"seed", config.seed},
          {"shuffle_order", config.shuffle_order}};
}

DialogueConfig config_from_json(const Json& j) {
  DialogueConfig c;
  c.variant = parse_variant(j.at("variant").get<std::string>());
  c.policy = parse_policy(j.at("policy").get<std::string>());
  c.expand_min_words = j.value("expand_min_words", c.expand_min_words);
  c.max_expand_prompts = j.value("max_expand_prompts", c.max_expand_prompts);
  c.seed = j.value("seed", c.seed);
  c.shuffle_order = j.value("shuffle_order", c.shuffle_order);
  return c;
}

Json to_json(const std::string& session_id, const Event& e) {
  return {{"record", "event"},
          {"session_id", session_id},
          {"seq", e.seq},
          {"actor", std::string(to_string(e.actor))},
          {"kind", std::string(to_string(e.kind))},
          {"payload", e.payload},
          {"state_after", e.state_after.to_string()},
          {"ts", e.timestamp_ms}};
}

Event event_from_json(const Json& j) {
  Event e;
  e.seq = j.at("seq").get<std::int64_t>();
  e.actor = parse_actor(j.at("actor").get<std::string>());
  e.kind = parse_event_kind(j.at("kind").get<std::string>());
  e.payload = j.at("payload").get<std::string>();
  e.state_after = DialogueState::parse(j.at("state_after").get<std::string>());
  e.timestamp_ms = j.value("ts", std::int64_t{0});
  return e;
}

Json prompt_to_json(const Prompt& p) {
  Json options = Json::array();
  for (const auto& o : p.options) options.push_back({{"value", o.value}, {"label", o.label}});
  Json out = {{"state", p.state.to_string()},
              {"text", p.text},
              {"input", p.free_text ? "text" : (p.options.empty() ? "none" : "choice")},
              {"options", options}};
  if (p.counter_id) out["counter_id"] = *p.counter_id;
  return out;
}

Json session_summary(const Session& s) {
  const int points = intention_points(s);
  const GroupSummary g = summarize(std::span<const Session>(&s, 1));
  return {{"session_id", s.id},
          {"variant", std::string(to_string(s.config.variant))},
          {"policy", std::string(to_string(s.config.policy))},
          {"concern", std::string(to_string(*s.concern))},
          {"main_argument", s.main_argument.value_or("")},
          {"initial_intention", std::string(to_string(*s.initial_intention))},
          {"final_intention", std::string(to_string(*s.final_intention))},
          {"intention_points", points},
          {"n_participants", g.n_participants},
          {"sum_intention_points", g.sum_intention_points},
          {"avg_intention_points", g.avg_intention_points},
          {"n_harvested", g.n_harvested},
          {"avg_disagreed", g.avg_disagreed},
          {"n_better", g.n_better},
          {"n_worse", g.n_worse}};
}

Json session_header(const Session& session, const std::string& kb_id) {
  return {{"record", "session"},
          {"session_id", session.id},
          {"kb_id", kb_id},
          {"config", to_json(session.config)}};
}

void write_session_log(const Session& session, const std::string& kb_id, std::ostream& out) {
  out << session_header(session, kb_id).dump() << '\n';
  for (const auto& e : session.events) out << to_json(session.id, e).dump() << '\n';
  if (session.done()) {
    Json summary = session_summary(session);
    summary["record"] = "summary";
    out << summary.dump() << '\n';
  }
}

SessionLog read_session_log(std::istream& in) {
  SessionLog log;
  bool have_header = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "line " + std::to_string(lineno) + ": ";
    try {
      const Json j = Json::parse(line);
      const auto record = j.at("record").get<std::string>();
      if (record == "session") {
        if (have_header) throw MalformedLog(where + "second session header");
        log.session_id = j.at("session_id").get<std::string>();
        log.kb_id = j.value("kb_id", "");
        log.config = config_from_json(j.at("config"));
        have_header = true;
        continue;
      }
      if (!have_header) throw MalformedLog(where + "record before session header");
      if (j.value("session_id", log.session_id) != log.session_id)
        throw MalformedLog(where + "record belongs to another session");
      if (record == "event") {
        Event e = event_from_json(j);
        if (e.seq != static_cast<std::int64_t>(log.events.size()))
          throw MalformedLog(where + "event seq " + std::to_string(e.seq) + " breaks the sequence");
        log.events.push_back(std::move(e));
      } else if (record == "summary") {
        Json summary = j;
        summary.erase("record");
        log.summary = std::move(summary);
      } else {
        throw MalformedLog(where + "unknown record '" + record + "'");
      }
    } catch (const MalformedLog&) {
      throw;
    } catch (const std::exception& e) {
      throw MalformedLog(where + e.what());
    }
  }
  if (!have_header) throw MalformedLog("log has no session header");
  return log;
}

SessionLog load_session_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedLog("cannot open session log '" + path + "'");
  return read_session_log(in);
}

ReplayDivergence::ReplayDivergence(std::int64_t seq, const std::string& what)
    : std::runtime_error(what), seq_(seq) {}

Session replay(const DialogueEngine& engine, const SessionLog& log) {
  Session s = engine.new_session(log.session_id, log.config);
  auto diverged = [&](std::size_t i, const std::string& why) {
    return ReplayDivergence(static_cast<std::int64_t>(i),
                            "replay diverges at seq " + std::to_string(i) + ": " + why);
  };
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    const Event& logged = log.events[i];
    if (logged.actor == Actor::User) {
      if (s.events.size() != i) throw diverged(std::min(i, s.events.size()), "event count differs");
      try {
        engine.apply(s, logged.payload);
      } catch (const std::exception& e) {
        throw diverged(i, e.what());
      }
    }
    if (i >= s.events.size()) throw diverged(i, "engine produced no event");
    if (!s.events[i].same_move(logged)) throw diverged(i, "logged event differs from engine move");
    s.events[i].timestamp_ms = logged.timestamp_ms;
  }
  if (s.events.size() != log.events.size())
    throw diverged(log.events.size(), "log ends before the engine's next move");
  if (log.summary) {
    if (!s.done()) throw ReplayDivergence(-1, "summary stored for an unfinished session");
    if (session_summary(s) != *log.summary)
      throw ReplayDivergence(-1, "recomputed summary differs from the stored one");
  }
  return s;
}

}  // namespace persuade
