#include "persuade/service.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <httplib.h>

#include "persuade/analysis.hpp"
#include "persuade/random.hpp"

namespace persuade {

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

ServiceResponse error(int status, const std::string& code, const std::string& message) {
  return {status, {{"error", code}, {"message", message}}};
}

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

}  // namespace

// ---------------------------------------------------------------------------

void ServiceConfig::set_listen(const std::string& host_port) {
  const auto colon = host_port.rfind(':');
  if (colon == std::string::npos) {
    host = host_port;
    return;
  }
  if (colon > 0) host = host_port.substr(0, colon);
  port = std::stoi(host_port.substr(colon + 1));
}

void ServiceConfig::apply_env() {
  if (const char* v = std::getenv("PERSUADE_KB")) kb_paths[default_kb_id] = v;
  if (const char* v = std::getenv("PERSUADE_SEED")) seed = std::stoull(v);
  if (const char* v = std::getenv("PERSUADE_EXPAND_MIN_WORDS")) expand_min_words = std::stoi(v);
  if (const char* v = std::getenv("PERSUADE_LISTEN")) set_listen(v);
  if (const char* v = std::getenv("PERSUADE_STORE")) store_dir = v;
}

ServiceConfig ServiceConfig::load(const std::string& path) {
  ServiceConfig c;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    const Json j = Json::parse(in);
    c.default_kb_id = j.value("default_kb_id", c.default_kb_id);
    if (j.contains("kb")) c.kb_paths[c.default_kb_id] = j["kb"].get<std::string>();
    if (j.contains("kbs"))
      for (const auto& [id, p] : j["kbs"].items()) c.kb_paths[id] = p.get<std::string>();
    c.seed = j.value("seed", c.seed);
    c.expand_min_words = j.value("expand_min_words", c.expand_min_words);
    c.max_expand_prompts = j.value("max_expand_prompts", c.max_expand_prompts);
    if (j.contains("listen")) c.set_listen(j["listen"].get<std::string>());
    c.store_dir = j.value("store_dir", c.store_dir);
    c.static_dir = j.value("static_dir", c.static_dir);
  }
  c.apply_env();
  return c;
}

// ---------------------------------------------------------------------------

struct ChatService::KbEntry {
  KbEntry(KnowledgeBase k, DialogueEngine::Clock clock)
      : kb(std::move(k)), engine(kb, std::move(clock)) {}
  KnowledgeBase kb;
  DialogueEngine engine;
};

struct ChatService::Entry {
  std::mutex mutex;
  Session session;
  std::string kb_id;
  const KbEntry* kb = nullptr;
  // user event seq -> (request value, response body), for idempotent retries
  std::map<std::int64_t, std::pair<std::string, Json>> responses;
};

ChatService::ChatService(const ServiceConfig& config)
    : config_(config), store_(config.store_dir) {
  for (const auto& [id, path] : config_.kb_paths) add_kb(id, load_kb(path));
  restore();
}

ChatService::~ChatService() = default;

void ChatService::add_kb(const std::string& kb_id, KnowledgeBase kb) {
  std::unique_lock lock(kbs_mutex_);
  // sessions hold pointers into the entry, so ids are never rebound
  if (kbs_.count(kb_id)) throw std::invalid_argument("kb '" + kb_id + "' is already loaded");
  kbs_[kb_id] = std::make_unique<KbEntry>(std::move(kb), now_ms);
}

const ChatService::KbEntry* ChatService::find_kb(const std::string& kb_id) const {
  std::shared_lock lock(kbs_mutex_);
  const auto it = kbs_.find(kb_id);
  return it == kbs_.end() ? nullptr : it->second.get();
}

std::shared_ptr<ChatService::Entry> ChatService::find(const std::string& session_id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(session_id);
  return it == sessions_.end() ? nullptr : it->second;
}

Json ChatService::reply_body(const Entry& entry, const Prompt& prompt) const {
  Json body = {{"session_id", entry.session.id},
               {"next_seq", static_cast<std::int64_t>(entry.session.events.size())}};
  if (entry.session.done()) {
    body["done_summary"] = session_summary(entry.session);
    body["message"] = prompt.text;
  } else {
    body["prompt"] = prompt_to_json(prompt);
  }
  return body;
}

void ChatService::restore() {
  for (const auto& log : store_.load_all()) {
    const KbEntry* kb = find_kb(log.kb_id);
    if (!kb)
      throw std::runtime_error("stored session '" + log.session_id + "' needs unknown kb '" +
                               log.kb_id + "'");
    auto entry = std::make_shared<Entry>();
    entry->kb_id = log.kb_id;
    entry->kb = kb;
    entry->session = replay(kb->engine, log);

    // Rebuild the retry cache by stepping through the inputs again.
    Entry scratch;
    scratch.session = kb->engine.new_session(log.session_id, log.config);
    for (const auto& e : log.events) {
      if (e.actor != Actor::User) continue;
      const auto seq = static_cast<std::int64_t>(scratch.session.events.size());
      const Prompt p = kb->engine.apply(scratch.session, e.payload);
      entry->responses[seq] = {e.payload, reply_body(scratch, p)};
    }
    sessions_[log.session_id] = std::move(entry);
    ++id_counter_;
  }
}

std::string ChatService::next_session_id() {
  for (;;) {
    std::ostringstream id;
    id << "s" << std::hex << std::setw(16) << std::setfill('0')
       << derive_seed(config_.seed, id_counter_++, 0x5e55);
    if (!sessions_.count(id.str()) && !store_.contains(id.str())) return id.str();
  }
}

ServiceResponse ChatService::create_session(const Json& request) {
  DialogueConfig dc;
  std::string kb_id = config_.default_kb_id;
  try {
    dc.variant = parse_variant(request.at("variant").get<std::string>());
    dc.policy = parse_policy(request.at("policy").get<std::string>());
    kb_id = request.value("kb_id", kb_id);
  } catch (const std::exception& e) {
    return error(400, "bad_request", e.what());
  }
  dc.expand_min_words = config_.expand_min_words;
  dc.max_expand_prompts = config_.max_expand_prompts;

  const KbEntry* kb = find_kb(kb_id);
  if (!kb) return error(404, "kb_not_found", "unknown kb_id '" + kb_id + "'");

  auto entry = std::make_shared<Entry>();
  entry->kb_id = kb_id;
  entry->kb = kb;
  {
    std::unique_lock lock(sessions_mutex_);
    const std::string id = next_session_id();
    dc.seed = derive_seed(config_.seed, id_counter_);
    try {
      entry->session = kb->engine.new_session(id, dc);
    } catch (const PolicyUnavailable& e) {
      return error(422, "policy_unavailable", e.what());
    }
    store_.create(entry->session, kb_id);
    sessions_[id] = entry;
  }
  const Prompt prompt = kb->engine.current_prompt(entry->session);
  Json body = reply_body(*entry, prompt);
  return {201, body};
}

ServiceResponse ChatService::post_input(const std::string& session_id, const Json& request) {
  auto entry = find(session_id);
  if (!entry) return error(404, "session_not_found", "unknown session '" + session_id + "'");
  if (!request.is_object() || !request.contains("value") || !request["value"].is_string())
    return error(400, "bad_request", "request needs a string 'value'");
  const std::string value = request["value"].get<std::string>();
  std::optional<std::int64_t> seq;
  if (request.contains("seq") && !request["seq"].is_null()) {
    if (!request["seq"].is_number_integer())
      return error(400, "bad_request", "'seq' must be an integer");
    seq = request["seq"].get<std::int64_t>();
  }

  std::lock_guard lock(entry->mutex);
  Session& s = entry->session;
  const auto& engine = entry->kb->engine;
  const auto next_seq = static_cast<std::int64_t>(s.events.size());

  // Stale or racing inputs all surface as invalid_for_state; `reason` says why.
  auto conflict = [&](const std::string& code, const std::string& reason,
                      const std::string& message) {
    ServiceResponse r = error(409, code, message);
    r.body["reason"] = reason;
    r.body["state"] = s.state.to_string();
    r.body["next_seq"] = next_seq;
    if (!s.done()) r.body["prompt"] = prompt_to_json(engine.current_prompt(s));
    return r;
  };

  if (seq) {
    if (const auto it = entry->responses.find(*seq); it != entry->responses.end()) {
      const bool same = it->second.first == value ||
                        s.events.at(static_cast<std::size_t>(*seq)).payload == trimmed(value);
      if (same) return {200, it->second.second};
      return conflict("invalid_for_state", "seq_conflict",
                      "seq " + std::to_string(*seq) + " was already used for a different input");
    }
    if (*seq != next_seq)
      return conflict("invalid_for_state", "seq_mismatch",
                      "expected seq " + std::to_string(next_seq));
  }
  if (s.done()) return conflict("session_done", "session_done", "session is already done");

  Session updated = s;
  Prompt prompt;
  try {
    prompt = engine.apply(updated, value);
  } catch (const InvalidInput& e) {
    ServiceResponse r = conflict("invalid_for_state", "invalid_option", e.what());
    Json allowed = Json::array();
    for (const auto& o : e.allowed()) allowed.push_back(o.value);
    r.body["allowed"] = allowed;
    return r;
  }
  store_.append(updated, static_cast<std::size_t>(next_seq));
  s = std::move(updated);
  Json body = reply_body(*entry, prompt);
  entry->responses[next_seq] = {value, body};
  return {200, body};
}

ServiceResponse ChatService::transcript(const std::string& session_id) const {
  auto entry = find(session_id);
  if (!entry) return error(404, "session_not_found", "unknown session '" + session_id + "'");
  std::lock_guard lock(entry->mutex);
  const Session& s = entry->session;
  Json events = Json::array();
  for (const auto& e : s.events) events.push_back(to_json(s.id, e));
  return {200,
          {{"session_id", s.id},
           {"kb_id", entry->kb_id},
           {"config", to_json(s.config)},
           {"state", s.state.to_string()},
           {"schedule", s.schedule},
           {"events", events}}};
}

ServiceResponse ChatService::summary(const std::string& session_id) const {
  auto entry = find(session_id);
  if (!entry) return error(404, "session_not_found", "unknown session '" + session_id + "'");
  std::lock_guard lock(entry->mutex);
  if (!entry->session.done())
    return error(409, "session_not_done", "session '" + session_id + "' is still running");
  return {200, session_summary(entry->session)};
}

ServiceResponse ChatService::chi_square(const Json& request) const {
  try {
    const Json& t = request.at("table");
    ContingencyTable table = t.is_string()
                                 ? ContingencyTable::parse(t.get<std::string>())
                                 : ContingencyTable(t.get<std::vector<std::vector<std::int64_t>>>());
    const auto r = persuade::chi_square(table, request.value("yates", false));
    return {200,
            {{"statistic", r.statistic},
             {"df", r.df},
             {"p_value", r.p_value},
             {"p_display", format_p_value(r.p_value)}}};
  } catch (const std::exception& e) {
    return error(400, "bad_request", e.what());
  }
}

ServiceResponse ChatService::health() const {
  Json kbs = Json::array();
  {
    std::shared_lock lock(kbs_mutex_);
    for (const auto& [id, _] : kbs_) kbs.push_back(id);
  }
  return {200, {{"status", "ok"}, {"sessions", session_count()}, {"kbs", kbs}}};
}

std::size_t ChatService::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

std::optional<Session> ChatService::session(const std::string& session_id) const {
  auto entry = find(session_id);
  if (!entry) return std::nullopt;
  std::lock_guard lock(entry->mutex);
  return entry->session;
}

// ---------------------------------------------------------------------------

void install_routes(httplib::Server& server, ChatService& service) {
  auto send = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto parse_body = [](const httplib::Request& req) -> std::optional<Json> {
    try {
      return Json::parse(req.body.empty() ? "{}" : req.body);
    } catch (const Json::exception&) {
      return std::nullopt;
    }
  };

  server.Get("/health", [&, send](const httplib::Request&, httplib::Response& res) {
    send(res, service.health());
  });
  server.Post("/sessions", [&, send, parse_body](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    send(res, body ? service.create_session(*body) : error(400, "bad_request", "invalid JSON"));
  });
  server.Post(R"(/sessions/([^/]+)/input)",
              [&, send, parse_body](const httplib::Request& req, httplib::Response& res) {
                const auto body = parse_body(req);
                send(res, body ? service.post_input(req.matches[1], *body)
                               : error(400, "bad_request", "invalid JSON"));
              });
  server.Get(R"(/sessions/([^/]+)/summary)",
             [&, send](const httplib::Request& req, httplib::Response& res) {
               send(res, service.summary(req.matches[1]));
             });
  server.Get(R"(/sessions/([^/]+))", [&, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.transcript(req.matches[1]));
  });
  server.Post("/analysis/chi-square",
              [&, send, parse_body](const httplib::Request& req, httplib::Response& res) {
                const auto body = parse_body(req);
                send(res, body ? service.chi_square(*body)
                               : error(400, "bad_request", "invalid JSON"));
              });
}

int serve(ChatService& service, const ServiceConfig& config) {
  httplib::Server server;
  install_routes(server, service);
  if (!config.static_dir.empty() && !server.set_mount_point("/", config.static_dir))
    throw std::runtime_error("cannot serve static assets from '" + config.static_dir + "'");
  if (!server.listen(config.host, config.port))
    throw std::runtime_error("cannot listen on " + config.host + ":" + std::to_string(config.port));
  return 0;
}

}  // namespace persuade
