#pragma once

// Session-oriented chat service. ChatService holds the transport-independent
// request handling; serve() exposes it over HTTP.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "persuade/dialogue.hpp"
#include "persuade/store.hpp"

namespace httplib {
class Server;
}

namespace persuade {

struct ServiceConfig {
  std::map<std::string, std::string> kb_paths;  // kb_id -> path
  std::string default_kb_id = "default";
  std::uint64_t seed = 0;
  int expand_min_words = 4;
  int max_expand_prompts = 1;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string store_dir;  // empty: in-memory only
  std::string static_dir; // optional web client assets

  /// Reads a JSON config file (may be empty path) and applies environment
  /// overrides: PERSUADE_KB, PERSUADE_SEED, PERSUADE_EXPAND_MIN_WORDS,
  /// PERSUADE_LISTEN (host:port), PERSUADE_STORE.
  static ServiceConfig load(const std::string& path = {});
  void apply_env();
  void set_listen(const std::string& host_port);
};

struct ServiceResponse {
  int status = 200;
  Json body;
};

class ChatService {
 public:
  /// Loads the configured knowledge bases, then the stored sessions, which
  /// are replayed to rebuild their state. Throws on divergent logs.
  explicit ChatService(const ServiceConfig& config);
  ~ChatService();

  /// Throws std::invalid_argument if kb_id is already loaded.
  void add_kb(const std::string& kb_id, KnowledgeBase kb);

  // Request handlers; bodies mirror the wire API.
  ServiceResponse create_session(const Json& request);
  ServiceResponse post_input(const std::string& session_id, const Json& request);
  ServiceResponse transcript(const std::string& session_id) const;
  ServiceResponse summary(const std::string& session_id) const;
  ServiceResponse chi_square(const Json& request) const;
  ServiceResponse health() const;

  std::size_t session_count() const;
  /// Copy of a session's current state; nullopt when unknown.
  std::optional<Session> session(const std::string& session_id) const;

  const SessionStore& store() const { return store_; }

 private:
  struct KbEntry;
  struct Entry;

  std::shared_ptr<Entry> find(const std::string& session_id) const;
  const KbEntry* find_kb(const std::string& kb_id) const;
  Json reply_body(const Entry& entry, const Prompt& prompt) const;
  void restore();
  std::string next_session_id();

  ServiceConfig config_;
  SessionStore store_;
  mutable std::shared_mutex kbs_mutex_;
  std::map<std::string, std::unique_ptr<KbEntry>> kbs_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t id_counter_ = 0;
};

/// Installs the wire API routes on an httplib server.
void install_routes(httplib::Server& server, ChatService& service);

/// Blocks serving on config.host:config.port.
int serve(ChatService& service, const ServiceConfig& config);

}  // namespace persuade
