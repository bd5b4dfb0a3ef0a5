#pragma once

// Append-only session store: one log file per session (see session_log.hpp).

#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "persuade/session_log.hpp"

namespace persuade {

struct StoreIndexEntry {
  DialogueConfig config;
  std::string kb_id;
  bool done = false;
  std::int64_t n_events = 0;
};

class SessionStore {
 public:
  /// An empty directory path keeps the index in memory only.
  explicit SessionStore(std::filesystem::path dir = {});

  bool persistent() const { return !dir_.empty(); }
  const std::filesystem::path& dir() const { return dir_; }

  /// Writes the header and the session's events so far.
  void create(const Session& session, const std::string& kb_id);

  /// Appends events [from, end) of the session, then the summary record if
  /// the session is done. Each record is written with one append; records
  /// must continue the stored sequence without gaps.
  void append(const Session& session, std::size_t from);

  std::map<std::string, StoreIndexEntry> index() const;
  bool contains(const std::string& session_id) const;

  /// Every log in the directory, sorted by session id.
  std::vector<SessionLog> load_all() const;

 private:
  void write_line(const std::string& session_id, const std::string& line);
  std::filesystem::path path_for(const std::string& session_id) const;

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::string, StoreIndexEntry> index_;
};

}  // namespace persuade
