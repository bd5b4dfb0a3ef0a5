#include "persuade/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <system_error>

namespace persuade {

namespace fs = std::filesystem;

SessionStore::SessionStore(fs::path dir) : dir_(std::move(dir)) {
  if (dir_.empty()) return;
  fs::create_directories(dir_);
  for (const auto& log : load_all())
    index_[log.session_id] = {log.config, log.kb_id, log.summary.has_value(),
                              static_cast<std::int64_t>(log.events.size())};
}

fs::path SessionStore::path_for(const std::string& session_id) const {
  if (session_id.empty() || session_id.find_first_of("/\\") != std::string::npos ||
      session_id.front() == '.')
    throw std::invalid_argument("unsafe session id '" + session_id + "'");
  return dir_ / (session_id + ".jsonl");
}

void SessionStore::write_line(const std::string& session_id, const std::string& line) {
  if (dir_.empty()) return;
  const auto path = path_for(session_id);
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw std::system_error(errno, std::generic_category(), path.string());
  const std::string record = line + '\n';
  const ssize_t n = ::write(fd, record.data(), record.size());
  const int err = errno;
  ::close(fd);
  if (n != static_cast<ssize_t>(record.size()))
    throw std::system_error(n < 0 ? err : EIO, std::generic_category(), path.string());
}

void SessionStore::create(const Session& session, const std::string& kb_id) {
  std::lock_guard lock(mutex_);
  if (index_.count(session.id))
    throw std::invalid_argument("session '" + session.id + "' already stored");
  write_line(session.id, session_header(session, kb_id).dump());
  index_[session.id] = {session.config, kb_id, false, 0};
  auto& entry = index_[session.id];
  for (const auto& e : session.events) {
    write_line(session.id, to_json(session.id, e).dump());
    ++entry.n_events;
  }
}

void SessionStore::append(const Session& session, std::size_t from) {
  std::lock_guard lock(mutex_);
  auto it = index_.find(session.id);
  if (it == index_.end()) throw std::out_of_range("session '" + session.id + "' not stored");
  auto& entry = it->second;
  if (entry.done) throw std::logic_error("session '" + session.id + "' is done and immutable");
  if (static_cast<std::int64_t>(from) != entry.n_events)
    throw std::logic_error("append would leave a gap in session '" + session.id + "'");
  for (std::size_t i = from; i < session.events.size(); ++i) {
    write_line(session.id, to_json(session.id, session.events[i]).dump());
    ++entry.n_events;
  }
  if (session.done()) {
    Json summary = session_summary(session);
    summary["record"] = "summary";
    write_line(session.id, summary.dump());
    entry.done = true;
  }
}

std::map<std::string, StoreIndexEntry> SessionStore::index() const {
  std::lock_guard lock(mutex_);
  return index_;
}

bool SessionStore::contains(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  return index_.count(session_id) != 0;
}

std::vector<SessionLog> SessionStore::load_all() const {
  std::vector<SessionLog> out;
  if (dir_.empty() || !fs::exists(dir_)) return out;
  for (const auto& entry : fs::directory_iterator(dir_))
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
      out.push_back(load_session_log(entry.path().string()));
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.session_id < b.session_id; });
  return out;
}

}  // namespace persuade
