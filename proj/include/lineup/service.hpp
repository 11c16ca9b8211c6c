#pragma once

// Classroom sessions: a lineup built from an upload, observer picks, and an
// instructor reveal. Each session persists as an append-only JSONL event
// log in <store>/<id>/events.jsonl; replaying the logs restores all state.

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <array>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "lineup/dataset.hpp"
#include "lineup/error.hpp"
#include "lineup/io.hpp"
#include "lineup/lineup.hpp"
#include "lineup/svg.hpp"

namespace lineup::service {

namespace fs = std::filesystem;

struct ObserverResponse {
  std::string observer_tag;
  std::size_t panel = 0;
  std::string received_at;
  friend bool operator==(const ObserverResponse&, const ObserverResponse&) = default;
};

struct RevealResult {
  std::optional<std::size_t> data_panel;  // absent for Rorschach sessions
  std::size_t observers = 0;              // K
  std::size_t correct = 0;                // x
  std::optional<double> p;                // absent when K = 0 or Rorschach
  friend bool operator==(const RevealResult&, const RevealResult&) = default;
};

// Everything that defines a session; the SVG is derived from the bundle.
struct SessionState {
  std::string id;
  std::string admin_token;
  LineupBundle bundle;
  std::vector<ObserverResponse> responses;
  bool revealed = false;
  std::optional<std::string> revealed_at;
  friend bool operator==(const SessionState&, const SessionState&) = default;
};

struct CreatedSession {
  std::string session_id;
  std::string admin_token;
  std::size_t m = 0;
  PlotKind plot_kind = PlotKind::boxplot;
};

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      now.time_since_epoch()) % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms.count()));
  return out;
}

// 128 random bits as 22 URL-safe base64 characters.
inline std::string random_token() {
  std::array<unsigned char, 16> raw{};
  if (RAND_bytes(raw.data(), static_cast<int>(raw.size())) != 1) {
    throw Error(Errc::io_error, "random token generation failed");
  }
  std::array<unsigned char, 32> enc{};
  const int len = EVP_EncodeBlock(enc.data(), raw.data(), static_cast<int>(raw.size()));
  std::string s(reinterpret_cast<const char*>(enc.data()), static_cast<std::size_t>(len));
  while (!s.empty() && s.back() == '=') s.pop_back();
  for (char& c : s) {
    if (c == '+') c = '-';
    if (c == '/') c = '_';
  }
  return s;
}

inline Json to_json(const RevealResult& r) {
  Json j = Json::object();
  if (r.data_panel) j["data_panel"] = *r.data_panel;
  j["K"] = r.observers;
  if (r.data_panel) j["x"] = r.correct;
  if (r.p) j["p"] = *r.p;
  return j;
}

class SessionStore {
 public:
  explicit SessionStore(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    replay();
  }

  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  const fs::path& directory() const { return dir_; }

  CreatedSession create(const std::string& csv, const Json& spec_doc) {
    const auto ds = parse_csv(csv);
    const auto spec = spec_from_json(spec_doc);
    auto entry = std::make_shared<Entry>();
    entry->state.bundle = build_lineup(ds, spec, utc_now());
    entry->state.admin_token = random_token();
    entry->svg = svg::render_lineup(entry->state.bundle);

    std::unique_lock map_lock(map_mutex_);
    std::string id;
    do {
      id = random_token();
    } while (sessions_.count(id) || fs::exists(dir_ / id));
    entry->state.id = id;

    const Json event = {{"event", "created"},
                        {"session_id", id},
                        {"admin_token", entry->state.admin_token},
                        {"bundle", to_json(entry->state.bundle)},
                        {"key", to_json(entry->state.bundle.key)}};
    fs::create_directories(dir_ / id);
    io::write_file_atomically(log_path(id), event.dump() + "\n");
    sessions_.emplace(id, entry);
    return {id, entry->state.admin_token, spec.m, spec.plot_kind};
  }

  std::string lineup_svg(const std::string& id) const {
    auto e = find(id);
    std::shared_lock lock(e->mutex);
    return e->svg;
  }

  // Returns responses_so_far after appending the pick.
  std::size_t submit(const std::string& id, const std::string& observer_tag,
                     std::size_t panel) {
    auto e = find(id);
    std::unique_lock lock(e->mutex);
    auto& s = e->state;
    if (s.revealed) throw Error(Errc::already_revealed, "session already revealed");
    if (panel < 1 || panel > s.bundle.spec.m) {
      throw Error(Errc::panel_out_of_range,
                  "panel must be in 1.." + std::to_string(s.bundle.spec.m));
    }
    if (e->observers.count(observer_tag)) {
      throw Error(Errc::duplicate_observer, "observer already responded");
    }
    ObserverResponse r{observer_tag, panel, utc_now()};
    const Json event = {{"event", "response"},
                        {"observer_tag", r.observer_tag},
                        {"panel", r.panel},
                        {"received_at", r.received_at}};
    io::append_line_synced(log_path(id), event.dump());
    e->observers.insert(observer_tag);
    s.responses.push_back(std::move(r));
    return s.responses.size();
  }

  RevealResult reveal(const std::string& id, const std::string& admin_token) {
    auto e = find(id);
    std::unique_lock lock(e->mutex);
    auto& s = e->state;
    if (admin_token != s.admin_token) {
      throw Error(Errc::forbidden, "admin token does not match");
    }
    if (!s.revealed) {
      const auto at = utc_now();
      const Json event = {{"event", "revealed"}, {"at", at}};
      io::append_line_synced(log_path(id), event.dump());
      s.revealed = true;
      s.revealed_at = at;
    }
    return result_of(s);
  }

  Json status(const std::string& id) const {
    auto e = find(id);
    std::shared_lock lock(e->mutex);
    const auto& s = e->state;
    return {{"m", s.bundle.spec.m},
            {"plot_kind", std::string(to_string(s.bundle.spec.plot_kind))},
            {"responses_so_far", s.responses.size()},
            {"revealed", s.revealed}};
  }

  std::optional<SessionState> snapshot(const std::string& id) const {
    std::shared_ptr<Entry> e;
    {
      std::shared_lock map_lock(map_mutex_);
      auto it = sessions_.find(id);
      if (it == sessions_.end()) return std::nullopt;
      e = it->second;
    }
    std::shared_lock lock(e->mutex);
    return e->state;
  }

  std::map<std::string, SessionState> snapshot_all() const {
    std::map<std::string, SessionState> out;
    std::shared_lock map_lock(map_mutex_);
    for (const auto& [id, e] : sessions_) {
      std::shared_lock lock(e->mutex);
      out.emplace(id, e->state);
    }
    return out;
  }

  static RevealResult result_of(const SessionState& s) {
    RevealResult r;
    r.observers = s.responses.size();
    if (s.bundle.spec.rorschach) return r;
    r.data_panel = s.bundle.key.data_panel;
    for (const auto& resp : s.responses) {
      if (resp.panel == r.data_panel) ++r.correct;
    }
    if (r.observers > 0) {
      r.p = visual_p_value(r.correct, r.observers, s.bundle.spec.m).p;
    }
    return r;
  }

 private:
  struct Entry {
    mutable std::shared_mutex mutex;
    SessionState state;
    std::string svg;
    std::set<std::string> observers;
  };

  fs::path log_path(const std::string& id) const { return dir_ / id / "events.jsonl"; }

  std::shared_ptr<Entry> find(const std::string& id) const {
    std::shared_lock lock(map_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) {
      throw Error(Errc::session_not_found, "no session '" + id + "'");
    }
    return it->second;
  }

  void replay() {
    for (const auto& dirent : fs::directory_iterator(dir_)) {
      if (!dirent.is_directory()) continue;
      const auto log = dirent.path() / "events.jsonl";
      if (!fs::exists(log)) continue;  // crashed before the created event landed
      auto entry = load(log);
      if (entry) sessions_.emplace(entry->state.id, std::move(entry));
    }
  }

  // A torn final line (crash mid-append) is dropped and truncated away so
  // later appends start on a clean line.
  static std::shared_ptr<Entry> load(const fs::path& log) {
    const auto text = io::read_file(log);
    std::shared_ptr<Entry> e;
    std::size_t pos = 0;
    std::size_t good_end = 0;
    while (pos < text.size()) {
      const auto nl = text.find('\n', pos);
      if (nl == std::string::npos) break;  // unterminated tail
      const auto line = std::string_view(text).substr(pos, nl - pos);
      Json ev;
      try {
        ev = Json::parse(line);
      } catch (const Json::exception&) {
        if (text.find('\n', nl + 1) == std::string::npos &&
            text.find_first_not_of('\n', nl + 1) == std::string::npos) {
          break;
        }
        throw Error(Errc::io_error, "corrupt event log " + log.string());
      }
      apply(e, ev, log);
      pos = nl + 1;
      good_end = pos;
    }
    if (good_end != text.size()) fs::resize_file(log, good_end);
    return e;
  }

  static void apply(std::shared_ptr<Entry>& e, const Json& ev, const fs::path& log) {
    const auto type = ev.value("event", std::string());
    if (type == "created") {
      e = std::make_shared<Entry>();
      e->state.id = ev.at("session_id").get<std::string>();
      e->state.admin_token = ev.at("admin_token").get<std::string>();
      e->state.bundle = bundle_from_json(ev.at("bundle"), ev.at("key"));
      e->svg = svg::render_lineup(e->state.bundle);
      return;
    }
    if (!e) throw Error(Errc::io_error, "event log without created event: " + log.string());
    if (type == "response") {
      ObserverResponse r{ev.at("observer_tag").get<std::string>(),
                         ev.at("panel").get<std::size_t>(),
                         ev.at("received_at").get<std::string>()};
      e->observers.insert(r.observer_tag);
      e->state.responses.push_back(std::move(r));
    } else if (type == "revealed") {
      e->state.revealed = true;
      e->state.revealed_at = ev.at("at").get<std::string>();
    } else {
      throw Error(Errc::io_error, "unknown event '" + type + "' in " + log.string());
    }
  }

  fs::path dir_;
  mutable std::shared_mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

}  // namespace lineup::service
