// Copyright 2026 The mapfdl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Line-delimited JSON control of episodes for external trainers.
//
// Every request is one JSON object on one line with a "cmd" field; every
// response is one line with "ok" and either the payload or "error".
//
//   {"cmd":"info"}
//   {"cmd":"reset","layout":"rm2.1","variant":"block","n_agents":4,"seed":42,
//    "obs_mode":"local","sensor_range":2,"t_max":100,"collision":"strict",
//    "action_mask":false,"tasks":[{"start":[x,y],"goal":[x,y]},...]}
//   {"cmd":"step","actions":{"0":1,"1":0,...}}
//   {"cmd":"step","batch":[{"0":1,...},{"0":0,...}]}
//   {"cmd":"trace"}
//   {"cmd":"close"}

#pragma once

#include <atomic>
#include <cerrno>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <istream>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "mapfdl/bench.hpp"
#include "mapfdl/episode.hpp"
#include "mapfdl/error.hpp"
#include "mapfdl/layouts.hpp"

namespace mapfdl {

inline constexpr int kProtocolVersion = 1;

using nlohmann::json;

inline json encode_grid(const Observation& o) {
  json rows = json::array();
  for (int r = 0; r < o.rows; ++r) {
    json row = json::array();
    for (int c = 0; c < o.cols; ++c) row.push_back(static_cast<int>(o.at(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

// local: {"grid":[[...]], "pos":[x,y], "goal":[x,y]}
// cte:   {"grid":[[...]], "positions":{"0":[x,y],...}}
inline json encode_observation(const Observation& o) {
  json out{{"grid", encode_grid(o)}};
  if (o.mode == ObsMode::kLocal) {
    out["pos"] = position_json(o.pos);
    out["goal"] = position_json(o.goal);
  } else {
    json positions = json::object();
    for (std::size_t i = 0; i < o.positions.size(); ++i) positions[std::to_string(i)] = position_json(o.positions[i]);
    out["positions"] = positions;
  }
  return out;
}

inline Position decode_position(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    throw DecodeError("position must be [x, y]");
  }
  return {j[0].get<int>(), j[1].get<int>()};
}

inline Observation decode_observation(const json& j) {
  if (!j.is_object() || !j.contains("grid") || !j["grid"].is_array()) throw DecodeError("observation needs a grid");
  Observation o;
  o.mode = j.contains("positions") ? ObsMode::kCte : ObsMode::kLocal;
  o.rows = static_cast<int>(j["grid"].size());
  o.cols = o.rows ? static_cast<int>(j["grid"][0].size()) : 0;
  for (const json& row : j["grid"]) {
    if (!row.is_array() || static_cast<int>(row.size()) != o.cols) throw DecodeError("ragged observation grid");
    for (const json& v : row) {
      if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() > 4) throw DecodeError("cell code outside 0..4");
      o.cells.push_back(static_cast<std::uint8_t>(v.get<int>()));
    }
  }
  if (o.mode == ObsMode::kLocal) {
    o.pos = decode_position(j.at("pos"));
    o.goal = decode_position(j.at("goal"));
  } else {
    const json& p = j["positions"];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::string key = std::to_string(i);
      if (!p.contains(key)) throw DecodeError("missing position for agent " + key);
      o.positions.push_back(decode_position(p[key]));
    }
  }
  return o;
}

inline json encode_actions(const JointAction& actions) {
  json out = json::object();
  for (std::size_t i = 0; i < actions.size(); ++i) out[std::to_string(i)] = action_code(actions[i]);
  return out;
}

// {"0":int, ...} covering exactly agents 0..n-1.
inline JointAction decode_actions(const json& j, int n) {
  if (!j.is_object()) throw DecodeError("actions must be an object keyed by agent id");
  JointAction out;
  for (int i = 0; i < n; ++i) {
    const std::string key = std::to_string(i);
    const auto it = j.find(key);
    if (it == j.end()) throw DecodeError("missing action for agent " + key);
    if (!it->is_number_integer()) throw DecodeError("action for agent " + key + " must be an integer");
    out.push_back(action_from_code(it->get<int>()));
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (int i = 0; i < n && !known; ++i) known = it.key() == std::to_string(i);
    if (!known) throw DecodeError("unknown agent '" + it.key() + "'");
  }
  return out;
}

struct ServerOptions {
  std::filesystem::path layout_dir;  // extra lookup directory for layout names
  std::uint64_t base_seed = kDefaultBaseSeed;
  int max_sessions = 16;
  std::size_t max_line = 1 << 20;
};

inline json info_payload() {
  json layouts = json::array();
  for (Family f : kAllFamilies) layouts.push_back({{"id", to_string(f)}, {"variants", family_variants(f)}});
  return {{"ok", true},
          {"protocol_version", kProtocolVersion},
          {"version", kProtocolVersion},
          {"layouts", layouts},
          {"obs_modes", {"cte", "local"}},
          {"collision_models", {"strict", "standard"}},
          {"commands", {"info", "reset", "step", "trace", "close"}}};
}

// One client's view: at most one episode at a time, requests handled strictly
// in order.
class Session {
 public:
  explicit Session(ServerOptions options = {}) : options_(std::move(options)) {}

  bool closed() const { return closed_; }
  const Episode* episode() const { return episode_ ? &*episode_ : nullptr; }

  // Never throws; every failure becomes {"ok":false,"error":...}.
  std::string handle_line(const std::string& line) {
    json response;
    try {
      json request;
      try {
        request = json::parse(line);
      } catch (const json::exception& e) {
        throw DecodeError(std::string("malformed JSON: ") + e.what());
      }
      response = handle(request);
    } catch (const std::exception& e) {
      response = {{"ok", false}, {"error", e.what()}};
    }
    return response.dump(-1, ' ', false, json::error_handler_t::replace);
  }

  json handle(const json& request) {
    if (!request.is_object()) throw DecodeError("request must be a JSON object");
    const auto cmd = request.find("cmd");
    if (cmd == request.end() || !cmd->is_string()) throw DecodeError("request needs a string 'cmd'");
    const std::string name = cmd->get<std::string>();
    if (name == "info") return info_payload();
    if (name == "reset") return reset(request);
    if (name == "step") return step(request);
    if (name == "trace") return trace();
    if (name == "close") {
      closed_ = true;
      episode_.reset();
      return {{"ok", true}};
    }
    throw DecodeError("unknown cmd '" + name + "'");
  }

 private:
  template <typename T>
  static T field(const json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
      return it->get<T>();
    } catch (const json::exception&) {
      throw DecodeError(std::string("field '") + key + "' has the wrong type");
    }
  }

  json observations() const {
    const auto obs = episode_->observe_all();
    if (episode_->config().obs_mode == ObsMode::kCte) return encode_observation(obs.front());
    json out = json::object();
    for (std::size_t i = 0; i < obs.size(); ++i) out[std::to_string(i)] = encode_observation(obs[i]);
    return out;
  }

  json masks() const {
    json out = json::object();
    for (int i = 0; i < episode_->state().agents(); ++i) {
      const ActionMask m = action_mask(episode_->grid(), episode_->state(), i);
      out[std::to_string(i)] = std::vector<bool>(m.begin(), m.end());
    }
    return out;
  }

  json reset(const json& req) {
    const std::string layout = field<std::string>(req, "layout", "");
    if (layout.empty()) throw ConfigError("reset needs a layout");
    const ResolvedLayout resolved = resolve_layout(layout, field<std::string>(req, "variant", ""), {},
                                                   options_.layout_dir);
    EpisodeConfig cfg;
    cfg.grid = resolved.grid;
    cfg.n_agents = field<int>(req, "n_agents", 0);
    cfg.t_max = field<int>(req, "t_max", 100);
    cfg.sensor_range = field<int>(req, "sensor_range", 2);
    cfg.obs_mode = obs_mode_from_string(field<std::string>(req, "obs_mode", "local"));
    cfg.collision = collision_model_from_string(field<std::string>(req, "collision", "strict"));
    cfg.action_mask = field<bool>(req, "action_mask", false);
    if (req.contains("tasks")) {
      cfg.tasks = tasks_from_json(req["tasks"]);
    } else if (resolved.default_tasks &&
               (cfg.n_agents == 0 || cfg.n_agents <= static_cast<int>(resolved.default_tasks->size()))) {
      TaskSet t = *resolved.default_tasks;
      if (cfg.n_agents > 0) t.resize(static_cast<std::size_t>(cfg.n_agents));
      cfg.tasks = t;
    }
    if (cfg.tasks && cfg.n_agents == 0) cfg.n_agents = static_cast<int>(cfg.tasks->size());
    const auto seed = field<std::uint64_t>(req, "seed", options_.base_seed);
    Episode ep(cfg);
    ep.reset(seed);
    episode_ = std::move(ep);
    TaskSet tasks;
    for (int i = 0; i < episode_->state().agents(); ++i)
      tasks.push_back({episode_->state().positions[static_cast<std::size_t>(i)],
                       episode_->state().goals[static_cast<std::size_t>(i)]});
    json out{{"ok", true}, {"t", 0}, {"n_agents", episode_->state().agents()}, {"obs", observations()},
             {"tasks", tasks_to_json(tasks)}, {"grid", {cfg.grid.rows(), cfg.grid.cols()}}};
    if (cfg.action_mask) out["action_mask"] = masks();
    return out;
  }

  json step_once(const json& actions) {
    if (!episode_) throw StateError("no active episode; send reset first");
    if (episode_->state().finished()) throw StateError("episode finished");
    const JointAction joint = decode_actions(actions, episode_->state().agents());
    const StepResult r = episode_->step(joint);
    json rewards = json::object();
    for (std::size_t i = 0; i < r.rewards.size(); ++i) rewards[std::to_string(i)] = r.rewards[i];
    json returns = json::object();
    double total = 0;
    for (std::size_t i = 0; i < episode_->state().returns.size(); ++i) {
      returns[std::to_string(i)] = episode_->state().returns[i];
      total += episode_->state().returns[i];
    }
    json out{{"ok", true},
             {"t", episode_->state().t},
             {"obs", observations()},
             {"rewards", rewards},
             {"terminated", r.terminated},
             {"truncated", r.truncated},
             {"info",
              {{"collisions", r.info.collisions},
               {"reached", r.info.reached},
               {"masked", r.info.masked},
               {"returns", returns},
               {"episode_reward", total}}}};
    if (episode_->config().action_mask && !episode_->state().finished()) out["action_mask"] = masks();
    return out;
  }

  json step(const json& req) {
    if (req.contains("batch")) {
      const json& batch = req["batch"];
      if (!batch.is_array()) throw DecodeError("batch must be an array of joint actions");
      json results = json::array();
      for (const json& actions : batch) {
        try {
          results.push_back(step_once(actions));
        } catch (const std::exception& e) {
          return {{"ok", false}, {"error", e.what()}, {"completed", results.size()}, {"results", results}};
        }
      }
      return {{"ok", true}, {"results", results}};
    }
    if (!req.contains("actions")) throw DecodeError("step needs 'actions' or 'batch'");
    return step_once(req["actions"]);
  }

  json trace() const {
    if (!episode_) throw StateError("no active episode; send reset first");
    json steps = json::array();
    for (const TraceRecord& rec : episode_->trace().steps) steps.push_back(trace_record_json(rec));
    return {{"ok", true}, {"trace", steps}};
  }

  ServerOptions options_;
  std::optional<Episode> episode_;
  bool closed_ = false;
};

// Serves one session over a pair of streams until "close" or end of input.
inline void serve_stream(std::istream& in, std::ostream& out, const ServerOptions& options = {}) {
  Session session(options);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.size() > options.max_line) {
      out << json{{"ok", false}, {"error", "line too long"}}.dump() << '\n' << std::flush;
      continue;
    }
    out << session.handle_line(line) << '\n' << std::flush;
    if (session.closed()) break;
  }
}

// Accepts TCP connections on the loopback interface; every connection is an
// independent session on its own thread.
class TcpServer {
 public:
  explicit TcpServer(ServerOptions options = {}) : options_(std::move(options)) {}
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;
  ~TcpServer() { stop(); }

  // Binds and listens; port 0 picks a free one. Returns the bound port.
  int bind(int port, const std::string& host = "127.0.0.1") {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
    const int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) throw ConfigError("bad host '" + host + "'");
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 64) < 0) {
      const std::string why = std::strerror(errno);
      ::close(listen_fd_);
      listen_fd_ = -1;
      throw IoError("cannot listen on " + host + ":" + std::to_string(port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    return port_;
  }

  int port() const { return port_; }

  // Blocks until stop() is called.
  void run() {
    if (listen_fd_ < 0) throw StateError("server is not bound");
    while (!stopping_) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) {
        if (stopping_) break;
        if (errno == EINTR || errno == ECONNABORTED) continue;
        break;
      }
      std::lock_guard<std::mutex> lock(mutex_);
      reap();
      if (static_cast<int>(workers_.size()) >= options_.max_sessions) {
        send_all(fd, json{{"ok", false}, {"error", "server busy"}}.dump() + "\n");
        ::close(fd);
        continue;
      }
      auto worker = std::make_unique<Worker>();
      worker->fd = fd;
      Worker* w = worker.get();
      worker->thread = std::thread([this, w] {
        serve_socket(w->fd);
        w->done = true;
      });
      workers_.push_back(std::move(worker));
    }
  }

  void stop() {
    if (stopping_.exchange(true)) return;
    if (listen_fd_ >= 0) {
      ::shutdown(listen_fd_, SHUT_RDWR);
      ::close(listen_fd_);
      listen_fd_ = -1;
    }
    std::lock_guard<std::mutex> lock(mutex_);
    for (auto& w : workers_) ::shutdown(w->fd, SHUT_RDWR);
    for (auto& w : workers_) {
      if (w->thread.joinable()) w->thread.join();
      ::close(w->fd);
    }
    workers_.clear();
  }

  int active_sessions() {
    std::lock_guard<std::mutex> lock(mutex_);
    reap();
    return static_cast<int>(workers_.size());
  }

 private:
  struct Worker {
    int fd = -1;
    std::thread thread;
    std::atomic<bool> done{false};
  };

  static bool send_all(int fd, const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t k = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (k <= 0) {
        if (k < 0 && errno == EINTR) continue;
        return false;
      }
      sent += static_cast<std::size_t>(k);
    }
    return true;
  }

  // The socket is closed by whoever joins the worker thread.
  void serve_socket(int fd) {
    Session session(options_);
    std::string buffer;
    bool discarding = false;  // inside an over-long line
    char chunk[4096];
    for (;;) {
      const ssize_t k = ::recv(fd, chunk, sizeof chunk, 0);
      if (k < 0 && errno == EINTR) continue;
      if (k <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(k));
      std::size_t start = 0;
      for (std::size_t nl; (nl = buffer.find('\n', start)) != std::string::npos; start = nl + 1) {
        std::string line = buffer.substr(start, nl - start);
        if (discarding) {
          discarding = false;
          continue;
        }
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!send_all(fd, session.handle_line(line) + "\n") || session.closed()) {
          ::shutdown(fd, SHUT_RDWR);
          return;
        }
      }
      buffer.erase(0, start);
      if (buffer.size() > options_.max_line) {
        buffer.clear();
        if (!discarding && !send_all(fd, json{{"ok", false}, {"error", "line too long"}}.dump() + "\n")) break;
        discarding = true;
      }
    }
    ::shutdown(fd, SHUT_RDWR);
  }

  void reap() {
    for (auto it = workers_.begin(); it != workers_.end();) {
      if ((*it)->done) {
        (*it)->thread.join();
        ::close((*it)->fd);
        it = workers_.erase(it);
      } else {
        ++it;
      }
    }
  }

  ServerOptions options_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::mutex mutex_;
  std::list<std::unique_ptr<Worker>> workers_;
};

}  // namespace mapfdl
