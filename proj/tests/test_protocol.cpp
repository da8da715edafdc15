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

#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "mapfdl/protocol.hpp"

namespace mapfdl {
namespace {

using nlohmann::json;

json ask(Session& s, const json& request) { return json::parse(s.handle_line(request.dump())); }

const json kResetExample = {{"cmd", "reset"},     {"layout", "rm2.1"}, {"variant", "block"},
                            {"n_agents", 4},      {"seed", 42},        {"obs_mode", "local"},
                            {"sensor_range", 2}};

json all_stay(int n) {
  json a = json::object();
  for (int i = 0; i < n; ++i) a[std::to_string(i)] = 0;
  return a;
}

TEST(Protocol, InfoAdvertisesVersion) {
  Session s;
  const json r = ask(s, {{"cmd", "info"}});
  ASSERT_TRUE(r["ok"].get<bool>());
  EXPECT_EQ(r["protocol_version"], 1);
  EXPECT_FALSE(r["layouts"].empty());
  EXPECT_EQ(r["obs_modes"], json({"cte", "local"}));
}

TEST(Protocol, ResetSchemaLocal) {
  Session s;
  const json r = ask(s, kResetExample);
  ASSERT_TRUE(r["ok"].get<bool>()) << r.dump();
  EXPECT_EQ(r["t"], 0);
  EXPECT_EQ(r["n_agents"], 4);
  ASSERT_EQ(r["obs"].size(), 4u);
  for (int i = 0; i < 4; ++i) {
    const json& o = r["obs"][std::to_string(i)];
    ASSERT_EQ(o["grid"].size(), 5u);
    for (const json& row : o["grid"]) {
      ASSERT_EQ(row.size(), 5u);
      for (const json& v : row) {
        EXPECT_GE(v.get<int>(), 0);
        EXPECT_LE(v.get<int>(), 4);
      }
    }
    // agents do not see themselves; the centre shows what lies beneath
    EXPECT_NE(o["grid"][2][2], 2);
    EXPECT_NE(o["grid"][2][2], 1);
    EXPECT_EQ(o["pos"], r["tasks"][static_cast<std::size_t>(i)]["start"]);
    EXPECT_EQ(o["goal"], r["tasks"][static_cast<std::size_t>(i)]["goal"]);
  }
}

TEST(Protocol, ResetSchemaCte) {
  Session s;
  json req = kResetExample;
  req["obs_mode"] = "cte";
  const json r = ask(s, req);
  ASSERT_TRUE(r["ok"].get<bool>()) << r.dump();
  EXPECT_EQ(r["obs"]["grid"].size(), static_cast<std::size_t>(r["grid"][0].get<int>()));
  EXPECT_EQ(r["obs"]["positions"].size(), 4u);
}

TEST(Protocol, StepErrors) {
  Session s;
  json r = ask(s, {{"cmd", "step"}, {"actions", all_stay(4)}});
  EXPECT_FALSE(r["ok"].get<bool>());
  EXPECT_EQ(r["error"], "no active episode; send reset first");

  ASSERT_TRUE(ask(s, kResetExample)["ok"].get<bool>());
  r = ask(s, {{"cmd", "step"}, {"actions", {{"0", 0}, {"1", 0}, {"3", 0}}}});
  EXPECT_FALSE(r["ok"].get<bool>());
  EXPECT_EQ(r["error"], "missing action for agent 2");

  json bad = all_stay(4);
  bad["1"] = 7;
  r = ask(s, {{"cmd", "step"}, {"actions", bad}});
  EXPECT_FALSE(r["ok"].get<bool>());
  EXPECT_NE(r["error"].get<std::string>().find("action code 7"), std::string::npos);

  bad = all_stay(4);
  bad["9"] = 0;
  EXPECT_FALSE(ask(s, {{"cmd", "step"}, {"actions", bad}})["ok"].get<bool>());

  // failed requests leave the episode untouched
  EXPECT_EQ(s.episode()->state().t, 0);
}

TEST(Protocol, EpisodeFinished) {
  Session s;
  json req = kResetExample;
  req["t_max"] = 2;
  ASSERT_TRUE(ask(s, req)["ok"].get<bool>());
  EXPECT_TRUE(ask(s, {{"cmd", "step"}, {"actions", all_stay(4)}})["ok"].get<bool>());
  const json last = ask(s, {{"cmd", "step"}, {"actions", all_stay(4)}});
  EXPECT_TRUE(last["truncated"].get<bool>());
  const json r = ask(s, {{"cmd", "step"}, {"actions", all_stay(4)}});
  EXPECT_FALSE(r["ok"].get<bool>());
  EXPECT_EQ(r["error"], "episode finished");
}

TEST(Protocol, MalformedRequests) {
  Session s;
  for (const char* line : {"", "{", "[]", "42", "{\"cmd\":3}", "{\"cmd\":\"fly\"}", "{\"cmd\":\"reset\"}",
                           "{\"cmd\":\"reset\",\"layout\":\"nope\"}",
                           "{\"cmd\":\"reset\",\"layout\":\"rm1.1\",\"seed\":\"x\"}",
                           "{\"cmd\":\"reset\",\"layout\":\"rm1.1\",\"obs_mode\":\"radar\"}",
                           "{\"cmd\":\"step\",\"batch\":3}", "\xff\xfe"}) {
    const json r = json::parse(s.handle_line(line));
    EXPECT_FALSE(r["ok"].get<bool>()) << line;
    EXPECT_TRUE(r["error"].is_string()) << line;
  }
  EXPECT_FALSE(s.closed());
}

TEST(Protocol, ObservationRoundTrip) {
  Session s;
  for (const char* mode : {"local", "cte"}) {
    json req = kResetExample;
    req["obs_mode"] = mode;
    ask(s, req);
    for (const Observation& o : s.episode()->observe_all()) {
      const json encoded = encode_observation(o);
      const Observation back = decode_observation(encoded);
      EXPECT_EQ(encode_observation(back), encoded);
      EXPECT_EQ(back.cells, o.cells);
    }
  }
  EXPECT_THROW(decode_observation(json{{"grid", {{0, 5}}}, {"pos", {0, 0}}, {"goal", {0, 0}}}), DecodeError);
  EXPECT_THROW(decode_observation(json{{"grid", {{0, 1}, {0}}}, {"pos", {0, 0}}, {"goal", {0, 0}}}), DecodeError);
  EXPECT_THROW(decode_position(json{1}), DecodeError);
}

TEST(Protocol, ActionsRoundTrip) {
  const JointAction a = {Action::kStay, Action::kUp, Action::kRight, Action::kDown, Action::kLeft};
  EXPECT_EQ(decode_actions(encode_actions(a), 5), a);
  EXPECT_THROW(decode_actions(json::array({0}), 1), DecodeError);
  EXPECT_THROW(decode_actions(json{{"0", "up"}}, 1), DecodeError);
}

TEST(Protocol, BatchStep) {
  Session a, b;
  ask(a, kResetExample);
  ask(b, kResetExample);
  std::mt19937_64 rng(3);
  json batch = json::array();
  for (int k = 0; k < 6; ++k) {
    json act = json::object();
    for (int i = 0; i < 4; ++i) act[std::to_string(i)] = static_cast<int>(rng() % 5);
    batch.push_back(act);
  }
  const json r = ask(a, {{"cmd", "step"}, {"batch", batch}});
  ASSERT_TRUE(r["ok"].get<bool>());
  ASSERT_EQ(r["results"].size(), 6u);
  for (std::size_t k = 0; k < batch.size(); ++k) EXPECT_EQ(ask(b, {{"cmd", "step"}, {"actions", batch[k]}}), r["results"][k]);

  batch = json::array({all_stay(4), json{{"0", 0}}});
  const json partial = ask(a, {{"cmd", "step"}, {"batch", batch}});
  EXPECT_FALSE(partial["ok"].get<bool>());
  EXPECT_EQ(partial["completed"], 1);
}

TEST(Protocol, ActionMaskField) {
  Session s;
  json req = kResetExample;
  req["action_mask"] = true;
  const json r = ask(s, req);
  ASSERT_EQ(r["action_mask"].size(), 4u);
  for (const auto& [key, m] : r["action_mask"].items()) {
    ASSERT_EQ(m.size(), 5u) << key;
    EXPECT_TRUE(m[0].get<bool>());
  }
}

// A protocol-driven episode must match an in-process one step for step.
TEST(Protocol, TraceMatchesInProcessEpisode) {
  for (const char* model : {"strict", "standard"}) {
    Session s;
    json req = kResetExample;
    req["collision"] = model;
    req["t_max"] = 60;
    const json reset = ask(s, req);
    ASSERT_TRUE(reset["ok"].get<bool>());

    EpisodeConfig cfg;
    cfg.grid = resolve_layout("rm2.1", "block").grid;
    cfg.tasks = tasks_from_json(reset["tasks"]);
    cfg.t_max = 60;
    cfg.collision = collision_model_from_string(model);
    Episode ep(cfg);
    ep.reset(42);

    std::mt19937_64 rng(11);
    while (!ep.state().finished()) {
      JointAction joint;
      for (int i = 0; i < 4; ++i) joint.push_back(action_from_code(static_cast<int>(rng() % 5)));
      const StepResult local = ep.step(joint);
      const json remote = ask(s, {{"cmd", "step"}, {"actions", encode_actions(joint)}});
      ASSERT_TRUE(remote["ok"].get<bool>());
      for (int i = 0; i < 4; ++i)
        EXPECT_EQ(remote["rewards"][std::to_string(i)].get<double>(), local.rewards[static_cast<std::size_t>(i)]);
    }
    json expected = json::array();
    for (const TraceRecord& rec : ep.trace().steps) expected.push_back(trace_record_json(rec));
    const json remote = ask(s, {{"cmd", "trace"}});
    EXPECT_EQ(remote["trace"].dump(), expected.dump()) << model;
  }
}

TEST(Protocol, SeededResetIsDeterministic) {
  Session a, b;
  json req = {{"cmd", "reset"}, {"layout", "rm3.1"}, {"n_agents", 6}, {"seed", 7}};
  const json first = ask(a, req);
  ASSERT_TRUE(first["ok"].get<bool>()) << first.dump();
  EXPECT_EQ(first, ask(b, req));
}

TEST(Protocol, StreamServer) {
  std::stringstream in, out;
  in << R"({"cmd":"info"})" << "\n\n"
     << kResetExample.dump() << "\r\n"
     << R"({"cmd":"step","actions":{"0":0,"1":0,"2":0,"3":0}})" << "\n"
     << std::string(64, 'x') << "\n"
     << R"({"cmd":"close"})" << "\n"
     << R"({"cmd":"info"})" << "\n";
  ServerOptions opts;
  opts.max_line = 32 << 10;
  serve_stream(in, out, opts);
  std::vector<json> lines;
  for (std::string l; std::getline(out, l);) lines.push_back(json::parse(l));
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_TRUE(lines[0]["ok"].get<bool>());
  EXPECT_TRUE(lines[1]["ok"].get<bool>());
  EXPECT_EQ(lines[2]["t"], 1);
  EXPECT_FALSE(lines[3]["ok"].get<bool>());
  EXPECT_TRUE(lines[4]["ok"].get<bool>());

  std::stringstream in2, out2;
  in2 << std::string(100, '{') << "\n";
  opts.max_line = 50;
  serve_stream(in2, out2, opts);
  EXPECT_EQ(json::parse(out2.str())["error"], "line too long");
}

class Client {
 public:
  explicit Client(int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    const int yes = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    ok_ = ::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0;
  }
  ~Client() { ::close(fd_); }
  bool ok() const { return ok_; }

  void send(const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t k = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (k <= 0) return;
      sent += static_cast<std::size_t>(k);
    }
  }

  // Empty string on EOF.
  std::string read_line() {
    for (;;) {
      const auto nl = buf_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        return line;
      }
      char chunk[4096];
      const ssize_t k = ::recv(fd_, chunk, sizeof chunk, 0);
      if (k <= 0) return {};
      buf_.append(chunk, static_cast<std::size_t>(k));
    }
  }

  json call(const json& req) {
    send(req.dump() + "\n");
    return json::parse(read_line());
  }

 private:
  int fd_ = -1;
  bool ok_ = false;
  std::string buf_;
};

std::string garbage_line(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "{", "}", "[", "]", "\"cmd\"", ":", ",", "\"step\"", "\"reset\"", "\"actions\"", "null", "true", "-1",
      "1e999", "\"layout\"", "\"rm9\"", "\"\\u0000\"", "\xc3\x28", "\t", "\"batch\"", "7", "{\"0\":9}"};
  std::string s;
  const int k = static_cast<int>(rng() % 12);
  for (int i = 0; i < k; ++i) s += pieces[rng() % pieces.size()];
  for (char& c : s)
    if (c == '\n') c = ' ';
  return s;
}

TEST(Protocol, TcpFuzzDoesNotDisturbOtherSessions) {
  ServerOptions opts;
  opts.max_line = 4096;
  TcpServer server(opts);
  const int port = server.bind(0);
  std::thread runner([&] { server.run(); });

  Client good(port);
  ASSERT_TRUE(good.ok());
  const json reset = good.call(kResetExample);
  ASSERT_TRUE(reset["ok"].get<bool>()) << reset.dump();

  std::thread fuzzer([port] {
    Client bad(port);
    std::mt19937_64 rng(99);
    for (int i = 0; i < 10000; ++i) {
      const std::string line = garbage_line(rng);
      bad.send(line + "\n");
      const std::string reply = line.empty() ? "" : bad.read_line();
      if (!reply.empty()) {
        const json r = json::parse(reply);
        if (!r.contains("ok")) ADD_FAILURE() << "reply without ok: " << reply;
      }
    }
    bad.send(std::string(10000, 'a') + "\n");
    const json r = json::parse(bad.read_line());
    EXPECT_EQ(r["error"], "line too long");
    EXPECT_TRUE(bad.call({{"cmd", "info"}})["ok"].get<bool>());
  });

  Session mirror;
  ask(mirror, kResetExample);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 80; ++k) {
    json act = json::object();
    for (int i = 0; i < 4; ++i) act[std::to_string(i)] = static_cast<int>(rng() % 5);
    const json remote = good.call({{"cmd", "step"}, {"actions", act}});
    const json local = ask(mirror, {{"cmd", "step"}, {"actions", act}});
    ASSERT_EQ(remote, local);
    if (remote.value("terminated", false) || remote.value("truncated", false)) break;
  }
  fuzzer.join();
  EXPECT_TRUE(good.call({{"cmd", "close"}})["ok"].get<bool>());
  server.stop();
  runner.join();
}

TEST(Protocol, TcpBusyWhenFull) {
  ServerOptions opts;
  opts.max_sessions = 1;
  TcpServer server(opts);
  const int port = server.bind(0);
  std::thread runner([&] { server.run(); });
  Client first(port);
  ASSERT_TRUE(first.call({{"cmd", "info"}})["ok"].get<bool>());
  Client second(port);
  EXPECT_EQ(json::parse(second.read_line())["error"], "server busy");
  server.stop();
  runner.join();
}

}  // namespace
}  // namespace mapfdl
