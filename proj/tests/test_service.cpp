#include <gtest/gtest.h>

#include <chrono>
#include <fstream>
#include <future>
#include <regex>
#include <thread>

#include "hitl/service/server.hpp"
#include "shipped.hpp"

using namespace hitl;
using namespace hitl::service;

namespace {

const std::filesystem::path kConfig = testutil::source("config/default.json");

std::vector<const Delivery*> of_type(const Outbox& out, MessageType t) {
  std::vector<const Delivery*> r;
  for (const auto& d : out)
    if (d.message.type == t) r.push_back(&d);
  return r;
}

std::string error_code(const Outbox& out) {
  const auto e = of_type(out, MessageType::Error);
  return e.size() == 1 ? e[0]->message.payload["code"].get<std::string>() : "<none>";
}

Hub make_hub(std::uint64_t seed = 1) { return Hub(shipped::runtime(), shipped::session_config(seed), 120); }

// The exchange the protocol document is pinned to.
std::map<MessageType, WireMessage> reference_exchange() {
  auto hub = make_hub();
  std::map<MessageType, WireMessage> seen;
  auto keep = [&](const Outbox& out) {
    for (const auto& d : out) seen.emplace(d.message.type, d.message);
  };
  seen.emplace(MessageType::TraineeUtterance, trainee_utterance("demo", "What is the scale factor?"));
  keep(hub.on_trainee_message("demo", trainee_utterance("demo", "What is the scale factor?")));
  keep(hub.on_trainee_message("demo", trainee_utterance("demo", "What is your name?")));
  seen.emplace(MessageType::SupervisorResponse, supervisor_response("demo", "demo-1", "My name is Alex!"));
  keep(hub.on_supervisor_message(1, supervisor_response("demo", "demo-1", "My name is Alex!")));
  seen.emplace(MessageType::SessionFeedback, hub.feedback("demo"));
  keep(hub.on_supervisor_message(1, supervisor_response("demo", "demo-1", "again")));
  return seen;
}

std::vector<json> protocol_examples() {
  std::ifstream in(testutil::source("docs/protocol.md"));
  std::string line, block;
  std::vector<json> out;
  bool inside = false;
  while (std::getline(in, line)) {
    if (!inside && line == "```json") {
      inside = true;
      block.clear();
    } else if (inside && line == "```") {
      inside = false;
      out.push_back(json::parse(block));
    } else if (inside) {
      block += line + "\n";
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

TEST(Config, ShippedDefaults) {
  const auto c = load_config(kConfig, {});
  EXPECT_EQ(c.server.port, 8080);
  EXPECT_EQ(c.server.escalation_timeout_s, 120);
  EXPECT_EQ(c.session.thresholds.act, 0.55);
  EXPECT_EQ(c.session.thresholds.ood, 0.40);
  EXPECT_EQ(c.session.thresholds.rel_margin, 0.15);
  EXPECT_EQ(c.session.thresholds.repeat, 0.90);
  EXPECT_EQ(c.session.scenario.volume_right(), 1000);
  EXPECT_TRUE(c.paths.corpus.is_absolute());
  EXPECT_TRUE(std::filesystem::exists(c.paths.corpus));
  EXPECT_TRUE(std::filesystem::exists(c.paths.templates));
  EXPECT_EQ(c.categories.size(), 10u);
}

TEST(Config, EnvOverridesCoerceToExistingType) {
  const auto c = load_config(kConfig, {{"HITL_SERVER_PORT", "9000"},
                                       {"HITL_THRESHOLDS_ACT", "0.6"},
                                       {"HITL_SERVER_HOST", "0.0.0.0"},
                                       {"HITL_PERSONA_KIND", "LinearVolumeScaling"},
                                       {"HITL_SCENARIO_LEFT_DIMS", "[2,3,4]"},
                                       {"HITL_PATHS_SESSIONS", "/tmp/elsewhere"},
                                       {"OTHER_SERVER_PORT", "1"}});
  EXPECT_EQ(c.server.port, 9000);
  EXPECT_TRUE(c.raw["server"]["port"].is_number_integer());
  EXPECT_EQ(c.session.thresholds.act, 0.6);
  EXPECT_EQ(c.server.host, "0.0.0.0");
  EXPECT_EQ(c.session.persona.kind, engine::Misconception::LinearVolumeScaling);
  EXPECT_EQ(c.session.scenario.volume_left(), 24);
  EXPECT_EQ(c.paths.sessions, "/tmp/elsewhere");
}

TEST(Config, EnvOverrideErrors) {
  EXPECT_THROW(load_config(kConfig, {{"HITL_SERVER_PORT", "80x"}}), ValidationError);
  EXPECT_THROW(load_config(kConfig, {{"HITL_THRESHOLDS_ACT", "high"}}), ValidationError);
  EXPECT_THROW(load_config(kConfig, {{"HITL_SERVER_NOPE", "1"}}), ValidationError);
  EXPECT_THROW(load_config(kConfig, {{"HITL_NOSECTION_KEY", "1"}}), ValidationError);
  EXPECT_THROW(load_config(kConfig, {{"HITL_SERVER_ESCALATION_TIMEOUT_S", "0"}}), ValidationError);
  EXPECT_THROW(load_config(kConfig, {{"HITL_ACTS_DIMENSION", "1000"}}), ValidationError);
  EXPECT_THROW(load_config(kConfig, {{"HITL_THRESHOLDS_ACT", "1.5"}}), ValidationError);
}

TEST(Config, LongestSectionWinsAndBooleans) {
  json j{{"a", {{"b_c", 1}}}, {"a_b", {{"c", 2}, {"flag", false}}}};
  apply_env_overrides(j, {{"X_A_B_C", "5"}, {"X_A_B_FLAG", "true"}}, "X");
  EXPECT_EQ(j["a_b"]["c"], 5);
  EXPECT_EQ(j["a"]["b_c"], 1);
  EXPECT_EQ(j["a_b"]["flag"], true);
  EXPECT_THROW(apply_env_overrides(j, {{"X_A_B_FLAG", "maybe"}}, "X"), ValidationError);
}

TEST(Config, MissingFile) { EXPECT_THROW(load_config("/nonexistent/config.json", {}), IoError); }

// ---------------------------------------------------------------------------
// Wire format

TEST(Wire, BuildersValidateAndRoundTrip) {
  for (const auto& [type, m] : reference_exchange()) {
    EXPECT_NO_THROW(validate(m)) << to_string(type);
    EXPECT_EQ(parse_message(serialize(m)), m) << to_string(type);
  }
  EXPECT_EQ(reference_exchange().size(), kAllMessageTypes.size());
}

TEST(Wire, RejectsMalformedEnvelopes) {
  EXPECT_THROW(parse_message("{not json"), ValidationError);
  EXPECT_THROW(parse_message("[]"), ValidationError);
  EXPECT_THROW(parse_message(R"({"session_id":"s","payload":{"text":"x"}})"), ValidationError);
  EXPECT_THROW(parse_message(R"({"type":"Shout","session_id":"s","payload":{}})"), ValidationError);
  EXPECT_THROW(parse_message(R"({"type":"TraineeUtterance","payload":{"text":"x"}})"), ValidationError);
  EXPECT_THROW(parse_message(R"({"type":"TraineeUtterance","session_id":"s"})"), ValidationError);
  EXPECT_THROW(parse_message(R"({"type":"TraineeUtterance","session_id":"s","payload":[]})"), ValidationError);
}

TEST(Wire, RejectsBadPayloads) {
  const std::vector<std::string> bad{
      R"({"type":"TraineeUtterance","session_id":"s","payload":{"text":3}})",
      R"({"type":"AgentResponse","session_id":"s","payload":{"text":"x","handler":"Robot","turn_index":1}})",
      R"({"type":"AgentResponse","session_id":"s","payload":{"text":"x","handler":"AI","turn_index":-1}})",
      R"({"type":"SupervisorResponse","session_id":"s","payload":{"ticket_id":"t","text":"x","corrected_act":"Nonsense"}})",
      R"({"type":"SupervisorResponse","session_id":"s","payload":{"ticket_id":"t","text":"x"}})",
      R"({"type":"StateSnapshot","session_id":"s","payload":{"scenario":{},"status":"busy","pending_ticket":null,"turns":0}})",
      R"({"type":"SessionFeedback","session_id":"s","payload":{"report":{}}})",
      R"({"type":"Error","session_id":"s","payload":{"code":"x"}})",
  };
  for (const auto& b : bad) EXPECT_THROW(parse_message(b), ValidationError) << b;
  auto esc = to_json(reference_exchange().at(MessageType::EscalationRequest));
  esc["payload"]["ticket"]["triggers"] = {"Boredom"};
  EXPECT_THROW(message_from_json(esc), ValidationError);
  EXPECT_NO_THROW(parse_message(
      R"({"type":"SupervisorResponse","session_id":"s","payload":{"ticket_id":"t","text":"x","corrected_act":"Probing"}})"));
}

TEST(Wire, ProtocolDocumentExamplesArePinned) {
  const auto examples = protocol_examples();
  ASSERT_EQ(examples.size(), kAllMessageTypes.size());
  const auto reference = reference_exchange();
  std::set<MessageType> covered;
  for (const auto& j : examples) {
    const auto m = message_from_json(j);
    EXPECT_TRUE(covered.insert(m.type).second) << "duplicate example for " << to_string(m.type);
    EXPECT_EQ(to_json(m), to_json(reference.at(m.type))) << to_string(m.type);
  }
}

// ---------------------------------------------------------------------------
// Hub

TEST(Hub, ConnectSendsIdleSnapshot) {
  auto hub = make_hub();
  const auto out = hub.on_trainee_connect("a");
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].message.type, MessageType::StateSnapshot);
  EXPECT_EQ(out[0].message.payload["status"], "idle");
  EXPECT_EQ(out[0].message.payload["turns"], 0);
}

TEST(Hub, AiAnswerGoesToTraineeOnly) {
  auto hub = make_hub();
  const auto out = hub.on_trainee_message("a", trainee_utterance("", "What is the volume of the right box?"));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].to.kind, Destination::Trainee);
  EXPECT_EQ(out[0].message.type, MessageType::AgentResponse);
  EXPECT_EQ(out[0].message.payload["handler"], "AI");
  EXPECT_EQ(out[0].message.payload["turn_index"], 1);
  EXPECT_EQ(hub.queue().size(), 0u);
}

TEST(Hub, TraineeChannelErrors) {
  auto hub = make_hub();
  EXPECT_EQ(error_code(hub.on_trainee_message("a", supervisor_response("a", "a-1", "x"))), "unexpected_type");
  EXPECT_EQ(error_code(hub.on_trainee_message("a", trainee_utterance("b", "Hi"))), "wrong_session");
}

TEST(Hub, EscalationRoundTrip) {
  auto hub = make_hub();
  const auto esc = hub.on_trainee_message("a", trainee_utterance("a", "Have you seen the recent Batman movie?"));
  const auto req = of_type(esc, MessageType::EscalationRequest);
  ASSERT_EQ(req.size(), 1u);
  EXPECT_EQ(req[0]->to.kind, Destination::AllSupervisors);
  const auto ticket = req[0]->message.payload["ticket"]["id"].get<std::string>();
  const auto snap = of_type(esc, MessageType::StateSnapshot);
  ASSERT_EQ(snap.size(), 1u);
  EXPECT_EQ(snap[0]->message.payload["status"], "thinking");
  EXPECT_EQ(snap[0]->message.payload["pending_ticket"], ticket);
  EXPECT_EQ(hub.queue().size(), 1u);

  EXPECT_EQ(error_code(hub.on_trainee_message("a", trainee_utterance("a", "Hello?"))), "busy");

  const auto late = hub.on_supervisor_connect(7);
  ASSERT_EQ(late.size(), 1u);
  EXPECT_EQ(late[0].to.connection, 7u);
  EXPECT_EQ(late[0].message.payload["ticket"]["id"], ticket);

  const auto done = hub.on_supervisor_message(7, supervisor_response("a", ticket, "I have not, I was studying!"));
  const auto reply = of_type(done, MessageType::AgentResponse);
  ASSERT_EQ(reply.size(), 1u);
  EXPECT_EQ(reply[0]->to.session_id, "a");
  EXPECT_EQ(reply[0]->message.payload["handler"], "Supervisor");
  EXPECT_EQ(reply[0]->message.payload["text"], "I have not, I was studying!");
  EXPECT_EQ(of_type(done, MessageType::StateSnapshot).size(), 2u);
  EXPECT_EQ(hub.queue().size(), 0u);
  EXPECT_TRUE(hub.on_supervisor_connect(8).empty());
  EXPECT_EQ(hub.find_session("a")->transcript.size(), 2u);
}

TEST(Hub, SupervisorChannelErrors) {
  auto hub = make_hub();
  const auto esc = hub.on_trainee_message("a", trainee_utterance("a", "What is your name?"));
  const auto ticket = of_type(esc, MessageType::EscalationRequest).at(0)->message.payload["ticket"]["id"].get<std::string>();
  EXPECT_EQ(error_code(hub.on_supervisor_message(1, trainee_utterance("a", "x"))), "unexpected_type");
  EXPECT_EQ(error_code(hub.on_supervisor_message(1, supervisor_response("zz", ticket, "x"))), "unknown_session");
  EXPECT_EQ(error_code(hub.on_supervisor_message(1, supervisor_response("a", "a-9", "x"))), "unknown_ticket");
  EXPECT_EQ(error_code(hub.on_supervisor_message(1, supervisor_response("a", ticket, "  "))), "invalid");
  EXPECT_EQ(hub.queue().size(), 1u);
  EXPECT_EQ(error_code(hub.on_supervisor_message(1, supervisor_response("a", ticket, "Alex"))), "<none>");
  EXPECT_EQ(error_code(hub.on_supervisor_message(2, supervisor_response("a", ticket, "Sam"))), "already_resolved");
  EXPECT_EQ(hub.find_session("a")->transcript.back().text, "Alex");
}

TEST(Hub, CorrectedActReachesSession) {
  auto hub = make_hub();
  const auto esc = hub.on_trainee_message("a", trainee_utterance("a", "What is your name?"));
  const auto ticket = of_type(esc, MessageType::EscalationRequest).at(0)->message.payload["ticket"]["id"].get<std::string>();
  hub.on_supervisor_message(1, supervisor_response("a", ticket, "Alex", DialogueAct::Other));
  EXPECT_EQ(hub.find_session("a")->tickets[0].corrected_act, DialogueAct::Other);
}

TEST(Hub, ExpiryAnswersWithApology) {
  auto hub = make_hub();
  hub.on_trainee_message("a", trainee_utterance("a", "What is your name?"));
  const auto deadline = hub.queue().snapshot().at(0).deadline_ms;
  EXPECT_TRUE(hub.expire(deadline - 1).empty());
  const auto out = hub.expire(deadline);
  const auto reply = of_type(out, MessageType::AgentResponse);
  ASSERT_EQ(reply.size(), 1u);
  EXPECT_EQ(reply[0]->message.payload["text"], hub.runtime().templates->timeout.front());
  EXPECT_EQ(reply[0]->message.payload["handler"], "AI");
  EXPECT_TRUE(hub.find_session("a")->tickets[0].timed_out);
  EXPECT_EQ(error_code(hub.on_supervisor_message(1, supervisor_response("a", "a-1", "late"))), "already_resolved");
  EXPECT_EQ(of_type(hub.on_trainee_message("a", trainee_utterance("a", "Hi")), MessageType::AgentResponse).size(), 1u);
}

TEST(Hub, FeedbackAndSessionSeeds) {
  auto hub = make_hub();
  EXPECT_EQ(hub.feedback("nobody").payload["code"], "unknown_session");
  hub.on_trainee_message("a", trainee_utterance("a", "How did you find the volume?"));
  const auto f = hub.feedback("a");
  EXPECT_EQ(f.type, MessageType::SessionFeedback);
  EXPECT_EQ(f.payload["report"]["total"], 1);
  EXPECT_NE(hub.session("a").rng, hub.session("b").rng);
  auto other = make_hub();
  EXPECT_EQ(other.session("b").rng, hub.session("b").rng);
}

TEST(EscalationQueue, OnlyOneTakerWins) {
  EscalationQueue q;
  for (int i = 0; i < 100; ++i) q.push({"s", "t" + std::to_string(i), i});
  std::atomic<int> wins{0};
  std::vector<std::thread> threads;
  for (int k = 0; k < 8; ++k)
    threads.emplace_back([&] {
      for (int i = 0; i < 100; ++i)
        if (q.take("t" + std::to_string(i))) ++wins;
    });
  for (auto& t : threads) t.join();
  EXPECT_EQ(wins, 100);
  EXPECT_EQ(q.size(), 0u);
}

TEST(EscalationQueue, ExpiryKeepsOrder) {
  EscalationQueue q;
  q.push({"s", "a", 30});
  q.push({"s", "b", 10});
  q.push({"s", "c", 20});
  const auto gone = q.take_expired(20);
  ASSERT_EQ(gone.size(), 2u);
  EXPECT_EQ(gone[0].ticket_id, "b");
  EXPECT_EQ(gone[1].ticket_id, "c");
  EXPECT_EQ(q.snapshot().at(0).ticket_id, "a");
}

// ---------------------------------------------------------------------------
// Request parsing

TEST(Server, TargetsAndSessionIds) {
  const auto t = parse_target("/trainee?session=abc%2D1&x=a+b&flag");
  EXPECT_EQ(t.path, "/trainee");
  EXPECT_EQ(t.query.at("session"), "abc-1");
  EXPECT_EQ(t.query.at("x"), "a b");
  EXPECT_EQ(t.query.at("flag"), "");
  EXPECT_TRUE(parse_target("/health").query.empty());
  EXPECT_TRUE(valid_session_id("run_2.b-1"));
  for (const char* bad : {"", "..", "a/b", "a b"}) EXPECT_FALSE(valid_session_id(bad)) << bad;
  EXPECT_FALSE(valid_session_id(std::string(65, 'a')));
}

TEST(Server, SimulateBodies) {
  const auto c = load_config(kConfig, {});
  const auto script = parse_simulate_body("# warmup\nHi\n\n  What is the volume?\r\n", c);
  EXPECT_EQ(script.utterances, (std::vector<std::string>{"Hi", "What is the volume?"}));
  EXPECT_EQ(script.config.seed, c.simulate.seed);
  EXPECT_EQ(script.session_id, "sim");
  const auto j = parse_simulate_body(R"({"utterances":["Hi"],"seed":5,"session_id":"x1","canned_response":"ok"})", c);
  EXPECT_EQ(j.config.seed, 5u);
  EXPECT_EQ(j.session_id, "x1");
  EXPECT_EQ(j.canned, "ok");
  EXPECT_THROW(parse_simulate_body(R"({"utterances":["Hi"],"session_id":"../x"})", c), ValidationError);
  EXPECT_THROW(parse_simulate_body("{broken", c), ValidationError);
}

// ---------------------------------------------------------------------------
// Live server

namespace {

namespace ws = boost::beast::websocket;

class LiveServer : public ::testing::Test {
 protected:
  void SetUp() override {
    auto cfg = load_config(kConfig, {{"HITL_SERVER_PORT", "0"},
                                     {"HITL_SERVER_ESCALATION_TIMEOUT_S", "0.5"},
                                     {"HITL_PATHS_SESSIONS", (tmp / "sessions").string()},
                                     {"HITL_PATHS_CAPTURE", (tmp / "capture.jsonl").string()}});
    auto rt = make_runtime(cfg, shipped::models());
    hub = std::make_unique<Hub>(rt, cfg.session, cfg.server.escalation_timeout_s);
    server = std::make_unique<Server>(ioc, *hub, cfg);
    server->start();
    port = server->port();
    io_thread = std::thread([this] { ioc.run(); });
  }

  void TearDown() override {
    if (!io_thread.joinable()) return;
    net::post(ioc, [this] { server->stop(); });
    ioc.stop();
    io_thread.join();
  }

  struct Client {
    net::io_context ioc;
    ws::stream<tcp::socket> stream{ioc};

    Client(unsigned short port, const std::string& target) {
      tcp::resolver r(ioc);
      net::connect(stream.next_layer(), r.resolve("127.0.0.1", std::to_string(port)));
      stream.handshake("127.0.0.1", target);
    }

    void send(const std::string& text) { stream.write(net::buffer(text)); }
    void send(const WireMessage& m) { send(serialize(m)); }

    // Fails the test instead of hanging when nothing arrives.
    WireMessage receive(std::chrono::milliseconds limit = std::chrono::seconds(10)) {
      auto f = std::async(std::launch::async, [this] {
        beast::flat_buffer b;
        stream.read(b);
        return beast::buffers_to_string(b.data());
      });
      if (f.wait_for(limit) != std::future_status::ready) {
        beast::error_code ec;
        stream.next_layer().shutdown(tcp::socket::shutdown_both, ec);
        f.wait();
        throw std::runtime_error("no message within the time limit");
      }
      return parse_message(f.get());
    }
  };

  std::pair<unsigned, std::string> http_request(http::verb verb, const std::string& target, const std::string& body = "") {
    net::io_context c;
    beast::tcp_stream stream(c);
    tcp::resolver r(c);
    stream.connect(r.resolve("127.0.0.1", std::to_string(port)));
    http::request<http::string_body> req{verb, target, 11};
    req.set(http::field::host, "127.0.0.1");
    req.body() = body;
    req.prepare_payload();
    http::write(stream, req);
    beast::flat_buffer b;
    http::response<http::string_body> res;
    http::read(stream, b, res);
    return {res.result_int(), res.body()};
  }

  testutil::TempDir tmp;
  net::io_context ioc;
  std::unique_ptr<Hub> hub;
  std::unique_ptr<Server> server;
  std::thread io_thread;
  unsigned short port = 0;
};

}  // namespace

TEST_F(LiveServer, EscalationOverWebsockets) {
  Client trainee(port, "/trainee?session=live");
  EXPECT_EQ(trainee.receive().payload["status"], "idle");
  Client supervisor(port, "/supervisor");

  trainee.send(trainee_utterance("live", "What is the scale factor?"));
  const auto ai = trainee.receive();
  EXPECT_EQ(ai.type, MessageType::AgentResponse);
  EXPECT_EQ(ai.payload["text"], "I think the scale factor is 2.");

  trainee.send(trainee_utterance("live", "Have you seen the recent Batman movie?"));
  const auto req = supervisor.receive();
  ASSERT_EQ(req.type, MessageType::EscalationRequest);
  EXPECT_EQ(req.session_id, "live");
  EXPECT_EQ(req.payload["ticket"]["context"].size(), 3u);
  EXPECT_EQ(trainee.receive().payload["status"], "thinking");

  trainee.send(trainee_utterance("live", "Hello?"));
  EXPECT_EQ(trainee.receive().payload["code"], "busy");

  supervisor.send(supervisor_response("live", req.payload["ticket"]["id"], "Not yet!", DialogueAct::Other));
  const auto answer = trainee.receive();
  EXPECT_EQ(answer.payload["handler"], "Supervisor");
  EXPECT_EQ(answer.payload["text"], "Not yet!");
  EXPECT_EQ(trainee.receive().payload["status"], "idle");
  EXPECT_EQ(supervisor.receive().type, MessageType::StateSnapshot);

  trainee.send(std::string("{garbage"));
  EXPECT_EQ(trainee.receive().payload["code"], "invalid_message");

  Client second(port, "/trainee?session=live");
  EXPECT_EQ(second.receive().payload["code"], "session_busy");

  trainee.stream.close(ws::close_code::normal);
  const auto log = tmp / "sessions" / "live.jsonl";
  for (int i = 0; i < 200 && !std::filesystem::exists(log); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  ASSERT_TRUE(std::filesystem::exists(log));
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  const auto s = engine::load_session(log);
  EXPECT_EQ(s.transcript.size(), 4u);
  EXPECT_EQ(io::read_jsonl(tmp / "capture.jsonl").size(), 1u);
}

TEST_F(LiveServer, UnansweredTicketTimesOut) {
  Client trainee(port, "/trainee?session=slow");
  trainee.receive();
  const auto start = std::chrono::steady_clock::now();
  trainee.send(trainee_utterance("slow", "What is your name?"));
  EXPECT_EQ(trainee.receive().payload["status"], "thinking");
  const auto apology = trainee.receive(std::chrono::seconds(5));
  const auto waited = std::chrono::steady_clock::now() - start;
  EXPECT_EQ(apology.type, MessageType::AgentResponse);
  EXPECT_EQ(apology.payload["text"], hub->runtime().templates->timeout.front());
  EXPECT_GE(waited, std::chrono::milliseconds(450));
  EXPECT_EQ(trainee.receive().payload["status"], "idle");
}

TEST_F(LiveServer, HttpRoutes) {
  EXPECT_EQ(http_request(http::verb::get, "/health"), (std::pair<unsigned, std::string>{200, R"({"status":"ok"})"}));
  const auto [code, body] = http_request(http::verb::post, "/simulate", "Hi\nWhat is your name?\nWhat is the scale factor?\n");
  ASSERT_EQ(code, 200u) << body;
  const auto s = engine::parse_session_log(body);
  EXPECT_EQ(s.transcript.size(), 6u);
  EXPECT_EQ(s.transcript[3].text, "Hmm, let me think about that.");
  EXPECT_EQ(http_request(http::verb::post, "/simulate", "Hi\n").second,
            http_request(http::verb::post, "/simulate", "Hi\n").second);
  EXPECT_EQ(http_request(http::verb::post, "/simulate", "{bad").first, 400u);
  EXPECT_EQ(http_request(http::verb::get, "/feedback?session=ghost").first, 404u);
  EXPECT_EQ(http_request(http::verb::get, "/nowhere").first, 404u);

  Client trainee(port, "/trainee?session=fb");
  trainee.receive();
  trainee.send(trainee_utterance("fb", "How did you get the volume?"));
  trainee.receive();
  const auto fb = http_request(http::verb::get, "/feedback?session=fb");
  ASSERT_EQ(fb.first, 200u);
  EXPECT_EQ(parse_message(fb.second).payload["report"]["total"], 1);
}
