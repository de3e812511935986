#pragma once

// Network front end: websocket channels for trainees and supervisors, plus
// plain HTTP for batch simulation and feedback. Everything that touches the
// hub runs on the io_context thread; simulation runs on a worker pool.

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "hitl/service/hub.hpp"
#include "hitl/service/runtime.hpp"

namespace hitl::service {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

struct Target {
  std::string path;
  std::map<std::string, std::string> query;
};

inline std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
               std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

inline Target parse_target(std::string_view t) {
  Target out;
  const auto q = t.find('?');
  out.path = std::string(t.substr(0, q));
  if (q == std::string_view::npos) return out;
  auto rest = t.substr(q + 1);
  while (!rest.empty()) {
    const auto amp = rest.find('&');
    const auto part = rest.substr(0, amp);
    const auto eq = part.find('=');
    if (eq == std::string_view::npos)
      out.query[percent_decode(part)] = "";
    else
      out.query[percent_decode(part.substr(0, eq))] = percent_decode(part.substr(eq + 1));
    if (amp == std::string_view::npos) break;
    rest = rest.substr(amp + 1);
  }
  return out;
}

// Session ids double as file names.
inline bool valid_session_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') return false;
  return id != "." && id != "..";
}

struct SimulateRequest {
  std::vector<std::string> utterances;
  engine::SessionConfig config;
  std::string session_id;
  std::string canned;
};

// Body is either a JSON object {"utterances": [...], "seed"?, "session_id"?,
// "canned_response"?} or a plain-text script.
inline SimulateRequest parse_simulate_body(const std::string& body, const AppConfig& cfg) {
  SimulateRequest r{{}, cfg.session, cfg.simulate.session_id, cfg.simulate.canned_response};
  r.config.seed = cfg.simulate.seed;
  const auto first = body.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && body[first] == '{') {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("malformed simulate request: ") + e.what());
    }
    r.utterances = j.at("utterances").get<std::vector<std::string>>();
    r.config.seed = j.value("seed", r.config.seed);
    r.session_id = j.value("session_id", r.session_id);
    r.canned = j.value("canned_response", r.canned);
  } else {
    r.utterances = parse_script(body);
  }
  if (!valid_session_id(r.session_id)) throw ValidationError("invalid session_id '" + r.session_id + "'");
  return r;
}

class Server;

// ---------------------------------------------------------------------------

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  enum class Role { Trainee, Supervisor };

  WsConnection(tcp::socket socket, Server& server, Role role, std::string session_id, ConnectionId id)
      : ws_(std::move(socket)), server_(server), role_(role), session_id_(std::move(session_id)), id_(id) {}

  void start(http::request<http::string_body> req);
  void send(const WireMessage& m) {
    out_.push_back(serialize(m));
    if (out_.size() == 1) write_next();
  }
  Role role() const { return role_; }
  const std::string& session_id() const { return session_id_; }
  ConnectionId id() const { return id_; }
  void close() {
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
  }

 private:
  void read_next();
  void on_read(beast::error_code ec);
  void write_next() {
    ws_.text(true);
    ws_.async_write(net::buffer(out_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->out_.pop_front();
      if (!self->out_.empty()) self->write_next();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  Server& server_;
  Role role_;
  std::string session_id_;
  ConnectionId id_;
  beast::flat_buffer buffer_;
  std::deque<std::string> out_;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, Server& server) : stream_(std::move(socket)), server_(server) {}
  void start() {
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (!ec) self->handle();
    });
  }
  void respond(http::status status, std::string content_type, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::content_type, content_type);
    res->keep_alive(false);
    res->body() = std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ec;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
    });
  }

 private:
  void handle();

  beast::tcp_stream stream_;
  Server& server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

// ---------------------------------------------------------------------------

class Server {
 public:
  Server(net::io_context& ioc, Hub& hub, AppConfig cfg)
      : ioc_(ioc), hub_(hub), cfg_(std::move(cfg)), acceptor_(ioc), timer_(ioc), pool_(1) {}

  ~Server() { pool_.join(); }

  // Binds and starts accepting. Port 0 picks a free port.
  void start() {
    try {
      const tcp::endpoint ep(net::ip::make_address(cfg_.server.host), cfg_.server.port);
      acceptor_.open(ep.protocol());
      acceptor_.set_option(net::socket_base::reuse_address(true));
      acceptor_.bind(ep);
      acceptor_.listen();
    } catch (const boost::system::system_error& e) {
      throw IoError("cannot listen on " + cfg_.server.host + ":" + std::to_string(cfg_.server.port) + ": " +
                    e.what());
    }
    accept_next();
    tick();
  }

  void stop() {
    beast::error_code ec;
    acceptor_.close(ec);
    timer_.cancel();
    for (auto& [_, w] : trainees_)
      if (auto c = w.lock()) c->close();
    for (auto& [_, w] : supervisors_)
      if (auto c = w.lock()) c->close();
  }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }
  Hub& hub() { return hub_; }
  const AppConfig& config() const { return cfg_; }

  void dispatch(const Outbox& out) {
    for (const auto& d : out) {
      switch (d.to.kind) {
        case Destination::Trainee:
          if (auto it = trainees_.find(d.to.session_id); it != trainees_.end())
            if (auto c = it->second.lock()) c->send(d.message);
          break;
        case Destination::Supervisor:
          if (auto it = supervisors_.find(d.to.connection); it != supervisors_.end())
            if (auto c = it->second.lock()) c->send(d.message);
          break;
        case Destination::AllSupervisors:
          for (auto& [_, w] : supervisors_)
            if (auto c = w.lock()) c->send(d.message);
          break;
      }
    }
  }

  // Returns false when the session already has a trainee channel.
  bool attach(const std::shared_ptr<WsConnection>& c) {
    if (c->role() == WsConnection::Role::Supervisor) {
      supervisors_[c->id()] = c;
      dispatch(hub_.on_supervisor_connect(c->id()));
      return true;
    }
    if (auto it = trainees_.find(c->session_id()); it != trainees_.end() && !it->second.expired()) return false;
    trainees_[c->session_id()] = c;
    dispatch(hub_.on_trainee_connect(c->session_id()));
    return true;
  }

  void detach(const WsConnection& c) {
    if (c.role() == WsConnection::Role::Supervisor) {
      supervisors_.erase(c.id());
      return;
    }
    trainees_.erase(c.session_id());
    if (const auto* s = hub_.find_session(c.session_id())) {
      std::error_code fs_ec;
      std::filesystem::create_directories(cfg_.paths.sessions, fs_ec);
      try {
        engine::persist_session(*s, cfg_.paths.sessions / (s->id + ".jsonl"));
      } catch (const Error&) {
      }
    }
  }

  void on_message(WsConnection& c, const std::string& text) {
    WireMessage m;
    try {
      m = parse_message(text);
    } catch (const ValidationError& e) {
      c.send(error_message(c.session_id(), "invalid_message", e.what()));
      return;
    }
    if (c.role() == WsConnection::Role::Trainee)
      dispatch(hub_.on_trainee_message(c.session_id(), m));
    else
      dispatch(hub_.on_supervisor_message(c.id(), m));
  }

  // Runs on the worker pool; the reply is posted back to the io thread.
  void simulate_async(std::shared_ptr<HttpConnection> conn, std::string body) {
    net::post(pool_, [this, conn, body = std::move(body)] {
      http::status status = http::status::ok;
      std::string type = "application/x-ndjson", out;
      try {
        const auto req = parse_simulate_body(body, cfg_);
        const auto s = simulate(hub_.runtime(), req.config, req.session_id, req.utterances, req.canned);
        out = engine::session_log_text(s);
      } catch (const std::exception& e) {
        status = http::status::bad_request;
        type = "application/json";
        out = serialize(error_message("", "invalid_request", e.what()));
      }
      net::post(ioc_, [conn, status, type, out = std::move(out)]() mutable {
        conn->respond(status, type, std::move(out));
      });
    });
  }

  ConnectionId next_connection_id() { return ++last_id_; }

 private:
  void accept_next() {
    acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpConnection>(std::move(socket), *this)->start();
      accept_next();
    });
  }

  void tick() {
    const auto period = std::clamp<std::int64_t>(static_cast<std::int64_t>(cfg_.server.escalation_timeout_s * 250), 20, 1000);
    timer_.expires_after(std::chrono::milliseconds(period));
    timer_.async_wait([this](beast::error_code ec) {
      if (ec) return;
      dispatch(hub_.expire(hub_.runtime().clock()));
      tick();
    });
  }

  net::io_context& ioc_;
  Hub& hub_;
  AppConfig cfg_;
  tcp::acceptor acceptor_;
  net::steady_timer timer_;
  net::thread_pool pool_;
  std::map<std::string, std::weak_ptr<WsConnection>> trainees_;
  std::map<ConnectionId, std::weak_ptr<WsConnection>> supervisors_;
  ConnectionId last_id_ = 0;
};

// ---------------------------------------------------------------------------

inline void WsConnection::start(http::request<http::string_body> req) {
  ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
  ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
    if (ec) return;
    if (!self->server_.attach(self)) {
      self->send(error_message(self->session_id_, "session_busy", "session already has a trainee channel"));
      return;
    }
    self->read_next();
  });
}

inline void WsConnection::read_next() {
  ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
}

inline void WsConnection::on_read(beast::error_code ec) {
  if (ec) {
    server_.detach(*this);
    return;
  }
  const auto text = beast::buffers_to_string(buffer_.data());
  buffer_.consume(buffer_.size());
  server_.on_message(*this, text);
  read_next();
}

inline void HttpConnection::handle() {
  const auto target = parse_target(std::string_view(req_.target().data(), req_.target().size()));
  const auto fail = [&](http::status st, const std::string& code, const std::string& msg) {
    respond(st, "application/json", serialize(error_message("", code, msg)));
  };

  if (websocket::is_upgrade(req_)) {
    if (target.path == "/trainee") {
      auto it = target.query.find("session");
      if (it == target.query.end() || !valid_session_id(it->second))
        return fail(http::status::bad_request, "invalid_session", "expected /trainee?session=<id>");
      std::make_shared<WsConnection>(stream_.release_socket(), server_, WsConnection::Role::Trainee, it->second,
                                     server_.next_connection_id())
          ->start(std::move(req_));
      return;
    }
    if (target.path == "/supervisor") {
      std::make_shared<WsConnection>(stream_.release_socket(), server_, WsConnection::Role::Supervisor, "",
                                     server_.next_connection_id())
          ->start(std::move(req_));
      return;
    }
    return fail(http::status::not_found, "not_found", "no channel at " + target.path);
  }

  if (target.path == "/simulate" && req_.method() == http::verb::post)
    return server_.simulate_async(shared_from_this(), req_.body());
  if (target.path == "/feedback" && req_.method() == http::verb::get) {
    auto it = target.query.find("session");
    if (it == target.query.end()) return fail(http::status::bad_request, "invalid_session", "missing session");
    const auto m = server_.hub().feedback(it->second);
    return respond(m.type == MessageType::Error ? http::status::not_found : http::status::ok, "application/json",
                   serialize(m));
  }
  if (target.path == "/health") return respond(http::status::ok, "application/json", R"({"status":"ok"})");
  fail(http::status::not_found, "not_found", "no route for " + target.path);
}

}  // namespace hitl::service
