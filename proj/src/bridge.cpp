#include "mixroute/bridge.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <json.hpp>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace mixroute {

namespace {

using nlohmann::json;

json error(const std::string& code, const std::string& detail) { return {{"error", code}, {"detail", detail}}; }

std::vector<double> to_std(const Vector<double>& v) { return {v.data(), v.data() + v.size()}; }

constexpr std::size_t max_line = 1 << 20;

}  // namespace

std::string BridgeSession::handle(const std::string& line) {
  json reply;
  try {
    if (closed_) return error("closed", "session already closed").dump();
    json msg;
    try {
      msg = json::parse(line);
    } catch (const json::parse_error& e) {
      return error("parse_error", e.what()).dump();
    }
    if (!msg.is_object() || !msg.contains("cmd") || !msg["cmd"].is_string())
      return error("bad_request", "expected an object with a string \"cmd\"").dump();
    const std::string cmd = msg["cmd"].get<std::string>();

    if (cmd == "spec") {
      reply = {{"obs_len", env_.observation_size()},
               {"action_len", env_.action_size()},
               {"episode_len", env_.episode_length()}};
    } else if (cmd == "reset") {
      std::optional<std::uint64_t> seed;
      if (msg.contains("seed") && !msg["seed"].is_null()) {
        if (!msg["seed"].is_number_unsigned()) return error("bad_request", "seed must be a nonnegative integer").dump();
        seed = msg["seed"].get<std::uint64_t>();
      }
      reply = {{"obs", to_std(env_.reset(seed))}};
    } else if (cmd == "step") {
      if (!env_.started()) return error("not_reset", "send reset before step").dump();
      if (env_.done()) return error("episode_done", "episode is over; send reset").dump();
      if (!msg.contains("action") || !msg["action"].is_array())
        return error("invalid_action", "action must be an array of numbers").dump();
      const json& a = msg["action"];
      if (a.size() != std::size_t(env_.action_size()))
        return error("invalid_action", "action needs " + std::to_string(env_.action_size()) + " entries").dump();
      Vector<double> mu(env_.action_size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) return error("invalid_action", "action entries must be numbers").dump();
        mu(Eigen::Index(i)) = a[i].get<double>();
      }
      StepResult r;
      try {
        r = env_.step(mu);
      } catch (const std::invalid_argument& e) {
        return error("invalid_action", e.what()).dump();
      }
      reply = {{"obs", to_std(r.observation)},     {"cost", r.cost},
               {"proxy_cost", r.proxy_cost},       {"training_cost", r.training_cost},
               {"done", r.done},                   {"latencies", to_std(r.latencies)}};
    } else if (cmd == "close") {
      closed_ = true;
      reply = {{"ok", true}};
    } else {
      return error("unknown_command", "unknown cmd '" + cmd + "'").dump();
    }
  } catch (const std::exception& e) {
    return error("internal_error", e.what()).dump();
  }
  return reply.dump();
}

std::size_t serve_stream(const Scenario& scenario, std::istream& in, std::ostream& out) {
  BridgeSession session(scenario);
  std::size_t errors = 0;
  std::string line;
  while (!session.closed() && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string reply = session.handle(line);
    if (json::parse(reply).contains("error")) ++errors;
    out << reply << '\n' << std::flush;
  }
  return errors;
}

TcpBridgeServer::~TcpBridgeServer() { stop(); }

void TcpBridgeServer::start(const std::string& host, int port) {
  if (running_) throw std::logic_error("server already running");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(std::uint16_t(port));
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) throw std::invalid_argument("bad IPv4 address '" + host + "'");

  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 64) < 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void TcpBridgeServer::accept_loop() {
  while (running_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    if (::poll(&pfd, 1, 100) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    std::lock_guard<std::mutex> lock(mutex_);
    open_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void TcpBridgeServer::serve_connection(int fd) {
  auto send_all = [fd](const std::string& s) {
    std::size_t sent = 0;
    while (sent < s.size()) {
      const ssize_t n = ::send(fd, s.data() + sent, s.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) return false;
      sent += std::size_t(n);
    }
    return true;
  };

  try {
    BridgeSession session(scenario_);
    std::string buffer;
    char chunk[4096];
    bool alive = true;
    while (alive && !session.closed()) {
      const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buffer.append(chunk, std::size_t(n));
      std::size_t start = 0, nl;
      while (alive && !session.closed() && (nl = buffer.find('\n', start)) != std::string::npos) {
        std::string line = buffer.substr(start, nl - start);
        start = nl + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        alive = send_all(session.handle(line) + "\n");
      }
      buffer.erase(0, start);
      if (buffer.size() > max_line) {
        alive = send_all(error("line_too_long", "request exceeds 1 MiB").dump() + "\n");
        buffer.clear();
      }
    }
  } catch (const std::exception& e) {
    send_all(error("internal_error", e.what()).dump() + "\n");
  }

  std::lock_guard<std::mutex> lock(mutex_);
  open_fds_.erase(std::remove(open_fds_.begin(), open_fds_.end(), fd), open_fds_.end());
  ::close(fd);
}

void TcpBridgeServer::stop() {
  if (!running_.exchange(false)) return;
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  listen_fd_ = -1;
  std::vector<std::thread> workers;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
}

}  // namespace mixroute
