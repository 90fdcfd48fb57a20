#pragma once

// Newline-delimited JSON bridge for external trainers. Each connection owns
// one Environment.
//
//   {"cmd":"spec"}                 -> {"obs_len":N,"action_len":P,"episode_len":K}
//   {"cmd":"reset","seed":S}       -> {"obs":[...]}            (seed optional)
//   {"cmd":"step","action":[...]}  -> {"obs":[...],"cost":c,"proxy_cost":d,
//                                      "training_cost":t,"done":b,"latencies":[...]}
//   {"cmd":"close"}                -> {"ok":true}
//   anything malformed             -> {"error":"<code>","detail":"..."}

#include <atomic>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "mixroute/env.hpp"

namespace mixroute {

class BridgeSession {
 public:
  explicit BridgeSession(const Scenario& scenario) : env_(scenario) {}

  // One request line in, one reply line out (without the trailing newline).
  std::string handle(const std::string& line);
  bool closed() const { return closed_; }

 private:
  Environment env_;
  bool closed_{false};
};

// Serves a single session until "close" or end of input. Returns the number
// of requests answered with an error.
std::size_t serve_stream(const Scenario& scenario, std::istream& in, std::ostream& out);

// TCP server, one thread and one session per connection.
class TcpBridgeServer {
 public:
  explicit TcpBridgeServer(Scenario scenario) : scenario_(std::move(scenario)) {}
  ~TcpBridgeServer();

  // Binds and starts accepting in the background. Port 0 picks a free port.
  void start(const std::string& host, int port);
  int port() const { return port_; }
  // Stops accepting, shuts down open connections and joins their threads.
  void stop();
  bool running() const { return running_; }

 private:
  void accept_loop();
  void serve_connection(int fd);

  Scenario scenario_;
  int listen_fd_{-1};
  int port_{0};
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex mutex_;
  std::vector<std::thread> workers_;
  std::vector<int> open_fds_;
};

}  // namespace mixroute
