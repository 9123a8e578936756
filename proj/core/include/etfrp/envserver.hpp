#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "etfrp/environment.hpp"

namespace etfrp {

inline constexpr std::string_view kProtocol = "etfrp/1";

// ---------------------------------------------------------------------------
// Replay

class TraceHeaderMismatch : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ReplayReport {
  bool ok = true;
  std::optional<std::size_t> divergence_record;  // 0-based, header excluded
  std::string message;
  std::size_t records_checked = 0;
};

// Re-executes the recorded actions against `inst` with every recorded draw
// injected, and compares the regenerated records with the recorded ones.
// Throws TraceHeaderMismatch when the trace was made for another instance
// or format.
ReplayReport replay(const Trace& trace, const NetworkInstance& inst);

// ---------------------------------------------------------------------------
// Protocol

Json metrics_to_json(const EpisodeMetrics& m);
// obs message, or episode_end once the episode is done.
Json observation_message(const Observation& obs, const WorldState& world);

struct SessionOptions {
  std::shared_ptr<const NetworkInstance> instance;  // default when reset names none
  std::filesystem::path trace_dir;                 // traces written when non-empty
};

// One client connection: newline-delimited JSON requests in, exactly one
// JSON response per request out. Malformed requests get an error response
// and leave the session usable.
class Session {
 public:
  explicit Session(SessionOptions options);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  // Returns the response line without the trailing newline.
  std::string handle(std::string_view line);
  // Writes the in-progress trace, if any.
  void flush_trace();

 private:
  Json dispatch(const Json& request);
  Json on_hello(const Json& request);
  Json on_reset(const Json& request);
  Json on_step(const Json& request);
  Json on_replay(const Json& request);
  std::shared_ptr<const NetworkInstance> instance_from_request(const Json& request) const;

  SessionOptions options_;
  std::uint64_t session_id_;
  int episodes_ = 0;
  bool trace_written_ = true;
  std::shared_ptr<const NetworkInstance> instance_;
  std::unique_ptr<Environment> env_;
};

// Serves a single session over a pair of streams until EOF.
void serve_stream(std::istream& in, std::ostream& out, const SessionOptions& options);

// Accepts TCP connections on `port` (0 picks a free one), one session and
// thread per connection, until `stop` becomes true. `on_listening` receives
// the bound port.
void serve_tcp(int port, const SessionOptions& options, const std::atomic<bool>& stop,
               const std::function<void(int)>& on_listening = {});

// ---------------------------------------------------------------------------
// Line-oriented TCP client, used for externally hosted policies.

class LineClient {
 public:
  LineClient(const std::string& host, int port);
  ~LineClient();
  LineClient(const LineClient&) = delete;
  LineClient& operator=(const LineClient&) = delete;

  void send_line(std::string_view line);
  // Throws std::runtime_error when the peer closes.
  std::string read_line();

 private:
  int fd_ = -1;
  std::string buffer_;
};

// Sends each observation message to a remote agent and expects
// {"type":"action","action":k} back.
class ExternPolicy : public Policy {
 public:
  ExternPolicy(const std::string& host, int port);
  std::string name() const override { return "extern"; }
  int act(const Observation& obs, const WorldState& world) override;

 private:
  LineClient client_;
};

}  // namespace etfrp
