#include "etfrp/envserver.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include "etfrp/errors.hpp"

namespace etfrp {

// ---------------------------------------------------------------------------
// Replay

ReplayReport replay(const Trace& trace, const NetworkInstance& inst) {
  if (trace.header.format_version != kTraceFormat) {
    throw TraceHeaderMismatch("trace format '" + trace.header.format_version + "' is not " + std::string(kTraceFormat));
  }
  const std::string digest = hex64(instance_digest(inst));
  if (trace.header.instance_digest != digest) {
    throw TraceHeaderMismatch("trace was recorded for instance " + trace.header.instance_digest + ", got " + digest);
  }

  ReplayReport report;
  const auto& recorded = trace.records;
  auto diverge = [&](std::size_t index, std::string why) {
    report.ok = false;
    report.divergence_record = index;
    report.message = "record " + std::to_string(index) + ": " + std::move(why);
    return report;
  };

  Environment env(inst);
  try {
    env.reset(trace.header.master_seed, trace.all_draws());
    for (const auto& r : recorded) {
      if (r.kind != "Action") continue;
      if (env.observation().done) break;
      if (!r.action) return diverge(static_cast<std::size_t>(&r - recorded.data()), "action record without action");
      env.step(*r.action);
    }
  } catch (const std::exception& e) {
    // Pinpoint by comparing what was produced before the failure.
    const auto& got = env.trace().records;
    for (std::size_t i = 0; i < got.size() && i < recorded.size(); ++i) {
      if (record_to_json(got[i]) != record_to_json(recorded[i])) return diverge(i, "record differs");
    }
    return diverge(std::min(got.size(), recorded.size()), e.what());
  }

  const auto& got = env.trace().records;
  for (std::size_t i = 0; i < recorded.size(); ++i) {
    report.records_checked = i;
    if (i >= got.size()) return diverge(i, "replay ended early");
    const auto& a = recorded[i];
    const auto& b = got[i];
    if (a.obs_digest != b.obs_digest) {
      return diverge(i, "observation digest " + a.obs_digest.value_or("-") + " != " + b.obs_digest.value_or("-"));
    }
    if (a.reward != b.reward) return diverge(i, "reward differs");
    if (record_to_json(a) != record_to_json(b)) return diverge(i, "record differs");
  }
  report.records_checked = recorded.size();
  if (got.size() > recorded.size() && env.observation().done) {
    return diverge(recorded.size(), "trace is missing records");
  }
  return report;
}

// ---------------------------------------------------------------------------
// Messages

Json metrics_to_json(const EpisodeMetrics& m) {
  return {{"reward_total", m.reward_total},
          {"success", m.success},
          {"deliveries_completed", m.deliveries_completed},
          {"charging_sessions", m.charging_sessions},
          {"charging_time_h", m.charging_time_h},
          {"waiting_time_h", m.waiting_time_h},
          {"routing_time_h", m.routing_time_h},
          {"unloading_time_h", m.unloading_time_h},
          {"total_time_h", m.total_time_h},
          {"avg_finish_soc", m.avg_finish_soc},
          {"wall_clock_s", m.wall_clock_s},
          {"trucks_succeeded", m.trucks_succeeded},
          {"strandings", m.strandings},
          {"mid_edge_strandings", m.mid_edge_strandings},
          {"infeasible_actions", m.infeasible_actions},
          {"timeouts", m.timeouts}};
}

Json observation_message(const Observation& obs, const WorldState& world) {
  Json info = {{"elapsed", obs.elapsed},
               {"obs_digest", hex64(obs.digest)},
               {"fixed_size", fixed_action_size(world.instance())},
               {"t", world.now()}};
  if (obs.done) {
    return {{"type", "episode_end"}, {"episode_step", obs.episode_step}, {"reward", obs.reward},
            {"done", true},          {"metrics", metrics_to_json(world.metrics())}, {"info", info}};
  }
  return {{"type", "obs"},
          {"episode_step", obs.episode_step},
          {"active_truck", obs.active_truck.value_or(-1)},
          {"state", state_to_json(obs.graph)},
          {"actions", actions_to_json(obs.graph)},
          {"reward", obs.reward},
          {"done", false},
          {"info", info}};
}

// ---------------------------------------------------------------------------
// Session

namespace {

std::atomic<std::uint64_t> g_next_session{1};

class RequestError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RequestError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Session::Session(SessionOptions options)
    : options_(std::move(options)), session_id_(g_next_session++), instance_(options_.instance) {}

Session::~Session() {
  try {
    flush_trace();
  } catch (...) {
  }
}

void Session::flush_trace() {
  if (trace_written_ || !env_ || options_.trace_dir.empty()) return;
  trace_written_ = true;
  std::filesystem::create_directories(options_.trace_dir);
  const auto path = options_.trace_dir / ("session" + std::to_string(session_id_) + "-episode" +
                                          std::to_string(episodes_) + ".trace.jsonl");
  std::ofstream(path, std::ios::binary) << env_->trace().to_jsonl();
}

std::string Session::handle(std::string_view line) {
  Json request;
  Json response;
  try {
    request = Json::parse(line);
    if (!request.is_object()) throw RequestError("request must be a JSON object");
    response = dispatch(request);
  } catch (const Json::parse_error& e) {
    response = {{"type", "error"}, {"message", std::string("malformed JSON: ") + e.what()}};
  } catch (const std::exception& e) {
    response = {{"type", "error"}, {"message", e.what()}};
  }
  if (request.is_object() && request.contains("id")) response["id"] = request["id"];
  return response.dump();
}

Json Session::dispatch(const Json& request) {
  const auto type_it = request.find("type");
  if (type_it == request.end() || !type_it->is_string()) throw RequestError("missing \"type\"");
  const auto type = type_it->get<std::string>();
  if (type == "hello") return on_hello(request);
  if (type == "reset") return on_reset(request);
  if (type == "step") return on_step(request);
  if (type == "replay") return on_replay(request);
  throw RequestError("unknown message type '" + type + "'");
}

std::shared_ptr<const NetworkInstance> Session::instance_from_request(const Json& request) const {
  if (auto it = request.find("instance_inline"); it != request.end()) {
    return std::make_shared<const NetworkInstance>(it->is_string() ? load_instance(it->get<std::string>())
                                                                    : load_instance(it->dump()));
  }
  if (auto it = request.find("instance_path"); it != request.end()) {
    return std::make_shared<const NetworkInstance>(load_instance_file(it->get<std::string>()));
  }
  return nullptr;
}

Json Session::on_hello(const Json& request) {
  if (auto inst = instance_from_request(request)) instance_ = std::move(inst);
  Json out = {{"type", "hello"}, {"protocol", kProtocol}};
  out["fixed_size"] = instance_ ? Json(fixed_action_size(*instance_)) : Json(nullptr);
  return out;
}

Json Session::on_reset(const Json& request) {
  if (auto inst = instance_from_request(request)) instance_ = std::move(inst);
  if (!instance_) throw RequestError("reset needs an instance (instance_inline or instance_path)");
  const auto seed_it = request.find("seed");
  const std::uint64_t seed = seed_it == request.end() ? 0 : seed_it->get<std::uint64_t>();
  flush_trace();
  env_ = std::make_unique<Environment>(*instance_);
  env_->reset(seed);
  ++episodes_;
  trace_written_ = false;
  const auto& obs = env_->observation();
  if (obs.done) flush_trace();
  return observation_message(obs, env_->world());
}

Json Session::on_step(const Json& request) {
  if (!env_) throw RequestError("step before reset");
  if (env_->observation().done) throw RequestError("episode is over; send reset");
  const auto it = request.find("action");
  if (it == request.end() || !it->is_number_integer()) throw RequestError("step needs an integer \"action\"");
  const auto& obs = env_->step(it->get<int>());
  if (obs.done) flush_trace();
  return observation_message(obs, env_->world());
}

Json Session::on_replay(const Json& request) {
  Trace trace;
  if (auto it = request.find("trace_inline"); it != request.end()) {
    trace = Trace::parse(it->get<std::string>());
  } else if (auto p = request.find("trace_path"); p != request.end()) {
    trace = Trace::parse(read_file(p->get<std::string>()));
  } else {
    throw RequestError("replay needs trace_inline or trace_path");
  }
  auto inst = instance_from_request(request);
  if (!inst) inst = instance_;
  if (!inst) throw RequestError("replay needs an instance");
  Json out = {{"type", "replay"}};
  try {
    const auto report = replay(trace, *inst);
    out["ok"] = report.ok;
    out["divergence_record"] = report.divergence_record ? Json(*report.divergence_record) : Json(nullptr);
    out["message"] = report.message;
  } catch (const TraceHeaderMismatch& e) {
    out["ok"] = false;
    out["divergence_record"] = nullptr;
    out["message"] = std::string("header mismatch: ") + e.what();
  }
  return out;
}

void serve_stream(std::istream& in, std::ostream& out, const SessionOptions& options) {
  Session session(options);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << session.handle(line) << '\n';
    out.flush();
  }
}

// ---------------------------------------------------------------------------
// Sockets

namespace {

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

// Next line from the socket, or nullopt at EOF or error.
std::optional<std::string> recv_line(int fd, std::string& buffer) {
  for (;;) {
    if (const auto nl = buffer.find('\n'); nl != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    char chunk[65536];
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return std::nullopt;
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

void run_connection(int fd, SessionOptions options) {
  Session session(std::move(options));
  std::string buffer;
  while (auto line = recv_line(fd, buffer)) {
    if (line->empty()) continue;
    if (!send_all(fd, session.handle(*line) + "\n")) break;
  }
  session.flush_trace();
  ::close(fd);
}

}  // namespace

void serve_tcp(int port, const SessionOptions& options, const std::atomic<bool>& stop,
               const std::function<void(int)>& on_listening) {
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listener, 64) < 0) {
    const std::string err = std::strerror(errno);
    ::close(listener);
    throw std::runtime_error("cannot listen on port " + std::to_string(port) + ": " + err);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listening) on_listening(ntohs(addr.sin_port));

  std::vector<std::thread> workers;
  std::vector<int> clients;
  std::mutex mu;
  while (!stop.load()) {
    pollfd pfd{listener, POLLIN, 0};
    if (::poll(&pfd, 1, 100) <= 0) continue;
    const int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) continue;
    {
      std::lock_guard lock(mu);
      clients.push_back(fd);
    }
    workers.emplace_back(run_connection, fd, options);
  }
  {
    std::lock_guard lock(mu);
    for (int fd : clients) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& w : workers) w.join();
  ::close(listener);
}

LineClient::LineClient(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0) {
    throw std::runtime_error("cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  for (addrinfo* p = res; p; p = p->ai_next) {
    fd_ = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
    if (fd_ < 0) continue;
    if (::connect(fd_, p->ai_addr, p->ai_addrlen) == 0) break;
    ::close(fd_);
    fd_ = -1;
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw std::runtime_error("cannot connect to " + host + ":" + std::to_string(port));
}

LineClient::~LineClient() {
  if (fd_ >= 0) ::close(fd_);
}

void LineClient::send_line(std::string_view line) {
  std::string data(line);
  data += '\n';
  if (!send_all(fd_, data)) throw std::runtime_error("connection lost while sending");
}

std::string LineClient::read_line() {
  auto line = recv_line(fd_, buffer_);
  if (!line) throw std::runtime_error("connection closed by peer");
  return *line;
}

ExternPolicy::ExternPolicy(const std::string& host, int port) : client_(host, port) {}

int ExternPolicy::act(const Observation& obs, const WorldState& world) {
  client_.send_line(observation_message(obs, world).dump());
  const Json reply = Json::parse(client_.read_line());
  if (reply.value("type", "") != "action" || !reply.contains("action")) {
    throw ProtocolError("extern policy replied without an action: " + reply.dump());
  }
  return reply["action"].get<int>();
}

}  // namespace etfrp
