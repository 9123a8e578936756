#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "etfrp/json_io.hpp"
#include "etfrp/stochastic.hpp"

namespace etfrp {

inline constexpr std::string_view kTraceFormat = "etfrp-trace/1";

struct TraceHeader {
  std::string format_version{kTraceFormat};
  std::string instance_digest;  // 16 hex digits
  std::uint64_t master_seed = 0;
  Json config;
};

// One line of the episode trace. `kind` is an event kind (Arrival,
// ChargeSessionEnd, ...) or one of Activate, Action, Reward, Terminated,
// ChargeSession. Optional fields are omitted from the line when unset.
struct TraceRecord {
  double t = 0.0;
  std::string kind;
  int truck = -1;
  std::optional<std::string> obs_digest;
  std::optional<int> action;
  std::vector<DrawRecord> random_draws;
  std::optional<double> reward;
  std::optional<bool> done;
  Json detail;  // kind-specific extras, null when absent
};

struct Trace {
  TraceHeader header;
  std::vector<TraceRecord> records;

  // Header line, then one record per line.
  std::string to_jsonl() const;
  static Trace parse(std::string_view text);
  // Every draw in record order.
  std::vector<DrawRecord> all_draws() const;
};

Json record_to_json(const TraceRecord& record);
TraceRecord record_from_json(const Json& doc);

std::string hex64(std::uint64_t value);

}  // namespace etfrp
