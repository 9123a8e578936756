#include "etfrp/trace.hpp"

#include <cstdio>

#include "etfrp/errors.hpp"

namespace etfrp {

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

Json record_to_json(const TraceRecord& r) {
  Json j = {{"t", r.t}, {"kind", r.kind}, {"truck", r.truck}};
  if (r.obs_digest) j["obs_digest"] = *r.obs_digest;
  if (r.action) j["action"] = *r.action;
  Json draws = Json::array();
  for (const auto& d : r.random_draws) draws.push_back({stream_name(d.stream), d.index, d.value});
  j["random_draws"] = std::move(draws);
  if (r.reward) j["reward"] = *r.reward;
  if (r.done) j["done"] = *r.done;
  if (!r.detail.is_null()) j["detail"] = r.detail;
  return j;
}

TraceRecord record_from_json(const Json& j) {
  TraceRecord r;
  try {
    r.t = j.at("t").get<double>();
    r.kind = j.at("kind").get<std::string>();
    r.truck = j.at("truck").get<int>();
    if (j.contains("obs_digest")) r.obs_digest = j["obs_digest"].get<std::string>();
    if (j.contains("action")) r.action = j["action"].get<int>();
    for (const auto& d : j.at("random_draws")) {
      const auto name = d.at(0).get<std::string>();
      const auto id = stream_from_name(name);
      if (!id) throw ParseError("/random_draws", "unknown stream '" + name + "'");
      r.random_draws.push_back({*id, d.at(1).get<std::uint64_t>(), d.at(2).get<double>()});
    }
    if (j.contains("reward")) r.reward = j["reward"].get<double>();
    if (j.contains("done")) r.done = j["done"].get<bool>();
    if (j.contains("detail")) r.detail = j["detail"];
  } catch (const Json::exception& e) {
    throw ParseError("/", std::string("malformed trace record: ") + e.what());
  }
  return r;
}

std::string Trace::to_jsonl() const {
  std::string out;
  const Json h = {{"format_version", header.format_version},
                  {"instance_digest", header.instance_digest},
                  {"master_seed", header.master_seed},
                  {"config", header.config}};
  out += h.dump();
  out += '\n';
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

Trace Trace::parse(std::string_view text) {
  Trace trace;
  bool have_header = false;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no), e.what());
    }
    if (!have_header) {
      try {
        trace.header.format_version = j.at("format_version").get<std::string>();
        trace.header.instance_digest = j.at("instance_digest").get<std::string>();
        trace.header.master_seed = j.at("master_seed").get<std::uint64_t>();
        trace.header.config = j.value("config", Json());
      } catch (const Json::exception& e) {
        throw ParseError("line 1", std::string("malformed trace header: ") + e.what());
      }
      if (trace.header.format_version != kTraceFormat) {
        throw ParseError("line 1", "unsupported trace format '" + trace.header.format_version + "'");
      }
      have_header = true;
      continue;
    }
    trace.records.push_back(record_from_json(j));
  }
  if (!have_header) throw ParseError("line 1", "empty trace");
  return trace;
}

std::vector<DrawRecord> Trace::all_draws() const {
  std::vector<DrawRecord> out;
  for (const auto& r : records) out.insert(out.end(), r.random_draws.begin(), r.random_draws.end());
  return out;
}

}  // namespace etfrp
