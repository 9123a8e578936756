#include "etfrp/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>
#include <thread>

#include "etfrp/envserver.hpp"
#include "etfrp/planners.hpp"

namespace etfrp {

PolicySpec policy_spec(std::string_view name) {
  const std::string n(name);
  if (n.rfind("extern:", 0) == 0) {
    const auto rest = n.substr(7);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0) throw std::invalid_argument("expected extern:HOST:PORT, got '" + n + "'");
    const std::string host = rest.substr(0, colon);
    int port = 0;
    try {
      port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad port in '" + n + "'");
    }
    return {n, [host, port] { return std::make_unique<ExternPolicy>(host, port); }};
  }
  make_builtin_policy(n);  // validates the name
  return {n, [n] { return make_builtin_policy(n); }};
}

std::vector<std::pair<std::string, double>> metric_fields(const EpisodeMetrics& m) {
  return {{"reward_total", m.reward_total},
          {"success", m.success ? 1.0 : 0.0},
          {"avg_finish_soc", m.avg_finish_soc},
          {"deliveries_completed", m.deliveries_completed},
          {"charging_sessions", m.charging_sessions},
          {"charging_time_h", m.charging_time_h},
          {"waiting_time_h", m.waiting_time_h},
          {"routing_time_h", m.routing_time_h},
          {"unloading_time_h", m.unloading_time_h},
          {"total_time_h", m.total_time_h},
          {"wall_clock_s", m.wall_clock_s},
          {"trucks_succeeded", m.trucks_succeeded},
          {"strandings", m.strandings},
          {"mid_edge_strandings", m.mid_edge_strandings},
          {"infeasible_actions", m.infeasible_actions},
          {"timeouts", m.timeouts}};
}

const FieldStats& PolicySummary::field(std::string_view name) const {
  for (const auto& f : fields) {
    if (f.field == name) return f;
  }
  throw std::out_of_range("no metric '" + std::string(name) + "'");
}

std::vector<EpisodeRow> run_batch(const NetworkInstance& inst, const PolicySpec& policy, int episodes,
                                  std::uint64_t seed, int jobs, const TraceSink& sink) {
  std::vector<EpisodeRow> rows(static_cast<std::size_t>(std::max(episodes, 0)));
  std::vector<Trace> traces(sink ? rows.size() : 0);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};

  auto worker = [&] {
    try {
      auto p = policy.make();
      for (int k = next++; k < episodes && !failed; k = next++) {
        const std::uint64_t s = seed + static_cast<std::uint64_t>(k);
        auto result = run_episode(inst, *p, s);
        rows[static_cast<std::size_t>(k)] = {k, policy.name, s, result.metrics};
        if (sink) traces[static_cast<std::size_t>(k)] = std::move(result.trace);
      }
    } catch (...) {
      if (!failed.exchange(true)) failure = std::current_exception();
    }
  };

  const int n_workers = std::clamp(jobs, 1, std::max(episodes, 1));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  if (sink) {
    for (std::size_t k = 0; k < rows.size(); ++k) sink(rows[k], traces[k]);
  }
  return rows;
}

std::vector<PolicySummary> summarize(const std::vector<EpisodeRow>& rows) {
  std::vector<PolicySummary> out;
  std::map<std::string, std::vector<const EpisodeRow*>> by_policy;
  for (const auto& r : rows) {
    if (!by_policy.count(r.policy)) out.push_back({r.policy, 0, {}, 0.0, 0});
    by_policy[r.policy].push_back(&r);
  }
  for (auto& s : out) {
    const auto& group = by_policy[s.policy];
    s.episodes = static_cast<int>(group.size());
    const auto names = metric_fields(EpisodeMetrics{});
    for (std::size_t f = 0; f < names.size(); ++f) {
      double sum = 0.0;
      for (const auto* r : group) sum += metric_fields(r->metrics)[f].second;
      const double n = static_cast<double>(group.size());
      const double mean = sum / n;
      double ss = 0.0;
      for (const auto* r : group) {
        const double d = metric_fields(r->metrics)[f].second - mean;
        ss += d * d;
      }
      s.fields.push_back({names[f].first, mean, group.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0});
    }
  }
  return out;
}

BenchReport run_bench(const NetworkInstance& inst, const std::vector<PolicySpec>& policies, int episodes,
                      std::uint64_t seed, int jobs, std::string reference) {
  BenchReport report;
  report.scenarios = std::max(episodes, 0);
  for (const auto& p : policies) {
    auto rows = run_batch(inst, p, episodes, seed, jobs);
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  report.policies = summarize(report.rows);
  if (report.policies.empty()) return report;

  if (reference.empty()) {
    const bool has_planner = std::any_of(policies.begin(), policies.end(), [](const auto& p) { return p.name == "planner"; });
    reference = has_planner ? "planner" : policies.front().name;
  }
  report.reference = reference;
  double ref_mean = 0.0;
  for (const auto& s : report.policies) {
    if (s.policy == reference) ref_mean = s.field("reward_total").mean;
  }
  for (auto& s : report.policies) s.normalized_reward = s.field("reward_total").mean / ref_mean;

  // Rows are grouped per policy in scenario order.
  const std::size_t n = static_cast<std::size_t>(report.scenarios);
  for (std::size_t k = 0; k < n; ++k) {
    double best = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> holders;
    for (std::size_t p = 0; p < policies.size(); ++p) {
      const double r = report.rows[p * n + k].metrics.reward_total;
      if (r > best) {
        best = r;
        holders = {p};
      } else if (r == best) {
        holders.push_back(p);
      }
    }
    if (holders.size() == 1) {
      ++report.policies[holders.front()].wins;
    } else {
      report.tie_scenarios.push_back(static_cast<int>(k));
    }
  }
  return report;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string rows_to_csv(const std::vector<EpisodeRow>& rows) {
  std::string out = "scenario_id,policy,seed";
  for (const auto& [name, v] : metric_fields(EpisodeMetrics{})) {
    (void)v;
    out += "," + name;
  }
  out += "\r\n";
  for (const auto& r : rows) {
    out += std::to_string(r.scenario) + "," + csv_escape(r.policy) + "," + std::to_string(r.seed);
    for (const auto& [name, v] : metric_fields(r.metrics)) {
      (void)name;
      out += "," + number(v);
    }
    out += "\r\n";
  }
  return out;
}

std::string format_summary(const std::vector<PolicySummary>& summaries) {
  static const std::vector<std::pair<std::string, std::string>> kRows = {
      {"reward_total", "Reward (-)"},
      {"success", "Success Rate (%)"},
      {"avg_finish_soc", "Avg. Truck SoC at Finish (%)"},
      {"deliveries_completed", "Total Deliveries (-)"},
      {"charging_sessions", "Total Charging Sessions (-)"},
      {"charging_time_h", "Total Charging Time (H)"},
      {"waiting_time_h", "Total Waiting Time (H)"},
      {"routing_time_h", "Total Routing Time (H)"},
      {"unloading_time_h", "Unloading Time (H)"},
      {"total_time_h", "Total Time (H)"},
      {"wall_clock_s", "Exec. Time (s)"},
  };
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-30s", "Metric");
  out += buf;
  for (const auto& s : summaries) {
    std::snprintf(buf, sizeof buf, " %24s", s.policy.c_str());
    out += buf;
  }
  out += "\n";
  for (const auto& [key, label] : kRows) {
    std::snprintf(buf, sizeof buf, "%-30s", label.c_str());
    out += buf;
    const bool percent = key == "success" || key == "avg_finish_soc";
    for (const auto& s : summaries) {
      const auto& f = s.field(key);
      const double scale = percent ? 100.0 : 1.0;
      const std::string cell = fixed(f.mean * scale, key == "wall_clock_s" ? 3 : 1) + " +- " +
                               fixed(f.std * scale, key == "wall_clock_s" ? 3 : 1);
      std::snprintf(buf, sizeof buf, " %24s", cell.c_str());
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::string format_bench(const BenchReport& report) {
  std::string out = format_summary(report.policies);
  char buf[256];
  std::snprintf(buf, sizeof buf, "\n%-30s", ("Normalized reward (/" + report.reference + ")").c_str());
  out += buf;
  for (const auto& s : report.policies) {
    std::snprintf(buf, sizeof buf, " %24s", fixed(s.normalized_reward, 3).c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "\n%-30s", "Win ratio (%)");
  out += buf;
  for (const auto& s : report.policies) {
    const double ratio = report.scenarios > 0 ? 100.0 * s.wins / report.scenarios : 0.0;
    std::snprintf(buf, sizeof buf, " %24s", fixed(ratio, 1).c_str());
    out += buf;
  }
  out += "\nTied scenarios: " + std::to_string(report.tie_scenarios.size()) + " of " +
         std::to_string(report.scenarios) + "\n";
  return out;
}

}  // namespace etfrp
