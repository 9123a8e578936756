#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "etfrp/environment.hpp"

namespace etfrp {

struct PolicySpec {
  std::string name;
  std::function<std::unique_ptr<Policy>()> make;
};

// Built-in names plus "extern:HOST:PORT". Throws std::invalid_argument.
PolicySpec policy_spec(std::string_view name);

struct EpisodeRow {
  int scenario = 0;
  std::string policy;
  std::uint64_t seed = 0;
  EpisodeMetrics metrics;
};

// (name, value) for every metric, in CSV column order.
std::vector<std::pair<std::string, double>> metric_fields(const EpisodeMetrics& m);

struct FieldStats {
  std::string field;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 below two episodes
};

struct PolicySummary {
  std::string policy;
  int episodes = 0;
  std::vector<FieldStats> fields;  // metric_fields order
  double normalized_reward = 0.0;  // mean reward / reference mean reward
  int wins = 0;
  const FieldStats& field(std::string_view name) const;
};

struct BenchReport {
  int scenarios = 0;
  std::string reference;  // normalization reference policy
  std::vector<PolicySummary> policies;
  std::vector<int> tie_scenarios;  // best reward shared by two or more policies
  std::vector<EpisodeRow> rows;
};

using TraceSink = std::function<void(const EpisodeRow&, const Trace&)>;

// Episodes use seeds seed, seed+1, ...; up to `jobs` run concurrently, each
// worker with its own policy instance.
std::vector<EpisodeRow> run_batch(const NetworkInstance& inst, const PolicySpec& policy, int episodes,
                                  std::uint64_t seed, int jobs = 1, const TraceSink& sink = {});

std::vector<PolicySummary> summarize(const std::vector<EpisodeRow>& rows);

// Every policy sees the same scenario seeds. The reference defaults to
// "planner" when present, else the first policy.
BenchReport run_bench(const NetworkInstance& inst, const std::vector<PolicySpec>& policies, int episodes,
                      std::uint64_t seed, int jobs = 1, std::string reference = "");

// RFC 4180, header row first: scenario_id, policy, seed, then metric_fields.
std::string rows_to_csv(const std::vector<EpisodeRow>& rows);
std::string csv_escape(std::string_view field);

// Mean and std per metric, one column per policy.
std::string format_summary(const std::vector<PolicySummary>& summaries);
std::string format_bench(const BenchReport& report);

}  // namespace etfrp
