// etfrp: instance generation, policy evaluation, benchmarking, replay and
// the environment server.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "etfrp/bench.hpp"
#include "etfrp/envserver.hpp"
#include "etfrp/errors.hpp"
#include "etfrp/netmodel.hpp"

namespace fs = std::filesystem;
using namespace etfrp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDivergence = 1;
constexpr int kExitUsage = 2;

// Usage and configuration problems: bad flags, unreadable or invalid inputs.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::atomic<bool> g_stop{false};

NetworkInstance load_instance(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("cannot open instance file " + path);
  return load_instance_file(path);
}

NetworkInstance load_for_run(const std::string& path, bool deterministic) {
  auto inst = load_instance(path);
  if (deterministic) inst.config.stochastic.deterministic = true;
  return inst;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
}

TraceSink trace_writer(const std::string& dir) {
  if (dir.empty()) return {};
  fs::create_directories(dir);
  return [dir](const EpisodeRow& row, const Trace& trace) {
    const auto name = row.policy + "-seed" + std::to_string(row.seed) + ".trace.jsonl";
    std::string safe = name;
    for (char& c : safe) {
      if (c == ':' || c == '/') c = '_';
    }
    write_file(fs::path(dir) / safe, trace.to_jsonl());
  };
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Electric truck fleet routing simulator and benchmark harness"};
  app.require_subcommand(1);

  // gen
  GeneratorParams gp;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  bool gen_flexible = false;
  auto* gen = app.add_subcommand("gen", "Generate a random instance");
  gen->add_option("--trucks", gp.n_trucks)->check(CLI::PositiveNumber);
  gen->add_option("--stops", gp.stops_per_truck)->check(CLI::PositiveNumber);
  gen->add_option("--nodes", gp.n_nodes)->check(CLI::PositiveNumber);
  gen->add_option("--chargers", gp.n_chargers)->check(CLI::NonNegativeNumber);
  gen->add_option("--area-km", gp.area_km);
  gen->add_option("--battery-kwh", gp.battery_kwh);
  gen->add_option("--initial-soc", gp.initial_soc);
  gen->add_option("--alpha", gp.config.alpha);
  gen->add_flag("--flexible", gen_flexible, "Flexible delivery order");
  gen->add_flag("--deterministic", gp.config.stochastic.deterministic, "Disable exogenous noise");
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out", gen_out, "Output path (stdout when omitted)");

  // run
  std::string run_instance, run_policy = "heuristic", run_trace_dir;
  int run_episodes = 1, run_jobs = 1;
  std::uint64_t run_seed = 0;
  bool run_det = false;
  auto* run = app.add_subcommand("run", "Evaluate one policy over seeded episodes");
  run->add_option("--instance", run_instance)->required();
  run->add_option("--policy", run_policy);
  run->add_option("--episodes", run_episodes)->check(CLI::NonNegativeNumber);
  run->add_option("--seed", run_seed);
  run->add_option("--jobs", run_jobs)->check(CLI::PositiveNumber);
  run->add_option("--trace-dir", run_trace_dir);
  run->add_flag("--deterministic", run_det, "Override the instance to deterministic mode");

  // bench
  std::string bench_instance, bench_policies = "planner,heuristic,random", bench_csv, bench_ref;
  int bench_episodes = 100, bench_jobs = 1;
  std::uint64_t bench_seed = 0;
  bool bench_det = false;
  auto* bench = app.add_subcommand("bench", "Compare policies on common random numbers");
  bench->add_option("--instance", bench_instance)->required();
  bench->add_option("--policies", bench_policies, "Comma-separated policy names");
  bench->add_option("--episodes", bench_episodes)->check(CLI::NonNegativeNumber);
  bench->add_option("--seed", bench_seed);
  bench->add_option("--jobs", bench_jobs)->check(CLI::PositiveNumber);
  bench->add_option("--csv", bench_csv);
  bench->add_option("--reference", bench_ref, "Normalization reference policy");
  bench->add_flag("--deterministic", bench_det);

  // replay
  std::string replay_trace, replay_instance;
  auto* rep = app.add_subcommand("replay", "Verify a trace against an instance");
  rep->add_option("--trace", replay_trace)->required();
  rep->add_option("--instance", replay_instance)->required();

  // serve
  std::string serve_instance, serve_trace_dir;
  std::string serve_transport = "tcp:7070";
  auto* serve = app.add_subcommand("serve", "Run the environment server");
  serve->add_option("--instance", serve_instance, "Default instance for reset");
  serve->add_option("--transport", serve_transport, "stdio, or tcp:PORT (0 picks a free port)");
  serve->add_option("--trace-dir", serve_trace_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      gp.mode = gen_flexible ? DeliveryMode::kFlexible : DeliveryMode::kSequential;
      const auto inst = generate_instance(gp, gen_seed);
      if (gen_out.empty()) {
        std::cout << save_instance(inst);
      } else {
        save_instance_file(inst, gen_out);
      }
      return kExitOk;
    }

    if (*run) {
      const auto inst = load_for_run(run_instance, run_det);
      const auto spec = policy_spec(run_policy);
      const auto rows = run_batch(inst, spec, run_episodes, run_seed, run_jobs, trace_writer(run_trace_dir));
      std::cout << "instance: " << run_instance << "  policy: " << spec.name << "  episodes: " << rows.size()
                << "  seeds: " << run_seed << "..\n";
      if (!rows.empty()) std::cout << format_summary(summarize(rows));
      return kExitOk;
    }

    if (*bench) {
      const auto inst = load_for_run(bench_instance, bench_det);
      std::vector<PolicySpec> specs;
      for (const auto& name : split_list(bench_policies)) specs.push_back(policy_spec(name));
      if (specs.size() < 2) throw UsageError("bench needs at least two policies");
      const auto report = run_bench(inst, specs, bench_episodes, bench_seed, bench_jobs, bench_ref);
      if (!bench_csv.empty()) write_file(bench_csv, rows_to_csv(report.rows));
      std::cout << format_bench(report);
      return kExitOk;
    }

    if (*rep) {
      const auto inst = load_instance(replay_instance);
      std::ifstream in(replay_trace, std::ios::binary);
      if (!in) throw UsageError("cannot read " + replay_trace);
      std::stringstream buf;
      buf << in.rdbuf();
      const auto trace = Trace::parse(buf.str());
      const auto result = replay(trace, inst);
      if (result.ok) {
        std::cout << "ok: " << result.records_checked << " records match\n";
        return kExitOk;
      }
      std::cout << "divergence at record " << result.divergence_record.value_or(0) << ": " << result.message << "\n";
      return kExitDivergence;
    }

    if (*serve) {
      SessionOptions opts;
      if (!serve_instance.empty()) {
        opts.instance = std::make_shared<const NetworkInstance>(load_instance(serve_instance));
      }
      opts.trace_dir = serve_trace_dir;
      if (serve_transport == "stdio") {
        serve_stream(std::cin, std::cout, opts);
        return kExitOk;
      }
      if (serve_transport.rfind("tcp:", 0) != 0) throw UsageError("unknown transport '" + serve_transport + "'");
      int serve_port = 0;
      try {
        serve_port = std::stoi(serve_transport.substr(4));
      } catch (const std::exception&) {
        throw UsageError("bad port in '" + serve_transport + "'");
      }
      std::signal(SIGINT, [](int) { g_stop = true; });
      std::signal(SIGTERM, [](int) { g_stop = true; });
      serve_tcp(serve_port, opts, g_stop, [](int port) { std::cerr << "listening on 127.0.0.1:" << port << std::endl; });
      return kExitOk;
    }
  } catch (const TraceHeaderMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const GenerationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  }
  return kExitOk;
}
