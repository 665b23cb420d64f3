// nestcheck command-line front end.
//
//   nestcheck check --problem p.nmc --models dir [--scale S] [--jobs J] [--no-cache] [--json]
//   nestcheck bench cluster --min-nodes A --max-nodes B [--step 2] [--mode nested|flat|both]
//   nestcheck gen cluster --nodes N --out dir
//
// Exit status: 0 success, 1 verification/evaluation error, 2 usage or parse error.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "nestcheck/bench.hpp"
#include "nestcheck/cluster.hpp"
#include "nestcheck/error.hpp"
#include "nestcheck/eval.hpp"
#include "nestcheck/expr.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kEvalFailure = 1;
constexpr int kUsage = 2;

struct UsageError : nestcheck::Error {
  using Error::Error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string run_json(const nestcheck::RunResult& run) {
  auto tasks = nlohmann::ordered_json::array();
  for (const auto& t : run.tasks) {
    nlohmann::ordered_json o;
    o["model"] = t.digest.hex();
    o["property"] = nestcheck::to_string(t.property);
    o["value"] = t.result.value;
    o["cached"] = t.cached();
    o["time_ms"] = t.time_ms;
    tasks.push_back(std::move(o));
  }
  // The result is an arbitrary-precision integer, written as a bare JSON number.
  std::ostringstream os;
  os << "{\"result\": " << run.value.get_str() << ", \"tasks\": " << tasks.dump()
     << ", \"total_time_ms\": " << nlohmann::json(run.total_time_ms).dump() << "}\n";
  return os.str();
}

struct CheckArgs {
  std::string problem;
  std::string models = ".";
  std::uint64_t scale = 1000;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  bool no_cache = false;
  bool json = false;
  std::size_t exact_threshold = 2000;
};

int cmd_check(const CheckArgs& a) {
  nestcheck::ExprPtr problem;
  try {
    problem = nestcheck::parse_problem(read_file(a.problem));
  } catch (const nestcheck::Error& e) {
    std::cerr << a.problem << ": " << e.what() << '\n';
    return kUsage;
  }
  nestcheck::EvalConfig config;
  config.models_dir = a.models;
  config.check.scale = a.scale;
  config.check.exact_threshold = a.exact_threshold;
  config.jobs = std::max<std::size_t>(1, a.jobs);
  config.cache = !a.no_cache;
  try {
    const auto run = nestcheck::run_problem(*problem, config);
    if (a.json) std::cout << run_json(run);
    else std::cout << run.value.get_str() << '\n';
  } catch (const nestcheck::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kEvalFailure;
  }
  return kOk;
}

struct BenchArgs {
  nestcheck::bench::Options opts;
  std::string mode = "both";
  std::string params;
  std::string out;
};

int cmd_bench(BenchArgs& a) {
  if (a.mode == "nested") a.opts.flat = false;
  else if (a.mode == "flat") a.opts.nested = false;
  else if (a.mode != "both") throw UsageError("--mode must be nested, flat or both");
  if (!a.params.empty()) a.opts.params = nestcheck::cluster::load_params(a.params);
  a.opts.params.validate();
  if (a.opts.min_nodes == 0 || a.opts.min_nodes > a.opts.max_nodes) {
    throw UsageError("need 1 <= --min-nodes <= --max-nodes");
  }
  try {
    const auto rows = nestcheck::bench::run_cluster_bench(a.opts);
    std::cout << nestcheck::bench::format_table(rows);
    const auto json = nestcheck::bench::to_json(rows, a.opts);
    if (!a.out.empty()) {
      std::ofstream out(a.out);
      if (!out) throw UsageError("cannot write " + a.out);
      out << json << '\n';
    }
  } catch (const UsageError&) {
    throw;
  } catch (const nestcheck::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kEvalFailure;
  }
  return kOk;
}

struct GenArgs {
  std::size_t nodes = 8;
  std::string out;
  std::string params;
  std::uint64_t scale = 1000;
  std::size_t flat_bound = nestcheck::cluster::kDefaultFlatBound;
};

int cmd_gen(const GenArgs& a) {
  nestcheck::cluster::ClusterParams params;
  if (!a.params.empty()) params = nestcheck::cluster::load_params(a.params);
  params.nodes = a.nodes;
  params.validate();
  const bool flat = nestcheck::cluster::write_cluster_files(params, a.out, a.scale, a.flat_bound);
  std::cout << "wrote Node.mm, Cluster.mm, cluster.nmc";
  if (flat) std::cout << ", Flat.sm, flat.nmc";
  std::cout << " to " << a.out << '\n';
  if (!flat) {
    std::cerr << "note: " << a.nodes << " nodes exceeds the flattened bound of " << a.flat_bound
              << "; Flat.sm not written\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nestcheck: nested model checker"};
  app.require_subcommand(1);

  CheckArgs check;
  auto* check_cmd = app.add_subcommand("check", "Evaluate a nested problem file");
  check_cmd->add_option("--problem", check.problem, "Problem file (.nmc)")->required();
  check_cmd->add_option("--models", check.models, "Directory holding .sm/.mm files");
  check_cmd->add_option("--scale", check.scale, "Scale of probabilistic results")
      ->check(CLI::PositiveNumber);
  check_cmd->add_option("--jobs", check.jobs, "Worker threads")->check(CLI::PositiveNumber);
  check_cmd->add_flag("--no-cache", check.no_cache, "Disable the result cache");
  check_cmd->add_flag("--json", check.json, "Print the result and task reports as JSON");
  check_cmd->add_option("--exact-threshold", check.exact_threshold,
                        "Largest unknown set solved exactly");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Benchmarks");
  bench_cmd->require_subcommand(1);
  auto* bench_cluster = bench_cmd->add_subcommand("cluster", "Cluster security case study");
  bench_cluster->add_option("--min-nodes", bench.opts.min_nodes);
  bench_cluster->add_option("--max-nodes", bench.opts.max_nodes);
  bench_cluster->add_option("--step", bench.opts.step)->check(CLI::PositiveNumber);
  bench_cluster->add_option("--mode", bench.mode, "nested, flat or both");
  bench_cluster->add_option("--params", bench.params, "Parameter file (key = value)");
  bench_cluster->add_option("--scale", bench.opts.scale)->check(CLI::PositiveNumber);
  bench_cluster->add_option("--runs", bench.opts.runs, "Runs averaged per instance");
  bench_cluster->add_option("--jobs", bench.opts.jobs)->check(CLI::PositiveNumber);
  bench_cluster->add_option("--flat-bound", bench.opts.flat_bound,
                            "Largest node count generated in flattened mode");
  bench_cluster->add_option("--out", bench.out, "Write the JSON report here");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate case-study files");
  gen_cmd->require_subcommand(1);
  auto* gen_cluster = gen_cmd->add_subcommand("cluster", "Cluster security case study");
  gen_cluster->add_option("--nodes", gen.nodes)->required()->check(CLI::PositiveNumber);
  gen_cluster->add_option("--out", gen.out)->required();
  gen_cluster->add_option("--params", gen.params, "Parameter file (key = value)");
  gen_cluster->add_option("--scale", gen.scale, "Scale the problem is checked at")
      ->check(CLI::PositiveNumber);
  gen_cluster->add_option("--flat-bound", gen.flat_bound);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*check_cmd) return cmd_check(check);
    if (*bench_cluster) return cmd_bench(bench);
    if (*gen_cluster) return cmd_gen(gen);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const nestcheck::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
