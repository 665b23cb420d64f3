#include "nestcheck/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "nestcheck/error.hpp"
#include "nestcheck/eval.hpp"

namespace nestcheck::bench {

std::string_view to_string(Mode mode) { return mode == Mode::Nested ? "nested" : "flat"; }

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch_dir(const Options& opts, std::size_t nodes, Mode mode) {
  auto base = opts.work_dir;
  if (base.empty()) {
    std::random_device rd;
    base = std::filesystem::temp_directory_path() /
           ("nestcheck-bench-" + std::to_string(rd()) + std::to_string(rd()));
  }
  return base / (std::string(to_string(mode)) + "-" + std::to_string(nodes));
}

}  // namespace

Row run_instance(std::size_t nodes, Mode mode, const Options& opts) {
  Row row;
  row.nodes = nodes;
  row.mode = mode;
  if (mode == Mode::Flat && nodes > opts.flat_bound) {
    row.note = "refused: flattened model exceeds the " + std::to_string(opts.flat_bound) +
               "-node bound";
    return row;
  }
  auto params = opts.params;
  params.nodes = nodes;

  const auto dir = scratch_dir(opts, nodes, mode);
  std::filesystem::create_directories(dir);
  std::filesystem::path problem_file;
  if (mode == Mode::Nested) {
    std::ofstream(dir / "Node.mm") << cluster::generate_node_model();
    std::ofstream(dir / "Cluster.mm") << cluster::generate_cluster_model(params);
    std::ofstream(dir / "cluster.nmc") << cluster::emit_nested_problem(params, opts.scale);
    problem_file = dir / "cluster.nmc";
  } else {
    std::ofstream(dir / "Flat.sm") << cluster::generate_flattened_model(params, opts.flat_bound);
    std::ofstream(dir / "flat.nmc") << cluster::emit_flattened_problem();
    problem_file = dir / "flat.nmc";
  }
  const auto problem = parse_problem(read_file(problem_file));

  EvalConfig config;
  config.models_dir = dir;
  config.jobs = opts.jobs;
  config.check.scale = opts.scale;
  // One untimed run first so one-off library initialisation is not charged to
  // whichever instance happens to be measured first.
  run_problem(*problem, config);
  for (std::size_t r = 0; r < std::max<std::size_t>(1, opts.runs); ++r) {
    const auto start = std::chrono::steady_clock::now();
    auto run = run_problem(*problem, config);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    row.run_times_ms.push_back(ms);
    row.result = run.value.get_str();
    row.tasks = run.tasks.size();
    row.states = 0;
    for (const auto& t : run.tasks) row.states += t.result.states_explored;
  }
  row.time_ms = std::accumulate(row.run_times_ms.begin(), row.run_times_ms.end(), 0.0) /
                static_cast<double>(row.run_times_ms.size());
  row.completed = true;
  if (opts.work_dir.empty()) std::filesystem::remove_all(dir.parent_path());
  return row;
}

std::vector<Row> run_cluster_bench(const Options& opts) {
  if (opts.step == 0) throw Error("step must be positive");
  std::vector<Row> rows;
  for (auto n = opts.min_nodes; n <= opts.max_nodes; n += opts.step) {
    if (opts.flat) rows.push_back(run_instance(n, Mode::Flat, opts));
    if (opts.nested) rows.push_back(run_instance(n, Mode::Nested, opts));
  }
  return rows;
}

std::string to_json(const std::vector<Row>& rows, const Options& opts) {
  nlohmann::ordered_json j;
  j["scale"] = opts.scale;
  j["runs"] = opts.runs;
  j["jobs"] = opts.jobs;
  auto& arr = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json o;
    o["nodes"] = r.nodes;
    o["mode"] = std::string(to_string(r.mode));
    o["completed"] = r.completed;
    if (r.completed) {
      o["result"] = std::stoull(r.result);
      o["time_ms"] = r.time_ms;
      o["run_times_ms"] = r.run_times_ms;
      o["tasks"] = r.tasks;
      o["states"] = r.states;
    } else {
      o["note"] = r.note;
    }
    arr.push_back(std::move(o));
  }
  return j.dump(2);
}

std::string format_table(const std::vector<Row>& rows) {
  std::vector<std::size_t> sizes;
  std::map<std::pair<std::size_t, Mode>, const Row*> by_key;
  for (const auto& r : rows) {
    if (std::find(sizes.begin(), sizes.end(), r.nodes) == sizes.end()) sizes.push_back(r.nodes);
    by_key[{r.nodes, r.mode}] = &r;
  }
  auto cell = [&](std::size_t n, Mode m) -> std::string {
    auto it = by_key.find({n, m});
    if (it == by_key.end()) return "-";
    if (!it->second->completed) return "refused";
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << it->second->time_ms;
    return os.str();
  };
  const bool has_flat = std::any_of(rows.begin(), rows.end(),
                                    [](const Row& r) { return r.mode == Mode::Flat; });
  const bool has_nested = std::any_of(rows.begin(), rows.end(),
                                      [](const Row& r) { return r.mode == Mode::Nested; });

  std::vector<std::vector<std::string>> table;
  table.push_back({"Number of nodes"});
  for (auto n : sizes) table.back().push_back(std::to_string(n));
  if (has_flat) {
    table.push_back({"Runtime flattened (ms)"});
    for (auto n : sizes) table.back().push_back(cell(n, Mode::Flat));
  }
  if (has_nested) {
    table.push_back({"Runtime nested (ms)"});
    for (auto n : sizes) table.back().push_back(cell(n, Mode::Nested));
  }
  std::vector<std::size_t> width(sizes.size() + 1, 0);
  for (const auto& line : table) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::ostringstream os;
  for (const auto& line : table) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c) os << " | ";
      os << std::setw(static_cast<int>(width[c])) << (c ? std::right : std::left) << line[c];
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace nestcheck::bench
