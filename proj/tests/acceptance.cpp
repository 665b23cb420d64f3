// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nestcheck/bench.hpp"
#include "nestcheck/checker.hpp"
#include "nestcheck/cluster.hpp"
#include "nestcheck/error.hpp"
#include "nestcheck/eval.hpp"
#include "nestcheck/task_dag.hpp"
#include "oracles.hpp"

using namespace nestcheck;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kFixtures = NESTCHECK_FIXTURES;

// Collects failed sub-checks of one criterion.
struct Verdict {
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 20) failures.push_back(what);
    if (!ok && failures.size() == 20) failures.push_back("(further failures omitted)");
  }
  bool ok() const { return failures.empty(); }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

mpq_class to_mpq(const oracle::Rational& r) {
  return mpq_class(boost::multiprecision::numerator(r).str() + "/" +
                   boost::multiprecision::denominator(r).str());
}

EvalConfig config_for(const fs::path& dir, std::size_t jobs) {
  EvalConfig c;
  c.models_dir = dir;
  c.jobs = jobs;
  return c;
}

// ---------------------------------------------------------------------------

Verdict semantics() {
  Verdict v;
  const auto start = Clock::now();
  const auto basic = kFixtures / "basic";
  const auto cfg = config_for(basic, 1);

  oracle::RefGenerator gen(20240611);
  int agreed = 0, errors = 0;
  for (int i = 0; i < 10'000; ++i) {
    const auto ref = gen.generate(5);
    const auto text = oracle::ref_text(*ref);
    std::optional<oracle::BigInt> expected;
    try {
      expected = oracle::ref_eval(*ref, {});
    } catch (const oracle::DivideByZero&) {
    }
    try {
      const auto got = eval(*parse_problem(text), Context{}, cfg);
      v.expect(expected && got.get_str() == expected->str(), "random expression #" + std::to_string(i));
      if (expected) ++agreed;
    } catch (const EvalError&) {
      v.expect(!expected, "unexpected error on random expression #" + std::to_string(i));
      ++errors;
    } catch (const std::exception& e) {
      v.expect(false, "random expression #" + std::to_string(i) + ": " + e.what());
    }
  }

  auto value = [&](const std::string& text) { return run_problem(*parse_problem(text), cfg).value; };
  auto throws = [&](const std::string& text) {
    try {
      value(text);
    } catch (const EvalError&) {
      return true;
    }
    return false;
  };
  // Literal.
  v.expect(value("42") == 42, "literal");
  // Constant lookup.
  const auto ctx = Context{}.extend({{"k", mpz_class(9)}});
  v.expect(eval(*parse_problem_unchecked("k"), ctx, cfg) == 9, "constant lookup");
  try {
    eval(*parse_problem_unchecked("u"), ctx, cfg);
    v.expect(false, "unbound constant accepted");
  } catch (const EvalError&) {
  }
  // Operators, with floor division.
  v.expect(value("(0 - 7) / 2") == -4, "floor division");
  v.expect(value("7 / 2 * 2 + 7 - 7 / 2 * 2") == 7, "operator precedence");
  v.expect(throws("1 / (2 - 2)"), "division by zero");
  // Model checking a standard model.
  v.expect(value("mc(Coin, \"reach g\")") == 500, "mc on a standard model");
  v.expect(value("mc(Trap, \"deadlockfree\")") == 0, "deadlock property");
  // Instantiating a template with evaluated arguments.
  v.expect(value("mc(Dice(w = 1, v = 3), \"reach g\")") == 250, "template instantiation");
  v.expect(value("mc(Dice(w = mc(Coin, \"reach g\"), v = 500), \"reach g\")") == 500,
           "template argument from a nested mc");
  v.expect(throws("mc(Dice(w = 1), \"reach g\")"), "missing template argument");
  // Let: bindings evaluated in the enclosing context, body in the extended one.
  v.expect(value("let x = 1 in let x = x + 1, y = 10 in x * y") == 20, "let scoping");
  v.expect(value("let x = 1 in (let x = 5 in x) + x") == 6, "let shadowing restored");

  const double secs = seconds_since(start);
  v.expect(secs < 30.0, "runtime " + std::to_string(secs) + " s exceeds 30 s");
  v.notes.push_back(std::to_string(agreed) + " values and " + std::to_string(errors) +
                    " division errors matched, " + std::to_string(secs).substr(0, 5) + " s");
  return v;
}

// ---------------------------------------------------------------------------

Verdict solver() {
  Verdict v;
  const auto start = Clock::now();
  std::mt19937_64 rng(777);
  CheckOptions exact;
  exact.exact_threshold = 1'000'000;
  CheckOptions iterative;
  iterative.exact_threshold = 0;

  struct Entry {
    oracle::Chain chain;
    bool acyclic;
  };
  std::vector<Entry> corpus;
  for (int i = 0; i < 24; ++i) {
    oracle::ChainShape shape;
    const bool mdp = i % 3 == 2;
    const bool acyclic = i % 3 == 1;
    shape.min_states = 5;
    // Path enumeration is exponential, so acyclic members stay small.
    shape.max_states = acyclic ? 16 : 50;
    shape.acyclic = acyclic;
    shape.goal_density = 0.1;
    shape.max_actions = mdp ? 3 : 1;
    corpus.push_back({oracle::random_chain(rng, shape, mdp), acyclic});
  }

  int mdps = 0, dtmcs = 0, acyclic = 0, simulated = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& [chain, is_acyclic] = corpus[i];
    const auto model = parse_model(oracle::to_sm(chain));
    const std::string tag = "model " + std::to_string(i);
    if (chain.mdp) {
      ++mdps;
      for (auto mode : {Optimize::Min, Optimize::Max}) {
        const auto e = mdp_reach_prob(model, "g", mode, exact);
        const auto a = mdp_reach_prob(model, "g", mode, iterative);
        v.expect(e.exact.has_value(), tag + ": no exact result");
        if (e.exact) {
          const double av = a.exact ? a.exact->get_d() : a.approx;
          v.expect(std::abs(e.exact->get_d() - av) <= 2e-10, tag + ": iteration differs from exact");
        }
      }
      continue;
    }
    ++dtmcs;
    const auto e = dtmc_reach_prob(model, "g", exact);
    const auto a = dtmc_reach_prob(model, "g", iterative);
    v.expect(e.exact.has_value(), tag + ": no exact result");
    if (!e.exact) continue;
    const double av = a.exact ? a.exact->get_d() : a.approx;
    v.expect(std::abs(e.exact->get_d() - av) <= 2e-10, tag + ": iteration differs from exact");
    v.expect(*e.exact == to_mpq(oracle::dtmc_reach(chain)), tag + ": differs from dense elimination");
    if (is_acyclic) {
      ++acyclic;
      const auto paths = oracle::path_enumeration(chain);
      v.expect(*e.exact == to_mpq(paths), tag + ": differs from path enumeration");
      v.expect(mc(model, parse_property("reach g"), {}).value == oracle::round_half_up(paths, 1000),
               tag + ": rounded value differs from path enumeration");
    }
    const std::uint64_t trials = 1'000'000;
    const double p = e.exact->get_d();
    const double freq = oracle::monte_carlo(chain, trials, 9000 + i);
    const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(trials));
    v.expect(std::abs(freq - p) <= 4 * sigma + 1e-12, tag + ": simulation outside 4 sigma");
    ++simulated;
  }

  const double secs = seconds_since(start);
  v.expect(secs < 120.0, "runtime " + std::to_string(secs) + " s exceeds 2 min");
  v.notes.push_back(std::to_string(dtmcs) + " DTMCs (" + std::to_string(acyclic) + " acyclic, " +
                    std::to_string(simulated) + " simulated), " + std::to_string(mdps) + " MDPs, " +
                    std::to_string(secs).substr(0, 5) + " s");
  return v;
}

// ---------------------------------------------------------------------------

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() /
             ("nestcheck-accept-" + std::to_string(::getpid()) + "-" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Verdict cluster_agreement() {
  Verdict v;
  const auto start = Clock::now();
  constexpr std::uint64_t scale = 1'000'000;
  std::ostringstream summary;
  for (std::size_t n : {2, 3, 4, 6, 8}) {
    cluster::ClusterParams p;
    p.nodes = n;
    TempDir dir("c" + std::to_string(n));
    cluster::write_cluster_files(p, dir.path, scale);
    auto run = [&](const std::string& file) {
      auto cfg = config_for(dir.path, 1);
      cfg.check.scale = scale;
      return run_problem(*parse_problem(read(dir.path / file)), cfg).value;
    };
    const mpz_class nested = run("cluster.nmc");
    const mpz_class flat = run("flat.nmc");
    const mpz_class gap = abs(nested - flat);
    v.expect(gap <= n, "N=" + std::to_string(n) + ": nested " + nested.get_str() + " vs flattened " +
                           flat.get_str());
    summary << " N=" << n << ":" << nested.get_str() << "/" << flat.get_str();
    if (n <= 3) {
      std::vector<oracle::Rational> probs;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& w = p.is_premium(i) ? p.premium : p.normal;
        probs.push_back(oracle::node_down({w.hack, w.patch, w.isolate, w.recover, w.stay}));
      }
      const auto truth =
          oracle::round_half_up(oracle::at_least_down(probs, p.critical_threshold()), scale);
      const mpz_class t(std::to_string(truth));
      v.expect(abs(nested - t) <= 1, "N=" + std::to_string(n) + ": nested vs brute force " +
                                         std::to_string(truth));
      v.expect(abs(flat - t) <= 1, "N=" + std::to_string(n) + ": flattened vs brute force " +
                                       std::to_string(truth));
    }
  }
  const double secs = seconds_since(start);
  v.expect(secs < 60.0, "runtime " + std::to_string(secs) + " s exceeds 1 min");
  v.notes.push_back("nested/flattened" + summary.str() + ", " + std::to_string(secs).substr(0, 5) +
                    " s");
  return v;
}

// ---------------------------------------------------------------------------

Verdict timing() {
  Verdict v;
  bench::Options opts;
  opts.runs = 5;
  opts.jobs = 1;
  const auto nested8 = bench::run_instance(8, bench::Mode::Nested, opts);
  const auto nested34 = bench::run_instance(34, bench::Mode::Nested, opts);
  const auto flat8 = bench::run_instance(8, bench::Mode::Flat, opts);
  const auto flat16 = bench::run_instance(16, bench::Mode::Flat, opts);
  auto ms = [](double x) {
    std::ostringstream os;
    os.precision(3);
    os << x << " ms";
    return os.str();
  };
  const double nested_ratio = nested34.time_ms / nested8.time_ms;
  const double flat_ratio = flat16.time_ms / flat8.time_ms;
  v.expect(nested_ratio <= 3.0, "(a) nested N=34 " + ms(nested34.time_ms) + " is " +
                                    std::to_string(nested_ratio) + "x nested N=8 " +
                                    ms(nested8.time_ms) + ", limit 3x");
  v.expect(flat_ratio >= 10.0, "(b) flattened N=16 " + ms(flat16.time_ms) + " is only " +
                                   std::to_string(flat_ratio) + "x flattened N=8");
  v.expect(nested34.time_ms < 10'000.0, "(c) nested N=34 takes " + ms(nested34.time_ms));
  std::ostringstream note;
  note.precision(3);
  note << "nested N=8 " << ms(nested8.time_ms) << ", N=34 " << ms(nested34.time_ms) << " (ratio "
       << nested_ratio << "); flattened N=8 " << ms(flat8.time_ms) << ", N=16 "
       << ms(flat16.time_ms) << " (ratio " << flat_ratio << ")";
  v.notes.push_back(note.str());
  return v;
}

// ---------------------------------------------------------------------------

struct CliRun {
  int status = -1;
  std::string out;
};

CliRun cli(const std::string& args) {
  static int counter = 0;
  const auto out = fs::temp_directory_path() /
                   ("nestcheck-accept-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  const std::string cmd =
      std::string("\"") + NESTCHECK_CLI + "\" " + args + " >" + out.string() + " 2>/dev/null";
  const int raw = std::system(cmd.c_str());
  CliRun r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = read(out);
  fs::remove(out);
  return r;
}

Verdict determinism() {
  Verdict v;
  TempDir dir("det");
  for (const auto& f : fs::directory_iterator(kFixtures / "basic")) {
    fs::copy_file(f.path(), dir.path / f.path().filename());
  }
  std::ofstream(dir.path / "mixed.nmc")
      << "let a = mc(Coin, \"reach g\"), b = mc(Dice(w = 3, v = 1), \"reach g\"),\n"
         "    c = mc(Door, \"reach open\")\n"
         "in mc(Dice(w = a + c, v = b), \"reach g\") * 3 + mc(Choice, \"reachmax goal\")\n"
         "   - mc(Choice, \"reachmin goal\") + mc(Coin, \"reach g\") - a / 7\n";

  const std::regex result_field(R"("result"\s*:\s*(-?[0-9]+))");
  const std::vector<std::pair<fs::path, fs::path>> problems{
      {kFixtures / "layered" / "layered.nmc", kFixtures / "layered"},
      {dir.path / "mixed.nmc", dir.path},
      {dir.path / "twice.nmc", dir.path}};
  for (const auto& [problem, models] : problems) {
    std::optional<std::string> base_result, base_tasks;
    for (std::size_t jobs : {1, 2, 8}) {
      const auto r = cli("check --json --jobs " + std::to_string(jobs) + " --problem " +
                         problem.string() + " --models " + models.string());
      const std::string tag = problem.filename().string() + " jobs=" + std::to_string(jobs);
      v.expect(r.status == 0, tag + ": exit status " + std::to_string(r.status));
      if (r.status != 0) continue;
      std::smatch m;
      v.expect(std::regex_search(r.out, m, result_field), tag + ": no result field");
      const std::string result = m.size() > 1 ? m[1].str() : "";
      auto tasks = nlohmann::json::parse(r.out)["tasks"];
      for (auto& t : tasks) t.erase("time_ms");
      const std::string task_text = tasks.dump();
      if (!base_result) {
        base_result = result;
        base_tasks = task_text;
      }
      v.expect(result == *base_result, tag + ": result bytes differ");
      v.expect(task_text == *base_tasks, tag + ": task set differs");
    }
  }

  for (std::size_t jobs : {1, 2, 8}) {
    const auto r = run_problem(*parse_problem("mc(Coin, \"reach g\") + mc(Coin, \"reach g\")"),
                               config_for(kFixtures / "basic", jobs));
    v.expect(r.checker_invocations == 1 && r.tasks.size() == 1,
             "duplicated task ran " + std::to_string(r.checker_invocations) + " times with jobs=" +
                 std::to_string(jobs));
  }
  v.notes.push_back("3 problems x jobs {1,2,8}, duplicate pair checked once");
  return v;
}

// ---------------------------------------------------------------------------

Verdict structure() {
  Verdict v;
  const auto layered = parse_problem(read(kFixtures / "layered" / "layered.nmc"));
  const auto dag = task_dag(*layered);
  v.expect(dag.nodes.size() == 5, "expected 5 tasks, got " + std::to_string(dag.nodes.size()));
  auto find = [&](const std::string& prefix, const std::string& prop) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
      if (dag.nodes[i].model.rfind(prefix, 0) == 0 && to_string(dag.nodes[i].property) == prop) {
        return i;
      }
    }
    v.expect(false, "no task " + prefix + " / " + prop);
    return std::nullopt;
  };
  const auto m2 = find("M2", "reach g2");
  const auto m3min = find("M3", "reachmin g3");
  const auto m1 = find("M1(", "reach g1");
  const auto m3max = find("M3", "reachmax g4");
  const auto m0 = find("M0(", "deadlockfree");
  if (m2 && m3min && m1 && m3max && m0) {
    std::vector<std::pair<std::size_t, std::size_t>> expected{
        {*m2, *m1}, {*m3min, *m1}, {*m1, *m0}, {*m3max, *m0}};
    std::sort(expected.begin(), expected.end());
    v.expect(dag.edges() == expected, "edge set differs");
    v.expect(dag.is_acyclic(), "graph has a cycle");
  }

  try {
    parse_problem(read(kFixtures / "layered" / "sibling.nmc"));
    v.expect(false, "sibling reference accepted");
  } catch (const StaticError& e) {
    v.notes.push_back(std::string("sibling program rejected: ") + e.what());
  } catch (const std::exception& e) {
    v.expect(false, std::string("sibling program failed with the wrong error: ") + e.what());
  }
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {"1 evaluation semantics", semantics},
      {"2 probabilistic solver", solver},
      {"3 nested vs flattened cluster", cluster_agreement},
      {"4 runtime trends", timing},
      {"5 parallel determinism and deduplication", determinism},
      {"6 task graph and static checks", structure},
  };
  bool all = true;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.failures.push_back(std::string("exception: ") + e.what());
    }
    all = all && v.ok();
    std::cout << (v.ok() ? "PASS " : "FAIL ") << c.name << '\n';
    for (const auto& n : v.notes) std::cout << "     " << n << '\n';
    for (const auto& f : v.failures) std::cout << "     failed: " << f << '\n';
    std::cout.flush();
  }
  return all ? 0 : 1;
}
