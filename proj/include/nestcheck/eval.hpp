#pragma once

#include <gmpxx.h>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "nestcheck/checker.hpp"
#include "nestcheck/expr.hpp"
#include "nestcheck/meta.hpp"
#include "nestcheck/model.hpp"

namespace nestcheck {

/// Immutable set of valued bindings. `extend` shares the parent frames.
class Context {
 public:
  Context() = default;

  Context extend(std::vector<std::pair<std::string, mpz_class>> values) const;
  const mpz_class* find(std::string_view name) const;

 private:
  struct Frame {
    std::map<std::string, mpz_class, std::less<>> values;
    std::shared_ptr<const Frame> parent;
  };
  std::shared_ptr<const Frame> top_;
};

/// Loads `Name.sm` / `Name.mm` from a directory once per name. Thread-safe.
class ModelRepository {
 public:
  struct Standard {
    std::shared_ptr<const StandardModel> model;
    ModelDigest digest;
  };
  using Entry = std::variant<Standard, std::shared_ptr<const MetaModel>>;

  explicit ModelRepository(std::filesystem::path dir);

  /// Throws EvalError when the model is missing, ambiguous or malformed.
  const Entry& get(const std::string& name);

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const Entry>> loaded_;
};

struct EvalConfig {
  CheckOptions check;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  bool cache = true;
  std::filesystem::path models_dir = ".";
};

/// One distinct verification task of a run, keyed by (model digest, property).
struct TaskReport {
  ModelDigest digest;
  /// Concrete model reference, e.g. `Node(hack = 300, patch = 500)`.
  std::string model;
  Property property;
  CheckResult result;
  std::size_t requests = 0;
  std::size_t invocations = 0;
  std::size_t cache_hits = 0;
  double time_ms = 0.0;
  /// Smallest mc ordinal that requested the task; reports are sorted by it.
  std::size_t first_ordinal = 0;

  bool cached() const noexcept { return cache_hits > 0; }
};

struct RunResult {
  mpz_class value;
  std::vector<TaskReport> tasks;
  std::size_t checker_invocations = 0;
  double total_time_ms = 0.0;
};

/// Evaluates a statically checked problem. The value and the task set are
/// independent of `jobs` and of the cache switch.
RunResult run_problem(const Expr& problem, const EvalConfig& config);

/// Evaluates `e` under `ctx` against `config`; convenience for callers that
/// only need the value.
mpz_class eval(const Expr& e, const Context& ctx, const EvalConfig& config);

/// Integer arithmetic used by evaluation: floor division, error on zero divisor.
mpz_class apply(BinOp op, const mpz_class& lhs, const mpz_class& rhs);

}  // namespace nestcheck
