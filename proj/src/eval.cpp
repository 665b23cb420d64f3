#include "nestcheck/eval.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <future>
#include <sstream>

#include "nestcheck/error.hpp"
#include "nestcheck/parallel.hpp"

namespace nestcheck {

Context Context::extend(std::vector<std::pair<std::string, mpz_class>> values) const {
  auto frame = std::make_shared<Frame>();
  for (auto& [name, value] : values) frame->values.insert_or_assign(name, std::move(value));
  frame->parent = top_;
  Context out;
  out.top_ = std::move(frame);
  return out;
}

const mpz_class* Context::find(std::string_view name) const {
  for (const Frame* f = top_.get(); f != nullptr; f = f->parent.get()) {
    if (auto it = f->values.find(name); it != f->values.end()) return &it->second;
  }
  return nullptr;
}

mpz_class apply(BinOp op, const mpz_class& lhs, const mpz_class& rhs) {
  switch (op) {
    case BinOp::Add: return lhs + rhs;
    case BinOp::Sub: return lhs - rhs;
    case BinOp::Mul: return lhs * rhs;
    case BinOp::Div: {
      if (sgn(rhs) == 0) throw EvalError("division by zero");
      mpz_class q;
      mpz_fdiv_q(q.get_mpz_t(), lhs.get_mpz_t(), rhs.get_mpz_t());
      return q;
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Model files

ModelRepository::ModelRepository(std::filesystem::path dir) : dir_(std::move(dir)) {}

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw EvalError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

const ModelRepository::Entry& ModelRepository::get(const std::string& name) {
  std::lock_guard lock(mutex_);
  if (auto it = loaded_.find(name); it != loaded_.end()) return *it->second;

  const auto sm = dir_ / (name + ".sm");
  const auto mm = dir_ / (name + ".mm");
  const bool has_sm = std::filesystem::exists(sm);
  const bool has_mm = std::filesystem::exists(mm);
  if (has_sm && has_mm) {
    throw EvalError("model '" + name + "' is ambiguous: both " + sm.string() + " and " +
                    mm.string() + " exist");
  }
  if (!has_sm && !has_mm) {
    throw EvalError("model '" + name + "' not found (no " + name + ".sm or " + name +
                    ".mm in " + dir_.string() + ")");
  }
  std::shared_ptr<const Entry> entry;
  const auto& path = has_sm ? sm : mm;
  try {
    const auto text = read_file(path);
    if (has_sm) {
      auto model = std::make_shared<const StandardModel>(parse_model(text));
      entry = std::make_shared<const Entry>(Standard{model, canonical_hash(*model)});
    } else {
      entry = std::make_shared<const Entry>(std::make_shared<const MetaModel>(parse_meta(text)));
    }
  } catch (const EvalError&) {
    throw;
  } catch (const Error& e) {
    throw EvalError(path.string() + ": " + e.what());
  }
  return *loaded_.emplace(name, std::move(entry)).first->second;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// Get-or-compute store for check results. With caching on, a key is
/// computed once and concurrent requesters wait for that computation.
class ResultCache {
 public:
  explicit ResultCache(bool enabled) : enabled_(enabled) {}

  template <class Compute>
  CheckResult get(const ModelDigest& digest, const Property& property, std::uint64_t scale,
                  const std::string& model_desc, std::size_t ordinal, Compute&& compute) {
    Key key{digest, to_string(property), scale};
    std::shared_future<CheckResult> pending;
    std::promise<CheckResult> promise;
    bool owner = false;
    {
      std::lock_guard lock(mutex_);
      auto [it, inserted] = entries_.try_emplace(key);
      auto& e = it->second;
      ++e.report.requests;
      if (inserted) {
        e.report.digest = digest;
        e.report.model = model_desc;
        e.report.property = property;
        e.report.first_ordinal = ordinal;
        e.future = promise.get_future().share();
        owner = true;
      } else {
        e.report.first_ordinal = std::min(e.report.first_ordinal, ordinal);
        if (!enabled_) {
          ++e.report.invocations;
        }
        pending = e.future;
      }
      if (inserted) ++e.report.invocations;
    }
    if (owner || !enabled_) {
      const auto start = Clock::now();
      std::exception_ptr error;
      CheckResult result;
      try {
        result = compute();
      } catch (...) {
        error = std::current_exception();
      }
      const double elapsed = ms_since(start);
      {
        std::lock_guard lock(mutex_);
        auto& e = entries_.at(key);
        e.report.time_ms += elapsed;
        if (!error) e.report.result = result;
      }
      if (owner) {
        if (error) promise.set_exception(error);
        else promise.set_value(result);
      }
      if (error) std::rethrow_exception(error);
      return result;
    }
    return pending.get();
  }

  std::vector<TaskReport> reports() const {
    std::lock_guard lock(mutex_);
    std::vector<TaskReport> out;
    for (const auto& [key, e] : entries_) {
      auto r = e.report;
      r.cache_hits = r.requests - r.invocations;
      out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(), [](const TaskReport& a, const TaskReport& b) {
      return a.first_ordinal < b.first_ordinal;
    });
    return out;
  }

  std::size_t invocations() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& [key, e] : entries_) n += e.report.invocations;
    return n;
  }

 private:
  struct Key {
    ModelDigest digest;
    std::string property;
    std::uint64_t scale;
    auto operator<=>(const Key&) const = default;
  };
  struct Entry {
    std::shared_future<CheckResult> future;
    TaskReport report;
  };

  bool enabled_;
  mutable std::mutex mutex_;
  std::map<Key, Entry> entries_;
};

class Engine {
 public:
  explicit Engine(const EvalConfig& config)
      : config_(config),
        repo_(config.models_dir),
        cache_(config.cache),
        pool_(config.jobs > 1 ? std::make_unique<WorkerPool>(config.jobs - 1) : nullptr) {}

  mpz_class eval(const Expr& e, const Context& ctx) {
    return std::visit(
        [&](const auto& x) -> mpz_class {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, ast::Lit>) {
            return x.value;
          } else if constexpr (std::is_same_v<T, ast::Const>) {
            const auto* v = ctx.find(x.name);
            if (v == nullptr) throw EvalError("unbound constant '" + x.name + "'");
            return *v;
          } else if constexpr (std::is_same_v<T, ast::Op>) {
            const std::vector<const Expr*> operands{x.lhs.get(), x.rhs.get()};
            auto v = eval_all(operands, ctx);
            return apply(x.op, v[0], v[1]);
          } else if constexpr (std::is_same_v<T, ast::Mc>) {
            return eval_mc(x, ctx);
          } else {
            std::vector<const Expr*> exprs;
            for (const auto& b : x.bindings) exprs.push_back(b.expr.get());
            auto values = eval_all(exprs, ctx);
            std::vector<std::pair<std::string, mpz_class>> frame;
            for (std::size_t i = 0; i < values.size(); ++i) {
              frame.emplace_back(x.bindings[i].name, std::move(values[i]));
            }
            return eval(*x.body, ctx.extend(std::move(frame)));
          }
        },
        e.node);
  }

  std::vector<TaskReport> reports() const { return cache_.reports(); }
  std::size_t invocations() const { return cache_.invocations(); }

 private:
  /// Evaluates independent subexpressions; they are handed to the pool only
  /// when at least two of them contain verification tasks.
  std::vector<mpz_class> eval_all(const std::vector<const Expr*>& exprs, const Context& ctx) {
    const auto with_tasks = std::count_if(exprs.begin(), exprs.end(),
                                          [](const Expr* e) { return e->has_mc; });
    if (pool_ && with_tasks >= 2) {
      return parallel_map<mpz_class>(pool_.get(), exprs.size(),
                                     [&](std::size_t i) { return eval(*exprs[i], ctx); });
    }
    std::vector<mpz_class> out;
    out.reserve(exprs.size());
    for (const auto* e : exprs) out.push_back(eval(*e, ctx));
    return out;
  }

  mpz_class eval_mc(const ast::Mc& mc, const Context& ctx) {
    const auto& entry = repo_.get(mc.model.name);
    std::shared_ptr<const StandardModel> model;
    ModelDigest digest;
    std::string desc = mc.model.name;

    if (const auto* standard = std::get_if<ModelRepository::Standard>(&entry)) {
      if (!mc.model.args.empty()) {
        throw EvalError("'" + mc.model.name + "' is a standard model and takes no arguments");
      }
      model = standard->model;
      digest = standard->digest;
    } else {
      const auto& meta = *std::get<std::shared_ptr<const MetaModel>>(entry);
      std::vector<const Expr*> exprs;
      for (const auto& a : mc.model.args) exprs.push_back(a.expr.get());
      auto values = eval_all(exprs, ctx);
      std::vector<ValuedBinding> bindings;
      desc += "(";
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) desc += ", ";
        desc += mc.model.args[i].name + " = " + values[i].get_str();
        bindings.push_back({mc.model.args[i].name, std::move(values[i])});
      }
      desc += ")";
      try {
        model = std::make_shared<const StandardModel>(instantiate(meta, bindings));
      } catch (const Error& e) {
        throw EvalError("instantiating " + desc + ": " + e.what());
      }
      digest = canonical_hash(*model);
    }

    const auto result =
        cache_.get(digest, mc.property, config_.check.scale, desc, mc.ordinal, [&] {
          try {
            return nestcheck::mc(*model, mc.property, config_.check);
          } catch (const CheckError& e) {
            throw CheckError("checking mc(" + desc + ", \"" + to_string(mc.property) +
                             "\"): " + e.what());
          }
        });
    return mpz_class(static_cast<unsigned long>(result.value));
  }

  const EvalConfig& config_;
  ModelRepository repo_;
  ResultCache cache_;
  std::unique_ptr<WorkerPool> pool_;
};

}  // namespace

mpz_class eval(const Expr& e, const Context& ctx, const EvalConfig& config) {
  Engine engine(config);
  return engine.eval(e, ctx);
}

RunResult run_problem(const Expr& problem, const EvalConfig& config) {
  const auto start = Clock::now();
  Engine engine(config);
  RunResult out;
  out.value = engine.eval(problem, Context{});
  out.tasks = engine.reports();
  out.checker_invocations = engine.invocations();
  out.total_time_ms = ms_since(start);
  return out;
}

}  // namespace nestcheck
