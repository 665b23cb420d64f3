#include "nestcheck/task_dag.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace nestcheck {

std::vector<std::pair<std::size_t, std::size_t>> TaskDag::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (auto d : nodes[i].deps) out.emplace_back(d, i);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool TaskDag::is_acyclic() const {
  // Kahn's algorithm.
  std::vector<std::size_t> indegree(nodes.size(), 0);
  std::vector<std::vector<std::size_t>> succ(nodes.size());
  for (const auto& [from, to] : edges()) {
    ++indegree[to];
    succ[from].push_back(to);
  }
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (indegree[i] == 0) ready.push_back(i);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    auto n = ready.back();
    ready.pop_back();
    ++visited;
    for (auto s : succ[n]) {
      if (--indegree[s] == 0) ready.push_back(s);
    }
  }
  return visited == nodes.size();
}

namespace {

struct Symbolic {
  std::string text;
  std::set<std::size_t> tasks;
};

using Env = std::map<std::string, Symbolic>;

class DagBuilder {
 public:
  Symbolic visit(const Expr& e, const Env& env) {
    return std::visit(
        [&](const auto& x) -> Symbolic {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, ast::Lit>) {
            return {x.value.get_str(), {}};
          } else if constexpr (std::is_same_v<T, ast::Const>) {
            auto it = env.find(x.name);
            if (it == env.end()) return {x.name, {}};
            return it->second;
          } else if constexpr (std::is_same_v<T, ast::Op>) {
            // Parenthesized so that every key fragment is self-delimiting.
            auto l = visit(*x.lhs, env);
            auto r = visit(*x.rhs, env);
            l.tasks.insert(r.tasks.begin(), r.tasks.end());
            return {"(" + l.text + " " + symbol(x.op) + " " + r.text + ")", std::move(l.tasks)};
          } else if constexpr (std::is_same_v<T, ast::Mc>) {
            return mc_node(x, env);
          } else {
            Env inner = env;
            for (const auto& b : x.bindings) inner[b.name] = visit(*b.expr, env);
            return visit(*x.body, inner);
          }
        },
        e.node);
  }

  TaskDag dag;

 private:
  Symbolic mc_node(const ast::Mc& mc, const Env& env) {
    std::string model = mc.model.name;
    std::set<std::size_t> deps;
    if (mc.model.instantiated) {
      model += "(";
      for (std::size_t i = 0; i < mc.model.args.size(); ++i) {
        auto arg = visit(*mc.model.args[i].expr, env);
        if (i) model += ", ";
        model += mc.model.args[i].name + " = " + arg.text;
        deps.insert(arg.tasks.begin(), arg.tasks.end());
      }
      model += ")";
    }
    const std::string key = "mc(" + model + ", \"" + to_string(mc.property) + "\")";
    auto [it, inserted] = index_.try_emplace(key, dag.nodes.size());
    if (inserted) dag.nodes.push_back({model, mc.property, {deps.begin(), deps.end()}});
    return {key, {it->second}};
  }

  std::map<std::string, std::size_t> index_;
};

}  // namespace

TaskDag task_dag(const Expr& e) {
  DagBuilder b;
  b.visit(e, {});
  return std::move(b.dag);
}

}  // namespace nestcheck
