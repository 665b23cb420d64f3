#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "nestcheck/expr.hpp"

namespace nestcheck {

/// A verification task identified symbolically: the model reference with
/// every constant replaced by its defining expression, plus the property.
struct TaskNode {
  std::string model;
  Property property;
  /// Indices of the tasks whose results feed this task's model arguments.
  std::vector<std::size_t> deps;
};

/// Static task graph of a problem. Nodes are stored in a topological order
/// (every dependency precedes its dependents).
struct TaskDag {
  std::vector<TaskNode> nodes;

  /// (producer, consumer) pairs, sorted.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;
  bool is_acyclic() const;
};

/// Extracts the task graph without evaluating arithmetic. `e` must have
/// passed the static checks.
TaskDag task_dag(const Expr& e);

}  // namespace nestcheck
