#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nestcheck/cluster.hpp"

namespace nestcheck::bench {

enum class Mode { Nested, Flat };

std::string_view to_string(Mode mode);

struct Row {
  std::size_t nodes = 0;
  Mode mode = Mode::Nested;
  /// False when the instance was refused (flattened size bound).
  bool completed = false;
  std::string note;
  std::string result;  // decimal value at the configured scale
  double time_ms = 0.0;  // mean over runs
  std::vector<double> run_times_ms;
  std::size_t tasks = 0;
  std::size_t states = 0;
};

struct Options {
  std::size_t min_nodes = 8;
  std::size_t max_nodes = 34;
  std::size_t step = 2;
  bool nested = true;
  bool flat = true;
  cluster::ClusterParams params;  // `nodes` is overridden per instance
  std::uint64_t scale = 1000;
  std::size_t runs = 5;
  std::size_t jobs = 1;
  std::size_t flat_bound = cluster::kDefaultFlatBound;
  /// Scratch directory for generated files; a temporary one when empty.
  std::filesystem::path work_dir;
};

/// Runs one instance: generates its files, then times `runs` evaluations of
/// the problem (generation and file writing are not timed).
Row run_instance(std::size_t nodes, Mode mode, const Options& opts);

std::vector<Row> run_cluster_bench(const Options& opts);

std::string to_json(const std::vector<Row>& rows, const Options& opts);

/// Plain-text table with one column per node count.
std::string format_table(const std::vector<Row>& rows);

}  // namespace nestcheck::bench
