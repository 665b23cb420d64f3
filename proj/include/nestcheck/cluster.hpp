#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "nestcheck/model.hpp"

namespace nestcheck::cluster {

/// Denominator of the per-node transition weights.
inline constexpr Weight kWeightScale = 1000;

/// Per-mille weights of one node type. At every decision point the two
/// outgoing weights sum to kWeightScale: hack vs. not hacked, patch vs.
/// isolate, recover vs. stay isolated.
struct NodeWeights {
  Weight hack = 0;
  Weight patch = 0;
  Weight isolate = 0;
  Weight recover = 0;
  Weight stay = 0;

  void validate(std::string_view type) const;
};

struct ClusterParams {
  std::size_t nodes = 8;
  NodeWeights normal{300, 500, 500, 400, 600};
  NodeWeights premium{400, 800, 200, 700, 300};
  /// The cluster is critical once at least ceil(fraction * nodes) are down.
  std::uint64_t fraction_num = 1;
  std::uint64_t fraction_den = 2;

  std::size_t normal_count() const { return 4 * nodes / 5; }
  std::size_t premium_count() const { return nodes - normal_count(); }
  std::size_t critical_threshold() const;
  bool is_premium(std::size_t node) const { return node >= normal_count(); }

  void validate() const;
};

/// Reads `key = value` lines (`normal.hack = 300`, `critical_fraction = 1/2`,
/// ...) on top of `base`. Throws SyntaxError.
ClusterParams parse_params(std::string_view text, ClusterParams base = {});
ClusterParams load_params(const std::filesystem::path& file, ClusterParams base = {});

/// Node-level template: safe / compromised / isolated plus absorbing ok and
/// down, with every weight a placeholder so one template serves both types.
std::string generate_node_model();

/// Cluster-level template over (node index, down count) with placeholders
/// for each node type's down probability and its complement.
std::string generate_cluster_model(const ClusterParams& params);

/// Number of states of `generate_cluster_model`: (N + 1)(N + 2) / 2.
std::size_t cluster_state_count(std::size_t nodes);

inline constexpr std::size_t kDefaultFlatBound = 22;

/// Single DTMC checking the nodes one after another with every node's full
/// dynamics inlined and the per-node outcome kept in the state. Throws
/// Error above `max_nodes`.
std::string generate_flattened_model(const ClusterParams& params,
                                     std::size_t max_nodes = kDefaultFlatBound);

/// Number of states of `generate_flattened_model`: 4 * 2^N - 3.
std::size_t flattened_state_count(std::size_t nodes);

/// Two node-level tasks feeding one cluster-level task. `scale` must match
/// the scale the problem is checked at (complements are `scale - p`).
std::string emit_nested_problem(const ClusterParams& params, std::uint64_t scale);
std::string emit_flattened_problem();

/// Writes Node.mm, Cluster.mm, cluster.nmc and, within the bound, Flat.sm
/// and flat.nmc. Returns whether the flattened files were written.
bool write_cluster_files(const ClusterParams& params, const std::filesystem::path& dir,
                         std::uint64_t scale, std::size_t flat_bound = kDefaultFlatBound);

}  // namespace nestcheck::cluster
