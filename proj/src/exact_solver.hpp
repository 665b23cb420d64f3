#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <utility>
#include <vector>

#include "nestcheck/model.hpp"

namespace nestcheck::detail {

/// One equation  total * x_i - sum(w * x_j) = rhs  of a weighted chain, where
/// the sum runs over edges to other unknowns and `rhs` already folds in the
/// edges to states of known value.
struct ChainRow {
  std::vector<std::pair<std::uint32_t, Weight>> inner;
  mpq_class rhs;
  Weight total = 0;
};

/// Solves the chain exactly. Unknowns that cannot reach a row with nonzero
/// rhs get value 0; the rest is solved SCC by SCC in reverse topological
/// order with sparse rational elimination inside each component.
std::vector<mpq_class> solve_chain_exact(const std::vector<ChainRow>& rows);

/// Strongly connected components of the inner-edge graph, emitted sinks first.
std::vector<std::vector<std::uint32_t>> chain_sccs(const std::vector<ChainRow>& rows);

}  // namespace nestcheck::detail
