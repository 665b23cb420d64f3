#include "nestcheck/checker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "exact_solver.hpp"
#include "nestcheck/error.hpp"

namespace nestcheck {

Property parse_property(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string head, label, extra;
  in >> head >> label >> extra;
  Property p;
  if (head == "deadlockfree" && label.empty()) {
    p.kind = Property::Kind::DeadlockFree;
    return p;
  }
  if (!label.empty() && extra.empty()) {
    p.label = label;
    if (head == "reach") p.kind = Property::Kind::Reach;
    else if (head == "reachmin") p.kind = Property::Kind::ReachMin;
    else if (head == "reachmax") p.kind = Property::Kind::ReachMax;
    else throw SyntaxError("unknown property '" + std::string(text) + "'", 0, 0);
    return p;
  }
  throw SyntaxError("malformed property '" + std::string(text) +
                        "' (expected reach/reachmin/reachmax <label> or deadlockfree)",
                    0, 0);
}

std::string to_string(const Property& p) {
  switch (p.kind) {
    case Property::Kind::Reach: return "reach " + p.label;
    case Property::Kind::ReachMin: return "reachmin " + p.label;
    case Property::Kind::ReachMax: return "reachmax " + p.label;
    case Property::Kind::DeadlockFree: return "deadlockfree";
  }
  return {};
}

std::uint64_t round_to_scale(const mpq_class& p, std::uint64_t scale) {
  // floor(p * scale + 1/2) = floor((2 * num * scale + den) / (2 * den))
  const mpz_class s(static_cast<unsigned long>(scale));
  mpz_class num = 2 * p.get_num() * s + p.get_den();
  mpz_class den = 2 * p.get_den();
  mpz_class q;
  mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  if (sgn(q) < 0) return 0;
  if (q > s) return scale;
  return q.get_ui();
}

std::uint64_t round_to_scale(double p, std::uint64_t scale) {
  const double v = std::floor(p * static_cast<double>(scale) + 0.5);
  if (!(v > 0)) return 0;
  if (v >= static_cast<double>(scale)) return scale;
  return static_cast<std::uint64_t>(v);
}

int check_reach_bool(const StandardModel& m, std::string_view label) {
  const auto* goal = m.find_label(label);
  if (goal == nullptr) throw CheckError("unknown label '" + std::string(label) + "'");
  const auto reach = reachable_mask(m);
  return std::any_of(goal->begin(), goal->end(), [&](StateId s) { return reach[s] != 0; }) ? 1
                                                                                          : 0;
}

int check_deadlock_free(const StandardModel& m) { return deadlock_states(m).empty() ? 1 : 0; }

namespace {

struct Edge {
  StateId target;
  Weight weight;
};

/// Per-state choices with nonzero edges only. DTMC states have one choice;
/// MDP states one per action. A state without any live choice gets a
/// self-loop, which is the absorbing convention for probability computation.
struct ChoiceGraph {
  std::vector<std::size_t> state_begin;
  std::vector<std::size_t> choice_begin;
  std::vector<StateId> owner;
  std::vector<Weight> total;
  std::vector<Edge> edges;

  std::size_t num_states() const { return state_begin.size() - 1; }
  std::size_t num_choices() const { return total.size(); }
  std::span<const Edge> choice(std::size_t c) const {
    return std::span<const Edge>(edges).subspan(choice_begin[c],
                                                choice_begin[c + 1] - choice_begin[c]);
  }

  explicit ChoiceGraph(const StandardModel& m) {
    const auto n = m.num_states();
    state_begin.reserve(n + 1);
    choice_begin.push_back(0);
    for (StateId s = 0; s < n; ++s) {
      state_begin.push_back(total.size());
      auto out = m.outgoing(s);
      std::size_t i = 0;
      while (i < out.size()) {
        const auto action = out[i].action;
        Weight sum = 0;
        for (; i < out.size() && out[i].action == action; ++i) {
          if (out[i].weight == 0) continue;
          edges.push_back({out[i].target, out[i].weight});
          sum += out[i].weight;
        }
        if (sum > 0) close_choice(s, sum);
      }
      if (state_begin.back() == total.size()) {
        edges.push_back({s, 1});
        close_choice(s, 1);
      }
    }
    state_begin.push_back(total.size());
  }

 private:
  void close_choice(StateId s, Weight sum) {
    owner.push_back(s);
    total.push_back(sum);
    choice_begin.push_back(edges.size());
  }
};

/// Reverse adjacency: for each state, the choices that have an edge into it.
struct ReverseGraph {
  std::vector<std::size_t> begin;
  std::vector<std::size_t> choices;

  explicit ReverseGraph(const ChoiceGraph& g) {
    const auto n = g.num_states();
    begin.assign(n + 1, 0);
    for (const auto& e : g.edges) ++begin[e.target + 1];
    for (std::size_t s = 0; s < n; ++s) begin[s + 1] += begin[s];
    choices.resize(g.edges.size());
    auto fill = begin;
    for (std::size_t c = 0; c < g.num_choices(); ++c) {
      for (const auto& e : g.choice(c)) choices[fill[e.target]++] = c;
    }
  }

  std::span<const std::size_t> into(StateId s) const {
    return std::span<const std::size_t>(choices).subspan(begin[s], begin[s + 1] - begin[s]);
  }
};

using Mask = std::vector<char>;

Mask forward_closure(const ChoiceGraph& g, StateId init, const Mask* stop = nullptr) {
  Mask seen(g.num_states(), 0);
  std::vector<StateId> stack{init};
  seen[init] = 1;
  while (!stack.empty()) {
    auto s = stack.back();
    stack.pop_back();
    if (stop != nullptr && (*stop)[s]) continue;
    for (auto c = g.state_begin[s]; c < g.state_begin[s + 1]; ++c) {
      for (const auto& e : g.choice(c)) {
        if (!seen[e.target]) {
          seen[e.target] = 1;
          stack.push_back(e.target);
        }
      }
    }
  }
  return seen;
}

/// States in `within` that reach `seeds` through states of `within` not in
/// `blocked` (seeds themselves are always included).
Mask backward_exists(const ChoiceGraph& g, const ReverseGraph& rev, const Mask& seeds,
                     const Mask& within, const Mask* blocked = nullptr) {
  const auto n = g.num_states();
  Mask out(n, 0);
  std::vector<StateId> work;
  for (StateId s = 0; s < n; ++s) {
    if (seeds[s] && within[s]) {
      out[s] = 1;
      work.push_back(s);
    }
  }
  while (!work.empty()) {
    auto t = work.back();
    work.pop_back();
    for (auto c : rev.into(t)) {
      auto s = g.owner[c];
      if (out[s] || !within[s] || (blocked != nullptr && (*blocked)[s])) continue;
      out[s] = 1;
      work.push_back(s);
    }
  }
  return out;
}

/// Least R with target ⊆ R and s ∈ R whenever every choice of s hits R.
Mask forall_attractor(const ChoiceGraph& g, const ReverseGraph& rev, const Mask& target,
                      const Mask& within) {
  const auto n = g.num_states();
  Mask in(n, 0);
  std::vector<std::size_t> pending(n, 0);
  for (StateId s = 0; s < n; ++s) pending[s] = g.state_begin[s + 1] - g.state_begin[s];
  std::vector<char> hit(g.num_choices(), 0);
  std::vector<StateId> work;
  for (StateId s = 0; s < n; ++s) {
    if (target[s] && within[s]) {
      in[s] = 1;
      work.push_back(s);
    }
  }
  while (!work.empty()) {
    auto t = work.back();
    work.pop_back();
    for (auto c : rev.into(t)) {
      if (hit[c]) continue;
      hit[c] = 1;
      auto s = g.owner[c];
      if (in[s] || !within[s]) continue;
      if (--pending[s] == 0) {
        in[s] = 1;
        work.push_back(s);
      }
    }
  }
  return in;
}

/// States where some strategy reaches `target` with probability 1.
Mask prob1_exists(const ChoiceGraph& g, const Mask& target, const Mask& reach) {
  const auto n = g.num_states();
  Mask u = reach;
  for (;;) {
    Mask r(n, 0);
    for (StateId s = 0; s < n; ++s) r[s] = target[s] && u[s];
    bool grew = true;
    while (grew) {
      grew = false;
      for (StateId s = 0; s < n; ++s) {
        if (!u[s] || r[s]) continue;
        for (auto c = g.state_begin[s]; c < g.state_begin[s + 1] && !r[s]; ++c) {
          bool stays = true, progresses = false;
          for (const auto& e : g.choice(c)) {
            if (!u[e.target]) stays = false;
            if (r[e.target]) progresses = true;
          }
          if (stays && progresses) {
            r[s] = 1;
            grew = true;
          }
        }
      }
    }
    if (r == u) return u;
    u = std::move(r);
  }
}

struct Partition {
  Mask one;                        // value fixed to 1 (includes reachable targets)
  Mask zero;                       // value fixed to 0
  std::vector<StateId> unknowns;   // dense order, reachable from init through unknowns
  std::vector<std::int64_t> local; // state -> index into unknowns, or -1
};

Partition partition_states(const ChoiceGraph& g, const Mask& target, StateId init,
                           Optimize mode, bool single_choice) {
  const auto n = g.num_states();
  ReverseGraph rev(g);
  const Mask reach = forward_closure(g, init);
  Partition p;
  p.zero.assign(n, 0);

  if (mode == Optimize::Max || single_choice) {
    const Mask can = backward_exists(g, rev, target, reach);
    for (StateId s = 0; s < n; ++s) p.zero[s] = reach[s] && !can[s];
  } else {
    const Mask forced = forall_attractor(g, rev, target, reach);
    for (StateId s = 0; s < n; ++s) p.zero[s] = reach[s] && !forced[s];
  }

  if (mode == Optimize::Min || single_choice) {
    // Probability 1 unless some path reaches a zero state while avoiding target.
    const Mask bad = backward_exists(g, rev, p.zero, reach, &target);
    p.one.assign(n, 0);
    for (StateId s = 0; s < n; ++s) p.one[s] = reach[s] && !bad[s];
  } else {
    p.one = prob1_exists(g, target, reach);
  }

  Mask fixed(n, 0);
  for (StateId s = 0; s < n; ++s) fixed[s] = p.one[s] || p.zero[s];
  p.local.assign(n, -1);
  if (fixed[init]) return p;
  const Mask live = forward_closure(g, init, &fixed);
  for (StateId s = 0; s < n; ++s) {
    if (live[s] && !fixed[s]) {
      p.local[s] = static_cast<std::int64_t>(p.unknowns.size());
      p.unknowns.push_back(s);
    }
  }
  return p;
}

mpz_class to_mpz(Weight w) { return mpz_class(static_cast<unsigned long>(w)); }

detail::ChainRow chain_row(const ChoiceGraph& g, const Partition& p, std::size_t c) {
  detail::ChainRow row;
  row.total = g.total[c];
  mpz_class ones = 0;
  for (const auto& e : g.choice(c)) {
    if (p.local[e.target] >= 0) {
      row.inner.emplace_back(static_cast<std::uint32_t>(p.local[e.target]), e.weight);
    } else if (p.one[e.target]) {
      ones += to_mpz(e.weight);
    }
  }
  row.rhs = ones;
  return row;
}

/// Expected successor value of choice `c` under exact values `x`.
mpq_class choice_value(const ChoiceGraph& g, const Partition& p, std::size_t c,
                       const std::vector<mpq_class>& x) {
  mpq_class acc = 0;
  for (const auto& e : g.choice(c)) {
    if (p.local[e.target] >= 0) acc += to_mpz(e.weight) * x[p.local[e.target]];
    else if (p.one[e.target]) acc += to_mpz(e.weight);
  }
  acc /= to_mpz(g.total[c]);
  return acc;
}

struct IterationResult {
  std::vector<double> values;
  std::size_t iterations = 0;
};

IterationResult value_iteration(const ChoiceGraph& g, const Partition& p, Optimize mode,
                                const CheckOptions& opts) {
  const auto k = p.unknowns.size();
  // Flattened per-choice data over local indices.
  struct LocalChoice {
    double constant = 0.0;
    std::size_t begin = 0, end = 0;
  };
  std::vector<std::size_t> state_choices(k + 1, 0);
  std::vector<LocalChoice> choices;
  std::vector<std::pair<std::uint32_t, double>> terms;
  for (std::size_t i = 0; i < k; ++i) {
    const auto s = p.unknowns[i];
    state_choices[i] = choices.size();
    for (auto c = g.state_begin[s]; c < g.state_begin[s + 1]; ++c) {
      LocalChoice lc;
      lc.begin = terms.size();
      const double total = static_cast<double>(g.total[c]);
      for (const auto& e : g.choice(c)) {
        const double prob = static_cast<double>(e.weight) / total;
        if (p.local[e.target] >= 0) {
          terms.emplace_back(static_cast<std::uint32_t>(p.local[e.target]), prob);
        } else if (p.one[e.target]) {
          lc.constant += prob;
        }
      }
      lc.end = terms.size();
      choices.push_back(lc);
    }
  }
  state_choices[k] = choices.size();

  IterationResult r;
  std::vector<double> x(k, 0.0), next(k, 0.0);
  double prev_delta = std::numeric_limits<double>::infinity();
  for (std::uint64_t it = 1; it <= opts.max_iterations; ++it) {
    double delta = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double best = mode == Optimize::Max ? -1.0 : 2.0;
      for (auto c = state_choices[i]; c < state_choices[i + 1]; ++c) {
        double v = choices[c].constant;
        for (auto t = choices[c].begin; t < choices[c].end; ++t) v += terms[t].second * x[terms[t].first];
        best = mode == Optimize::Max ? std::max(best, v) : std::min(best, v);
      }
      next[i] = best;
      delta = std::max(delta, std::abs(best - x[i]));
    }
    x.swap(next);
    r.iterations = it;
    if (delta == 0.0) break;
    // Stop once the change is below epsilon and the geometric tail estimated
    // from the last contraction ratio is as well.
    if (delta < opts.epsilon) {
      const double rho = delta / prev_delta;
      if (rho < 1.0 && delta * rho / (1.0 - rho) < opts.epsilon) break;
    }
    prev_delta = delta;
  }
  r.values = std::move(x);
  return r;
}

/// Picks a memoryless strategy from approximate optimal values. For
/// maximisation, ties are broken towards choices that make progress to the
/// target (attractor layering) so that end components are left.
std::vector<std::size_t> extract_strategy(const ChoiceGraph& g, const Partition& p,
                                          const std::vector<double>& x, Optimize mode,
                                          double tol) {
  const auto k = p.unknowns.size();
  auto approx = [&](std::size_t c) {
    double v = 0.0;
    const double total = static_cast<double>(g.total[c]);
    for (const auto& e : g.choice(c)) {
      const double prob = static_cast<double>(e.weight) / total;
      if (p.local[e.target] >= 0) v += prob * x[p.local[e.target]];
      else if (p.one[e.target]) v += prob;
    }
    return v;
  };
  std::vector<std::size_t> strategy(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto s = p.unknowns[i];
    std::size_t best = g.state_begin[s];
    double best_v = approx(best);
    for (auto c = best + 1; c < g.state_begin[s + 1]; ++c) {
      const double v = approx(c);
      if (mode == Optimize::Max ? v > best_v : v < best_v) {
        best = c;
        best_v = v;
      }
    }
    strategy[i] = best;
  }
  if (mode == Optimize::Min) return strategy;

  std::vector<char> ranked(k, 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < k; ++i) {
      if (ranked[i]) continue;
      const auto s = p.unknowns[i];
      for (auto c = g.state_begin[s]; c < g.state_begin[s + 1]; ++c) {
        if (approx(c) < x[i] - tol) continue;
        bool progress = false;
        for (const auto& e : g.choice(c)) {
          const auto j = p.local[e.target];
          if ((j < 0 && p.one[e.target]) || (j >= 0 && ranked[j])) progress = true;
        }
        if (progress) {
          strategy[i] = c;
          ranked[i] = 1;
          changed = true;
          break;
        }
      }
    }
  }
  return strategy;
}

ReachProbability solve_reach(const StandardModel& m, std::string_view label, Optimize mode,
                             const CheckOptions& opts) {
  const auto* goal = m.find_label(label);
  if (goal == nullptr) throw CheckError("unknown label '" + std::string(label) + "'");
  const ChoiceGraph g(m);
  Mask target(m.num_states(), 0);
  for (auto s : *goal) target[s] = 1;
  const bool single = m.kind() != ModelKind::Mdp;
  const auto p = partition_states(g, target, m.init(), mode, single);

  ReachProbability out;
  if (p.one[m.init()] || p.zero[m.init()]) {
    out.exact = mpq_class(p.one[m.init()] ? 1 : 0);
    out.approx = p.one[m.init()] ? 1.0 : 0.0;
    return out;
  }
  const auto k = p.unknowns.size();
  const bool small = k <= opts.exact_threshold;

  auto evaluate = [&](const std::vector<std::size_t>& strategy) {
    std::vector<detail::ChainRow> rows;
    rows.reserve(k);
    for (std::size_t i = 0; i < k; ++i) rows.push_back(chain_row(g, p, strategy[i]));
    return detail::solve_chain_exact(rows);
  };

  if (single && small) {
    std::vector<std::size_t> strategy(k);
    for (std::size_t i = 0; i < k; ++i) strategy[i] = g.state_begin[p.unknowns[i]];
    auto x = evaluate(strategy);
    out.exact = x[p.local[m.init()]];
    out.approx = out.exact->get_d();
    return out;
  }

  auto vi = value_iteration(g, p, mode, opts);
  out.iterations = vi.iterations;
  out.approx = vi.values[p.local[m.init()]];
  if (single || !small) return out;

  const double tol = std::max(1e-9, 10.0 * opts.epsilon);
  const auto strategy = extract_strategy(g, p, vi.values, mode, tol);
  const auto x = evaluate(strategy);
  // The strategy's exact values are optimal iff no choice improves on them.
  for (std::size_t i = 0; i < k; ++i) {
    const auto s = p.unknowns[i];
    for (auto c = g.state_begin[s]; c < g.state_begin[s + 1]; ++c) {
      const auto q = choice_value(g, p, c, x);
      if (mode == Optimize::Max ? q > x[i] : q < x[i]) return out;
    }
  }
  out.exact = x[p.local[m.init()]];
  out.approx = out.exact->get_d();
  return out;
}

}  // namespace

ReachProbability dtmc_reach_prob(const StandardModel& m, std::string_view label,
                                 const CheckOptions& opts) {
  if (m.kind() != ModelKind::Dtmc) throw CheckError("dtmc_reach_prob needs a dtmc");
  return solve_reach(m, label, Optimize::Max, opts);
}

ReachProbability mdp_reach_prob(const StandardModel& m, std::string_view label, Optimize mode,
                                const CheckOptions& opts) {
  if (m.kind() != ModelKind::Mdp) throw CheckError("mdp_reach_prob needs an mdp");
  return solve_reach(m, label, mode, opts);
}

CheckResult mc(const StandardModel& m, const Property& phi, const CheckOptions& opts) {
  if (opts.scale == 0) throw CheckError("scale must be positive");
  CheckResult r;
  r.scale = opts.scale;
  r.states_explored = reachable_states(m).size();

  auto mismatch = [&] {
    return CheckError("property '" + to_string(phi) + "' is not valid on a " +
                      std::string(to_string(m.kind())) + " model");
  };
  auto set_prob = [&](const ReachProbability& p) {
    r.exact = p.exact.has_value();
    r.value = p.exact ? round_to_scale(*p.exact, opts.scale) : round_to_scale(p.approx, opts.scale);
  };

  switch (phi.kind) {
    case Property::Kind::DeadlockFree:
      r.value = static_cast<std::uint64_t>(check_deadlock_free(m));
      break;
    case Property::Kind::Reach:
      if (m.kind() == ModelKind::Lts) {
        r.value = static_cast<std::uint64_t>(check_reach_bool(m, phi.label));
      } else if (m.kind() == ModelKind::Dtmc) {
        set_prob(dtmc_reach_prob(m, phi.label, opts));
      } else {
        throw mismatch();
      }
      break;
    case Property::Kind::ReachMin:
    case Property::Kind::ReachMax:
      if (m.kind() != ModelKind::Mdp) throw mismatch();
      set_prob(mdp_reach_prob(
          m, phi.label,
          phi.kind == Property::Kind::ReachMin ? Optimize::Min : Optimize::Max, opts));
      break;
  }
  return r;
}

}  // namespace nestcheck
