#include "exact_solver.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "nestcheck/error.hpp"

namespace nestcheck::detail {

std::vector<std::vector<std::uint32_t>> chain_sccs(const std::vector<ChainRow>& rows) {
  // Iterative Tarjan.
  const auto n = static_cast<std::uint32_t>(rows.size());
  constexpr std::uint32_t kUnvisited = UINT32_MAX;
  std::vector<std::uint32_t> index(n, kUnvisited), low(n, 0);
  std::vector<char> on_stack(n, 0);
  std::vector<std::uint32_t> stack;
  std::vector<std::vector<std::uint32_t>> out;
  std::uint32_t counter = 0;

  struct Frame {
    std::uint32_t v;
    std::size_t next_edge;
  };
  std::vector<Frame> call;

  for (std::uint32_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    call.push_back({root, 0});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& f = call.back();
      const auto& edges = rows[f.v].inner;
      if (f.next_edge < edges.size()) {
        auto w = edges[f.next_edge++].first;
        if (index[w] == kUnvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      auto v = f.v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      if (low[v] == index[v]) {
        std::vector<std::uint32_t> comp;
        std::uint32_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
      }
    }
  }
  return out;
}

namespace {

mpz_class to_mpz(Weight w) {
  static_assert(sizeof(unsigned long) == sizeof(Weight));
  return mpz_class(static_cast<unsigned long>(w));
}

/// Solves a square system given as sparse rows by elimination in natural
/// order. The matrices produced here are nonsingular M-matrices, so every
/// pivot is positive and no row exchange is needed.
std::vector<mpq_class> eliminate(std::vector<std::map<std::uint32_t, mpq_class>> a,
                                 std::vector<mpq_class> b) {
  const auto m = static_cast<std::uint32_t>(a.size());
  std::vector<std::set<std::uint32_t>> col_rows(m);
  for (std::uint32_t i = 0; i < m; ++i) {
    for (const auto& [j, v] : a[i]) col_rows[j].insert(i);
  }
  for (std::uint32_t k = 0; k < m; ++k) {
    auto pit = a[k].find(k);
    if (pit == a[k].end() || sgn(pit->second) == 0) throw Error("singular linear system");
    const mpq_class pivot = pit->second;
    for (auto i : std::vector<std::uint32_t>(col_rows[k].begin(), col_rows[k].end())) {
      if (i <= k) continue;
      auto eit = a[i].find(k);
      const mpq_class factor = eit->second / pivot;
      a[i].erase(eit);
      col_rows[k].erase(i);
      for (const auto& [j, v] : a[k]) {
        if (j == k) continue;
        auto [it, inserted] = a[i].try_emplace(j, 0);
        it->second -= factor * v;
        if (sgn(it->second) == 0) {
          a[i].erase(it);
          col_rows[j].erase(i);
        } else if (inserted) {
          col_rows[j].insert(i);
        }
      }
      b[i] -= factor * b[k];
    }
  }
  std::vector<mpq_class> x(m);
  for (std::uint32_t k = m; k-- > 0;) {
    mpq_class acc = b[k];
    for (const auto& [j, v] : a[k]) {
      if (j > k) acc -= v * x[j];
    }
    x[k] = acc / a[k].at(k);
  }
  return x;
}

}  // namespace

std::vector<mpq_class> solve_chain_exact(const std::vector<ChainRow>& rows) {
  const auto n = static_cast<std::uint32_t>(rows.size());

  // Rows that can reach a nonzero rhs; everything else is zero.
  std::vector<std::vector<std::uint32_t>> preds(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (const auto& [j, w] : rows[i].inner) {
      if (w != 0) preds[j].push_back(i);
    }
  }
  std::vector<char> live(n, 0);
  std::vector<std::uint32_t> work;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (sgn(rows[i].rhs) != 0) {
      live[i] = 1;
      work.push_back(i);
    }
  }
  while (!work.empty()) {
    auto j = work.back();
    work.pop_back();
    for (auto i : preds[j]) {
      if (!live[i]) {
        live[i] = 1;
        work.push_back(i);
      }
    }
  }

  std::vector<mpq_class> x(n, 0);

  for (const auto& comp : chain_sccs(rows)) {
    if (!live[comp.front()]) continue;
    if (comp.size() == 1) {
      const auto i = comp.front();
      const auto& row = rows[i];
      mpq_class rhs = row.rhs;
      mpq_class diag = to_mpz(row.total);
      for (const auto& [j, w] : row.inner) {
        if (w == 0) continue;
        if (j == i) diag -= to_mpz(w);
        else rhs += to_mpz(w) * x[j];
      }
      if (sgn(diag) == 0) throw Error("singular linear system");
      x[i] = rhs / diag;
      continue;
    }
    std::map<std::uint32_t, std::uint32_t> local;
    for (std::uint32_t k = 0; k < comp.size(); ++k) local[comp[k]] = k;
    std::vector<std::map<std::uint32_t, mpq_class>> a(comp.size());
    std::vector<mpq_class> b(comp.size());
    for (std::uint32_t k = 0; k < comp.size(); ++k) {
      const auto& row = rows[comp[k]];
      b[k] = row.rhs;
      a[k][k] = to_mpz(row.total);
      for (const auto& [j, w] : row.inner) {
        if (w == 0) continue;
        const mpz_class wz = to_mpz(w);
        if (auto it = local.find(j); it != local.end()) {
          a[k][it->second] -= wz;
        } else {
          b[k] += wz * x[j];
        }
      }
    }
    auto sol = eliminate(std::move(a), std::move(b));
    for (std::uint32_t k = 0; k < comp.size(); ++k) x[comp[k]] = sol[k];
  }
  return x;
}

}  // namespace nestcheck::detail
