#include "agtb/mst.hpp"

#include <algorithm>
#include <limits>
#include <optional>

#include "agtb/error.hpp"

namespace agtb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using Weights = std::vector<std::vector<double>>;  // w[v][u]: arc u -> v

// Greedy best-incoming-arc pass; cycles are contracted and the reduced
// problem solved recursively. Returns parents for nodes 1..m-1, or nullopt
// when some node has no usable incoming arc. Per-node argmax prefers the
// smaller head index on equal weight.
std::optional<std::vector<int>> cle(const Weights& w) {
  const int m = static_cast<int>(w.size());
  std::vector<int> best(static_cast<std::size_t>(m), -1);
  for (int v = 1; v < m; ++v) {
    double bw = kNegInf;
    int bu = -1;
    for (int u = 0; u < m; ++u) {
      if (u == v) continue;
      const double cand = w[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)];
      if (cand > bw) {
        bw = cand;
        bu = u;
      }
    }
    if (bu < 0 || bw == kNegInf) return std::nullopt;
    best[static_cast<std::size_t>(v)] = bu;
  }

  // Look for a cycle among the greedy picks.
  std::vector<int> color(static_cast<std::size_t>(m), 0);  // 0 new, 1 on path, 2 done
  color[0] = 2;
  std::vector<int> cycle;
  for (int start = 1; start < m && cycle.empty(); ++start) {
    if (color[static_cast<std::size_t>(start)] != 0) continue;
    int v = start;
    std::vector<int> path;
    while (color[static_cast<std::size_t>(v)] == 0) {
      color[static_cast<std::size_t>(v)] = 1;
      path.push_back(v);
      v = best[static_cast<std::size_t>(v)];
    }
    if (color[static_cast<std::size_t>(v)] == 1) {
      int u = v;
      do {
        cycle.push_back(u);
        u = best[static_cast<std::size_t>(u)];
      } while (u != v);
    }
    for (int u : path) color[static_cast<std::size_t>(u)] = 2;
  }
  if (cycle.empty()) return best;

  std::vector<bool> in_cycle(static_cast<std::size_t>(m), false);
  for (int v : cycle) in_cycle[static_cast<std::size_t>(v)] = true;

  // Map untouched nodes to 0..k-1 of the contracted graph; the cycle becomes
  // node k (the last one).
  std::vector<int> to_new(static_cast<std::size_t>(m), -1);
  std::vector<int> to_old;
  for (int v = 0; v < m; ++v) {
    if (in_cycle[static_cast<std::size_t>(v)]) continue;
    to_new[static_cast<std::size_t>(v)] = static_cast<int>(to_old.size());
    to_old.push_back(v);
  }
  const int cnode = static_cast<int>(to_old.size());
  const int mm = cnode + 1;

  Weights cw(static_cast<std::size_t>(mm),
             std::vector<double>(static_cast<std::size_t>(mm), kNegInf));
  // entering[u'] = cycle vertex receiving the arc if u' -> cycle is chosen
  std::vector<int> entering(static_cast<std::size_t>(mm), -1);
  // leaving[x'] = cycle vertex used when the cycle heads outside node x'
  std::vector<int> leaving(static_cast<std::size_t>(mm), -1);

  for (int v = 0; v < m; ++v) {
    if (in_cycle[static_cast<std::size_t>(v)]) continue;
    const int vn = to_new[static_cast<std::size_t>(v)];
    for (int u = 0; u < m; ++u) {
      if (u == v) continue;
      const double weight = v == 0 ? kNegInf : w[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)];
      if (weight == kNegInf && !in_cycle[static_cast<std::size_t>(u)]) continue;
      if (in_cycle[static_cast<std::size_t>(u)]) {
        if (v == 0) continue;
        if (weight > cw[static_cast<std::size_t>(vn)][static_cast<std::size_t>(cnode)] ||
            (weight == cw[static_cast<std::size_t>(vn)][static_cast<std::size_t>(cnode)] &&
             leaving[static_cast<std::size_t>(vn)] >= 0 && u < leaving[static_cast<std::size_t>(vn)])) {
          if (weight == kNegInf) continue;
          cw[static_cast<std::size_t>(vn)][static_cast<std::size_t>(cnode)] = weight;
          leaving[static_cast<std::size_t>(vn)] = u;
        }
      } else {
        cw[static_cast<std::size_t>(vn)][static_cast<std::size_t>(to_new[static_cast<std::size_t>(u)])] = weight;
      }
    }
  }
  for (int u = 0; u < m; ++u) {
    if (in_cycle[static_cast<std::size_t>(u)]) continue;
    const int un = to_new[static_cast<std::size_t>(u)];
    for (int v : cycle) {
      const double weight = w[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)];
      if (weight == kNegInf) continue;
      const double gain =
          weight - w[static_cast<std::size_t>(v)][static_cast<std::size_t>(best[static_cast<std::size_t>(v)])];
      if (gain > cw[static_cast<std::size_t>(cnode)][static_cast<std::size_t>(un)] ||
          (gain == cw[static_cast<std::size_t>(cnode)][static_cast<std::size_t>(un)] &&
           entering[static_cast<std::size_t>(un)] >= 0 && v < entering[static_cast<std::size_t>(un)])) {
        cw[static_cast<std::size_t>(cnode)][static_cast<std::size_t>(un)] = gain;
        entering[static_cast<std::size_t>(un)] = v;
      }
    }
  }

  const auto sub = cle(cw);
  if (!sub) return std::nullopt;

  std::vector<int> parent(static_cast<std::size_t>(m), -1);
  for (int vn = 1; vn < mm; ++vn) {
    const int pn = (*sub)[static_cast<std::size_t>(vn)];
    if (vn == cnode) {
      // The arc into the contracted node: its real endpoint replaces that
      // vertex's in-cycle arc.
      const int u = to_old[static_cast<std::size_t>(pn)];
      const int v_star = entering[static_cast<std::size_t>(pn)];
      for (int v : cycle)
        parent[static_cast<std::size_t>(v)] = v == v_star ? u : best[static_cast<std::size_t>(v)];
    } else {
      const int v = to_old[static_cast<std::size_t>(vn)];
      parent[static_cast<std::size_t>(v)] =
          pn == cnode ? leaving[static_cast<std::size_t>(vn)] : to_old[static_cast<std::size_t>(pn)];
    }
  }
  return parent;
}

double canonical_total(const ScoreMatrix& matrix, const std::vector<int>& heads) {
  double total = 0;
  for (int i = 1; i <= matrix.n; ++i)
    total += matrix.at(i, heads[static_cast<std::size_t>(i - 1)]);
  return total;
}

Weights base_weights(const ScoreMatrix& matrix) {
  const int m = matrix.n + 1;
  Weights w(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(m), kNegInf));
  for (int v = 1; v < m; ++v)
    for (int u = 0; u < m; ++u)
      if (u != v) w[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)] = matrix.at(v, u);
  return w;
}

std::vector<int> heads_of(const std::vector<int>& parent, int n) {
  std::vector<int> heads(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) heads[static_cast<std::size_t>(i - 1)] = parent[static_cast<std::size_t>(i)];
  return heads;
}

// Rewrites `heads` into the lexicographically smallest head vector whose
// canonical total still equals `target`, by pinning a growing prefix and
// re-decoding. A row-max upper bound prunes candidates that cannot reach the
// target, so acyclic instances with distinct scores cost no extra decodes.
void refine_lexicographic(const Weights& w, const ScoreMatrix& matrix, std::vector<int>& heads,
                          double target) {
  const int n = matrix.n;
  Weights pinned = w;
  // suffix_rowmax[i] = sum over rows i..n of the row maximum
  std::vector<double> suffix_rowmax(static_cast<std::size_t>(n) + 2, 0.0);
  for (int i = n; i >= 1; --i) {
    double rm = kNegInf;
    for (int u = 0; u <= n; ++u)
      if (u != i) rm = std::max(rm, w[static_cast<std::size_t>(i)][static_cast<std::size_t>(u)]);
    suffix_rowmax[static_cast<std::size_t>(i)] = suffix_rowmax[static_cast<std::size_t>(i) + 1] + rm;
  }

  double prefix_fixed = 0;  // sum of pinned rows' scores
  for (int i = 1; i <= n; ++i) {
    const int current = heads[static_cast<std::size_t>(i - 1)];
    for (int h = 0; h < current; ++h) {
      if (h == i) continue;
      const double arc = w[static_cast<std::size_t>(i)][static_cast<std::size_t>(h)];
      if (arc == kNegInf) continue;
      if (prefix_fixed + arc + suffix_rowmax[static_cast<std::size_t>(i) + 1] < target) continue;
      // Pin row i to h on top of the already-pinned prefix.
      std::vector<double> saved = pinned[static_cast<std::size_t>(i)];
      for (int u = 0; u <= n; ++u)
        if (u != h) pinned[static_cast<std::size_t>(i)][static_cast<std::size_t>(u)] = kNegInf;
      const auto sub = cle(pinned);
      pinned[static_cast<std::size_t>(i)] = std::move(saved);
      if (!sub) continue;
      const std::vector<int> candidate = heads_of(*sub, n);
      if (canonical_total(matrix, candidate) == target) {
        heads = candidate;
        break;
      }
    }
    // Freeze row i at its (possibly improved) head.
    const int fixed = heads[static_cast<std::size_t>(i - 1)];
    for (int u = 0; u <= n; ++u)
      if (u != fixed) pinned[static_cast<std::size_t>(i)][static_cast<std::size_t>(u)] = kNegInf;
    prefix_fixed += w[static_cast<std::size_t>(i)][static_cast<std::size_t>(fixed)];
  }
}

DecodedTree decode_unrestricted(const ScoreMatrix& matrix) {
  const Weights w = base_weights(matrix);
  const auto parent = cle(w);
  if (!parent) fail(ErrorKind::Infeasible, "no arborescence exists for this matrix");
  std::vector<int> heads = heads_of(*parent, matrix.n);
  const double total = canonical_total(matrix, heads);
  refine_lexicographic(w, matrix, heads, total);
  return {heads, total};
}

DecodedTree decode_single_root(const ScoreMatrix& matrix) {
  const int n = matrix.n;
  const Weights w = base_weights(matrix);

  std::vector<std::pair<int, std::vector<int>>> winners;  // root child -> heads
  double best_total = kNegInf;
  for (int c = 1; c <= n; ++c) {
    if (matrix.at(c, 0) == kNegInf) continue;
    Weights wc = w;
    for (int v = 1; v <= n; ++v)
      if (v != c) wc[static_cast<std::size_t>(v)][0] = kNegInf;
    for (int u = 1; u <= n; ++u)
      wc[static_cast<std::size_t>(c)][static_cast<std::size_t>(u)] = kNegInf;
    const auto parent = cle(wc);
    if (!parent) continue;
    std::vector<int> heads = heads_of(*parent, n);
    const double total = canonical_total(matrix, heads);
    if (total > best_total) {
      best_total = total;
      winners.clear();
    }
    if (total == best_total) {
      refine_lexicographic(wc, matrix, heads, total);
      winners.emplace_back(c, std::move(heads));
    }
  }
  if (winners.empty())
    fail(ErrorKind::Infeasible, "no single-rooted arborescence exists for this matrix");
  const auto best = std::min_element(
      winners.begin(), winners.end(),
      [](const auto& a, const auto& b) { return a.second < b.second; });
  return {best->second, best_total};
}

}  // namespace

DecodedTree decode(const ScoreMatrix& matrix, bool single_root) {
  if (matrix.n < 1) fail(ErrorKind::InvalidArgument, "empty score matrix");
  if (matrix.scores.size() !=
      static_cast<std::size_t>(matrix.n) * static_cast<std::size_t>(matrix.n + 1))
    fail(ErrorKind::InvalidArgument, "score matrix storage does not match n");
  return single_root ? decode_single_root(matrix) : decode_unrestricted(matrix);
}

DecodedTree brute_force_decode(const ScoreMatrix& matrix, bool single_root) {
  const int n = matrix.n;
  if (n < 1) fail(ErrorKind::InvalidArgument, "empty score matrix");
  if (n > 6) fail(ErrorKind::SizeLimit, "oracle supports n <= 6, got " + std::to_string(n));

  std::vector<int> heads(static_cast<std::size_t>(n), 0);
  std::vector<int> best;
  double best_total = kNegInf;

  const auto valid = [&]() {
    int roots = 0;
    for (int i = 1; i <= n; ++i)
      if (heads[static_cast<std::size_t>(i - 1)] == 0) ++roots;
    if (roots == 0 || (single_root && roots != 1)) return false;
    for (int i = 1; i <= n; ++i) {
      int v = i;
      int steps = 0;
      while (v != 0 && steps <= n) {
        v = heads[static_cast<std::size_t>(v - 1)];
        ++steps;
      }
      if (v != 0) return false;
    }
    return true;
  };

  // Odometer over head vectors in ascending lexicographic order; the first
  // maximum encountered is the lexicographically smallest one.
  const auto recurse = [&](auto&& self, int i) -> void {
    if (i > n) {
      for (int k = 1; k <= n; ++k)
        if (matrix.at(k, heads[static_cast<std::size_t>(k - 1)]) == kNegInf) return;
      if (!valid()) return;
      const double total = canonical_total(matrix, heads);
      if (total > best_total) {
        best_total = total;
        best = heads;
      }
    } else {
      for (int h = 0; h <= n; ++h) {
        if (h == i) continue;
        heads[static_cast<std::size_t>(i - 1)] = h;
        self(self, i + 1);
      }
    }
  };
  recurse(recurse, 1);

  if (best.empty())
    fail(ErrorKind::Infeasible, "no arborescence exists for this matrix");
  return {best, best_total};
}

}  // namespace agtb
