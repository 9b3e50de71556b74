#pragma once

#include <vector>

#include "agtb/score_matrix.hpp"

namespace agtb {

struct DecodedTree {
  std::vector<int> heads;  // heads[i-1] = head of token i, 0 = root
  double total_score = 0;
};

/// Maximum spanning arborescence rooted at node 0 (Chu-Liu-Edmonds). Ties are
/// broken toward the lexicographically smallest head vector. With
/// `single_root`, exactly one token may attach to node 0; candidates are
/// tried one by one with the other root arcs masked. Throws Infeasible when
/// no arborescence exists under the constraints.
DecodedTree decode(const ScoreMatrix& matrix, bool single_root);

/// Exhaustive oracle for n <= 6 with the same tie-break. Throws SizeLimit
/// above that.
DecodedTree brute_force_decode(const ScoreMatrix& matrix, bool single_root);

}  // namespace agtb
