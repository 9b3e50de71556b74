#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace agtb {

/// Per-sentence arc scores: row i (dependent i, 1-based) holds scores for
/// head candidates h in 0..n. The diagonal (h == i) is ignored by consumers
/// and is conventionally -infinity.
struct ScoreMatrix {
  int n = 0;
  std::vector<double> scores;  // n rows x (n+1) columns, row-major

  static ScoreMatrix zeros(int n);

  double& at(int dep, int head) { return scores[static_cast<std::size_t>(dep - 1) * (n + 1) + head]; }
  double at(int dep, int head) const {
    return scores[static_cast<std::size_t>(dep - 1) * static_cast<std::size_t>(n + 1) +
                  static_cast<std::size_t>(head)];
  }
};

/// Block text format: one block per sentence, header `n=<k>`, then k lines of
/// k+1 space-separated decimal floats (`-inf` allowed), blocks separated by a
/// blank line. Finite values round-trip bit-exactly.
std::vector<ScoreMatrix> read_score_matrices(std::string_view bytes);

std::string write_score_matrices(const std::vector<ScoreMatrix>& matrices);

}  // namespace agtb
