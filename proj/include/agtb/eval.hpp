#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "agtb/treebank.hpp"

namespace agtb {

/// Seven token-level F1 percentages. With gold tokenization precision equals
/// recall, so each F1 is 100 * matches / total.
struct EvalReport {
  double pos = 0;
  double xpos = 0;
  double feats = 0;
  double alltags = 0;
  double uas = 0;
  double las = 0;
  double lemmas = 0;
  std::size_t token_total = 0;
};

enum class EvalMode { StrictTree, Permissive };

/// Per-token comparison of system against gold. POS compares tag position 1,
/// XPOS the full 9-char tag, Feats the key=value set, AllTags all three, UAS
/// heads, LAS heads+relations, Lemmas the lemma after apostrophe
/// normalization of both sides. Requires equal sentence counts and identical
/// FORM sequences (TokenizationMismatch otherwise). In strict mode a system
/// sentence with a cycle or several root children raises InvalidSystemTree.
EvalReport evaluate(const std::vector<Sentence>& gold, const std::vector<Sentence>& system,
                    EvalMode mode = EvalMode::StrictTree);

/// Arithmetic mean and sample standard deviation (Bessel, n-1). Needs >= 2
/// scores.
std::pair<double, double> mean_and_sd(const std::vector<double>& scores);

/// Two decimals, rounding half away from zero: 66.666… -> "66.67".
std::string format_f1(double value);

/// One `metric<TAB>F1` line per metric in report order.
std::string render_eval_report(const EvalReport& report);

}  // namespace agtb
