#include "agtb/eval.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "agtb/error.hpp"
#include "agtb/normalize.hpp"

namespace agtb {

EvalReport evaluate(const std::vector<Sentence>& gold, const std::vector<Sentence>& system,
                    EvalMode mode) {
  if (gold.size() != system.size())
    fail(ErrorKind::TokenizationMismatch,
         "sentence counts differ: gold " + std::to_string(gold.size()) + ", system " +
             std::to_string(system.size()));

  const NormalizationConfig apostrophes = NormalizationConfig::defaults();

  std::size_t total = 0;
  std::size_t pos_ok = 0, xpos_ok = 0, feats_ok = 0, alltags_ok = 0;
  std::size_t uas_ok = 0, las_ok = 0, lemmas_ok = 0;

  for (std::size_t si = 0; si < gold.size(); ++si) {
    const Sentence& g = gold[si];
    const Sentence& s = system[si];
    if (g.size() != s.size())
      fail(ErrorKind::TokenizationMismatch,
           "sentence " + std::to_string(si + 1) + ": token counts differ (" +
               std::to_string(g.size()) + " vs " + std::to_string(s.size()) + ")");
    if (mode == EvalMode::StrictTree) {
      const TreeVerdict verdict = validate_tree(s, true);
      if (!verdict.ok())
        fail(ErrorKind::InvalidSystemTree,
             "system sentence '" + (s.sentence_id.empty() ? std::to_string(si + 1) : s.sentence_id) +
                 "': " + to_string(verdict));
    }
    for (int i = 0; i < g.size(); ++i) {
      const Token& gt = g.tokens[static_cast<std::size_t>(i)];
      const Token& st = s.tokens[static_cast<std::size_t>(i)];
      if (gt.form != st.form)
        fail(ErrorKind::TokenizationMismatch,
             "sentence " + std::to_string(si + 1) + " token " + std::to_string(i + 1) +
                 ": forms differ ('" + gt.form + "' vs '" + st.form + "')");
      ++total;
      const bool pos_match = !gt.postag.empty() && !st.postag.empty() && gt.postag[0] == st.postag[0];
      const bool xpos_match = gt.postag == st.postag;
      const bool feats_match = postag_to_feats(gt.postag) == postag_to_feats(st.postag);
      if (pos_match) ++pos_ok;
      if (xpos_match) ++xpos_ok;
      if (feats_match) ++feats_ok;
      if (pos_match && xpos_match && feats_match) ++alltags_ok;
      const bool head_match = gt.head == st.head;
      if (head_match) ++uas_ok;
      if (head_match && gt.relation == st.relation) ++las_ok;
      std::string gl = gt.lemma, sl = st.lemma;
      normalize_apostrophes(gl, apostrophes);
      normalize_apostrophes(sl, apostrophes);
      if (gl == sl) ++lemmas_ok;
    }
  }

  const auto pct = [&](std::size_t hits) {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(total);
  };
  EvalReport r;
  r.pos = pct(pos_ok);
  r.xpos = pct(xpos_ok);
  r.feats = pct(feats_ok);
  r.alltags = pct(alltags_ok);
  r.uas = pct(uas_ok);
  r.las = pct(las_ok);
  r.lemmas = pct(lemmas_ok);
  r.token_total = total;
  return r;
}

std::pair<double, double> mean_and_sd(const std::vector<double>& scores) {
  if (scores.size() < 2)
    fail(ErrorKind::TooFewScores, "need at least 2 scores, got " + std::to_string(scores.size()));
  bool constant = true;
  for (double v : scores) constant = constant && v == scores.front();
  if (constant) return {scores.front(), 0.0};  // keep zero-variance exact
  double sum = 0;
  for (double v : scores) sum += v;
  const double mean = sum / static_cast<double>(scores.size());
  double ss = 0;
  for (double v : scores) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(scores.size() - 1));
  return {mean, sd};
}

std::string format_f1(double value) {
  const long long cents = std::llround(value * 100.0);
  const bool negative = cents < 0;
  const long long mag = negative ? -cents : cents;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%s%lld.%02lld", negative ? "-" : "", mag / 100, mag % 100);
  return buf;
}

std::string render_eval_report(const EvalReport& r) {
  std::ostringstream os;
  os << "POS\t" << format_f1(r.pos) << "\n"
     << "XPOS\t" << format_f1(r.xpos) << "\n"
     << "Feats\t" << format_f1(r.feats) << "\n"
     << "AllTags\t" << format_f1(r.alltags) << "\n"
     << "UAS\t" << format_f1(r.uas) << "\n"
     << "LAS\t" << format_f1(r.las) << "\n"
     << "Lemmas\t" << format_f1(r.lemmas) << "\n";
  return os.str();
}

}  // namespace agtb
