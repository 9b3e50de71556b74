#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace agtb {

struct ScoreVector {
  std::string model_name;
  std::vector<double> scores;  // one F1 per run, paired across models by index
};

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

/// Student-t posterior over the mean difference of two paired cross-validation
/// score vectors: location = mean difference, dof = n-1,
/// scale = sqrt((1/n + rho/(1-rho)) * s^2) with s^2 the Bessel-corrected
/// sample variance. p_left/p_rope/p_right are the posterior masses left of,
/// inside, and right of the rope. Zero-variance inputs are flagged degenerate
/// and put all mass in the region containing the mean (the closed rope wins
/// its boundaries).
struct PosteriorSummary {
  double mean_diff = 0;
  double scale = 0;
  int dof = 0;
  double rho = 0;
  Interval rope;
  double p_left = 0;
  double p_rope = 0;
  double p_right = 0;
  bool degenerate = false;
};

/// CDF of the Student-t distribution via the regularized incomplete beta
/// function (continued fraction, threshold 1e-14, 300 iterations).
double student_t_cdf(double t, int dof);

PosteriorSummary correlated_ttest(const ScoreVector& x, const ScoreVector& y, Interval rope,
                                  double rho);

/// Evenly spaced (delta, density) grid over mean ± span*scale.
std::vector<std::pair<double, double>> posterior_grid(const PosteriorSummary& summary, int points,
                                                      double span);

struct PairComparison {
  std::string first;
  std::string second;
  PosteriorSummary summary;  // posterior of first minus second
};

/// One summary per unordered pair, in listing order.
std::vector<PairComparison> compare_all_pairs(const std::vector<ScoreVector>& vectors, Interval rope,
                                              double rho);

/// One model per line: name<TAB>v1<TAB>...<TAB>vK.
std::vector<ScoreVector> read_score_vectors(std::string_view bytes);

/// Left/Rope/Right table with two-decimal probabilities.
std::string render_comparison_table(const std::vector<PairComparison>& pairs);

}  // namespace agtb
