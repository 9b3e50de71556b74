#include "agtb/bayes.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "agtb/error.hpp"
#include "agtb/eval.hpp"

namespace agtb {

namespace {

constexpr double kBetacfEps = 1e-14;
constexpr int kBetacfMaxIter = 300;

// Continued fraction for the regularized incomplete beta function
// (modified Lentz).
double betacf(double a, double b, double x) {
  const double fpmin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kBetacfMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kBetacfEps) return h;
  }
  fail(ErrorKind::InvalidArgument, "incomplete beta did not converge");
}

double ibeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

namespace {

// min(F(t), 1-F(t)): the mass beyond |t|. Even in t (it enters via t*t), so
// mirrored arguments give bit-identical results.
double t_tail_mass(double t, int dof) {
  const double nu = static_cast<double>(dof);
  const double x = nu / (nu + t * t);
  return 0.5 * ibeta(nu / 2.0, 0.5, x);
}

}  // namespace

double student_t_cdf(double t, int dof) {
  if (dof < 1) fail(ErrorKind::InvalidArgument, "dof must be >= 1");
  if (t == 0.0) return 0.5;
  const double tail = t_tail_mass(t, dof);
  return t > 0 ? 1.0 - tail : tail;
}

PosteriorSummary correlated_ttest(const ScoreVector& x, const ScoreVector& y, Interval rope,
                                  double rho) {
  if (x.scores.size() != y.scores.size())
    fail(ErrorKind::LengthMismatch, "score vectors have different lengths (" +
                                        std::to_string(x.scores.size()) + " vs " +
                                        std::to_string(y.scores.size()) + ")");
  const std::size_t n = x.scores.size();
  if (n < 2) fail(ErrorKind::TooFewScores, "need at least 2 paired scores");
  if (!(rope.lo < rope.hi))
    fail(ErrorKind::DegenerateRope, "rope must satisfy lo < hi");
  if (!(rho >= 0.0 && rho < 1.0))
    fail(ErrorKind::InvalidArgument, "rho must be in [0, 1)");

  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = x.scores[i] - y.scores[i];
  const auto [mean, sd] = mean_and_sd(d);

  PosteriorSummary s;
  s.mean_diff = mean;
  s.dof = static_cast<int>(n) - 1;
  s.rho = rho;
  s.rope = rope;
  if (sd == 0.0) {
    s.degenerate = true;
    s.scale = 0.0;
    if (mean < rope.lo) s.p_left = 1.0;
    else if (mean > rope.hi) s.p_right = 1.0;
    else s.p_rope = 1.0;
    return s;
  }
  const double variance = sd * sd;
  s.scale = std::sqrt((1.0 / static_cast<double>(n) + rho / (1.0 - rho)) * variance);
  // Tail masses are computed directly rather than as 1 - F so that tiny
  // probabilities keep full precision and swapping the models (which negates
  // both standardized bounds when the rope is symmetric) swaps p_left and
  // p_right bit-exactly.
  const double a = (rope.lo - mean) / s.scale;
  const double b = (rope.hi - mean) / s.scale;
  s.p_left = a <= 0 ? t_tail_mass(a, s.dof) : 1.0 - t_tail_mass(a, s.dof);
  s.p_right = b >= 0 ? t_tail_mass(b, s.dof) : 1.0 - t_tail_mass(b, s.dof);
  s.p_rope = 1.0 - (s.p_left + s.p_right);
  if (s.p_rope < 0) s.p_rope = 0;
  return s;
}

std::vector<std::pair<double, double>> posterior_grid(const PosteriorSummary& summary, int points,
                                                      double span) {
  if (summary.degenerate)
    fail(ErrorKind::DegeneratePosterior, "zero-variance posterior has no density grid");
  if (points < 2) fail(ErrorKind::InvalidArgument, "grid needs at least 2 points");
  if (!(span > 0)) fail(ErrorKind::InvalidArgument, "span must be positive");

  const double nu = static_cast<double>(summary.dof);
  const double log_norm = std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) -
                          0.5 * std::log(nu * M_PI);
  const double lo = summary.mean_diff - span * summary.scale;
  const double hi = summary.mean_diff + span * summary.scale;
  std::vector<std::pair<double, double>> grid;
  grid.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double delta = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    const double t = (delta - summary.mean_diff) / summary.scale;
    const double log_pdf = log_norm - (nu + 1.0) / 2.0 * std::log1p(t * t / nu);
    grid.emplace_back(delta, std::exp(log_pdf) / summary.scale);
  }
  return grid;
}

std::vector<PairComparison> compare_all_pairs(const std::vector<ScoreVector>& vectors, Interval rope,
                                              double rho) {
  if (vectors.size() < 2)
    fail(ErrorKind::TooFewModels, "need at least 2 models, got " + std::to_string(vectors.size()));
  std::vector<PairComparison> out;
  for (std::size_t i = 0; i < vectors.size(); ++i)
    for (std::size_t j = i + 1; j < vectors.size(); ++j)
      out.push_back({vectors[i].model_name, vectors[j].model_name,
                     correlated_ttest(vectors[i], vectors[j], rope, rho)});
  return out;
}

std::vector<ScoreVector> read_score_vectors(std::string_view bytes) {
  std::vector<ScoreVector> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < bytes.size()) {
    std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) eol = bytes.size();
    std::string_view line = bytes.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') continue;

    ScoreVector v;
    std::size_t start = 0;
    int field = 0;
    while (start <= line.size()) {
      std::size_t tab = line.find('\t', start);
      if (tab == std::string_view::npos) tab = line.size();
      const std::string item(line.substr(start, tab - start));
      if (field == 0) {
        if (item.empty())
          fail(ErrorKind::FieldSyntax, "line " + std::to_string(line_no) + ": empty model name");
        v.model_name = item;
      } else {
        char* end = nullptr;
        const double value = std::strtod(item.c_str(), &end);
        if (end != item.c_str() + item.size() || !std::isfinite(value))
          fail(ErrorKind::NonNumeric,
               "line " + std::to_string(line_no) + ": bad score '" + item + "'");
        v.scores.push_back(value);
      }
      ++field;
      if (tab == line.size()) break;
      start = tab + 1;
    }
    if (v.scores.size() < 2)
      fail(ErrorKind::TooFewScores,
           "line " + std::to_string(line_no) + ": model '" + v.model_name + "' needs >= 2 scores");
    if (!out.empty() && out.front().scores.size() != v.scores.size())
      fail(ErrorKind::LengthMismatch,
           "line " + std::to_string(line_no) + ": expected " +
               std::to_string(out.front().scores.size()) + " scores");
    out.push_back(std::move(v));
  }
  return out;
}

std::string render_comparison_table(const std::vector<PairComparison>& pairs) {
  std::size_t width = 10;
  for (const PairComparison& p : pairs)
    width = std::max(width, p.first.size() + p.second.size() + 1);
  std::ostringstream os;
  os << std::string(width, ' ') << "\tLeft\tRope\tRight\n";
  char buf[32];
  for (const PairComparison& p : pairs) {
    std::string name = p.first + "-" + p.second;
    name.resize(width, ' ');
    os << name;
    for (double v : {p.summary.p_left, p.summary.p_rope, p.summary.p_right}) {
      std::snprintf(buf, sizeof buf, "\t%.2f", v);
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace agtb
