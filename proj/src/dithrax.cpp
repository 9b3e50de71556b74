#include "agtb/dithrax.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <set>

#include "agtb/error.hpp"
#include "agtb/mst.hpp"
#include "agtb/utf8.hpp"

namespace agtb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInitRange = 0.25;
constexpr std::uint64_t kTrainSeedSalt = 0x517cc1b727220a95ULL;

// The forward pass is templated on the scalar so numeric_gradients can run
// it in long double: central differences divide an O(ulp(loss)) rounding
// error by 2*epsilon, which in double precision would swamp the smallest
// true gradients.
using Vec = std::vector<double>;

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
std::vector<T> matvec(const Mat& m, const std::vector<T>& v) {
  std::vector<T> out(static_cast<std::size_t>(m.rows), T(0));
  for (int r = 0; r < m.rows; ++r) {
    T acc(0);
    for (int c = 0; c < m.cols; ++c) acc += static_cast<T>(m.at(r, c)) * v[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = acc;
  }
  return out;
}

Vec matvec_t(const Mat& m, const Vec& v) {
  Vec out(static_cast<std::size_t>(m.cols), 0.0);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c)
      out[static_cast<std::size_t>(c)] += m.at(r, c) * v[static_cast<std::size_t>(r)];
  return out;
}

void outer_add(Mat& g, const Vec& row, const Vec& col) {
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c)
      g.at(r, c) += row[static_cast<std::size_t>(r)] * col[static_cast<std::size_t>(c)];
}

void col_add(Mat& g, const Vec& v) {
  for (int r = 0; r < g.rows; ++r) g.at(r, 0) += v[static_cast<std::size_t>(r)];
}

void vec_add(Vec& a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

// Cross entropy of a softmax over `logits`; writes p - onehot(gold) into
// dlogits when non-null.
template <typename T>
T ce_softmax(const std::vector<T>& logits, int gold, std::vector<T>* dlogits) {
  T mx = logits[0];
  for (T v : logits) mx = std::max(mx, v);
  T z(0);
  for (T v : logits) z += std::exp(v - mx);
  const T log_z = std::log(z) + mx;
  if (dlogits) {
    dlogits->assign(logits.size(), T(0));
    for (std::size_t k = 0; k < logits.size(); ++k)
      (*dlogits)[k] = std::exp(logits[k] - log_z);
    (*dlogits)[static_cast<std::size_t>(gold)] -= T(1);
  }
  return log_z - logits[static_cast<std::size_t>(gold)];
}

template <typename T>
struct LstmStepT {
  std::vector<T> x, h_prev, c_prev, gi, gf, gg, go, c, tanh_c, h;
};

using LstmStep = LstmStepT<double>;

// Gate rows are stacked i, f, g, o.
template <typename T>
LstmStepT<T> lstm_step(const Mat& w, const Mat& u, const Mat& b, const std::vector<T>& x,
                       const std::vector<T>& h_prev, const std::vector<T>& c_prev) {
  const int hidden = static_cast<int>(h_prev.size());
  LstmStepT<T> s;
  s.x = x;
  s.h_prev = h_prev;
  s.c_prev = c_prev;
  std::vector<T> z = matvec(w, x);
  const std::vector<T> uz = matvec(u, h_prev);
  for (std::size_t k = 0; k < z.size(); ++k)
    z[k] += uz[k] + static_cast<T>(b.at(static_cast<int>(k), 0));
  s.gi.resize(static_cast<std::size_t>(hidden));
  s.gf.resize(static_cast<std::size_t>(hidden));
  s.gg.resize(static_cast<std::size_t>(hidden));
  s.go.resize(static_cast<std::size_t>(hidden));
  s.c.resize(static_cast<std::size_t>(hidden));
  s.tanh_c.resize(static_cast<std::size_t>(hidden));
  s.h.resize(static_cast<std::size_t>(hidden));
  for (int k = 0; k < hidden; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    s.gi[ks] = sigmoid(z[ks]);
    s.gf[ks] = sigmoid(z[static_cast<std::size_t>(hidden) + ks]);
    s.gg[ks] = std::tanh(z[2 * static_cast<std::size_t>(hidden) + ks]);
    s.go[ks] = sigmoid(z[3 * static_cast<std::size_t>(hidden) + ks]);
    s.c[ks] = s.gf[ks] * c_prev[ks] + s.gi[ks] * s.gg[ks];
    s.tanh_c[ks] = std::tanh(s.c[ks]);
    s.h[ks] = s.go[ks] * s.tanh_c[ks];
  }
  return s;
}

// Backward through one step; dh/dc are the gradients flowing into h_t/c_t.
// Returns dx and replaces dh/dc with dh_prev/dc_prev.
Vec lstm_step_back(const Mat& w, const Mat& u, Mat& gw, Mat& gu, Mat& gb, const LstmStep& s,
                   Vec& dh, Vec& dc) {
  const int hidden = static_cast<int>(s.h.size());
  Vec dz(4 * static_cast<std::size_t>(hidden), 0.0);
  for (int k = 0; k < hidden; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const double do_ = dh[ks] * s.tanh_c[ks];
    const double dct = dc[ks] + dh[ks] * s.go[ks] * (1.0 - s.tanh_c[ks] * s.tanh_c[ks]);
    const double di = dct * s.gg[ks];
    const double df = dct * s.c_prev[ks];
    const double dg = dct * s.gi[ks];
    dz[ks] = di * s.gi[ks] * (1.0 - s.gi[ks]);
    dz[static_cast<std::size_t>(hidden) + ks] = df * s.gf[ks] * (1.0 - s.gf[ks]);
    dz[2 * static_cast<std::size_t>(hidden) + ks] = dg * (1.0 - s.gg[ks] * s.gg[ks]);
    dz[3 * static_cast<std::size_t>(hidden) + ks] = do_ * s.go[ks] * (1.0 - s.go[ks]);
    dc[ks] = dct * s.gf[ks];
  }
  outer_add(gw, dz, s.x);
  outer_add(gu, dz, s.h_prev);
  col_add(gb, dz);
  dh = matvec_t(u, dz);
  return matvec_t(w, dz);
}

template <typename T>
struct TraceT {
  std::vector<std::vector<int>> char_ids;
  std::vector<std::vector<LstmStepT<T>>> char_steps;  // per token
  std::vector<LstmStepT<T>> tok_steps;                // n+1
  std::vector<std::vector<T>> token_vectors;          // n
  std::vector<std::vector<T>> context_vectors;        // n+1
  std::vector<std::vector<T>> head_proj, dep_proj;    // n+1 each
};

using Trace = TraceT<double>;

}  // namespace

Vocab Vocab::build(const std::vector<Sentence>& corpus) {
  std::set<char32_t> chars, lemma_chars;
  std::set<std::string> relations;
  std::set<char> pos;
  std::array<std::set<char>, 8> morph;
  for (const Sentence& s : corpus) {
    for (const Token& t : s.tokens) {
      for (char32_t cp : utf8::decode(t.form)) chars.insert(cp);
      for (char32_t cp : utf8::decode(t.lemma)) lemma_chars.insert(cp);
      relations.insert(t.relation);
      const std::string tag = sanitize_postag(t.postag);
      pos.insert(tag[0]);
      for (int k = 0; k < 8; ++k) morph[static_cast<std::size_t>(k)].insert(tag[static_cast<std::size_t>(k) + 1]);
    }
  }
  Vocab v;
  v.chars.push_back(0);  // reserved unknown
  v.chars.insert(v.chars.end(), chars.begin(), chars.end());
  v.relations.assign(relations.begin(), relations.end());
  v.pos_values.assign(pos.begin(), pos.end());
  for (int k = 0; k < 8; ++k)
    v.morph_values[static_cast<std::size_t>(k)].assign(morph[static_cast<std::size_t>(k)].begin(),
                                                       morph[static_cast<std::size_t>(k)].end());
  v.lemma_chars.push_back(0);  // stop symbol
  v.lemma_chars.insert(v.lemma_chars.end(), lemma_chars.begin(), lemma_chars.end());
  v.rebuild_indices();
  return v;
}

void Vocab::rebuild_indices() {
  char_index.clear();
  for (std::size_t i = 0; i < chars.size(); ++i) char_index[chars[i]] = static_cast<int>(i);
  relation_index.clear();
  for (std::size_t i = 0; i < relations.size(); ++i) relation_index[relations[i]] = static_cast<int>(i);
  pos_index.clear();
  for (std::size_t i = 0; i < pos_values.size(); ++i) pos_index[pos_values[i]] = static_cast<int>(i);
  for (int k = 0; k < 8; ++k) {
    auto& idx = morph_index[static_cast<std::size_t>(k)];
    idx.clear();
    const auto& values = morph_values[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < values.size(); ++i) idx[values[i]] = static_cast<int>(i);
  }
  lemma_char_index.clear();
  for (std::size_t i = 0; i < lemma_chars.size(); ++i) lemma_char_index[lemma_chars[i]] = static_cast<int>(i);
}

Params Params::shaped(const MiniConfig& cfg, const Vocab& vocab) {
  Params p;
  const int e = cfg.char_embed_dim;
  const int hc = cfg.char_rnn_dim;
  const int ht = cfg.token_rnn_dim;
  const int a = cfg.arc_dim;
  p.char_embed = Mat(static_cast<int>(vocab.chars.size()), e);
  p.char_w = Mat(4 * hc, e);
  p.char_u = Mat(4 * hc, hc);
  p.char_b = Mat(4 * hc, 1);
  p.root = Mat(hc, 1);
  p.tok_w = Mat(4 * ht, hc);
  p.tok_u = Mat(4 * ht, ht);
  p.tok_b = Mat(4 * ht, 1);
  p.head_w = Mat(a, ht);
  p.head_b = Mat(a, 1);
  p.dep_w = Mat(a, ht);
  p.dep_b = Mat(a, 1);
  p.rel_w = Mat(static_cast<int>(vocab.relations.size()), 2 * a);
  p.rel_b = Mat(static_cast<int>(vocab.relations.size()), 1);
  p.pos_w = Mat(static_cast<int>(vocab.pos_values.size()), ht);
  p.pos_b = Mat(static_cast<int>(vocab.pos_values.size()), 1);
  for (int k = 0; k < 8; ++k) {
    const int m = static_cast<int>(vocab.morph_values[static_cast<std::size_t>(k)].size());
    p.morph_w[static_cast<std::size_t>(k)] = Mat(m, ht);
    p.morph_b[static_cast<std::size_t>(k)] = Mat(m, 1);
  }
  const int lemma_classes = static_cast<int>(vocab.lemma_chars.size());
  p.lemma_w.resize(static_cast<std::size_t>(cfg.max_lemma_len));
  p.lemma_b.resize(static_cast<std::size_t>(cfg.max_lemma_len));
  for (int k = 0; k < cfg.max_lemma_len; ++k) {
    p.lemma_w[static_cast<std::size_t>(k)] = Mat(lemma_classes, hc);
    p.lemma_b[static_cast<std::size_t>(k)] = Mat(lemma_classes, 1);
  }
  return p;
}

std::vector<Mat*> Params::tensors() {
  std::vector<Mat*> out = {&char_embed, &char_w, &char_u, &char_b, &root,
                           &tok_w,      &tok_u,  &tok_b,  &head_w, &head_b,
                           &dep_w,      &dep_b,  &rel_w,  &rel_b,  &pos_w,
                           &pos_b};
  for (auto& m : morph_w) out.push_back(&m);
  for (auto& m : morph_b) out.push_back(&m);
  for (auto& m : lemma_w) out.push_back(&m);
  for (auto& m : lemma_b) out.push_back(&m);
  return out;
}

std::vector<const Mat*> Params::tensors() const {
  auto mutable_list = const_cast<Params*>(this)->tensors();
  return {mutable_list.begin(), mutable_list.end()};
}

MiniModel MiniModel::init(const MiniConfig& config, Vocab vocab) {
  MiniModel m;
  m.config_ = config;
  m.vocab_ = std::move(vocab);
  m.vocab_.rebuild_indices();
  m.params_ = Params::shaped(config, m.vocab_);
  std::mt19937_64 rng(config.seed);
  for (Mat* t : m.params_.tensors())
    for (double& v : t->a) {
      // 53-bit uniform in [0,1); bit-stable across platforms.
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      v = (2.0 * u - 1.0) * kInitRange;
    }
  return m;
}

namespace {

std::vector<int> form_char_ids(const Vocab& vocab, const std::string& form) {
  std::vector<int> ids;
  for (char32_t cp : utf8::decode(form)) {
    const auto it = vocab.char_index.find(cp);
    ids.push_back(it == vocab.char_index.end() ? 0 : it->second);
  }
  if (ids.empty()) ids.push_back(0);  // empty form -> reserved unknown
  return ids;
}

template <typename T>
std::vector<T> embed_row(const Mat& table, int row) {
  std::vector<T> out(static_cast<std::size_t>(table.cols));
  for (int c = 0; c < table.cols; ++c) out[static_cast<std::size_t>(c)] = static_cast<T>(table.at(row, c));
  return out;
}

template <typename T>
std::vector<T> col_vec(const Mat& m) {
  std::vector<T> out(static_cast<std::size_t>(m.rows));
  for (int r = 0; r < m.rows; ++r) out[static_cast<std::size_t>(r)] = static_cast<T>(m.at(r, 0));
  return out;
}

template <typename T>
std::vector<T> tanh_linear(const Mat& w, const Mat& b, const std::vector<T>& x) {
  std::vector<T> out = matvec(w, x);
  for (int r = 0; r < w.rows; ++r)
    out[static_cast<std::size_t>(r)] = std::tanh(out[static_cast<std::size_t>(r)] + static_cast<T>(b.at(r, 0)));
  return out;
}

template <typename T>
std::vector<T> linear(const Mat& w, const Mat& b, const std::vector<T>& x) {
  std::vector<T> out = matvec(w, x);
  for (int r = 0; r < w.rows; ++r) out[static_cast<std::size_t>(r)] += static_cast<T>(b.at(r, 0));
  return out;
}

template <typename T>
TraceT<T> run_forward(const MiniConfig& cfg, const Vocab& vocab, const Params& p, const Sentence& s) {
  TraceT<T> tr;
  const int n = s.size();
  const auto hc = static_cast<std::size_t>(cfg.char_rnn_dim);
  const auto ht = static_cast<std::size_t>(cfg.token_rnn_dim);

  tr.char_ids.reserve(static_cast<std::size_t>(n));
  tr.char_steps.reserve(static_cast<std::size_t>(n));
  tr.token_vectors.reserve(static_cast<std::size_t>(n));
  for (const Token& t : s.tokens) {
    tr.char_ids.push_back(form_char_ids(vocab, t.form));
    std::vector<LstmStepT<T>> steps;
    std::vector<T> h(hc, T(0)), c(hc, T(0));
    for (int id : tr.char_ids.back()) {
      steps.push_back(lstm_step(p.char_w, p.char_u, p.char_b, embed_row<T>(p.char_embed, id), h, c));
      h = steps.back().h;
      c = steps.back().c;
    }
    tr.token_vectors.push_back(h);  // final-state pooling
    tr.char_steps.push_back(std::move(steps));
  }

  std::vector<T> h(ht, T(0)), c(ht, T(0));
  tr.tok_steps.reserve(static_cast<std::size_t>(n) + 1);
  tr.context_vectors.reserve(static_cast<std::size_t>(n) + 1);
  for (int t = 0; t <= n; ++t) {
    const std::vector<T>& x = t == 0 ? col_vec<T>(p.root) : tr.token_vectors[static_cast<std::size_t>(t - 1)];
    tr.tok_steps.push_back(lstm_step(p.tok_w, p.tok_u, p.tok_b, x, h, c));
    h = tr.tok_steps.back().h;
    c = tr.tok_steps.back().c;
    tr.context_vectors.push_back(h);
  }

  tr.head_proj.reserve(static_cast<std::size_t>(n) + 1);
  tr.dep_proj.reserve(static_cast<std::size_t>(n) + 1);
  for (int t = 0; t <= n; ++t) {
    tr.head_proj.push_back(tanh_linear(p.head_w, p.head_b, tr.context_vectors[static_cast<std::size_t>(t)]));
    tr.dep_proj.push_back(tanh_linear(p.dep_w, p.dep_b, tr.context_vectors[static_cast<std::size_t>(t)]));
  }
  return tr;
}

ScoreMatrix scores_from_projections(const std::vector<Vec>& head_proj, const std::vector<Vec>& dep_proj) {
  const int n = static_cast<int>(head_proj.size()) - 1;
  ScoreMatrix m = ScoreMatrix::zeros(n);
  for (int i = 1; i <= n; ++i) {
    for (int h = 0; h <= n; ++h) {
      if (h == i) {
        m.at(i, h) = kNegInf;
        continue;
      }
      double acc = 0;
      const Vec& d = dep_proj[static_cast<std::size_t>(i)];
      const Vec& hh = head_proj[static_cast<std::size_t>(h)];
      for (std::size_t k = 0; k < d.size(); ++k) acc += d[k] * hh[k];
      m.at(i, h) = acc;
    }
  }
  return m;
}

struct GoldTargets {
  std::vector<int> head, rel, pos;
  std::vector<std::array<int, 8>> morph;
  std::vector<std::vector<int>> lemma;  // per token, length max_lemma_len
};

GoldTargets gold_targets(const MiniConfig& cfg, const Vocab& vocab, const Sentence& s) {
  GoldTargets g;
  const int n = s.size();
  for (const Token& t : s.tokens) {
    if (t.head < 0 || t.head > n || t.head == t.id)
      fail(ErrorKind::InvalidArgument,
           "training sentence '" + s.sentence_id + "' has an invalid head for token " +
               std::to_string(t.id));
    g.head.push_back(t.head);
    const auto rel_it = vocab.relation_index.find(t.relation);
    if (rel_it == vocab.relation_index.end())
      fail(ErrorKind::InvalidArgument, "relation '" + t.relation + "' is not in the vocabulary");
    g.rel.push_back(rel_it->second);
    const std::string tag = sanitize_postag(t.postag);
    const auto pos_it = vocab.pos_index.find(tag[0]);
    if (pos_it == vocab.pos_index.end())
      fail(ErrorKind::InvalidArgument, std::string("POS value '") + tag[0] + "' is not in the vocabulary");
    g.pos.push_back(pos_it->second);
    std::array<int, 8> morph{};
    for (int k = 0; k < 8; ++k) {
      const auto& idx = vocab.morph_index[static_cast<std::size_t>(k)];
      const auto it = idx.find(tag[static_cast<std::size_t>(k) + 1]);
      if (it == idx.end())
        fail(ErrorKind::InvalidArgument, "morphological value not in the vocabulary");
      morph[static_cast<std::size_t>(k)] = it->second;
    }
    g.morph.push_back(morph);
    std::vector<int> lemma(static_cast<std::size_t>(cfg.max_lemma_len), 0);
    const std::u32string cps = utf8::decode(t.lemma);
    for (int k = 0; k < cfg.max_lemma_len && k < static_cast<int>(cps.size()); ++k) {
      const auto it = vocab.lemma_char_index.find(cps[static_cast<std::size_t>(k)]);
      if (it == vocab.lemma_char_index.end())
        fail(ErrorKind::InvalidArgument, "lemma character not in the vocabulary");
      lemma[static_cast<std::size_t>(k)] = it->second;
    }
    g.lemma.push_back(std::move(lemma));
  }
  return g;
}

}  // namespace

Encoded MiniModel::encode(const Sentence& sentence) const {
  const Trace tr = run_forward<double>(config_, vocab_, params_, sentence);
  return {tr.token_vectors, tr.context_vectors};
}

ScoreMatrix MiniModel::arc_scores(const std::vector<std::vector<double>>& context_vectors) const {
  std::vector<Vec> head_proj, dep_proj;
  for (const Vec& ctx : context_vectors) {
    head_proj.push_back(tanh_linear(params_.head_w, params_.head_b, ctx));
    dep_proj.push_back(tanh_linear(params_.dep_w, params_.dep_b, ctx));
  }
  return scores_from_projections(head_proj, dep_proj);
}

ScoreMatrix MiniModel::arc_scores(const Sentence& sentence) const {
  return arc_scores(encode(sentence).context_vectors);
}

namespace {

template <typename T>
T forward_loss(const MiniConfig& cfg, const Vocab& vocab, const Params& p, const Sentence& sentence) {
  const int n = sentence.size();
  if (n == 0) return T(0);
  const GoldTargets gold = gold_targets(cfg, vocab, sentence);
  const TraceT<T> tr = run_forward<T>(cfg, vocab, p, sentence);
  const auto arc_dim = static_cast<std::size_t>(cfg.arc_dim);

  T total(0);
  for (int i = 1; i <= n; ++i) {
    std::vector<T> logits;
    int gold_pos = -1;
    for (int h = 0; h <= n; ++h) {
      if (h == i) continue;
      if (h == gold.head[static_cast<std::size_t>(i - 1)]) gold_pos = static_cast<int>(logits.size());
      T acc(0);
      for (std::size_t k = 0; k < arc_dim; ++k)
        acc += tr.dep_proj[static_cast<std::size_t>(i)][k] * tr.head_proj[static_cast<std::size_t>(h)][k];
      logits.push_back(acc);
    }
    total += ce_softmax<T>(logits, gold_pos, nullptr);

    const int g = gold.head[static_cast<std::size_t>(i - 1)];
    std::vector<T> u(2 * arc_dim);
    for (std::size_t k = 0; k < arc_dim; ++k) {
      u[k] = tr.head_proj[static_cast<std::size_t>(g)][k];
      u[arc_dim + k] = tr.dep_proj[static_cast<std::size_t>(i)][k];
    }
    total += ce_softmax<T>(linear(p.rel_w, p.rel_b, u), gold.rel[static_cast<std::size_t>(i - 1)], nullptr);

    const std::vector<T>& ctx = tr.context_vectors[static_cast<std::size_t>(i)];
    total += ce_softmax<T>(linear(p.pos_w, p.pos_b, ctx), gold.pos[static_cast<std::size_t>(i - 1)], nullptr);
    for (int k = 0; k < 8; ++k)
      total += ce_softmax<T>(
          linear(p.morph_w[static_cast<std::size_t>(k)], p.morph_b[static_cast<std::size_t>(k)], ctx),
          gold.morph[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k)], nullptr);

    const std::vector<T>& tok = tr.token_vectors[static_cast<std::size_t>(i - 1)];
    for (int k = 0; k < cfg.max_lemma_len; ++k)
      total += ce_softmax<T>(
          linear(p.lemma_w[static_cast<std::size_t>(k)], p.lemma_b[static_cast<std::size_t>(k)], tok),
          gold.lemma[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k)], nullptr);
  }
  return total;
}

}  // namespace

double MiniModel::loss(const Sentence& sentence) const {
  return forward_loss<double>(config_, vocab_, params_, sentence);
}

double MiniModel::gradients(const Sentence& sentence, Params& grads) const {
  const int n = sentence.size();
  if (n == 0) return 0.0;
  const Params& p = params_;
  const GoldTargets gold = gold_targets(config_, vocab_, sentence);
  const Trace tr = run_forward<double>(config_, vocab_, p, sentence);
  const auto arc_dim = static_cast<std::size_t>(config_.arc_dim);

  double total_loss = 0;
  std::vector<Vec> d_ctx(static_cast<std::size_t>(n) + 1, Vec(static_cast<std::size_t>(config_.token_rnn_dim), 0.0));
  std::vector<Vec> d_head(static_cast<std::size_t>(n) + 1, Vec(arc_dim, 0.0));
  std::vector<Vec> d_dep(static_cast<std::size_t>(n) + 1, Vec(arc_dim, 0.0));
  std::vector<Vec> d_tokvec(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(config_.char_rnn_dim), 0.0));

  // Head selection: row softmax over candidate heads.
  for (int i = 1; i <= n; ++i) {
    std::vector<int> candidates;
    Vec logits;
    int gold_pos = -1;
    for (int h = 0; h <= n; ++h) {
      if (h == i) continue;
      if (h == gold.head[static_cast<std::size_t>(i - 1)]) gold_pos = static_cast<int>(candidates.size());
      candidates.push_back(h);
      double acc = 0;
      for (std::size_t k = 0; k < arc_dim; ++k)
        acc += tr.dep_proj[static_cast<std::size_t>(i)][k] * tr.head_proj[static_cast<std::size_t>(h)][k];
      logits.push_back(acc);
    }
    Vec dlogits;
    total_loss += ce_softmax(logits, gold_pos, &dlogits);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const int h = candidates[c];
      const double coef = dlogits[c];
      for (std::size_t k = 0; k < arc_dim; ++k) {
        d_dep[static_cast<std::size_t>(i)][k] += coef * tr.head_proj[static_cast<std::size_t>(h)][k];
        d_head[static_cast<std::size_t>(h)][k] += coef * tr.dep_proj[static_cast<std::size_t>(i)][k];
      }
    }
  }

  // Relation head on concat(H[gold head], D[i]) (teacher forcing).
  for (int i = 1; i <= n; ++i) {
    const int g = gold.head[static_cast<std::size_t>(i - 1)];
    Vec u(2 * arc_dim);
    for (std::size_t k = 0; k < arc_dim; ++k) {
      u[k] = tr.head_proj[static_cast<std::size_t>(g)][k];
      u[arc_dim + k] = tr.dep_proj[static_cast<std::size_t>(i)][k];
    }
    const Vec logits = linear(p.rel_w, p.rel_b, u);
    Vec dlogits;
    total_loss += ce_softmax(logits, gold.rel[static_cast<std::size_t>(i - 1)], &dlogits);
    outer_add(grads.rel_w, dlogits, u);
    col_add(grads.rel_b, dlogits);
    const Vec du = matvec_t(p.rel_w, dlogits);
    for (std::size_t k = 0; k < arc_dim; ++k) {
      d_head[static_cast<std::size_t>(g)][k] += du[k];
      d_dep[static_cast<std::size_t>(i)][k] += du[arc_dim + k];
    }
  }

  // Tagging heads on context vectors.
  for (int i = 1; i <= n; ++i) {
    const Vec& ctx = tr.context_vectors[static_cast<std::size_t>(i)];
    {
      const Vec logits = linear(p.pos_w, p.pos_b, ctx);
      Vec dlogits;
      total_loss += ce_softmax(logits, gold.pos[static_cast<std::size_t>(i - 1)], &dlogits);
      outer_add(grads.pos_w, dlogits, ctx);
      col_add(grads.pos_b, dlogits);
      vec_add(d_ctx[static_cast<std::size_t>(i)], matvec_t(p.pos_w, dlogits));
    }
    for (int k = 0; k < 8; ++k) {
      const Mat& w = p.morph_w[static_cast<std::size_t>(k)];
      const Vec logits = linear(w, p.morph_b[static_cast<std::size_t>(k)], ctx);
      Vec dlogits;
      total_loss += ce_softmax(logits, gold.morph[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k)], &dlogits);
      outer_add(grads.morph_w[static_cast<std::size_t>(k)], dlogits, ctx);
      col_add(grads.morph_b[static_cast<std::size_t>(k)], dlogits);
      vec_add(d_ctx[static_cast<std::size_t>(i)], matvec_t(w, dlogits));
    }
  }

  // Lemma characters on the char-level token vector.
  for (int i = 1; i <= n; ++i) {
    const Vec& tok = tr.token_vectors[static_cast<std::size_t>(i - 1)];
    for (int k = 0; k < config_.max_lemma_len; ++k) {
      const Mat& w = p.lemma_w[static_cast<std::size_t>(k)];
      const Vec logits = linear(w, p.lemma_b[static_cast<std::size_t>(k)], tok);
      Vec dlogits;
      total_loss += ce_softmax(logits, gold.lemma[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k)], &dlogits);
      outer_add(grads.lemma_w[static_cast<std::size_t>(k)], dlogits, tok);
      col_add(grads.lemma_b[static_cast<std::size_t>(k)], dlogits);
      vec_add(d_tokvec[static_cast<std::size_t>(i - 1)], matvec_t(w, dlogits));
    }
  }

  // Through the tanh projections into context vectors.
  for (int t = 0; t <= n; ++t) {
    Vec da(arc_dim);
    for (std::size_t k = 0; k < arc_dim; ++k) {
      const double h = tr.head_proj[static_cast<std::size_t>(t)][k];
      da[k] = d_head[static_cast<std::size_t>(t)][k] * (1.0 - h * h);
    }
    outer_add(grads.head_w, da, tr.context_vectors[static_cast<std::size_t>(t)]);
    col_add(grads.head_b, da);
    vec_add(d_ctx[static_cast<std::size_t>(t)], matvec_t(p.head_w, da));
    for (std::size_t k = 0; k < arc_dim; ++k) {
      const double d = tr.dep_proj[static_cast<std::size_t>(t)][k];
      da[k] = d_dep[static_cast<std::size_t>(t)][k] * (1.0 - d * d);
    }
    outer_add(grads.dep_w, da, tr.context_vectors[static_cast<std::size_t>(t)]);
    col_add(grads.dep_b, da);
    vec_add(d_ctx[static_cast<std::size_t>(t)], matvec_t(p.dep_w, da));
  }

  // Token-level LSTM, backwards in time.
  Vec dh(static_cast<std::size_t>(config_.token_rnn_dim), 0.0);
  Vec dc(static_cast<std::size_t>(config_.token_rnn_dim), 0.0);
  for (int t = n; t >= 0; --t) {
    vec_add(dh, d_ctx[static_cast<std::size_t>(t)]);
    const Vec dx = lstm_step_back(p.tok_w, p.tok_u, grads.tok_w, grads.tok_u, grads.tok_b,
                                  tr.tok_steps[static_cast<std::size_t>(t)], dh, dc);
    if (t == 0) col_add(grads.root, dx);
    else vec_add(d_tokvec[static_cast<std::size_t>(t - 1)], dx);
  }

  // Character-level LSTMs per token.
  for (int i = 0; i < n; ++i) {
    const auto& steps = tr.char_steps[static_cast<std::size_t>(i)];
    Vec dhc = d_tokvec[static_cast<std::size_t>(i)];
    Vec dcc(static_cast<std::size_t>(config_.char_rnn_dim), 0.0);
    for (int t = static_cast<int>(steps.size()) - 1; t >= 0; --t) {
      const Vec dx = lstm_step_back(p.char_w, p.char_u, grads.char_w, grads.char_u, grads.char_b,
                                    steps[static_cast<std::size_t>(t)], dhc, dcc);
      const int row = tr.char_ids[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
      for (int c = 0; c < grads.char_embed.cols; ++c)
        grads.char_embed.at(row, c) += dx[static_cast<std::size_t>(c)];
    }
  }

  return total_loss;
}

Params MiniModel::numeric_gradients(const Sentence& sentence, double epsilon) const {
  MiniModel probe = *this;
  Params grads = Params::shaped(config_, vocab_);
  auto grad_tensors = grads.tensors();
  auto param_tensors = probe.params_.tensors();
  for (std::size_t t = 0; t < param_tensors.size(); ++t) {
    Mat* pm = param_tensors[t];
    Mat* gm = grad_tensors[t];
    for (std::size_t k = 0; k < pm->a.size(); ++k) {
      const double saved = pm->a[k];
      pm->a[k] = saved + epsilon;
      const long double up = forward_loss<long double>(config_, vocab_, probe.params_, sentence);
      pm->a[k] = saved - epsilon;
      const long double down = forward_loss<long double>(config_, vocab_, probe.params_, sentence);
      pm->a[k] = saved;
      gm->a[k] = static_cast<double>((up - down) / (2.0L * static_cast<long double>(epsilon)));
    }
  }
  return grads;
}

double MiniModel::grad_check(const Sentence& sentence, double epsilon) const {
  Params analytic = Params::shaped(config_, vocab_);
  gradients(sentence, analytic);
  const Params numeric = numeric_gradients(sentence, epsilon);
  double worst = 0;
  auto a_tensors = analytic.tensors();
  auto n_tensors = numeric.tensors();
  for (std::size_t t = 0; t < a_tensors.size(); ++t)
    for (std::size_t k = 0; k < a_tensors[t]->a.size(); ++k) {
      const double ga = a_tensors[t]->a[k];
      const double gn = n_tensors[t]->a[k];
      const double denom = std::max({std::fabs(ga), std::fabs(gn), 1e-8});
      worst = std::max(worst, std::fabs(ga - gn) / denom);
    }
  return worst;
}

std::vector<double> MiniModel::train(const std::vector<Sentence>& corpus) {
  constexpr int kMaxHalvings = 12;
  std::vector<double> trace;
  auto tensors = params_.tensors();
  Params grads = Params::shaped(config_, vocab_);
  auto grad_tensors = grads.tensors();
  std::mt19937_64 rng(config_.seed ^ kTrainSeedSalt);
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const auto corpus_loss = [&] {
    double total = 0;
    for (const Sentence& s : corpus) total += loss(s);
    return total;
  };
  const auto snapshot = [&](std::vector<double>& out) {
    out.clear();
    for (const Mat* t : params_.tensors()) out.insert(out.end(), t->a.begin(), t->a.end());
  };
  const auto restore = [&](const std::vector<double>& saved) {
    std::size_t cursor = 0;
    for (std::size_t t = 0; t < tensors.size(); ++t)
      for (std::size_t k = 0; k < tensors[t]->a.size(); ++k, ++cursor)
        tensors[t]->a[k] = saved[cursor];
  };

  double current = corpus_loss();
  if (!std::isfinite(current)) fail(ErrorKind::NonFiniteLoss, "loss is not finite at initialization");
  std::vector<double> saved;
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
    snapshot(saved);
    // One pass of per-sentence steps; if the end-of-epoch loss went up, the
    // pass is replayed from the snapshot with the step halved, so the trace
    // never increases.
    double step = config_.learning_rate;
    for (int attempt = 0; attempt <= kMaxHalvings; ++attempt) {
      for (std::size_t idx : order) {
        for (Mat* g : grad_tensors) std::fill(g->a.begin(), g->a.end(), 0.0);
        const double sentence_loss = gradients(corpus[idx], grads);
        if (!std::isfinite(sentence_loss))
          fail(ErrorKind::NonFiniteLoss, "epoch " + std::to_string(epoch) + ", sentence '" +
                                             corpus[idx].sentence_id + "': loss is not finite");
        for (std::size_t t = 0; t < tensors.size(); ++t)
          for (std::size_t k = 0; k < tensors[t]->a.size(); ++k)
            tensors[t]->a[k] -= step * grad_tensors[t]->a[k];
      }
      const double candidate = corpus_loss();
      if (std::isfinite(candidate) && candidate <= current) {
        current = candidate;
        break;
      }
      restore(saved);
      step *= 0.5;
    }
    trace.push_back(current);
  }
  return trace;
}

Sentence MiniModel::predict(const Sentence& sentence) const {
  Sentence out = sentence;
  const int n = sentence.size();
  if (n == 0) return out;
  const Trace tr = run_forward<double>(config_, vocab_, params_, sentence);
  const ScoreMatrix scores = scores_from_projections(tr.head_proj, tr.dep_proj);
  const DecodedTree tree = decode(scores, /*single_root=*/true);

  const auto argmax = [](const Vec& v) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
      if (v[k] > v[best]) best = k;
    return static_cast<int>(best);
  };

  for (int i = 1; i <= n; ++i) {
    Token& t = out.tokens[static_cast<std::size_t>(i - 1)];
    t.head = tree.heads[static_cast<std::size_t>(i - 1)];

    Vec u(2 * static_cast<std::size_t>(config_.arc_dim));
    for (std::size_t k = 0; k < static_cast<std::size_t>(config_.arc_dim); ++k) {
      u[k] = tr.head_proj[static_cast<std::size_t>(t.head)][k];
      u[static_cast<std::size_t>(config_.arc_dim) + k] = tr.dep_proj[static_cast<std::size_t>(i)][k];
    }
    t.relation = vocab_.relations[static_cast<std::size_t>(argmax(linear(params_.rel_w, params_.rel_b, u)))];

    const Vec& ctx = tr.context_vectors[static_cast<std::size_t>(i)];
    std::string tag(kPostagLen, '-');
    tag[0] = vocab_.pos_values[static_cast<std::size_t>(argmax(linear(params_.pos_w, params_.pos_b, ctx)))];
    for (int k = 0; k < 8; ++k) {
      const auto& values = vocab_.morph_values[static_cast<std::size_t>(k)];
      tag[static_cast<std::size_t>(k) + 1] = values[static_cast<std::size_t>(argmax(
          linear(params_.morph_w[static_cast<std::size_t>(k)], params_.morph_b[static_cast<std::size_t>(k)], ctx)))];
    }
    t.postag = tag;

    std::u32string lemma;
    const Vec& tok = tr.token_vectors[static_cast<std::size_t>(i - 1)];
    for (int k = 0; k < config_.max_lemma_len; ++k) {
      const int cls = argmax(linear(params_.lemma_w[static_cast<std::size_t>(k)],
                                    params_.lemma_b[static_cast<std::size_t>(k)], tok));
      if (cls == 0) break;  // stop symbol
      lemma.push_back(vocab_.lemma_chars[static_cast<std::size_t>(cls)]);
    }
    t.lemma = utf8::encode(lemma);
  }
  return out;
}

MiniModel train_mini(const std::vector<Sentence>& corpus, const MiniConfig& config,
                     std::vector<double>* loss_trace) {
  MiniModel model = MiniModel::init(config, Vocab::build(corpus));
  std::vector<double> trace = model.train(corpus);
  if (loss_trace) *loss_trace = std::move(trace);
  return model;
}

namespace {

constexpr char kMagic[8] = {'A', 'G', 'T', 'B', 'D', 'M', 'X', '1'};
constexpr std::uint32_t kModelVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view s) : s_(s) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    pos_ += 8;
    return v;
  }

  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  std::string str() {
    const std::uint32_t len = u32();
    need(len);
    std::string out(s_.substr(pos_, len));
    pos_ += len;
    return out;
  }

  void expect_magic() {
    need(8);
    if (s_.substr(0, 8) != std::string_view(kMagic, 8))
      fail(ErrorKind::Io, "not a mini-model file (bad magic)");
    pos_ = 8;
  }

  bool exhausted() const { return pos_ == s_.size(); }

 private:
  void need(std::size_t count) {
    if (pos_ + count > s_.size()) fail(ErrorKind::Io, "truncated mini-model file");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string MiniModel::serialize() const {
  std::string out(kMagic, 8);
  put_u32(out, kModelVersion);
  put_u32(out, static_cast<std::uint32_t>(config_.char_embed_dim));
  put_u32(out, static_cast<std::uint32_t>(config_.char_rnn_dim));
  put_u32(out, static_cast<std::uint32_t>(config_.token_rnn_dim));
  put_u32(out, static_cast<std::uint32_t>(config_.arc_dim));
  put_u32(out, static_cast<std::uint32_t>(config_.max_lemma_len));
  put_f64(out, config_.learning_rate);
  put_u64(out, config_.seed);
  put_u32(out, static_cast<std::uint32_t>(config_.epochs));

  put_u32(out, static_cast<std::uint32_t>(vocab_.chars.size() - 1));
  for (std::size_t i = 1; i < vocab_.chars.size(); ++i) put_u32(out, vocab_.chars[i]);
  put_u32(out, static_cast<std::uint32_t>(vocab_.relations.size()));
  for (const std::string& r : vocab_.relations) put_str(out, r);
  put_str(out, std::string(vocab_.pos_values.begin(), vocab_.pos_values.end()));
  for (const auto& values : vocab_.morph_values)
    put_str(out, std::string(values.begin(), values.end()));
  put_u32(out, static_cast<std::uint32_t>(vocab_.lemma_chars.size() - 1));
  for (std::size_t i = 1; i < vocab_.lemma_chars.size(); ++i) put_u32(out, vocab_.lemma_chars[i]);

  for (const Mat* t : params_.tensors())
    for (double v : t->a) put_f64(out, v);
  return out;
}

MiniModel MiniModel::deserialize(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect_magic();
  if (r.u32() != kModelVersion) fail(ErrorKind::Io, "unsupported mini-model version");

  MiniConfig cfg;
  cfg.char_embed_dim = static_cast<int>(r.u32());
  cfg.char_rnn_dim = static_cast<int>(r.u32());
  cfg.token_rnn_dim = static_cast<int>(r.u32());
  cfg.arc_dim = static_cast<int>(r.u32());
  cfg.max_lemma_len = static_cast<int>(r.u32());
  cfg.learning_rate = r.f64();
  cfg.seed = r.u64();
  cfg.epochs = static_cast<int>(r.u32());
  if (cfg.char_embed_dim < 1 || cfg.char_rnn_dim < 1 || cfg.token_rnn_dim < 1 ||
      cfg.arc_dim < 1 || cfg.max_lemma_len < 1)
    fail(ErrorKind::Io, "mini-model header has non-positive dimensions");

  Vocab vocab;
  vocab.chars.push_back(0);
  for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) vocab.chars.push_back(r.u32());
  for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) vocab.relations.push_back(r.str());
  {
    const std::string pos = r.str();
    vocab.pos_values.assign(pos.begin(), pos.end());
  }
  for (auto& values : vocab.morph_values) {
    const std::string raw = r.str();
    values.assign(raw.begin(), raw.end());
  }
  vocab.lemma_chars.push_back(0);
  for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) vocab.lemma_chars.push_back(r.u32());
  vocab.rebuild_indices();

  MiniModel m;
  m.config_ = cfg;
  m.vocab_ = std::move(vocab);
  m.params_ = Params::shaped(cfg, m.vocab_);
  for (Mat* t : m.params_.tensors())
    for (double& v : t->a) v = r.f64();
  if (!r.exhausted()) fail(ErrorKind::Io, "trailing bytes after mini-model parameters");
  return m;
}

}  // namespace agtb
