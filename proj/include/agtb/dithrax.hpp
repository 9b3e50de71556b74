#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "agtb/score_matrix.hpp"
#include "agtb/treebank.hpp"

namespace agtb {

/// Desk-scale multi-output LSTM parser/tagger/lemmatizer: randomly
/// initialized character embeddings, a character-level LSTM pooled by final
/// state into token vectors, a token-level LSTM over the sentence (a learned
/// root vector at position 0), tanh-linear head/dependent projections scored
/// by dot product into an adjacency matrix, and softmax-linear output heads
/// for relations (on the concatenated head/dependent projections), POS, the
/// eight morphological positions, and per-position lemma characters with a
/// stop symbol. Double precision throughout; gradients are hand-derived and
/// checked against central finite differences.
struct MiniConfig {
  int char_embed_dim = 12;
  int char_rnn_dim = 24;
  int token_rnn_dim = 24;
  int arc_dim = 16;
  int max_lemma_len = 16;
  double learning_rate = 0.05;
  std::uint64_t seed = 1;
  int epochs = 200;
};

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}
  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]; }
};

/// Alphabets derived from a training corpus; index 0 of `chars` is the
/// reserved unknown character, index 0 of `lemma_chars` the stop symbol.
struct Vocab {
  std::vector<char32_t> chars;
  std::vector<std::string> relations;
  std::vector<char> pos_values;
  std::array<std::vector<char>, 8> morph_values;
  std::vector<char32_t> lemma_chars;

  std::unordered_map<char32_t, int> char_index;
  std::unordered_map<std::string, int> relation_index;
  std::unordered_map<char, int> pos_index;
  std::array<std::unordered_map<char, int>, 8> morph_index;
  std::unordered_map<char32_t, int> lemma_char_index;

  static Vocab build(const std::vector<Sentence>& corpus);
  void rebuild_indices();
};

/// Every learnable tensor, in serialization order (see tensors()).
struct Params {
  Mat char_embed;           // |chars| x E
  Mat char_w, char_u, char_b;    // 4Hc x E, 4Hc x Hc, 4Hc x 1
  Mat root;                 // Hc x 1
  Mat tok_w, tok_u, tok_b;  // 4Ht x Hc, 4Ht x Ht, 4Ht x 1
  Mat head_w, head_b;       // A x Ht, A x 1
  Mat dep_w, dep_b;         // A x Ht, A x 1
  Mat rel_w, rel_b;         // L x 2A, L x 1
  Mat pos_w, pos_b;         // P x Ht, P x 1
  std::array<Mat, 8> morph_w;
  std::array<Mat, 8> morph_b;
  std::vector<Mat> lemma_w;  // max_lemma_len tensors, C x Hc
  std::vector<Mat> lemma_b;  // max_lemma_len tensors, C x 1

  std::vector<Mat*> tensors();
  std::vector<const Mat*> tensors() const;
  static Params shaped(const MiniConfig& config, const Vocab& vocab);
};

struct Encoded {
  std::vector<std::vector<double>> token_vectors;    // n char-LSTM final states
  std::vector<std::vector<double>> context_vectors;  // n+1, root at index 0
};

class MiniModel {
 public:
  MiniModel() = default;

  /// Deterministic initialization: tensors filled in serialization order
  /// from mt19937_64(config.seed), uniform in [-0.05, 0.05).
  static MiniModel init(const MiniConfig& config, Vocab vocab);

  const MiniConfig& config() const { return config_; }
  const Vocab& vocab() const { return vocab_; }
  Params& params() { return params_; }
  const Params& params() const { return params_; }

  Encoded encode(const Sentence& sentence) const;
  ScoreMatrix arc_scores(const std::vector<std::vector<double>>& context_vectors) const;
  ScoreMatrix arc_scores(const Sentence& sentence) const;

  /// Fully annotated copy: heads via single-root MST decoding of the arc
  /// scores, relation labels from the predicted heads, assembled 9-char
  /// postag, and per-position lemma characters up to the stop symbol.
  Sentence predict(const Sentence& sentence) const;

  /// Total cross-entropy of one sentence (heads, relations with gold heads,
  /// POS, morphology, lemma characters).
  double loss(const Sentence& sentence) const;

  /// Analytic gradients of loss(sentence); adds to `grads`.
  double gradients(const Sentence& sentence, Params& grads) const;

  /// Central finite differences over every parameter.
  Params numeric_gradients(const Sentence& sentence, double epsilon) const;

  /// Max over parameters of |ga - gn| / max(|ga|, |gn|, 1e-8).
  double grad_check(const Sentence& sentence, double epsilon) const;

  /// Per-sentence gradient steps, sentences visited in a shuffled order
  /// derived from the seed. An epoch whose end loss exceeds the previous
  /// epoch's is replayed with the step halved (up to 12 times), so the
  /// returned trace -- the total corpus loss at each epoch end -- is
  /// non-increasing. Deterministic given the seed. Throws NonFiniteLoss
  /// with diagnostics if the loss diverges.
  std::vector<double> train(const std::vector<Sentence>& corpus);

  std::string serialize() const;
  static MiniModel deserialize(std::string_view bytes);

 private:
  MiniConfig config_;
  Vocab vocab_;
  Params params_;
};

/// Builds the vocabulary, initializes, and trains in one step.
MiniModel train_mini(const std::vector<Sentence>& corpus, const MiniConfig& config,
                     std::vector<double>* loss_trace = nullptr);

}  // namespace agtb
