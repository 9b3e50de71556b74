#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "agtb/treebank.hpp"

namespace agtb {

struct RunSpec {
  int run_index = 0;   // 0..9
  int fold = 0;        // run_index mod 5
  int repetition = 0;  // run_index / 5
  std::uint64_t train_seed = 0;  // seed XOR run_index
  bool operator==(const RunSpec&) const = default;
};

/// Deterministic 60/20/20 + 5-fold x 2 partition of a corpus, keyed by
/// sentence ids. Shuffle: std::mt19937_64(seed) driving a downward
/// Fisher-Yates with index `rng() % (i + 1)`; the first floor(n/5) shuffled
/// sentences form the test block, the rest are cut into 5 contiguous folds
/// with any remainder going to the lower-numbered folds.
struct RunManifest {
  std::uint64_t seed = 0;
  std::vector<std::string> test_ids;
  std::array<std::vector<std::string>, 5> folds;
  std::vector<RunSpec> runs;

  bool operator==(const RunManifest&) const = default;
};

RunManifest make_splits(const std::vector<Sentence>& corpus, std::uint64_t seed);

struct SplitFiles {
  std::string train;       // CoNLL-U bytes
  std::string validation;
  std::string test;
};

/// Materializes one run: validation = fold (run mod 5), train = the other
/// four folds in fold order, test = the constant test block.
SplitFiles materialize_split(const std::vector<Sentence>& corpus, const RunManifest& manifest, int run);

std::string write_manifest(const RunManifest& manifest);
RunManifest read_manifest(std::string_view text);

}  // namespace agtb
